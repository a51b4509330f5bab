"""Compiled inner loops for long simulation runs.

The update rule moves whole quanta between integer counters, so these
kernels are exact: results are identical to the pure-Python reference in
learner.update for every input.
"""
from __future__ import annotations

from numba import njit

__all__ = ["walk_path", "walk_accumulate"]


@njit(cache=True, nogil=True)
def walk_path(units0, emissions, out):
    """Walk the state through ``emissions`` (0-based forms), recording every
    intermediate state. ``out`` must be (len(emissions)+1, M) int64; row 0 is
    the initial state."""
    M = units0.shape[0]
    cur = units0.copy()
    for i in range(M):
        out[0, i] = cur[i]
    for t in range(emissions.shape[0]):
        j = emissions[t]
        removed = 0
        for i in range(M):
            if i != j and cur[i] > 0:
                cur[i] -= 1
                removed += 1
        cur[j] += removed
        for i in range(M):
            out[t + 1, i] = cur[i]


@njit(cache=True, nogil=True)
def walk_accumulate(units0, emissions, curve_sum):
    """Walk the state through ``emissions`` while adding each intermediate
    state into ``curve_sum`` ((T+1, M) int64, shared across trials). Returns
    the final state. Integer accumulation keeps ensemble averages exactly
    independent of trial execution order."""
    M = units0.shape[0]
    cur = units0.copy()
    for i in range(M):
        curve_sum[0, i] += cur[i]
    for t in range(emissions.shape[0]):
        j = emissions[t]
        removed = 0
        for i in range(M):
            if i != j and cur[i] > 0:
                cur[i] -= 1
                removed += 1
        cur[j] += removed
        for i in range(M):
            curve_sum[t + 1, i] += cur[i]
    return cur
