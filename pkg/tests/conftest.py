"""Shared brute-force reference implementations.

These helpers re-derive the learner dynamics from the update rule with no
code shared with the package internals: recursive state enumeration, a
dict-based transition builder, and a dense linear solve. Tests use them as
independent oracles for the package's vectorized implementations.
"""
from __future__ import annotations

import numpy as np
import pytest


def ref_update(units: tuple[int, ...], j: int) -> tuple[int, ...]:
    """Reference update; j is 0-based."""
    out = list(units)
    moved = 0
    for i in range(len(out)):
        if i != j and out[i] > 0:
            out[i] -= 1
            moved += 1
    out[j] += moved
    return tuple(out)


def ref_states(M: int, n: int) -> list[tuple[int, ...]]:
    """Compositions of n into M parts, lexicographically ascending."""
    if M == 1:
        return [(n,)]
    out = []
    for first in range(n + 1):
        for rest in ref_states(M - 1, n - first):
            out.append((first,) + rest)
    return out


def ref_transition(M: int, L: int, nu: tuple[float, ...]) -> tuple[list, np.ndarray]:
    """Dense transition matrix over the reference state list."""
    n = L * (M - 1)
    states = ref_states(M, n)
    index = {s: k for k, s in enumerate(states)}
    A = np.zeros((len(states), len(states)))
    for k, s in enumerate(states):
        for j in range(M):
            A[k, index[ref_update(s, j)]] += nu[j]
    return states, A


def ref_stationary(A: np.ndarray) -> np.ndarray:
    """Stationary vector from the dense balance equations."""
    S = A.shape[0]
    B = A.T - np.eye(S)
    B[-1, :] = 1.0
    rhs = np.zeros(S)
    rhs[-1] = 1.0
    return np.linalg.solve(B, rhs)


def ref_expected_frequencies(M: int, L: int, nu: tuple[float, ...]) -> np.ndarray:
    states, A = ref_transition(M, L, nu)
    pi = ref_stationary(A)
    return pi @ (np.asarray(states, dtype=float) / (L * (M - 1)))


@pytest.fixture(scope="session")
def warm_kernels():
    """Trigger JIT compilation outside any timed test section."""
    from freqboost import SimConfig, SourceDistribution, ensemble_mean_frequency, run_trajectory

    cfg = SimConfig(
        M=2, L=2, source=SourceDistribution((0.6, 0.4)), iterations=4, trials=2, master_seed=0
    )
    run_trajectory(cfg, 0)
    ensemble_mean_frequency(cfg)
    return True
