"""Markov-chain analysis of the learner driven by a frozen source.

The learner's quantized state performs a random walk on the lattice of
compositions of L*(M-1) quanta into M parts. For two forms this is a
birth-death chain on states 0, 1/L, ..., 1 whose stationary law is geometric
in the odds ratio of the source; the expected long-run frequency then has a
closed form. For three or more forms the chain is enumerated explicitly and
the stationary vector is solved numerically.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .learner import SourceDistribution

__all__ = [
    "ChainModel",
    "StationaryDistribution",
    "state_count",
    "build_chain",
    "stationary",
    "geometric_stationary",
    "expected_frequency_closed_form",
    "expected_frequencies_numeric",
    "expected_frequency_equal_split",
    "boosting_margin",
    "DEFAULT_STATE_CAP",
]

# Largest chain built by default; C(L(M-1)+M-1, M-1) grows fast in M.
DEFAULT_STATE_CAP = 200_000

# Chains up to this many states are solved densely.
_DENSE_CUTOFF = 500

# Treat the odds ratio as 1 (uniform stationary law) inside this window.
_LAMBDA_ONE_TOL = 1e-8

SourceLike = Union[SourceDistribution, Sequence[float]]


def _as_source(source: SourceLike) -> SourceDistribution:
    if isinstance(source, SourceDistribution):
        return source
    return SourceDistribution(source)


def state_count(M: int, L: int) -> int:
    """Number of lattice states: compositions of L*(M-1) quanta into M parts."""
    n = L * (M - 1)
    return math.comb(n + M - 1, M - 1)


@lru_cache(maxsize=32)
def _enumerate_states(M: int, n: int) -> np.ndarray:
    """All compositions of n into M nonnegative parts, lexicographically
    ascending, as a read-only (S, M) int64 array (cached)."""
    count = math.comb(n + M - 1, M - 1)
    if M == 1:
        states = np.full((1, 1), n, dtype=np.int64)
    else:
        combos = itertools.combinations(range(n + M - 1), M - 1)
        bars = np.fromiter(
            itertools.chain.from_iterable(combos), dtype=np.int64, count=count * (M - 1)
        ).reshape(count, M - 1)
        ext = np.empty((count, M + 1), dtype=np.int64)
        ext[:, 0] = -1
        ext[:, 1:M] = bars
        ext[:, M] = n + M - 1
        states = ext[:, 1:] - ext[:, :-1] - 1
    states.flags.writeable = False
    return states


def _state_keys(states: np.ndarray, n: int) -> np.ndarray:
    """Mixed-radix encoding of compositions; ascending along lex order."""
    base = n + 1
    key = np.zeros(states.shape[0], dtype=np.int64)
    for c in range(states.shape[1]):
        key = key * base + states[:, c]
    return key


def _apply_update_bulk(states: np.ndarray, j: int) -> np.ndarray:
    """Image of every state under one exposure to form j (0-based)."""
    give = states > 0
    give[:, j] = False
    new = states - give
    new[:, j] += give.sum(axis=1)
    return new


@dataclass(frozen=True)
class ChainModel:
    """Transition structure of the learner chain for a fixed source.

    ``states`` lists the lattice points (unit counts per form) in
    lexicographic order; ``matrix`` is the row-stochastic transition matrix
    over them. For M=2 the states are (i, L-i) for i = 0..L, so row/column k
    corresponds to learner frequency k/L and the matrix is tridiagonal with
    self-loops in the corners.
    """

    M: int
    L: int
    nu: tuple[float, ...]
    states: np.ndarray
    matrix: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    @property
    def total_quanta(self) -> int:
        return self.L * (self.M - 1)

    @property
    def odds_ratio(self) -> float:
        """lambda = nu / (1 - nu) for the two-form chain."""
        if self.M != 2:
            raise ValueError("odds ratio is defined for two-form chains only")
        if self.nu[0] == 1.0:
            return math.inf
        return self.nu[0] / (1.0 - self.nu[0])

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class StationaryDistribution:
    """Stationary probability vector over the chain's states."""

    pi: np.ndarray


def build_chain(
    M: int,
    L: int,
    source: SourceLike,
    max_states: int = DEFAULT_STATE_CAP,
) -> ChainModel:
    """Enumerate the lattice and assemble the transition matrix.

    Each state has at most M outgoing moves (one per emitted form, weighted
    by nu), so the matrix is sparse. Raises if the state count exceeds
    ``max_states``.
    """
    src = _as_source(source)
    if src.M != M:
        raise ValueError(f"source has {src.M} forms, expected {M}")
    if M < 2 or L < 2:
        raise ValueError("need M >= 2 and L >= 2")
    count = state_count(M, L)
    if count > max_states:
        raise ValueError(
            f"state space too large: {count} states exceeds cap {max_states}"
        )
    n = L * (M - 1)
    states = _enumerate_states(M, n)
    keys = _state_keys(states, n)
    S = states.shape[0]
    rows = np.arange(S, dtype=np.int64)
    nu = src.as_array()
    parts_r, parts_c, parts_d = [], [], []
    for j in range(M):
        cols = np.searchsorted(keys, _state_keys(_apply_update_bulk(states, j), n))
        parts_r.append(rows)
        parts_c.append(cols)
        parts_d.append(np.full(S, nu[j]))
    matrix = sp.csr_matrix(
        (np.concatenate(parts_d), (np.concatenate(parts_r), np.concatenate(parts_c))),
        shape=(S, S),
    )
    return ChainModel(M=M, L=L, nu=src.nu, states=states, matrix=matrix)


def _root_state_index(chain: ChainModel) -> int:
    """Index of the dominant form's corner state.

    Repeatedly hearing form j drives all mass onto form j, so the corner of
    any form with positive emission probability is reachable from everywhere;
    anchoring the stationary solve there keeps the linear system nonsingular
    even when the lattice contains unreachable (transient) states. The most
    frequent form's corner also carries substantial stationary mass, which
    keeps the anchored solve well conditioned.
    """
    nu = np.asarray(chain.nu)
    j = int(np.argmax(nu))
    corner = np.zeros(chain.M, dtype=np.int64)
    corner[j] = chain.total_quanta
    keys = _state_keys(chain.states, chain.total_quanta)
    idx = int(np.searchsorted(keys, _state_keys(corner[None, :], chain.total_quanta)[0]))
    return idx


def _solve_stationary(matrix: sp.csr_matrix, root: int) -> np.ndarray:
    """Solve pi A = pi, sum(pi) = 1 with the balance equation of ``root``
    replaced by the normalization (valid because ``root`` is reachable from
    every state)."""
    S = matrix.shape[0]
    if S <= _DENSE_CUTOFF:
        B = matrix.toarray().T - np.eye(S)
        B[root, :] = 1.0
        rhs = np.zeros(S)
        rhs[root] = 1.0
        pi = np.linalg.solve(B, rhs)
    else:
        # Fix pi[root] = 1 and solve the remaining balance equations; a dense
        # normalization row would destroy sparsity in the LU factorization.
        T = (sp.identity(S, format="csc") - matrix.T).tocsc()
        keep = np.arange(S) != root
        B = T[keep][:, keep].tocsc()
        rhs = -T[keep][:, [root]].toarray().ravel()
        x = splu(B, permc_spec="MMD_AT_PLUS_A").solve(rhs)
        pi = np.empty(S)
        pi[keep] = x
        pi[root] = 1.0
    pi = np.maximum(pi, 0.0)
    total = pi.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise RuntimeError("stationary solve failed: no valid probability vector")
    return pi / total


def stationary(chain: ChainModel) -> StationaryDistribution:
    """Stationary distribution of the chain.

    Solved directly from the balance equations; densely for small chains and
    via sparse LU on a reduced system for large ones. The result is checked
    against pi A = pi to 1e-10 in max norm.
    """
    root = _root_state_index(chain)
    pi = _solve_stationary(chain.matrix, root)
    residual = np.abs(pi @ chain.matrix - pi).max()
    if residual > 1e-10:
        raise RuntimeError(
            f"stationary solve residual {residual:.3e} exceeds 1e-10; "
            "the chain may lack a unique recurrent class"
        )
    return StationaryDistribution(pi=pi)


def geometric_stationary(L: int, nu: float) -> np.ndarray:
    """Two-form stationary law over states 0..L, geometric in the odds ratio.

    State m (learner frequency m/L) has weight lambda**m with
    lambda = nu/(1-nu); computed in log space so large L and lopsided nu do
    not overflow. Requires nu in (0, 1) strictly.
    """
    if not 0.0 < nu < 1.0:
        raise ValueError(f"need 0 < nu < 1 for the geometric form, got {nu}")
    m = np.arange(L + 1, dtype=np.float64)
    logw = m * (math.log(nu) - math.log1p(-nu))
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def expected_frequency_closed_form(L: int, nu: float) -> float:
    """Expected long-run frequency of form 1 for a two-form learner.

    Evaluates the closed form
        1 + (1/L) * ((L+1)/(lambda**(L+1) - 1) - 1/(lambda - 1)),
    lambda = nu/(1-nu), with the removable singularity at nu = 1/2 mapped to
    exactly 0.5 and the nu -> 0, 1 limits mapped to 0 and 1. Large powers are
    short-circuited before they overflow.
    """
    if L < 2:
        raise ValueError(f"capacity must be at least 2, got L={L}")
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"source frequency must lie in [0, 1], got {nu}")
    if nu == 0.0:
        return 0.0
    if nu == 1.0:
        return 1.0
    delta = (2.0 * nu - 1.0) / (1.0 - nu)  # lambda - 1, computed without cancellation
    if abs(delta) < _LAMBDA_ONE_TOL:
        return 0.5
    x = (L + 1) * math.log1p(delta)
    if x > 700.0:
        head = 0.0  # (L+1)/(lambda**(L+1)-1) underflows
    else:
        head = (L + 1) / math.expm1(x)
    return 1.0 + (head - 1.0 / delta) / L


def expected_frequencies_numeric(chain: ChainModel) -> np.ndarray:
    """Expected long-run frequency of every form: the stationary average of
    the per-state usage probabilities."""
    pi = stationary(chain).pi
    return pi @ (chain.states / chain.total_quanta)


@lru_cache(maxsize=32)
def _enumerate_lumped_states(M: int, n: int) -> np.ndarray:
    """Compositions of n into M parts with the last M-1 parts sorted
    ascending: orbit representatives when all alternative forms share one
    emission probability. Read-only and cached."""
    reps = []
    for first in range(n + 1):
        for tail in _partitions_fixed_len(n - first, M - 1):
            reps.append((first,) + tail)
    arr = np.asarray(reps, dtype=np.int64)
    arr.flags.writeable = False
    return arr


def _partitions_fixed_len(n: int, k: int, minimum: int = 0):
    if k == 1:
        if n >= minimum:
            yield (n,)
        return
    for first in range(minimum, n // k + 1):
        for rest in _partitions_fixed_len(n - first, k - 1, first):
            yield (first,) + rest


def expected_frequency_equal_split(
    M: int,
    L: int,
    dominant_freq: float,
    max_states: int = DEFAULT_STATE_CAP,
) -> float:
    """Expected long-run frequency of form 1 when the remaining probability
    is split equally over the other M-1 forms.

    The alternative forms are exchangeable under such a source, so states
    that differ only by permuting them can be merged. The merged chain gives
    the same form-1 expectation as the full chain at a fraction of the size;
    the cap still refers to the full (unmerged) state count.
    """
    if M < 2 or L < 2:
        raise ValueError("need M >= 2 and L >= 2")
    if not 0.0 <= dominant_freq <= 1.0:
        raise ValueError(f"dominant frequency must lie in [0, 1], got {dominant_freq}")
    if state_count(M, L) > max_states:
        raise ValueError(
            f"state space too large: {state_count(M, L)} states exceeds cap {max_states}"
        )
    if M == 2:
        chain = build_chain(2, L, (dominant_freq, 1.0 - dominant_freq), max_states)
        return float(expected_frequencies_numeric(chain)[0])
    q = float(dominant_freq)
    if q == 1.0:
        return 1.0
    if q == 0.0:
        return 0.0
    h = (1.0 - q) / (M - 1)
    n = L * (M - 1)
    reps = _enumerate_lumped_states(M, n)
    S = reps.shape[0]
    keys = _state_keys(reps, n)
    rows = np.arange(S, dtype=np.int64)
    parts_r, parts_c, parts_d = [], [], []
    for j in range(M):
        new = _apply_update_bulk(reps, j)
        new[:, 1:].sort(axis=1)  # canonical representative of the image orbit
        cols = np.searchsorted(keys, _state_keys(new, n))
        parts_r.append(rows)
        parts_c.append(cols)
        parts_d.append(np.full(S, q if j == 0 else h))
    matrix = sp.csr_matrix(
        (np.concatenate(parts_d), (np.concatenate(parts_r), np.concatenate(parts_c))),
        shape=(S, S),
    )
    corner = np.zeros(M, dtype=np.int64)
    if q >= h:
        corner[0] = n
    else:
        corner[-1] = n  # orbit of "all mass on one alternative form"
    root = int(np.searchsorted(keys, _state_keys(corner[None, :], n)[0]))
    pi = _solve_stationary(matrix, root)
    residual = np.abs(pi @ matrix - pi).max()
    if residual > 1e-10:
        raise RuntimeError(f"stationary solve residual {residual:.3e} exceeds 1e-10")
    return float(pi @ (reps[:, 0] / n))


def boosting_margin(L: int, nu: float) -> float:
    """How far the learner's expected frequency exceeds the source's.

    Positive for every nu in (1/2, 1); zero at the symmetry point nu = 1/2
    and at nu = 1.
    """
    if not 0.5 <= nu <= 1.0:
        raise ValueError(f"boosting margin is defined for nu in [0.5, 1], got {nu}")
    return expected_frequency_closed_form(L, nu) - nu
