"""Learner state, source distribution, and the exact stochastic update rule.

A learner tracks usage probabilities for the M alternative forms of one
grammatical rule. The probabilities live on an integer lattice: the learner
holds L*(M-1) quanta, and form i is used with probability
units[i] / (L*(M-1)). Every exposure moves whole quanta between forms, so
mass is conserved exactly and long runs accumulate no floating-point drift.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "LearnerState",
    "SourceDistribution",
    "RngStream",
    "new_learner",
    "update",
    "emit",
    "frequency",
    "balanced_units",
]

# Tolerance on sum(nu) before normalization.
NU_SUM_TOL = 1e-9


@dataclass(frozen=True)
class LearnerState:
    """Usage-probability state of a learner over M forms of one rule.

    ``units[i]`` counts the quanta held by form ``i+1`` (forms are labeled
    1..M in the public API). The quantum is 1/(M-1) probability-mass units,
    so ``sum(units) == L*(M-1)`` always, and the usage probability of form
    ``i+1`` is ``units[i] / (L*(M-1))``.
    """

    M: int
    L: int
    units: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.M < 2:
            raise ValueError(f"need at least two forms, got M={self.M}")
        if self.L < 2:
            raise ValueError(f"capacity must be at least 2, got L={self.L}")
        if len(self.units) != self.M:
            raise ValueError(f"expected {self.M} unit counts, got {len(self.units)}")
        if any(u < 0 or u != int(u) for u in self.units):
            raise ValueError(f"unit counts must be nonnegative integers: {self.units}")
        if sum(self.units) != self.total_quanta:
            raise ValueError(
                f"unit counts must sum to L*(M-1)={self.total_quanta}, got {sum(self.units)}"
            )

    @property
    def total_quanta(self) -> int:
        return self.L * (self.M - 1)

    def frequencies(self) -> tuple[float, ...]:
        """Usage probability of each form; sums to 1."""
        n = self.total_quanta
        return tuple(u / n for u in self.units)


@dataclass(frozen=True)
class SourceDistribution:
    """Frozen emission probabilities of the teacher over the M forms.

    ``nu`` must be nonnegative and sum to 1 within 1e-9; it is normalized
    exactly at construction and never changes afterwards.
    """

    nu: tuple[float, ...]

    def __init__(self, nu: Sequence[float]):
        vals = tuple(float(v) for v in nu)
        if len(vals) < 2:
            raise ValueError("need emission probabilities for at least two forms")
        if any(v < 0.0 or v > 1.0 for v in vals):
            raise ValueError(f"emission probabilities must lie in [0, 1]: {vals}")
        total = sum(vals)
        if abs(total - 1.0) > NU_SUM_TOL:
            raise ValueError(f"emission probabilities must sum to 1 (got {total!r})")
        vals = tuple(v / total for v in vals)
        object.__setattr__(self, "nu", vals)
        cum = np.cumsum(np.asarray(vals, dtype=np.float64))
        cum[-1] = 1.0  # guard against cumulative rounding below a uniform draw
        object.__setattr__(self, "_cum", cum)

    @property
    def M(self) -> int:
        return len(self.nu)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.nu, dtype=np.float64)

    def sample_forms(self, rng: "RngStream", n: int) -> np.ndarray:
        """n emitted form labels (1-based) drawn in one batch.

        Consumes the stream exactly like n calls of :func:`emit`.
        """
        u = rng.uniforms(n)
        return np.searchsorted(self._cum, u, side="right").astype(np.int64) + 1


class RngStream:
    """Deterministic uniform random stream (PCG64 keyed by seed and stream id).

    The same ``(seed, stream)`` pair produces the same sample sequence on
    every platform, regardless of thread count or execution order. Ensemble
    trial k draws from ``RngStream(master_seed, stream=(k,))``; the streams
    are statistically independent (numpy SeedSequence spawn keys).
    """

    def __init__(self, seed: int, stream: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in [0, 1); identical to n successive uniform() calls."""
        return self._gen.random(int(n))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def balanced_units(M: int, L: int) -> tuple[int, ...]:
    """Most even split of L*(M-1) quanta over M forms.

    Equals the exact uniform split when M divides L*(M-1); otherwise the
    remainder goes to the highest-numbered forms so that form 1 never starts
    with an advantage.
    """
    if M < 2 or L < 2:
        raise ValueError("need M >= 2 and L >= 2")
    n = L * (M - 1)
    base, extra = divmod(n, M)
    return tuple(base + (1 if i >= M - extra else 0) for i in range(M))


def new_learner(M: int, L: int, init: Union[str, Sequence[int]] = "uniform") -> LearnerState:
    """Fresh learner state.

    ``init`` is either "uniform" (requires M to divide L*(M-1); rejected
    rather than rounded otherwise) or an explicit sequence of M unit counts
    summing to L*(M-1).
    """
    if M < 2:
        raise ValueError(f"need at least two forms, got M={M}")
    if L < 2:
        raise ValueError(f"capacity must be at least 2, got L={L}")
    if isinstance(init, str):
        if init != "uniform":
            raise ValueError(f"unknown init {init!r}; use 'uniform' or explicit unit counts")
        n = L * (M - 1)
        if n % M != 0:
            raise ValueError(
                f"uniform init impossible: {n} quanta not divisible by {M} forms"
            )
        units = (n // M,) * M
    else:
        units = tuple(int(u) for u in init)
    return LearnerState(M=M, L=L, units=units)


def update(state: LearnerState, form: int) -> LearnerState:
    """State after the learner hears ``form`` (1-based) once.

    Every other form gives up one quantum (or all it has, if fewer), and the
    heard form absorbs the total. Saturated states are fixed points: when the
    heard form already holds everything, nothing moves.
    """
    if not 1 <= form <= state.M:
        raise ValueError(f"form index must be in 1..{state.M}, got {form}")
    j = form - 1
    units = list(state.units)
    removed = 0
    for i in range(state.M):
        if i != j and units[i] > 0:
            units[i] -= 1
            removed += 1
    units[j] += removed
    return LearnerState(M=state.M, L=state.L, units=tuple(units))


def emit(source: SourceDistribution, rng: RngStream) -> int:
    """One emitted form label (1-based), drawn with probabilities ``nu``."""
    u = rng.uniform()
    return int(np.searchsorted(source._cum, u, side="right")) + 1


def frequency(state: LearnerState, form: int) -> float:
    """Usage probability of ``form`` (1-based)."""
    if not 1 <= form <= state.M:
        raise ValueError(f"form index must be in 1..{state.M}, got {form}")
    return state.units[form - 1] / state.total_quanta
