"""Monte Carlo teacher-learner simulation harness.

Runs seeded trials of the update rule against a frozen source, aggregates
ensembles, and measures convergence times via a moving average of the
learner's form-1 frequency. Trial k always draws from the random stream
keyed by (master_seed, k), so results are bit-identical however the trials
are scheduled; ensemble curves are accumulated in integer quanta, which
makes the averages exactly independent of execution order as well.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels
from .learner import LearnerState, RngStream, SourceDistribution, new_learner
from .markov import (
    DEFAULT_STATE_CAP,
    build_chain,
    expected_frequencies_numeric,
    expected_frequency_closed_form,
    state_count,
)

__all__ = [
    "SimConfig",
    "Trajectory",
    "EnsembleStats",
    "ConvergenceResult",
    "run_trajectory",
    "ensemble_mean_frequency",
    "moving_average",
    "convergence_time",
    "long_run_mean_frequency",
]

# Trials per work unit; fixed so that results do not depend on worker count.
_CHUNK_TRIALS = 64

# Stream id reserved for single long auxiliary runs (never a trial index).
_AUX_STREAM = 2**32

# Long-run fallback used when no exact expected frequency is available.
_LONG_RUN_STEPS = 10**6
_LONG_RUN_BURN_IN = 10**5


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one teacher-learner experiment.

    ``init`` is "uniform" or an explicit tuple of unit counts, as accepted
    by learner.new_learner. The learning increment is s = 1/L.
    """

    M: int
    L: int
    source: SourceDistribution
    iterations: int
    trials: int = 1
    master_seed: int = 0
    init: Union[str, tuple[int, ...]] = "uniform"

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.source.M != self.M:
            raise ValueError(f"source has {self.source.M} forms, expected {self.M}")
        self.initial_state()  # validate M, L, init eagerly

    @property
    def s(self) -> float:
        return 1.0 / self.L

    def initial_state(self) -> LearnerState:
        return new_learner(self.M, self.L, self.init)


@dataclass(frozen=True)
class Trajectory:
    """One trial's full state history.

    ``units[t]`` is the learner's quanta vector after t iterations (row 0 is
    the initial state); ``frequencies`` divides by the total quanta.
    """

    M: int
    L: int
    trial_index: int
    master_seed: int
    units: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return self.units / (self.L * (self.M - 1))


@dataclass(frozen=True)
class EnsembleStats:
    """Ensemble aggregates over independent trials.

    ``mean_curve[t]`` is the across-trial mean frequency vector after t
    iterations; ``mean_final`` is its last row. ``final_units`` keeps every
    trial's terminal state for distribution-level checks.
    """

    config: SimConfig
    mean_final: np.ndarray
    mean_curve: np.ndarray
    final_units: np.ndarray


@dataclass(frozen=True)
class ConvergenceResult:
    """First-crossing convergence times over an ensemble.

    ``steps[k]`` is the first step n >= window-1 at which trial k's
    window-step moving average of the form-1 frequency is within ``eps`` of
    ``target`` (-1 if that never happens within the iteration budget).
    Trials that never converge are excluded from the mean and counted.
    """

    config: SimConfig
    window: int
    eps: float
    target: float
    target_source: str
    steps: np.ndarray
    mean: float
    stderr: float
    n_nonconverged: int

    @property
    def converged_steps(self) -> np.ndarray:
        return self.steps[self.steps >= 0]


def _emissions(config: SimConfig, trial_index: int) -> np.ndarray:
    """0-based emitted forms for one trial; same draws as repeated emit()."""
    rng = RngStream(config.master_seed, stream=(trial_index,))
    return config.source.sample_forms(rng, config.iterations) - 1


def run_trajectory(config: SimConfig, trial_index: int) -> Trajectory:
    """Simulate one trial and record the full state history."""
    if trial_index < 0:
        raise ValueError(f"trial index must be >= 0, got {trial_index}")
    units0 = np.asarray(config.initial_state().units, dtype=np.int64)
    emissions = _emissions(config, trial_index)
    out = np.empty((config.iterations + 1, config.M), dtype=np.int64)
    _kernels.walk_path(units0, emissions, out)
    return Trajectory(
        M=config.M,
        L=config.L,
        trial_index=trial_index,
        master_seed=config.master_seed,
        units=out,
    )


def _ensemble_chunk(config: SimConfig, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    units0 = np.asarray(config.initial_state().units, dtype=np.int64)
    curve_sum = np.zeros((config.iterations + 1, config.M), dtype=np.int64)
    finals = np.empty((hi - lo, config.M), dtype=np.int64)
    for k in range(lo, hi):
        finals[k - lo] = _kernels.walk_accumulate(units0, _emissions(config, k), curve_sum)
    return curve_sum, finals


def _chunk_ranges(trials: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + _CHUNK_TRIALS, trials)) for lo in range(0, trials, _CHUNK_TRIALS)]


def ensemble_mean_frequency(config: SimConfig, workers: int = 1) -> EnsembleStats:
    """Mean frequency vector at the final step plus the full mean curve.

    ``workers`` threads share the fixed-size trial chunks; the integer
    accumulators make the result identical for any worker count.
    """
    ranges = _chunk_ranges(config.trials)
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: _ensemble_chunk(config, *r), ranges))
    else:
        parts = [_ensemble_chunk(config, lo, hi) for lo, hi in ranges]
    curve_sum = np.zeros((config.iterations + 1, config.M), dtype=np.int64)
    for cs, _ in parts:
        curve_sum += cs
    final_units = np.concatenate([fu for _, fu in parts], axis=0)
    n = config.L * (config.M - 1)
    mean_curve = curve_sum / (n * config.trials)
    mean_final = final_units.sum(axis=0) / (n * config.trials)
    return EnsembleStats(
        config=config,
        mean_final=mean_final,
        mean_curve=mean_curve,
        final_units=final_units,
    )


def moving_average(series: Sequence[float], w: int) -> np.ndarray:
    """Trailing mean over windows of w entries.

    Output k is the mean of entries k..k+w-1 of ``series``; in terms of the
    original indexing, the average ending at position n exists for
    n >= w-1. No partial windows are produced.
    """
    if w < 1:
        raise ValueError(f"window must be >= 1, got {w}")
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if arr.shape[0] < w:
        raise ValueError(f"series of length {arr.shape[0]} is shorter than window {w}")
    cs = np.concatenate(([0.0], np.cumsum(arr)))
    return (cs[w:] - cs[:-w]) / w


def long_run_mean_frequency(config: SimConfig,
                            steps: int = _LONG_RUN_STEPS,
                            burn_in: int = _LONG_RUN_BURN_IN) -> np.ndarray:
    """Time-averaged frequency vector from one long run (after burn-in).

    Used as the expected-frequency estimate when the chain is too large to
    solve exactly. Deterministic: the run uses a reserved stream of the
    config's master seed.
    """
    if not 0 <= burn_in < steps:
        raise ValueError("need 0 <= burn_in < steps")
    units0 = np.asarray(config.initial_state().units, dtype=np.int64)
    rng = RngStream(config.master_seed, stream=(_AUX_STREAM,))
    emissions = config.source.sample_forms(rng, steps) - 1
    out = np.empty((steps + 1, config.M), dtype=np.int64)
    _kernels.walk_path(units0, emissions, out)
    n = config.L * (config.M - 1)
    return out[burn_in + 1:].mean(axis=0) / n


def _default_target(config: SimConfig, max_states: int) -> tuple[float, str]:
    if config.M == 2:
        return expected_frequency_closed_form(config.L, config.source.nu[0]), "closed-form"
    if state_count(config.M, config.L) <= max_states:
        chain = build_chain(config.M, config.L, config.source, max_states)
        return float(expected_frequencies_numeric(chain)[0]), "stationary"
    warnings.warn(
        f"state space {state_count(config.M, config.L)} exceeds cap {max_states}; "
        "convergence target estimated from a long run",
        RuntimeWarning,
        stacklevel=3,
    )
    return float(long_run_mean_frequency(config)[0]), "monte-carlo"


def _crossing_chunk(config: SimConfig, lo: int, hi: int,
                    w: int, eps: float, target: float) -> np.ndarray:
    units0 = np.asarray(config.initial_state().units, dtype=np.int64)
    n = config.L * (config.M - 1)
    out = np.empty((config.iterations + 1, config.M), dtype=np.int64)
    steps = np.empty(hi - lo, dtype=np.int64)
    for k in range(lo, hi):
        _kernels.walk_path(units0, _emissions(config, k), out)
        cs = np.concatenate(([0], np.cumsum(out[:, 0], dtype=np.int64)))
        win = (cs[w:] - cs[:-w]) / (w * n)  # moving average ending at step w-1, w, ...
        hits = np.nonzero(np.abs(win - target) <= eps)[0]
        steps[k - lo] = hits[0] + w - 1 if hits.size else -1
    return steps


def convergence_time(
    config: SimConfig,
    w: int = 200,
    eps: float = 1e-3,
    target: Optional[float] = None,
    workers: int = 1,
    max_states: int = DEFAULT_STATE_CAP,
) -> ConvergenceResult:
    """Per-trial first step at which the moving average reaches the target.

    The target defaults to the expected long-run form-1 frequency: the
    closed form for two forms, the numeric stationary value when the chain
    fits under ``max_states``, and a long-run estimate (flagged with a
    RuntimeWarning) otherwise. Each trial uses its own moving average; the
    mean and standard error are over converged trials only.
    """
    if w < 1:
        raise ValueError(f"window must be >= 1, got {w}")
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if config.iterations + 1 < w:
        raise ValueError(
            f"window {w} does not fit in {config.iterations} iterations"
        )
    if target is None:
        target_value, target_source = _default_target(config, max_states)
    else:
        target_value, target_source = float(target), "user"
    ranges = _chunk_ranges(config.trials)
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda r: _crossing_chunk(config, *r, w, eps, target_value), ranges)
            )
    else:
        parts = [_crossing_chunk(config, lo, hi, w, eps, target_value) for lo, hi in ranges]
    steps = np.concatenate(parts)
    converged = steps[steps >= 0]
    n_nonconverged = int(config.trials - converged.size)
    if converged.size == 0:
        mean = math.nan
        stderr = math.nan
    else:
        mean = float(converged.mean())
        stderr = (
            float(converged.std(ddof=1) / math.sqrt(converged.size))
            if converged.size > 1
            else math.nan
        )
    return ConvergenceResult(
        config=config,
        window=w,
        eps=eps,
        target=target_value,
        target_source=target_source,
        steps=steps,
        mean=mean,
        stderr=stderr,
        n_nonconverged=n_nonconverged,
    )
