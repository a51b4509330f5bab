"""Scripted experiment pipelines that regenerate the package's reference
figures as CSV data.

Every pipeline is deterministic given its master seed, echoes all parameters
needed to reproduce each row, and writes one unified schema:

    figure,M,L,s,nu1..nuM,iterations,trials,seed,form,
    p_analytic,p_montecarlo,conv_mean,conv_stderr,n_nonconverged

Fields that do not apply to a row are left empty. For trajectory-style
figures the ``iterations`` column carries the step index. ``p_analytic`` is
the deterministic reference value: the closed form for two forms, the
numeric stationary value otherwise (when the chain fits under the state
cap). Plotting is out of scope; any tool can consume the CSV.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .learner import SourceDistribution, balanced_units
from .markov import (
    DEFAULT_STATE_CAP,
    build_chain,
    expected_frequencies_numeric,
    expected_frequency_closed_form,
    expected_frequency_equal_split,
    state_count,
)
from .simulate import SimConfig, convergence_time, ensemble_mean_frequency, run_trajectory

__all__ = [
    "ExperimentSpec",
    "FIGURE_IDS",
    "DEFAULT_MASTER_SEED",
    "default_spec",
    "run_experiment",
    "write_rows",
    "csv_header",
]

DEFAULT_MASTER_SEED = 12345

FIGURE_IDS = ("fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b")


@dataclass(frozen=True)
class ExperimentSpec:
    """One figure's parameter grid.

    ``kind`` selects the pipeline: "boost" runs an ensemble per grid point
    and reports final mean frequencies, "trajectory" records a single run
    per capacity value, "convergence" measures first-crossing times.
    """

    figure: str
    kind: str
    M: int
    L_values: tuple[int, ...]
    nu_vectors: tuple[tuple[float, ...], ...]
    iterations: int
    trials: int
    master_seed: int
    stride: int = 1
    window: int = 200
    eps: float = 1e-3

    def __post_init__(self) -> None:
        if self.kind not in ("boost", "trajectory", "convergence"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.L_values or not self.nu_vectors:
            raise ValueError("parameter grids must be non-empty")
        if any(L < 2 for L in self.L_values):
            raise ValueError("every capacity value must be >= 2")
        for vec in self.nu_vectors:
            if len(vec) != self.M:
                raise ValueError(f"nu vector {vec} does not have {self.M} entries")
            SourceDistribution(vec)  # validates range and sum
        if self.iterations < 1 or self.trials < 1 or self.stride < 1:
            raise ValueError("iterations, trials and stride must be >= 1")


def _freq_grid(lo: int, hi: int, step: int) -> tuple[float, ...]:
    """Grid of frequencies lo/100 .. hi/100 in steps of step/100."""
    return tuple(i / 100 for i in range(lo, hi + 1, step))


def _two_form_vectors(grid: tuple[float, ...]) -> tuple[tuple[float, ...], ...]:
    return tuple((v, 1.0 - v) for v in grid)


def _equal_split_vectors(grid: tuple[float, ...]) -> tuple[tuple[float, ...], ...]:
    return tuple((q, (1.0 - q) / 2, (1.0 - q) / 2) for q in grid)


def _spec_fig1a(seed: int) -> ExperimentSpec:
    return ExperimentSpec(
        figure="fig1a", kind="boost", M=2, L_values=(20,),
        nu_vectors=_two_form_vectors(_freq_grid(50, 100, 5)),
        iterations=30_000, trials=200, master_seed=seed,
    )


def _spec_fig1b(seed: int) -> ExperimentSpec:
    return ExperimentSpec(
        figure="fig1b", kind="boost", M=2, L_values=(1000, 200, 100, 20),
        nu_vectors=_two_form_vectors(_freq_grid(50, 100, 5)),
        iterations=30_000, trials=200, master_seed=seed,
    )


def _spec_fig2a(seed: int) -> ExperimentSpec:
    return ExperimentSpec(
        figure="fig2a", kind="trajectory", M=3, L_values=(100,),
        nu_vectors=((0.4, 0.25, 0.35),),
        iterations=30_000, trials=1, master_seed=seed, stride=10,
    )


def _spec_fig2b(seed: int) -> ExperimentSpec:
    return ExperimentSpec(
        figure="fig2b", kind="boost", M=3, L_values=(200, 100, 20),
        nu_vectors=_equal_split_vectors(_freq_grid(35, 90, 5)),
        iterations=30_000, trials=200, master_seed=seed,
    )


def _spec_fig3a(seed: int) -> ExperimentSpec:
    return ExperimentSpec(
        figure="fig3a", kind="trajectory", M=2, L_values=(1000, 200, 100, 20),
        nu_vectors=((0.7, 0.3),),
        iterations=30_000, trials=1, master_seed=seed, stride=10,
    )


def _spec_fig3b(seed: int) -> ExperimentSpec:
    return ExperimentSpec(
        figure="fig3b", kind="convergence", M=2, L_values=(1000, 200, 100, 20),
        nu_vectors=((0.7, 0.3),),
        iterations=30_000, trials=200, master_seed=seed,
    )


def _spec_fig4a(seed: int) -> ExperimentSpec:
    return ExperimentSpec(
        figure="fig4a", kind="trajectory", M=3, L_values=(1000, 200, 100, 20),
        nu_vectors=((0.4, 0.25, 0.35),),
        iterations=30_000, trials=1, master_seed=seed, stride=10,
    )


def _spec_fig4b(seed: int) -> ExperimentSpec:
    return ExperimentSpec(
        figure="fig4b", kind="convergence", M=2, L_values=(1000,),
        nu_vectors=_two_form_vectors(_freq_grid(55, 95, 5)),
        iterations=30_000, trials=200, master_seed=seed,
    )


_BUILDERS = {
    "fig1a": _spec_fig1a,
    "fig1b": _spec_fig1b,
    "fig2a": _spec_fig2a,
    "fig2b": _spec_fig2b,
    "fig3a": _spec_fig3a,
    "fig3b": _spec_fig3b,
    "fig4a": _spec_fig4a,
    "fig4b": _spec_fig4b,
}


def default_spec(
    figure: str,
    master_seed: int = DEFAULT_MASTER_SEED,
    trials: Optional[int] = None,
    iterations: Optional[int] = None,
) -> ExperimentSpec:
    """Built-in parameter grid for one of the reference figures."""
    if figure not in _BUILDERS:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURE_IDS)}")
    spec = _BUILDERS[figure](master_seed)
    if trials is not None:
        spec = replace(spec, trials=trials)
    if iterations is not None:
        spec = replace(spec, iterations=iterations)
    return spec


def default_init(M: int, L: int) -> Union[str, tuple[int, ...]]:
    """Uniform start when it exists on the lattice, else the most even split."""
    return "uniform" if (L * (M - 1)) % M == 0 else balanced_units(M, L)


def _equal_tail(nu: tuple[float, ...]) -> bool:
    return len(set(nu[1:])) == 1


def _reference_frequencies(
    M: int, L: int, nu: tuple[float, ...], max_states: int = DEFAULT_STATE_CAP
) -> Optional[np.ndarray]:
    """Deterministic expected long-run frequencies, if affordable.

    Two forms: closed form. More forms: stationary solve, using the merged
    chain when the alternative forms share one emission probability. None
    when the chain exceeds the state cap.
    """
    if M == 2:
        p = expected_frequency_closed_form(L, nu[0])
        return np.array([p, 1.0 - p])
    if state_count(M, L) > max_states:
        return None
    if _equal_tail(nu):
        p = expected_frequency_equal_split(M, L, nu[0], max_states)
        rest = (1.0 - p) / (M - 1)
        return np.array([p] + [rest] * (M - 1))
    chain = build_chain(M, L, nu, max_states)
    return expected_frequencies_numeric(chain)


def csv_header(M: int) -> list[str]:
    return (
        ["figure", "M", "L", "s"]
        + [f"nu{i}" for i in range(1, M + 1)]
        + ["iterations", "trials", "seed", "form",
           "p_analytic", "p_montecarlo", "conv_mean", "conv_stderr", "n_nonconverged"]
    )


def _base_row(spec: ExperimentSpec, L: int, nu: tuple[float, ...]) -> dict:
    row = {
        "figure": spec.figure,
        "M": spec.M,
        "L": L,
        "s": 1.0 / L,
        "iterations": spec.iterations,
        "trials": spec.trials,
        "seed": spec.master_seed,
        "form": None,
        "p_analytic": None,
        "p_montecarlo": None,
        "conv_mean": None,
        "conv_stderr": None,
        "n_nonconverged": None,
    }
    for i, v in enumerate(nu, start=1):
        row[f"nu{i}"] = v
    return row


def _config(spec: ExperimentSpec, L: int, nu: tuple[float, ...]) -> SimConfig:
    return SimConfig(
        M=spec.M,
        L=L,
        source=SourceDistribution(nu),
        iterations=spec.iterations,
        trials=spec.trials,
        master_seed=spec.master_seed,
        init=default_init(spec.M, L),
    )


def _boost_rows(spec: ExperimentSpec, workers: int) -> list[dict]:
    rows = []
    for L in spec.L_values:
        for nu in spec.nu_vectors:
            stats = ensemble_mean_frequency(_config(spec, L, nu), workers=workers)
            ref = _reference_frequencies(spec.M, L, nu)
            for form in range(1, spec.M + 1):
                row = _base_row(spec, L, nu)
                row["form"] = form
                row["p_montecarlo"] = float(stats.mean_final[form - 1])
                if ref is not None:
                    row["p_analytic"] = float(ref[form - 1])
                rows.append(row)
    return rows


def _trajectory_rows(spec: ExperimentSpec, workers: int) -> list[dict]:
    rows = []
    for L in spec.L_values:
        for nu in spec.nu_vectors:
            config = _config(spec, L, nu)
            traj = run_trajectory(config, trial_index=0)
            freqs = traj.frequencies
            ref = _reference_frequencies(spec.M, L, nu)
            steps = list(range(0, spec.iterations + 1, spec.stride))
            if steps[-1] != spec.iterations:
                steps.append(spec.iterations)
            for step in steps:
                for form in range(1, spec.M + 1):
                    row = _base_row(spec, L, nu)
                    row["iterations"] = step
                    row["trials"] = 1
                    row["form"] = form
                    row["p_montecarlo"] = float(freqs[step, form - 1])
                    if ref is not None:
                        row["p_analytic"] = float(ref[form - 1])
                    rows.append(row)
    return rows


def _convergence_rows(spec: ExperimentSpec, workers: int) -> list[dict]:
    rows = []
    for L in spec.L_values:
        for nu in spec.nu_vectors:
            result = convergence_time(
                _config(spec, L, nu), w=spec.window, eps=spec.eps, workers=workers
            )
            row = _base_row(spec, L, nu)
            row["form"] = 1
            row["p_analytic"] = result.target
            row["conv_mean"] = result.mean
            row["conv_stderr"] = result.stderr
            row["n_nonconverged"] = result.n_nonconverged
            rows.append(row)
    return rows


def run_experiment(
    spec: ExperimentSpec,
    out_path: Optional[Union[str, Path]] = None,
    workers: int = 1,
) -> list[dict]:
    """Run one figure pipeline; optionally write its CSV.

    Returns the row dicts (raw values). Rerunning with the same spec gives
    byte-identical CSV output for any ``workers`` value.
    """
    if spec.kind == "boost":
        rows = _boost_rows(spec, workers)
    elif spec.kind == "trajectory":
        rows = _trajectory_rows(spec, workers)
    else:
        rows = _convergence_rows(spec, workers)
    if out_path is not None:
        write_rows(rows, spec.M, out_path)
    return rows


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return format(v, ".12g")


def write_rows(rows: list[dict], M: int, out_path: Union[str, Path]) -> None:
    """Write experiment rows as UTF-8, comma-separated, LF-terminated CSV."""
    header = csv_header(M)
    path = Path(out_path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(row.get(col)) for col in header])
