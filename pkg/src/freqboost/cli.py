"""Command-line front end.

Subcommands cover the analysis surface: stationary solves, boost curves,
single trajectories, convergence measurements, the scripted figure
pipelines, and data fitting. Every randomized command takes --seed and
defaults to a fixed seed (12345), never the clock, so reruns are
byte-identical. Capacity can be given either as --L (integer state space)
or --s (learning increment); they are two names for the same parameter via
s = 1/L, and exactly one may be used.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .experiments import (
    DEFAULT_MASTER_SEED,
    FIGURE_IDS,
    ExperimentSpec,
    default_init,
    default_spec,
    run_experiment,
)
from .fitting import case_report, fit, load_observations, write_fit_report
from .learner import SourceDistribution
from .markov import (
    DEFAULT_STATE_CAP,
    build_chain,
    expected_frequencies_numeric,
    expected_frequency_closed_form,
    state_count,
    stationary,
)
from .simulate import SimConfig, convergence_time, run_trajectory

__all__ = ["main"]


class CliError(Exception):
    """Invalid arguments detected after flag parsing (exit code 2)."""


def _parse_nu(text: str, M: int) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"--nu must be a comma-separated list of numbers, got {text!r}")
    if len(values) != M:
        raise CliError(f"--nu needs {M} entries for M={M}, got {len(values)}")
    try:
        SourceDistribution(values)
    except ValueError as exc:
        raise CliError(str(exc))
    return values


def _parse_grid(text: str) -> tuple[float, ...]:
    """Comma list ("0.5,0.6") or range syntax ("0.5:0.9:0.1", stop inclusive)."""
    try:
        if ":" in text:
            lo_s, hi_s, step_s = text.split(":")
            lo, hi, step = float(lo_s), float(hi_s), float(step_s)
            if step <= 0 or hi < lo:
                raise ValueError
            n = int(round((hi - lo) / step))
            values = tuple(round(lo + k * step, 12) for k in range(n + 1) if lo + k * step <= hi + 1e-12)
        else:
            values = tuple(float(v) for v in text.split(","))
        if not values:
            raise ValueError
    except ValueError:
        raise CliError(f"bad grid {text!r}; use v1,v2,... or lo:hi:step")
    return values


def _resolve_L(args) -> int:
    has_L = getattr(args, "L", None) is not None
    has_s = getattr(args, "s", None) is not None
    if has_L == has_s:
        raise CliError("give exactly one of --L (capacity) or --s (increment, s = 1/L)")
    if has_L:
        if args.L < 2:
            raise CliError(f"--L must be an integer >= 2, got {args.L}")
        return args.L
    if args.s <= 0:
        raise CliError(f"--s must equal 1/L for an integer L >= 2, got {args.s}")
    inv = 1.0 / args.s
    L = round(inv)
    if L < 2 or abs(inv - L) > 1e-9 * max(1.0, abs(inv)):
        raise CliError(f"--s must equal 1/L for an integer L >= 2, got {args.s}")
    return int(L)


def _add_capacity_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--L", type=int, help="state-space capacity L (integer >= 2)")
    parser.add_argument("--s", type=float, help="learning increment s = 1/L (alternative to --L)")


def _cmd_stationary(args) -> int:
    L = _resolve_L(args)
    nu = _parse_nu(args.nu, args.M)
    count = state_count(args.M, L)
    if count > args.max_states:
        raise CliError(
            f"state space has {count} states, above cap {args.max_states} "
            "(raise --max-states to proceed)"
        )
    chain = build_chain(args.M, L, nu, max_states=args.max_states)
    dist = stationary(chain)
    freqs = expected_frequencies_numeric(chain)
    print(f"M={args.M} L={L} s={1.0 / L:.12g} nu={','.join(format(v, '.12g') for v in nu)}")
    print(f"states: {chain.n_states}")
    print("pi:", " ".join(format(p, ".12g") for p in dist.pi))
    print("expected frequency by form:", " ".join(format(f, ".12g") for f in freqs))
    if args.M == 2:
        p = expected_frequency_closed_form(L, nu[0])
        print(f"closed-form expected frequency (form 1): {p:.12g}")
    return 0


def _cmd_boost_curve(args) -> int:
    L = _resolve_L(args)
    grid = _parse_grid(args.nu_grid)
    if args.M == 2:
        vectors = tuple((v, 1.0 - v) for v in grid)
    else:
        vectors = tuple((q, (1.0 - q) / 2, (1.0 - q) / 2) for q in grid)
    for vec in vectors:
        if any(v < 0 for v in vec):
            raise CliError(f"grid value {vec[0]} leaves a negative probability")
    spec = ExperimentSpec(
        figure="boost-curve",
        kind="boost",
        M=args.M,
        L_values=(L,),
        nu_vectors=vectors,
        iterations=args.iters,
        trials=args.trials,
        master_seed=args.seed,
    )
    run_experiment(spec, out_path=args.out, workers=args.workers)
    print(f"wrote {args.out}")
    return 0


def _cmd_trajectory(args) -> int:
    L = _resolve_L(args)
    nu = _parse_nu(args.nu, args.M)
    config = SimConfig(
        M=args.M,
        L=L,
        source=SourceDistribution(nu),
        iterations=args.iters,
        trials=max(1, args.trial + 1),
        master_seed=args.seed,
        init=default_init(args.M, L),
    )
    traj = run_trajectory(config, trial_index=args.trial)
    freqs = traj.frequencies
    header = (
        ["M", "L", "s"]
        + [f"nu{i}" for i in range(1, args.M + 1)]
        + ["seed", "trial", "step"]
        + [f"p{i}" for i in range(1, args.M + 1)]
    )
    with Path(args.out).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        fixed = [args.M, L, format(1.0 / L, ".12g")] + [
            format(v, ".12g") for v in config.source.nu
        ] + [args.seed, args.trial]
        for step in range(0, args.iters + 1):
            writer.writerow(fixed + [step] + [format(p, ".12g") for p in freqs[step]])
    print(f"wrote {args.out}")
    return 0


def _cmd_converge(args) -> int:
    L = _resolve_L(args)
    nu = _parse_nu(args.nu, args.M)
    if args.M >= 3 and state_count(args.M, L) > args.max_states:
        print(
            f"note: {state_count(args.M, L)} states above cap; "
            "target will be estimated from a long run",
            file=sys.stderr,
        )
    config = SimConfig(
        M=args.M,
        L=L,
        source=SourceDistribution(nu),
        iterations=args.iters,
        trials=args.trials,
        master_seed=args.seed,
        init=default_init(args.M, L),
    )
    result = convergence_time(
        config, w=args.window, eps=args.eps, workers=args.workers, max_states=args.max_states
    )
    def fmt(v: float) -> str:
        return "" if (isinstance(v, float) and math.isnan(v)) else format(v, ".12g")

    with Path(args.out).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["M", "L", "s"]
            + [f"nu{i}" for i in range(1, args.M + 1)]
            + ["seed", "window", "eps", "trials", "target", "target_source",
               "conv_mean", "conv_stderr", "n_nonconverged"]
        )
        writer.writerow(
            [args.M, L, format(1.0 / L, ".12g")]
            + [format(v, ".12g") for v in config.source.nu]
            + [args.seed, args.window, format(args.eps, ".12g"), args.trials,
               format(result.target, ".12g"), result.target_source,
               fmt(result.mean), fmt(result.stderr), result.n_nonconverged]
        )
        writer.writerow(["trial", "converged", "step"])
        for k, step in enumerate(result.steps):
            converged = step >= 0
            writer.writerow([k, int(converged), step if converged else ""])
    print(f"wrote {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    spec = default_spec(args.figure, master_seed=args.seed, trials=args.trials)
    run_experiment(spec, out_path=args.out, workers=args.workers)
    print(f"wrote {args.out}")
    return 0


def _cmd_fit(args) -> int:
    observations = load_observations(args.data)
    result = fit(
        observations,
        M=args.M,
        L_grid=range(2, args.L_max + 1),
        weight=args.weight,
    )
    cases = case_report(observations, M=args.M, L=result.L, weight=args.weight)
    write_fit_report(args.out, result, cases)
    print(
        f"M={result.M} L_fit={result.L} s_fit={result.s:.12g} sse={result.sse:.6g}; "
        f"wrote {args.out}"
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqboost",
        description=(
            "Frequency-boosting learner toolkit: stationary analysis, Monte Carlo "
            "simulation, figure pipelines, and fitting."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stationary", help="stationary distribution and expected frequencies")
    p.add_argument("--M", type=int, required=True, help="number of forms (>= 2)")
    _add_capacity_flags(p)
    p.add_argument("--nu", required=True, help="comma-separated emission probabilities, M entries")
    p.add_argument("--max-states", type=int, default=DEFAULT_STATE_CAP, dest="max_states")
    p.set_defaults(func=_cmd_stationary)

    p = sub.add_parser("boost-curve", help="expected and simulated frequency vs source frequency")
    p.add_argument("--M", type=int, required=True, choices=(2, 3))
    _add_capacity_flags(p)
    p.add_argument(
        "--nu-grid", required=True, dest="nu_grid",
        help="dominant-form frequencies: v1,v2,... or lo:hi:step "
             "(for M=3 the rest splits equally over the alternatives)",
    )
    p.add_argument("--iters", type=int, default=30_000)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_boost_curve)

    p = sub.add_parser("trajectory", help="per-step frequencies of a single run")
    p.add_argument("--M", type=int, required=True)
    _add_capacity_flags(p)
    p.add_argument("--nu", required=True)
    p.add_argument("--iters", type=int, default=30_000)
    p.add_argument("--trial", type=int, default=0, help="trial index within the seeded ensemble")
    p.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_trajectory)

    p = sub.add_parser("converge", help="first-crossing convergence times over an ensemble")
    p.add_argument("--M", type=int, required=True)
    _add_capacity_flags(p)
    p.add_argument("--nu", required=True)
    p.add_argument("--window", type=int, default=200, help="moving-average window")
    p.add_argument("--eps", type=float, default=1e-3, help="tolerance around the target")
    p.add_argument("--iters", type=int, default=30_000, help="iteration budget per trial")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-states", type=int, default=DEFAULT_STATE_CAP, dest="max_states")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("experiment", help="run a bundled figure pipeline")
    p.add_argument("--figure", required=True, choices=FIGURE_IDS)
    p.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED)
    p.add_argument("--trials", type=int, default=None, help="override the figure's trial count")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("fit", help="fit the capacity to observed frequency data")
    p.add_argument("--data", required=True, help="CSV with header label,category,parent1,parent2,simon")
    p.add_argument("--M", type=int, required=True, choices=(2, 3))
    p.add_argument(
        "--L-max", type=int, default=200, dest="L_max",
        help="top of the capacity grid (M=3 solves one chain per grid point; "
             "the default grid takes about a minute)",
    )
    p.add_argument("--weight", type=float, default=0.5, help="parent1's share of the input mix")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: invalid-args: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: invalid-args: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures: I/O, solver breakdowns
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
