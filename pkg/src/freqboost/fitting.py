"""Fit the learning increment to observed teacher/learner frequency pairs.

Observations pair the frequencies with which two caregivers used a form
against the frequency with which the child learner ended up using it. The
model predicts the learner's long-run frequency from the mean caregiver
input, so a grid search over the capacity L (equivalently the increment
s = 1/L) gives a least-squares fit. A small sample dataset of sign-language
usage frequencies ships with the package.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .learner import SourceDistribution, balanced_units
from .markov import (
    DEFAULT_STATE_CAP,
    expected_frequency_closed_form,
    expected_frequency_equal_split,
    state_count,
)
from .simulate import SimConfig, long_run_mean_frequency

__all__ = [
    "Observation",
    "ObservationSet",
    "FitResult",
    "CaseRecord",
    "load_observations",
    "bundled_observations",
    "predict",
    "fit",
    "case_report",
    "write_fit_report",
]

_CSV_COLUMNS = ("label", "category", "parent1", "parent2", "simon")

# Values above this are read as percentages and divided by 100.
_PERCENT_THRESHOLD = 1.5

# Seed for the long-run fallback when a chain exceeds the state cap.
_FALLBACK_SEED = 987654321


@dataclass(frozen=True)
class Observation:
    """One rule form: caregiver usage frequencies and the learner's."""

    label: str
    category: str
    parent1_freq: float
    parent2_freq: float
    learner_freq: float

    def __post_init__(self) -> None:
        for name in ("parent1_freq", "parent2_freq", "learner_freq"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{self.label}: {name}={v} outside [0, 1]")

    def input_freq(self, weight: float = 0.5) -> float:
        """Combined caregiver input; ``weight`` is parent1's share."""
        if not 0.0 <= weight <= 1.0:
            raise ValueError(f"weight must lie in [0, 1], got {weight}")
        return weight * self.parent1_freq + (1.0 - weight) * self.parent2_freq


@dataclass(frozen=True)
class ObservationSet:
    """Validated collection of observations with unique labels."""

    records: tuple[Observation, ...]

    def __post_init__(self) -> None:
        labels = [r.label for r in self.records]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in observation set: {labels}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def get(self, label: str) -> Observation:
        for r in self.records:
            if r.label == label:
                return r
        raise KeyError(label)


@dataclass(frozen=True)
class FitResult:
    """Best-fitting capacity for one observation set and form count."""

    M: int
    L: int
    sse: float
    labels: tuple[str, ...]
    inputs: tuple[float, ...]
    observed: tuple[float, ...]
    predicted: tuple[float, ...]
    curve_inputs: tuple[float, ...]
    curve_predicted: tuple[float, ...]

    @property
    def s(self) -> float:
        return 1.0 / self.L


@dataclass(frozen=True)
class CaseRecord:
    """Per-observation model diagnosis at a fixed (M, L)."""

    label: str
    input_freq: float
    observed: float
    predicted: float
    residual: float
    classification: str


def _to_fraction(raw: str, where: str) -> float:
    try:
        v = float(raw)
    except ValueError as exc:
        raise ValueError(f"{where}: not a number: {raw!r}") from exc
    if v > _PERCENT_THRESHOLD:
        v /= 100.0
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{where}: frequency {raw!r} outside [0, 1] after unit detection")
    return v


def load_observations(path: Union[str, Path]) -> ObservationSet:
    """Read observations from CSV with header label,category,parent1,parent2,simon.

    Frequencies may be fractions or percentages; values above 1.5 are taken
    as percentages. Malformed rows and out-of-range values are rejected.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        return _parse_observations(csv.reader(fh), str(path))


def _parse_observations(reader: Iterable[Sequence[str]], where: str) -> ObservationSet:
    rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{where}: empty observation file")
    header = tuple(c.strip().lower() for c in rows[0])
    if header != _CSV_COLUMNS:
        raise ValueError(
            f"{where}: expected header {','.join(_CSV_COLUMNS)}, got {','.join(header)}"
        )
    records = []
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != len(_CSV_COLUMNS):
            raise ValueError(f"{where}, line {k}: expected {len(_CSV_COLUMNS)} fields, got {len(row)}")
        label, category = row[0].strip(), row[1].strip()
        if not label:
            raise ValueError(f"{where}, line {k}: empty label")
        records.append(
            Observation(
                label=label,
                category=category,
                parent1_freq=_to_fraction(row[2], f"{where}, line {k}"),
                parent2_freq=_to_fraction(row[3], f"{where}, line {k}"),
                learner_freq=_to_fraction(row[4], f"{where}, line {k}"),
            )
        )
    return ObservationSet(records=tuple(records))


def bundled_observations() -> ObservationSet:
    """The sample dataset shipped with the package."""
    data = resources.files("freqboost.data").joinpath("simon.csv").read_text("utf-8")
    return _parse_observations(csv.reader(data.splitlines()), "bundled simon.csv")


def predict(
    M: int,
    L: int,
    input_freq: float,
    max_states: int = DEFAULT_STATE_CAP,
) -> float:
    """Predicted long-run learner frequency for a dominant input frequency.

    With two forms this is the closed-form expectation. With three forms the
    remaining probability splits equally over the two alternatives and the
    stationary chain is solved numerically; if the chain would exceed
    ``max_states``, the value is estimated from one long seeded run instead
    (flagged with a RuntimeWarning).
    """
    if M not in (2, 3):
        raise ValueError(f"prediction supports M in {{2, 3}}, got {M}")
    if L < 2:
        raise ValueError(f"capacity must be at least 2, got L={L}")
    if not 0.0 <= input_freq <= 1.0:
        raise ValueError(f"input frequency must lie in [0, 1], got {input_freq}")
    if M == 2:
        return expected_frequency_closed_form(L, input_freq)
    if state_count(M, L) <= max_states:
        return expected_frequency_equal_split(M, L, input_freq, max_states)
    warnings.warn(
        f"state space {state_count(M, L)} exceeds cap {max_states}; "
        "predicting from a long simulated run",
        RuntimeWarning,
        stacklevel=2,
    )
    q = float(input_freq)
    config = SimConfig(
        M=M,
        L=L,
        source=SourceDistribution((q, (1.0 - q) / 2, (1.0 - q) / 2)),
        iterations=1,
        master_seed=_FALLBACK_SEED,
        init=balanced_units(M, L),
    )
    return float(long_run_mean_frequency(config)[0])


def fit(
    observations: ObservationSet,
    M: int,
    L_grid: Sequence[int] = range(2, 201),
    weight: float = 0.5,
    max_states: int = DEFAULT_STATE_CAP,
    curve_points: Optional[int] = None,
) -> FitResult:
    """Least-squares grid search for the capacity L.

    Minimizes the sum of squared differences between predicted and observed
    learner frequencies over the integer grid; ties go to the smaller L.
    For M=3 every grid point must fit under the state cap.
    """
    if len(observations) == 0:
        raise ValueError("cannot fit an empty observation set")
    grid = sorted(set(int(L) for L in L_grid))
    if not grid or grid[0] < 2:
        raise ValueError("capacity grid must contain integers >= 2")
    if M == 3:
        worst = state_count(3, grid[-1])
        if worst > max_states:
            raise ValueError(
                f"capacity grid reaches {worst} states, above cap {max_states}"
            )
    inputs = tuple(obs.input_freq(weight) for obs in observations)
    observed = tuple(obs.learner_freq for obs in observations)
    best_L = None
    best_sse = math.inf
    best_pred: tuple[float, ...] = ()
    for L in grid:
        pred = tuple(predict(M, L, q, max_states) for q in inputs)
        sse = sum((p - o) ** 2 for p, o in zip(pred, observed))
        if sse < best_sse:
            best_L, best_sse, best_pred = L, sse, pred
    assert best_L is not None
    if curve_points is None:
        curve_points = 101 if M == 2 else 41
    curve_inputs = tuple(k / (curve_points - 1) for k in range(curve_points))
    curve_predicted = tuple(predict(M, best_L, q, max_states) for q in curve_inputs)
    return FitResult(
        M=M,
        L=best_L,
        sse=float(best_sse),
        labels=tuple(obs.label for obs in observations),
        inputs=inputs,
        observed=observed,
        predicted=best_pred,
        curve_inputs=curve_inputs,
        curve_predicted=curve_predicted,
    )


def _classify(input_freq: float, M: int) -> str:
    if input_freq > 0.5:
        return "majority-form boosting"
    if input_freq > 1.0 / M:
        return "sub-majority boosting (requires M >= 3)"
    return "dominant-form below 1/M"


def case_report(
    observations: ObservationSet,
    M: int,
    L: int,
    weight: float = 0.5,
    max_states: int = DEFAULT_STATE_CAP,
) -> list[CaseRecord]:
    """Model diagnosis per observation at a fixed (M, L).

    Classifies each input against the boosting regimes: above 1/2 any model
    boosts the form; between 1/M and 1/2 boosting needs more than one
    alternative form; below 1/M the dominant form is not favored at all.
    """
    records = []
    for obs in observations:
        q = obs.input_freq(weight)
        pred = predict(M, L, q, max_states)
        records.append(
            CaseRecord(
                label=obs.label,
                input_freq=q,
                observed=obs.learner_freq,
                predicted=pred,
                residual=pred - obs.learner_freq,
                classification=_classify(q, M),
            )
        )
    return records


def write_fit_report(
    path: Union[str, Path],
    result: FitResult,
    cases: Sequence[CaseRecord],
) -> None:
    """Fit summary plus per-record diagnosis as a two-block CSV."""
    def fmt(v: float) -> str:
        return format(float(v), ".12g")

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["M", "L_fit", "s_fit", "sse"])
        writer.writerow([result.M, result.L, fmt(result.s), fmt(result.sse)])
        writer.writerow(["label", "input", "observed", "predicted", "residual", "classification"])
        for case in cases:
            writer.writerow(
                [
                    case.label,
                    fmt(case.input_freq),
                    fmt(case.observed),
                    fmt(case.predicted),
                    fmt(case.residual),
                    case.classification,
                ]
            )
