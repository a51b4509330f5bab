"""Frequency-boosting learner toolkit.

Exact simulation of a reinforcement-type rule learner fed by an
inconsistent source, Markov-chain analysis of its long-run behavior
(closed form for two forms, numeric stationary solves in general), a
seeded Monte Carlo harness with figure pipelines, and least-squares
fitting of the learning increment to observed frequency data.
"""
from .learner import (
    LearnerState,
    RngStream,
    SourceDistribution,
    balanced_units,
    emit,
    frequency,
    new_learner,
    update,
)
from .markov import (
    DEFAULT_STATE_CAP,
    ChainModel,
    StationaryDistribution,
    boosting_margin,
    build_chain,
    expected_frequencies_numeric,
    expected_frequency_closed_form,
    expected_frequency_equal_split,
    geometric_stationary,
    state_count,
    stationary,
)
from .simulate import (
    ConvergenceResult,
    EnsembleStats,
    SimConfig,
    Trajectory,
    convergence_time,
    ensemble_mean_frequency,
    long_run_mean_frequency,
    moving_average,
    run_trajectory,
)
from .experiments import (
    DEFAULT_MASTER_SEED,
    FIGURE_IDS,
    ExperimentSpec,
    default_spec,
    run_experiment,
    write_rows,
)
from .fitting import (
    CaseRecord,
    FitResult,
    Observation,
    ObservationSet,
    bundled_observations,
    case_report,
    fit,
    load_observations,
    predict,
    write_fit_report,
)

__version__ = "0.1.0"

__all__ = [
    "LearnerState",
    "SourceDistribution",
    "RngStream",
    "new_learner",
    "update",
    "emit",
    "frequency",
    "balanced_units",
    "ChainModel",
    "StationaryDistribution",
    "DEFAULT_STATE_CAP",
    "state_count",
    "build_chain",
    "stationary",
    "geometric_stationary",
    "expected_frequency_closed_form",
    "expected_frequencies_numeric",
    "expected_frequency_equal_split",
    "boosting_margin",
    "SimConfig",
    "Trajectory",
    "EnsembleStats",
    "ConvergenceResult",
    "run_trajectory",
    "ensemble_mean_frequency",
    "moving_average",
    "convergence_time",
    "long_run_mean_frequency",
    "ExperimentSpec",
    "FIGURE_IDS",
    "DEFAULT_MASTER_SEED",
    "default_spec",
    "run_experiment",
    "write_rows",
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
    "__version__",
]
