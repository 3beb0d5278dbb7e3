"""Certified upper bounds on Ising log-partition functions."""

from ._qrelax import (
    CSV_HEADER,
    BaselineResult,
    ConfigError,
    IsingModel,
    KelleyResult,
    SolverResult,
    TrwResult,
    base_features,
    degree_ordered_features,
    exact_marginals,
    full_features,
    greedy_bound,
    log_partition,
    logdet_bound,
    max_f,
    metric_diag_bound,
    parameter_matrix,
    qt_bound,
    qt_divergence,
    run_experiment,
    sample_model,
    trw_bound,
    wright_omega,
)

__all__ = [
    "CSV_HEADER",
    "BaselineResult",
    "ConfigError",
    "IsingModel",
    "KelleyResult",
    "SolverResult",
    "TrwResult",
    "base_features",
    "degree_ordered_features",
    "exact_marginals",
    "full_features",
    "greedy_bound",
    "log_partition",
    "logdet_bound",
    "max_f",
    "metric_diag_bound",
    "parameter_matrix",
    "qt_bound",
    "qt_divergence",
    "run_experiment",
    "sample_model",
    "trw_bound",
    "wright_omega",
]
