"""Sparse linear regression from corrupted covariates.

Builds bias-corrected Gram/cross-moment surrogates for additive error,
multiplicative error, or missing data, projects the surrogate Gram matrix to
the nearest positive semi-definite matrix in elementwise max-norm, and solves
the resulting l1-penalized quadratic program along a regularization path with
corrected cross-validation for tuning.
"""

from .crossval import CvReport, FoldPlan, corrected_cv, make_folds, naive_cv
from .lasso import (
    QuadraticProblem,
    SolutionPath,
    cholesky_reformulate,
    kkt_residual,
    lambda_grid,
    soft_threshold,
    solution_path,
    solve,
)
from .psd import AdmmConfig, PsdResult, eigen_clamp, l1_ball_project, nearest_psd
from .simbench import (
    AdditiveGaussian,
    ARDesign,
    CSDesign,
    ExperimentReport,
    MissingBernoulli,
    MultiplicativeLognormal,
    SimConfig,
    condition_diagnostics,
    default_beta_star,
    generate_instance,
    metrics,
    run_experiment,
    run_replication,
)
from .surrogate import (
    AdditiveError,
    CorruptedDataset,
    ErrorModel,
    MissingData,
    MultiplicativeError,
    SurrogatePair,
    build_surrogates,
    estimate_missing_rates,
    surrogate_additive,
    surrogate_missing,
    surrogate_multiplicative,
)

__version__ = "0.1.0"

__all__ = [
    "AdditiveError",
    "AdditiveGaussian",
    "AdmmConfig",
    "ARDesign",
    "CorruptedDataset",
    "CSDesign",
    "CvReport",
    "ErrorModel",
    "ExperimentReport",
    "FoldPlan",
    "MissingBernoulli",
    "MissingData",
    "MultiplicativeError",
    "MultiplicativeLognormal",
    "PsdResult",
    "QuadraticProblem",
    "SimConfig",
    "SolutionPath",
    "SurrogatePair",
    "build_surrogates",
    "cholesky_reformulate",
    "condition_diagnostics",
    "corrected_cv",
    "default_beta_star",
    "eigen_clamp",
    "estimate_missing_rates",
    "generate_instance",
    "kkt_residual",
    "l1_ball_project",
    "lambda_grid",
    "make_folds",
    "metrics",
    "naive_cv",
    "nearest_psd",
    "run_experiment",
    "run_replication",
    "soft_threshold",
    "solution_path",
    "solve",
    "surrogate_additive",
    "surrogate_missing",
    "surrogate_multiplicative",
]
