"""Sparse Poisson regression via an l1-penalized weighted score.

The estimator minimizes an exponentially weighted score criterion whose
gradient stays numerically tame when counts are huge, where the usual
penalized log-likelihood becomes fragile. The package bundles the two
objectives, an orthant-wise quasi-Newton solver and a proximal-gradient
solver, three penalty tuning rules, a cross-validated likelihood
baseline, finite-sample guarantee diagnostics, and a simulation harness
with a CLI.
"""

__version__ = "0.1.0"

from .baseline import CvConfig, cross_validate, default_lambda_grid, fit_poisson_lasso, poisson_deviance
from .datagen import generate_beta, generate_design, generate_problem, generate_response, standardize
from .exceptions import (
    AllLambdasFailedError,
    DegenerateColumnError,
    DivergenceError,
    DomainError,
    EmptySupportError,
    MissingOracleError,
    RateOverflowError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    ReplicationRecord,
    run_bound_experiment,
    run_coverage_experiment,
    run_error_experiment,
    run_robustness_experiment,
    run_solution_comparison,
)
from .objectives import (
    hessian_quadratic_form,
    loglik_gradient,
    loglik_objective,
    weighted_gradient,
    weighted_objective,
)
from .problem import Coefficients, ModelProblem, ObjectiveValue, is_standardized
from .sampling import derive_subseed, rng_stream, sample_poisson, sample_poisson_array
from .solver import FitResult, SolverConfig, fit_owlqn, fit_proximal, kkt_residual, soft_threshold
from .theory import (
    BoundReport,
    TheoryConstants,
    cone_constant,
    restricted_eigenvalue_estimate,
    verify_error_bound,
)
from .tuning import (
    ScoreSupDist,
    TuningSpec,
    coverage_check,
    empirical_quantile,
    lambda_asymptotic,
    normal_quantile,
    select_lambda,
    simulate_sup_score_gaussian,
    simulate_sup_score_oracle,
)

__all__ = [
    "__version__",
    "AllLambdasFailedError",
    "BoundReport",
    "Coefficients",
    "CvConfig",
    "DegenerateColumnError",
    "DivergenceError",
    "DomainError",
    "EmptySupportError",
    "ExperimentConfig",
    "ExperimentReport",
    "FitResult",
    "MissingOracleError",
    "ModelProblem",
    "ObjectiveValue",
    "RateOverflowError",
    "ReplicationRecord",
    "ScoreSupDist",
    "SolverConfig",
    "TheoryConstants",
    "TuningSpec",
    "cone_constant",
    "coverage_check",
    "cross_validate",
    "default_lambda_grid",
    "derive_subseed",
    "empirical_quantile",
    "fit_owlqn",
    "fit_poisson_lasso",
    "fit_proximal",
    "generate_beta",
    "generate_design",
    "generate_problem",
    "generate_response",
    "hessian_quadratic_form",
    "is_standardized",
    "kkt_residual",
    "lambda_asymptotic",
    "loglik_gradient",
    "loglik_objective",
    "normal_quantile",
    "poisson_deviance",
    "restricted_eigenvalue_estimate",
    "rng_stream",
    "run_bound_experiment",
    "run_coverage_experiment",
    "run_error_experiment",
    "run_robustness_experiment",
    "run_solution_comparison",
    "sample_poisson",
    "sample_poisson_array",
    "select_lambda",
    "simulate_sup_score_gaussian",
    "simulate_sup_score_oracle",
    "soft_threshold",
    "standardize",
    "verify_error_bound",
    "weighted_gradient",
    "weighted_objective",
]
