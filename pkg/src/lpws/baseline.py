"""Penalized log-likelihood baseline with cross-validated penalty level.

The comparison method: minimize the l1-penalized Poisson negative
log-likelihood, choosing the penalty by K-fold deviance cross-validation
over a descending log-spaced grid with warm starts, the way the usual
lasso-path packages do it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .exceptions import AllLambdasFailedError, DivergenceError
from .objectives import EXP_BOUND, smooth_value_and_gradient
from .problem import ModelProblem
from .sampling import rng_stream
from .solver import SolverConfig, fit_owlqn

# stream key for fold assignment
_FOLD_KEY = 104

_GRID_SIZE = 50
_GRID_RATIO = 1e-3


@dataclass
class CvConfig:
    """Fold count, penalty grid, and fold-assignment seed.

    lambda_grid=None means the default grid: 50 log-spaced levels from
    lambda_max (the level that just zeroes everything) down to
    lambda_max / 1000, descending.
    """

    folds: int = 10
    lambda_grid: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.folds) < 2:
            raise ValueError("folds must be at least 2")
        if self.lambda_grid is not None:
            g = np.asarray(self.lambda_grid, dtype=float)
            if g.ndim != 1 or g.size == 0:
                raise ValueError("lambda_grid must be a nonempty 1-d vector")
            if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
                raise ValueError("lambda_grid entries must be finite and positive")
            if np.any(np.diff(g) >= 0.0):
                raise ValueError("lambda_grid must be strictly descending")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")


def fit_poisson_lasso(problem: ModelProblem, lam, config=None, beta_init=None):
    """One l1-penalized log-likelihood fit at a fixed penalty level."""
    return fit_owlqn(problem, "loglik", lam, config=config, beta_init=beta_init)


def default_lambda_grid(problem: ModelProblem, size=_GRID_SIZE, ratio=_GRID_RATIO):
    """Descending log-spaced grid anchored at the all-zero penalty level."""
    g0 = smooth_value_and_gradient(problem, "loglik", np.zeros(problem.p))[1]
    lam_max = float(np.max(np.abs(g0)))
    if lam_max <= 0.0:
        raise ValueError("gradient at zero vanishes; no meaningful grid exists")
    return np.geomspace(lam_max, ratio * lam_max, int(size))


def poisson_deviance(y, mu):
    """2 sum( y log(y/mu) - (y - mu) ), with the y=0 terms read as mu."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return float(2.0 * np.sum(xlogy(y, y / mu) - (y - mu)))


def cross_validate(problem: ModelProblem, cv=None, solver_config=None):
    """K-fold deviance cross-validation of the penalty level.

    Folds are assigned by a seeded permutation. Each fold's fits walk the
    grid top-down with warm starts. A penalty level fails when any fold
    fit raises DivergenceError or its held-out deviance is not computable
    in double precision (linear predictors too large, or non-finite
    deviance); failed levels are dropped from selection. Fits that merely
    stop short of the optimality tolerance still score, matching how the
    usual lasso-path packages behave; their fragility then shows up in the
    final refit's convergence flag.

    Fold fits default to a looser tolerance and a smaller iteration
    budget than final fits, again like the path packages: level selection
    is insensitive to the last digits of each fold solution, and the
    strict tolerance belongs to the one refit whose convergence is
    reported. Pass solver_config to override.

    Returns
    -------
    best_lambda : float
        Grid minimizer of mean held-out deviance (largest level on ties).
    cv_curve : list of (lambda, mean deviance)
        Surviving levels only, in grid (descending) order.

    Raises
    ------
    AllLambdasFailedError
        When every level failed on some fold.
    """
    cv = cv if cv is not None else CvConfig()
    if solver_config is None:
        solver_config = SolverConfig(tol_kkt=1e-5, max_iters=300)
    if problem.n < int(cv.folds):
        raise ValueError(f"need at least folds={cv.folds} observations, got {problem.n}")
    grid = (
        np.asarray(cv.lambda_grid, dtype=float)
        if cv.lambda_grid is not None
        else default_lambda_grid(problem)
    )
    folds = _assign_folds(problem.n, int(cv.folds), cv.seed)
    deviance = np.zeros((grid.size, int(cv.folds)))
    alive = np.ones(grid.size, dtype=bool)

    for k in range(int(cv.folds)):
        test = folds == k
        train = ~test
        sub = ModelProblem(problem.x[train], problem.y[train], standardized=False)
        x_test = problem.x[test]
        y_test = problem.y[test]
        warm = np.zeros(problem.p)
        for i, lam in enumerate(grid):
            try:
                fit = fit_owlqn(sub, "loglik", float(lam), config=solver_config, beta_init=warm)
            except DivergenceError:
                alive[i] = False
                continue
            warm = fit.beta_hat.beta
            score = _held_out_deviance(x_test, y_test, warm)
            if score is None:
                alive[i] = False
            else:
                deviance[i, k] = score

    if not np.any(alive):
        raise AllLambdasFailedError("every penalty level failed on some fold")
    mean_dev = deviance[alive].mean(axis=1)
    kept = np.nonzero(alive)[0]
    best_lambda = float(grid[kept[int(np.argmin(mean_dev))]])
    cv_curve = [(float(grid[i]), float(m)) for i, m in zip(kept, mean_dev)]
    return best_lambda, cv_curve


def _assign_folds(n, folds, seed):
    order = rng_stream(seed, _FOLD_KEY).permutation(n)
    out = np.empty(n, dtype=int)
    out[order] = np.arange(n) % folds
    return out


def _held_out_deviance(x_test, y_test, beta):
    eta = x_test @ beta
    if float(np.max(eta)) > EXP_BOUND:
        return None
    mu = np.exp(eta)
    if np.any(mu <= 0.0):
        return None
    dev = poisson_deviance(y_test, mu)
    return dev if np.isfinite(dev) else None
