"""Diagnostics for the estimator's finite-sample error guarantee.

The guarantee says: when the penalty level dominates the sup-norm score at
the truth (lam > c * H) and a curvature condition holds on the cone
||d_Tc||_1 <= L ||d_T||_1 with L = (c+1)/(c-1), then the l1 estimation
error is at most 3 L(1+L) lam s / kappa^2 and the smooth-objective gap at
most 3 L(1+L) lam^2 s / kappa^2. This module estimates kappa by sampling
cone directions and checks every piece of that statement on fitted
replications, reporting replications whose side conditions failed as "not
covered" rather than as violations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EmptySupportError
from .objectives import _beta_array, smooth_value_and_gradient
from .problem import ModelProblem
from .sampling import rng_stream
from .solver import FitResult

# stream key for cone-direction sampling
_CONE_KEY = 105

# cone directions are scored in batches of this many
_CONE_BATCH = 256


@dataclass(frozen=True)
class TheoryConstants:
    """The constants entering the error bound, bundled.

    kappa is the restricted-eigenvalue estimate; L the cone constant tied
    to the tuning multiplier; R the design's largest absolute entry;
    C_bound the worst constant in the bound's stated range.
    """

    kappa: float
    L: float
    R: float
    tuning_c: float
    C_bound: float = 3.0

    def __post_init__(self):
        if not self.kappa > 0.0:
            raise ValueError("kappa must be positive")
        if not self.tuning_c > 1.0:
            raise ValueError("tuning_c must exceed 1")
        if self.L != cone_constant(self.tuning_c):
            raise ValueError("L must equal (c+1)/(c-1) for the tuning multiplier c")
        if not self.R > 0.0:
            raise ValueError("R must be positive")


@dataclass(frozen=True)
class BoundReport:
    """Everything verify_error_bound measured on one replication."""

    h_realized: float
    lambda_used: float
    covered: bool
    penalty_side_ok: bool
    sparsity_side_ok: bool
    cone_lhs: float
    cone_rhs: float
    cone_ok: bool
    l1_error: float
    l1_bound: float
    l1_ok: bool
    objective_gap: float
    objective_bound: float
    objective_ok: bool
    support_size: int


def cone_constant(tuning_c):
    """L = (c+1)/(c-1), the cone width tied to the tuning multiplier."""
    c = float(tuning_c)
    if not c > 1.0:
        raise ValueError("tuning_c must exceed 1")
    return (c + 1.0) / (c - 1.0)


def restricted_eigenvalue_estimate(problem: ModelProblem, beta_star, L, num_samples, seed):
    """Sampled lower estimate of the restricted eigenvalue kappa.

    Directions are drawn inside the cone ||d_Tc||_1 <= L ||d_T||_1: the
    on-support block uniform on the unit sphere, the off-support block
    with l1 mass a uniform fraction of the cone budget spread over random
    signs and proportions. Returns sqrt of the smallest sampled ratio
    quadratic_form / ||d_T||_2^2. A minimum over samples, so an upper
    bound of the true cone infimum; reported as an estimate.
    """
    num_samples = int(num_samples)
    if num_samples < 1000:
        raise ValueError("num_samples must be at least 1000 for a stable minimum")
    b = _beta_array(beta_star, problem.p)
    support = np.nonzero(b != 0.0)[0]
    if support.size == 0:
        raise EmptySupportError("beta_star has empty support; the cone is undefined")
    L = float(L)
    if not L > 0.0:
        raise ValueError("L must be positive")
    free = np.setdiff1d(np.arange(problem.p), support)
    rng = rng_stream(seed, _CONE_KEY)

    best = np.inf
    done = 0
    while done < num_samples:
        m = min(_CONE_BATCH, num_samples - done)
        block = rng.standard_normal((support.size, m))
        norms = np.linalg.norm(block, axis=0)
        norms[norms == 0.0] = 1.0
        block /= norms
        deltas = np.zeros((problem.p, m))
        deltas[support] = block
        if free.size:
            raw = rng.standard_normal((free.size, m))
            l1 = np.sum(np.abs(raw), axis=0)
            l1[l1 == 0.0] = 1.0
            budget = rng.random(m) * L * np.sum(np.abs(block), axis=0)
            deltas[free] = raw / l1 * budget
        quad = _quadratic_forms(problem, b, deltas)
        # on-support block is unit-norm by construction
        best = min(best, float(np.min(quad)))
        done += m
    return float(np.sqrt(max(best, 0.0)))


def verify_error_bound(
    problem: ModelProblem, beta_star, fit: FitResult, lam, constants: TheoryConstants
) -> BoundReport:
    """Measure every inequality of the error guarantee on one fit.

    covered means the realized penalty-domination condition lam > c*H held
    for this replication's responses; only covered replications carry the
    guarantee. The sparsity side condition lam*s <= 2 kappa^2 / (3 L(1+L) R)
    is evaluated and reported separately.
    """
    b_star = _beta_array(beta_star, problem.p)
    b_hat = _beta_array(fit.beta_hat, problem.p)
    lam = float(lam)
    support = np.nonzero(b_star != 0.0)[0]
    if support.size == 0:
        raise EmptySupportError("beta_star has empty support")
    s = int(support.size)
    kappa_sq = constants.kappa**2
    L = constants.L
    c = constants.tuning_c
    cb = constants.C_bound

    f_star, g_star = smooth_value_and_gradient(problem, "weighted", b_star)
    h_realized = float(np.max(np.abs(g_star)))
    covered = lam > c * h_realized
    sparsity_side_ok = lam * s <= 2.0 * kappa_sq / (3.0 * L * (1.0 + L) * constants.R)

    delta = b_hat - b_star
    mask = np.zeros(problem.p, dtype=bool)
    mask[support] = True
    cone_lhs = float(np.sum(np.abs(delta[~mask])))
    cone_rhs = L * float(np.sum(np.abs(delta[mask])))

    l1_error = float(np.sum(np.abs(delta)))
    l1_bound = cb * L * (1.0 + L) * lam * s / kappa_sq

    f_hat = smooth_value_and_gradient(problem, "weighted", b_hat)[0]
    objective_gap = abs(f_hat - f_star)
    objective_bound = cb * L * (1.0 + L) * lam**2 * s / kappa_sq

    return BoundReport(
        h_realized=h_realized,
        lambda_used=lam,
        covered=covered,
        penalty_side_ok=covered,
        sparsity_side_ok=bool(sparsity_side_ok),
        cone_lhs=cone_lhs,
        cone_rhs=cone_rhs,
        cone_ok=cone_lhs <= cone_rhs + 1e-8,
        l1_error=l1_error,
        l1_bound=l1_bound,
        l1_ok=l1_error <= l1_bound,
        objective_gap=objective_gap,
        objective_bound=objective_bound,
        objective_ok=objective_gap <= objective_bound,
        support_size=s,
    )


def _quadratic_forms(problem, b, deltas):
    """hessian_quadratic_form batched over direction columns."""
    u = problem.x @ b
    if np.max(np.abs(u)) > 1400.0:
        raise OverflowError("linear predictor too large for curvature weights")
    half = np.exp(0.5 * u)
    weights = problem.y / half + half
    xd = problem.x @ deltas
    return (weights[:, None] * xd * xd).sum(axis=0) / (4.0 * problem.n)
