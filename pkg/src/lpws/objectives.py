"""Objectives, gradients, and curvature for penalized Poisson regression.

Two composite objectives share the same data. The weighted-score objective

    (1/n) sum_i ( y_i exp(-u_i / 2) + exp(u_i / 2) ),   u_i = x_i . beta,

has a score equation that rescales each Poisson residual by the square root
of its fitted rate, which caps the influence of large counts. The classical
negative log-likelihood

    (1/n) sum_i ( -y_i u_i + exp(u_i) )

is kept as the baseline smooth part. Both are convex in beta; both get an
l1 penalty lam * ||beta||_1 on top.
"""

from __future__ import annotations

import numpy as np

from .problem import ModelProblem, ObjectiveValue

OBJECTIVE_KINDS = ("weighted", "loglik")

# exp arguments past this magnitude are refused before they reach exp()
EXP_BOUND = 700.0


def _beta_array(beta, p):
    b = np.asarray(getattr(beta, "beta", beta), dtype=float)
    if b.shape != (p,):
        raise ValueError(f"beta has shape {b.shape}, expected ({p},)")
    return b


def _check_exponent(u, bound):
    top = float(np.max(np.abs(u))) if u.size else 0.0
    if top > bound:
        raise OverflowError(
            f"linear predictor magnitude {top:.4g} exceeds the exponent bound {bound:g}"
        )


def _check_value(value, what):
    value = float(value)
    if not np.isfinite(value):
        raise OverflowError(f"{what} overflowed to a non-finite value")
    return value


def _check_vector(vec, what):
    if not np.all(np.isfinite(vec)):
        raise OverflowError(f"{what} overflowed to a non-finite value")
    return vec


def smooth_value_and_gradient(problem: ModelProblem, objective_kind, beta):
    """Value and gradient of the smooth part, sharing one exponential pass.

    objective_kind is "weighted" or "loglik". Both solvers and the public
    single-quantity operations all route through here so that every caller
    sees bit-identical numerics.
    """
    b = _beta_array(beta, problem.p)
    u = problem.x @ b
    n = problem.n
    if objective_kind == "weighted":
        # exponent is u/2, so |u| up to twice the bound is representable
        _check_exponent(u, 2.0 * EXP_BOUND)
        half = np.exp(0.5 * u)
        shrunk = problem.y / half
        value = _check_value(np.mean(shrunk + half), "weighted objective")
        grad = (problem.x.T @ (half - shrunk)) / (2.0 * n)
    elif objective_kind == "loglik":
        _check_exponent(u, EXP_BOUND)
        rate = np.exp(u)
        value = _check_value(np.mean(rate - problem.y * u), "log-likelihood objective")
        grad = (problem.x.T @ (rate - problem.y)) / n
    else:
        raise ValueError(f"unknown objective kind {objective_kind!r}")
    return value, _check_vector(grad, "gradient")


def weighted_objective(problem: ModelProblem, beta, lam) -> ObjectiveValue:
    """Weighted-score objective split into smooth part, penalty, and total."""
    smooth = smooth_value_and_gradient(problem, "weighted", beta)[0]
    return _with_penalty(smooth, beta, lam, problem.p)


def weighted_gradient(problem: ModelProblem, beta):
    """Gradient of the smooth weighted-score part:
    (1/2n) sum_i x_i (exp(u_i/2) - y_i exp(-u_i/2))."""
    return smooth_value_and_gradient(problem, "weighted", beta)[1]


def loglik_objective(problem: ModelProblem, beta, lam) -> ObjectiveValue:
    """Negative log-likelihood objective split into smooth, penalty, total."""
    smooth = smooth_value_and_gradient(problem, "loglik", beta)[0]
    return _with_penalty(smooth, beta, lam, problem.p)


def loglik_gradient(problem: ModelProblem, beta):
    """Gradient of the smooth negative log-likelihood part:
    -(1/n) sum_i x_i (y_i - exp(u_i))."""
    return smooth_value_and_gradient(problem, "loglik", beta)[1]


def hessian_quadratic_form(problem: ModelProblem, beta, delta):
    """delta' H delta for the weighted-score Hessian at beta:

        (1/4n) sum_i (x_i . delta)^2 ( y_i exp(-u_i/2) + exp(u_i/2) ).

    The 1/(4n) constant follows from differentiating the objective twice;
    it is pinned by finite-difference checks in the test suite. Always
    nonnegative, so the smooth part is convex.
    """
    b = _beta_array(beta, problem.p)
    d = _beta_array(delta, problem.p)
    u = problem.x @ b
    _check_exponent(u, 2.0 * EXP_BOUND)
    half = np.exp(0.5 * u)
    weights = problem.y / half + half
    xd = problem.x @ d
    value = np.sum(xd * xd * weights) / (4.0 * problem.n)
    return _check_value(value, "quadratic form")


def _with_penalty(smooth, beta, lam, p):
    lam = float(lam)
    if not lam >= 0.0:
        raise ValueError("lam must be nonnegative")
    b = _beta_array(beta, p)
    penalty = float(lam * np.sum(np.abs(b)))
    return ObjectiveValue(smooth=smooth, penalty=penalty, total=smooth + penalty)
