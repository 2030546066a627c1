import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpws.objectives import (
    hessian_quadratic_form,
    loglik_gradient,
    loglik_objective,
    smooth_value_and_gradient,
    weighted_gradient,
    weighted_objective,
)
from lpws.problem import Coefficients, ModelProblem


def _instance(seed, n=12, p=4):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    beta = rng.standard_normal(p) * 0.5
    y = rng.poisson(np.exp(np.clip(x @ beta, None, 5.0))).astype(float)
    return ModelProblem(x, y), beta


def _fd_gradient(fun, beta):
    grad = np.empty_like(beta)
    for j in range(beta.size):
        h = 1e-6 * (1.0 + abs(beta[j]))
        up = beta.copy()
        dn = beta.copy()
        up[j] += h
        dn[j] -= h
        grad[j] = (fun(up) - fun(dn)) / (2.0 * h)
    return grad


def test_weighted_gradient_matches_finite_differences():
    for seed in range(20):
        prob, beta = _instance(seed)
        fun = lambda b: weighted_objective(prob, b, 0.0).smooth
        grad = weighted_gradient(prob, beta)
        fd = _fd_gradient(fun, beta)
        denom = max(1.0, float(np.max(np.abs(grad))))
        assert np.max(np.abs(grad - fd)) / denom < 1e-6


def test_loglik_gradient_matches_finite_differences():
    for seed in range(20):
        prob, beta = _instance(seed)
        fun = lambda b: loglik_objective(prob, b, 0.0).smooth
        grad = loglik_gradient(prob, beta)
        fd = _fd_gradient(fun, beta)
        denom = max(1.0, float(np.max(np.abs(grad))))
        assert np.max(np.abs(grad - fd)) / denom < 1e-6


def test_hessian_quadratic_form_matches_second_differences():
    for seed in range(10):
        prob, beta = _instance(seed)
        rng = np.random.default_rng(seed + 1000)
        delta = rng.standard_normal(prob.p)
        fun = lambda t: weighted_objective(prob, beta + t * delta, 0.0).smooth
        h = 1e-4
        second = (fun(h) - 2.0 * fun(0.0) + fun(-h)) / h**2
        quad = hessian_quadratic_form(prob, beta, delta)
        assert abs(quad - second) / max(1.0, abs(quad)) < 1e-4


def test_objective_values_against_direct_formulas():
    prob, beta = _instance(3)
    lam = 0.37
    u = prob.x @ beta
    direct_w = float(np.mean(prob.y * np.exp(-u / 2.0) + np.exp(u / 2.0)))
    direct_l = float(np.mean(np.exp(u) - prob.y * u))
    pen = lam * float(np.sum(np.abs(beta)))
    w = weighted_objective(prob, beta, lam)
    l = loglik_objective(prob, beta, lam)
    assert w.smooth == pytest.approx(direct_w, rel=1e-14)
    assert l.smooth == pytest.approx(direct_l, rel=1e-14)
    assert w.penalty == pytest.approx(pen, rel=1e-14)
    assert w.total == pytest.approx(direct_w + pen, rel=1e-14)


def test_fused_kernel_matches_wrappers():
    prob, beta = _instance(4)
    for kind, obj, grad in (
        ("weighted", weighted_objective, weighted_gradient),
        ("loglik", loglik_objective, loglik_gradient),
    ):
        value, g = smooth_value_and_gradient(prob, kind, beta)
        assert value == obj(prob, beta, 0.0).smooth
        assert np.array_equal(g, grad(prob, beta))


def test_overflow_guard_raises():
    x = np.full((3, 1), 10.0)
    prob = ModelProblem(x, np.array([1.0, 2.0, 0.0]))
    with pytest.raises(OverflowError):
        weighted_objective(prob, np.array([300.0]), 0.0)
    with pytest.raises(OverflowError):
        loglik_objective(prob, np.array([100.0]), 0.0)


def test_accepts_coefficients_wrapper():
    prob, beta = _instance(5)
    wrapped = Coefficients(beta)
    assert weighted_objective(prob, wrapped, 0.1).total == weighted_objective(prob, beta, 0.1).total


def test_expected_weighted_gradient_zero_at_truth():
    # the estimating-equation property: E[grad at beta*] = 0 over y | x
    rng = np.random.default_rng(77)
    n, p = 40, 3
    x = rng.standard_normal((n, p))
    beta = np.array([0.4, -0.3, 0.0])
    mu = np.exp(x @ beta)
    reps = 20000
    total = np.zeros(p)
    total_sq = np.zeros(p)
    for _ in range(reps):
        y = rng.poisson(mu).astype(float)
        g = weighted_gradient(ModelProblem(x, y), beta)
        total += g
        total_sq += g * g
    mean = total / reps
    std_err = np.sqrt((total_sq / reps - mean**2) / reps)
    assert np.all(np.abs(mean) <= 4.0 * std_err + 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_convexity_along_segments(seed, lam, t0, t1):
    prob, beta = _instance(seed % 50, n=8, p=3)
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(3)
    a = beta + t0 * d
    b = beta + t1 * d
    mid = 0.5 * (a + b)
    for obj in (weighted_objective, loglik_objective):
        fa = obj(prob, a, lam).total
        fb = obj(prob, b, lam).total
        fm = obj(prob, mid, lam).total
        assert fm <= 0.5 * (fa + fb) + 1e-9 * max(1.0, abs(fa), abs(fb))


def test_hessian_quadratic_form_nonnegative():
    for seed in range(30):
        prob, beta = _instance(seed)
        rng = np.random.default_rng(seed + 5)
        delta = rng.standard_normal(prob.p)
        assert hessian_quadratic_form(prob, beta, delta) >= 0.0
