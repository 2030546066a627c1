import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri

from lpws.exceptions import DomainError, MissingOracleError
from lpws.problem import Coefficients, ModelProblem
from lpws.tuning import (
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


def _standardized_design(seed, n, p):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    x -= x.mean(axis=0)
    x /= np.sqrt((x**2).mean(axis=0))
    return x


def test_normal_quantile_matches_scipy_everywhere():
    qs = np.concatenate([
        np.array([1e-12, 1e-9, 1e-6, 1e-3, 0.02425, 0.5]),
        np.linspace(0.001, 0.999, 997),
        1.0 - np.array([1e-12, 1e-9, 1e-6]),
    ])
    for q in qs:
        assert abs(normal_quantile(float(q)) - float(ndtri(q))) < 1e-9


def test_normal_quantile_domain():
    for bad in (0.0, 1.0, -0.3, 1.7):
        with pytest.raises(DomainError):
            normal_quantile(bad)


def test_lambda_asymptotic_closed_form():
    val = lambda_asymptotic(500, 20, 0.05, 2.0)
    oracle = (2.0 / 2.0) / math.sqrt(500) * float(ndtri(1.0 - 0.05 / 40.0))
    assert val == pytest.approx(oracle, abs=1e-12)
    assert val == pytest.approx(0.135208, abs=1e-4)


def test_lambda_asymptotic_domain_checks():
    with pytest.raises(DomainError):
        lambda_asymptotic(500, 20, 1.5, 2.0)
    with pytest.raises(DomainError):
        lambda_asymptotic(500, 20, 0.05, 1.0)


def test_small_tail_ratio_warns():
    with pytest.warns(UserWarning):
        lambda_asymptotic(100, 4, 0.5, 2.0)  # p/alpha = 8
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lambda_asymptotic(100, 20, 0.05, 2.0)  # p/alpha = 400, silent


@settings(max_examples=120, deadline=None)
@given(
    st.lists(st.floats(0.0, 100.0), min_size=1, max_size=60),
    st.floats(0.001, 0.999),
)
def test_empirical_quantile_order_statistic(vals, q):
    samples = np.sort(np.asarray(vals, dtype=float))
    rank = min(max(math.ceil(q * samples.size), 1), samples.size)
    assert empirical_quantile(samples, q) == samples[rank - 1]


def test_empirical_quantile_validation():
    with pytest.raises(DomainError):
        empirical_quantile(np.array([]), 0.5)
    with pytest.raises(ValueError):
        empirical_quantile(np.array([2.0, 1.0]), 0.5)


def test_score_sup_dist_validation():
    ScoreSupDist(np.array([0.1, 0.2]), "oracle")
    with pytest.raises(ValueError):
        ScoreSupDist(np.array([0.2, 0.1]), "oracle")
    with pytest.raises(ValueError):
        ScoreSupDist(np.array([-0.1, 0.2]), "gaussian")
    with pytest.raises(ValueError):
        ScoreSupDist(np.array([0.1]), "other")


def test_tuning_spec_validation():
    TuningSpec(rule="asymptotic", alpha=0.05, c=2.0)
    with pytest.raises(DomainError):
        TuningSpec(rule="asymptotic", alpha=1.5, c=2.0)
    with pytest.raises(DomainError):
        TuningSpec(rule="asymptotic", alpha=0.05, c=0.5)
    with pytest.raises(ValueError):
        TuningSpec(rule="nonsense", alpha=0.05, c=2.0)


def test_oracle_sup_scores_match_independent_simulation():
    # re-simulate the sup-score distribution with numpy's own Poisson
    # sampler and compare tail quantiles
    n, p = 80, 6
    x = _standardized_design(3, n, p)
    beta = np.zeros(p)
    beta[:2] = (0.4, -0.7)
    prob = ModelProblem(x, np.zeros(n))
    dist = simulate_sup_score_oracle(prob, Coefficients(beta), 4000, seed=10)

    rng = np.random.default_rng(999)
    mu = np.exp(x @ beta)
    sups = np.empty(4000)
    for i in range(4000):
        y = rng.poisson(mu)
        sups[i] = np.max(np.abs(x.T @ ((y - mu) / np.sqrt(mu)))) / (2.0 * n)
    for q in (0.5, 0.9, 0.95):
        a = empirical_quantile(dist.samples, q)
        b = empirical_quantile(np.sort(sups), q)
        assert abs(a - b) / b < 0.08, f"q={q}: {a:.4f} vs {b:.4f}"


def test_gaussian_sup_scores_match_analytic_single_column():
    # p=1 standardized column: sup score is |N(0,1)| / (2 sqrt(n))
    n = 100
    x = _standardized_design(5, n, 1)
    prob = ModelProblem(x, np.zeros(n))
    dist = simulate_sup_score_gaussian(prob, 20000, seed=4)
    for q in (0.5, 0.9, 0.99):
        analytic = float(ndtri(0.5 + q / 2.0)) / (2.0 * math.sqrt(n))
        sampled = empirical_quantile(dist.samples, q)
        assert abs(sampled - analytic) / analytic < 0.06


def test_select_lambda_dispatch_and_oracle_requirement():
    n, p = 60, 5
    x = _standardized_design(7, n, p)
    prob = ModelProblem(x, np.zeros(n))
    spec_asym = TuningSpec(rule="asymptotic", alpha=0.05, c=2.0)
    assert select_lambda(spec_asym, prob) == lambda_asymptotic(n, p, 0.05, 2.0)

    spec_g = TuningSpec(rule="gaussian_approx", alpha=0.1, c=2.0, mc_samples=2000, seed=6)
    lam_g = select_lambda(spec_g, prob)
    dist = simulate_sup_score_gaussian(prob, 2000, seed=6)
    assert lam_g == 2.0 * empirical_quantile(dist.samples, 0.9)

    spec_e = TuningSpec(rule="exact_oracle", alpha=0.1, c=2.0, mc_samples=500, seed=6)
    with pytest.raises(MissingOracleError):
        select_lambda(spec_e, prob)
    beta = np.zeros(p)
    beta[0] = 0.3
    lam_e = select_lambda(spec_e, prob, beta_star=Coefficients(beta))
    dist_e = simulate_sup_score_oracle(prob, Coefficients(beta), 500, seed=6)
    assert lam_e == 2.0 * empirical_quantile(dist_e.samples, 0.9)


def test_coverage_tracks_nominal_level():
    n, p = 100, 8
    x = _standardized_design(11, n, p)
    beta = np.zeros(p)
    beta[:3] = (0.5, -0.2, 0.3)
    prob = ModelProblem(x, np.zeros(n))
    spec = TuningSpec(rule="exact_oracle", alpha=0.1, c=2.0, mc_samples=4000, seed=1)
    lam = select_lambda(spec, prob, beta_star=Coefficients(beta))
    cov = coverage_check(prob, Coefficients(beta), lam, 2.0, trials=2000, seed=2)
    assert cov == pytest.approx(0.9, abs=0.04)


def test_coverage_check_validates_trials():
    x = _standardized_design(1, 30, 2)
    prob = ModelProblem(x, np.zeros(30))
    with pytest.raises(ValueError):
        coverage_check(prob, Coefficients(np.array([0.1, 0.0])), 0.5, 2.0, trials=10, seed=0)
