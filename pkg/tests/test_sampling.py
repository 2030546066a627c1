import numpy as np
import pytest
from scipy import stats

from lpws.exceptions import RateOverflowError
from lpws.sampling import (
    RATE_BOUND,
    derive_subseed,
    rng_stream,
    sample_poisson,
    sample_poisson_array,
)


def test_rng_stream_deterministic_and_keyed():
    a = rng_stream(42).standard_normal(5)
    b = rng_stream(42).standard_normal(5)
    c = rng_stream(42, 1).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_stream_rejects_bad_seed():
    with pytest.raises(ValueError):
        rng_stream(-1)
    with pytest.raises(ValueError):
        rng_stream(2**64)


def test_derive_subseed_distinct_paths():
    seeds = {derive_subseed(7, a, b) for a in range(4) for b in range(4)}
    assert len(seeds) == 16
    assert derive_subseed(7, 2, 3) == derive_subseed(7, 2, 3)
    assert all(0 <= s < 2**64 for s in seeds)


def test_scalar_draw_matches_array_draw():
    a = sample_poisson(3.7, rng_stream(5))
    b = sample_poisson_array(np.array([3.7]), rng_stream(5))
    assert a == b[0]
    assert isinstance(a, int)


def test_tiny_rate_gives_zero():
    rng = rng_stream(1)
    draws = sample_poisson_array(np.full(1000, 1e-12), rng)
    assert np.all(draws == 0)


def test_rate_bound_enforced():
    with pytest.raises(RateOverflowError):
        sample_poisson(RATE_BOUND * 1.01, rng_stream(0))
    with pytest.raises(ValueError):
        sample_poisson(0.0, rng_stream(0))
    # the bound itself is allowed
    val = sample_poisson(RATE_BOUND, rng_stream(0))
    assert val >= 0


def test_moments_small_rate():
    rng = rng_stream(9)
    draws = sample_poisson_array(np.full(200000, 4.0), rng)
    assert abs(draws.mean() - 4.0) < 0.03
    assert abs(draws.var() - 4.0) < 0.1


def test_moments_large_rate():
    rng = rng_stream(10)
    mu = 1e9
    draws = sample_poisson_array(np.full(20000, mu), rng)
    assert abs(draws.mean() / mu - 1.0) < 1e-3
    assert abs(draws.var() / mu - 1.0) < 0.05


def test_chi_square_gof_both_regimes():
    # straddle the inversion / transformed-rejection cutover
    for mu, seed in ((6.0, 21), (14.0, 22)):
        rng = rng_stream(seed)
        draws = sample_poisson_array(np.full(50000, mu), rng)
        kmax = int(stats.poisson.ppf(1 - 1e-6, mu))
        counts = np.bincount(draws, minlength=kmax + 2)
        pmf = stats.poisson.pmf(np.arange(kmax + 1), mu)
        expected = pmf * draws.size
        tail_exp = draws.size - expected.sum()
        observed = np.append(counts[: kmax + 1], counts[kmax + 1 :].sum())
        expected = np.append(expected, tail_exp)
        keep = expected > 5.0
        chi2 = float(((observed[keep] - expected[keep]) ** 2 / expected[keep]).sum())
        dof = int(keep.sum()) - 1
        p_value = stats.chi2.sf(chi2, dof)
        assert p_value > 1e-3, f"mu={mu}: chi2={chi2:.1f} dof={dof} p={p_value:.2e}"


def test_mixed_rate_vector():
    rng = rng_stream(3)
    mu = np.array([0.5, 5.0, 50.0, 5000.0])
    draws = sample_poisson_array(np.tile(mu, (5000, 1)), rng)
    means = draws.mean(axis=0)
    assert np.all(np.abs(means - mu) < 4.0 * np.sqrt(mu / 5000.0) + 0.05)
