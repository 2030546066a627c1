import numpy as np
import pytest

from lpws.datagen import (
    generate_beta,
    generate_design,
    generate_problem,
    generate_response,
    standardize,
)
from lpws.exceptions import DegenerateColumnError, RateOverflowError
from lpws.problem import Coefficients


def test_standardize_moments():
    rng = np.random.default_rng(0)
    x = rng.normal(3.0, 5.0, size=(50, 4))
    z = standardize(x)
    assert np.max(np.abs(z.mean(axis=0))) <= 1e-10
    assert np.max(np.abs((z**2).mean(axis=0) - 1.0)) <= 1e-10


def test_standardize_idempotent():
    rng = np.random.default_rng(1)
    z = standardize(rng.standard_normal((30, 3)))
    assert np.max(np.abs(standardize(z) - z)) <= 1e-12


def test_standardize_two_point_column():
    z = standardize(np.array([[1.0], [-1.0]]))
    assert np.allclose(np.sort(z[:, 0]), [-1.0, 1.0])


def test_standardize_rejects_constant_column():
    x = np.ones((10, 2))
    x[:, 0] = np.arange(10)
    with pytest.raises(DegenerateColumnError, match="column 1"):
        standardize(x)


def test_generate_design_is_standardized_and_deterministic():
    a = generate_design(25, 4, seed=9)
    b = generate_design(25, 4, seed=9)
    c = generate_design(25, 4, seed=10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.max(np.abs(a.mean(axis=0))) <= 1e-10
    assert np.max(np.abs((a**2).mean(axis=0) - 1.0)) <= 1e-10


def test_generate_beta_support_and_edges():
    beta = generate_beta(10, 4, 0.7, seed=3)
    assert isinstance(beta, Coefficients)
    assert list(beta.support()) == [0, 1, 2, 3]
    assert beta.support_size() == 4

    assert generate_beta(6, 0, 1.0, seed=0).support_size() == 0
    assert generate_beta(6, 3, 0.0, seed=0).support_size() == 0

    random_sup = generate_beta(50, 5, 1.0, seed=4, random_support=True)
    assert random_sup.support_size() == 5

    with pytest.raises(ValueError):
        generate_beta(4, 5, 1.0, seed=0)


def test_generate_response_counts_and_bound():
    x = generate_design(40, 3, seed=2)
    beta = generate_beta(3, 2, 0.4, seed=2)
    y = generate_response(x, beta, seed=2)
    assert y.shape == (40,)
    assert np.all(y >= 0)
    assert np.all(y == np.floor(y))

    huge = Coefficients(np.array([40.0, 0.0, 0.0]))
    with pytest.raises(RateOverflowError):
        generate_response(x, huge, seed=2)


def test_generate_problem_round_trip():
    prob, beta = generate_problem(60, 8, 3, 0.5, seed=7)
    assert prob.n == 60 and prob.p == 8
    assert prob.standardized
    assert beta.support_size() == 3
    again, beta2 = generate_problem(60, 8, 3, 0.5, seed=7)
    assert np.array_equal(prob.x, again.x)
    assert np.array_equal(prob.y, again.y)
    assert np.array_equal(beta.beta, beta2.beta)


def test_generate_problem_distinct_streams():
    # design, coefficients, and response draw from separate substreams:
    # changing s must not change the design
    prob_a, _ = generate_problem(30, 5, 1, 0.5, seed=13)
    prob_b, _ = generate_problem(30, 5, 3, 0.5, seed=13)
    assert np.array_equal(prob_a.x, prob_b.x)
