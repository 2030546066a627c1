"""Synthetic designs, sparse coefficient vectors, and model responses."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DegenerateColumnError, RateOverflowError
from .problem import Coefficients, ModelProblem
from .sampling import RATE_BOUND, rng_stream, sample_poisson_array

# stream keys: one per generation purpose, so a single seed yields
# independent design, coefficient, and response draws
_DESIGN_KEY = 101
_BETA_KEY = 102
_RESPONSE_KEY = 103

# columns whose spread falls below this relative floor count as constant
_DEGENERATE_TOL = 1e-12


def standardize(x):
    """Center each column and scale it to unit mean square.

    Idempotent up to float noise. Raises DegenerateColumnError when a
    column has (numerically) zero variance.
    """
    a = np.asarray(x, dtype=float)
    if a.ndim != 2:
        raise ValueError("x must be a 2-d matrix")
    if a.shape[0] < 2:
        raise ValueError("standardization needs at least two rows")
    mean = a.mean(axis=0)
    centered = a - mean
    scale = np.sqrt(np.mean(centered * centered, axis=0))
    floor = _DEGENERATE_TOL * np.maximum(1.0, np.max(np.abs(a), axis=0))
    dead = scale <= floor
    if np.any(dead):
        col = int(np.nonzero(dead)[0][0])
        raise DegenerateColumnError(f"column {col} has zero variance")
    return centered / scale


def generate_design(n, p, seed):
    """Standardized n-by-p design with independent standard normal entries."""
    n = int(n)
    p = int(p)
    if n < 2 or p < 2:
        raise ValueError("need n >= 2 and p >= 2")
    raw = rng_stream(seed, _DESIGN_KEY).standard_normal((n, p))
    return standardize(raw)


def generate_beta(p, s, scale, seed, random_support=False):
    """Sparse coefficient vector: s nonzero N(0, scale^2) entries.

    The support is the first s coordinates unless random_support, in which
    case it is drawn uniformly without replacement. Zero draws (possible
    only in principle) are redrawn so the support size is exactly s.
    """
    p = int(p)
    s = int(s)
    scale = float(scale)
    if p < 1 or not 0 <= s <= p:
        raise ValueError("need p >= 1 and 0 <= s <= p")
    if not scale >= 0.0:
        raise ValueError("scale must be nonnegative")
    rng = rng_stream(seed, _BETA_KEY)
    beta = np.zeros(p)
    if s > 0 and scale > 0.0:
        values = rng.standard_normal(s) * scale
        while np.any(values == 0.0):
            hole = values == 0.0
            values[hole] = rng.standard_normal(int(np.sum(hole))) * scale
        if random_support:
            support = np.sort(rng.choice(p, size=s, replace=False))
        else:
            support = np.arange(s)
        beta[support] = values
    return Coefficients(beta)


def generate_response(x, beta, seed):
    """Poisson responses with rates exp(x . beta).

    Raises RateOverflowError when any rate exceeds the sampler bound;
    callers that sweep large signal scales should catch it and redraw.
    """
    x = np.asarray(x, dtype=float)
    b = np.asarray(getattr(beta, "beta", beta), dtype=float)
    u = x @ b
    top = float(np.max(u))
    if top > math.log(RATE_BOUND):
        raise RateOverflowError(
            f"rate exp({top:.4g}) exceeds the validated sampler bound"
        )
    return sample_poisson_array(np.exp(u), rng_stream(seed, _RESPONSE_KEY))


def generate_problem(n, p, s, scale, seed, random_support=False):
    """Design, truth, and responses in one go; the experiment workhorse."""
    x = generate_design(n, p, seed)
    beta_star = generate_beta(p, s, scale, seed, random_support=random_support)
    y = generate_response(x, beta_star.beta, seed)
    return ModelProblem(x, y, standardized=True), beta_star
