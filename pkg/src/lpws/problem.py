"""Immutable containers for problem data, coefficients, and objective values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

# column means / mean squares must sit within this of 0 / 1 for the flag
STANDARDIZED_TOL = 1e-10


def _frozen_array(a, dtype=float):
    out = np.array(a, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


def is_standardized(x, tol=STANDARDIZED_TOL):
    """True when every column of x has mean within tol of 0 and mean square within tol of 1."""
    x = np.asarray(x, dtype=float)
    means = x.mean(axis=0)
    mean_sq = np.mean(x * x, axis=0)
    return bool(np.max(np.abs(means)) <= tol and np.max(np.abs(mean_sq - 1.0)) <= tol)


@dataclass(frozen=True)
class ModelProblem:
    """Count-regression data: a dense design matrix and integer responses.

    Parameters
    ----------
    x : ndarray, shape (n, p)
        Design matrix, one row per observation. Finite entries required.
    y : ndarray, shape (n,)
        Nonnegative integer counts.
    standardized : bool
        Declare True only when every column of x has mean 0 and mean
        square 1 (within ``STANDARDIZED_TOL``); the constructor checks.
    """

    x: np.ndarray
    y: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        x = _frozen_array(self.x)
        y = _frozen_array(self.y)
        if x.ndim != 2:
            raise DomainError("x must be a 2-d matrix")
        if y.ndim != 1:
            raise DomainError("y must be a 1-d vector")
        n, p = x.shape
        if n < 1 or p < 1:
            raise DomainError("x needs at least one row and one column")
        if y.shape[0] != n:
            raise DomainError(f"y has length {y.shape[0]}, expected {n}")
        if not np.all(np.isfinite(x)):
            raise DomainError("x contains non-finite entries")
        bad = (y < 0) | (y != np.floor(y)) | ~np.isfinite(y)
        if np.any(bad):
            row = int(np.nonzero(bad)[0][0])
            raise DomainError(
                f"y must hold nonnegative integers; row {row + 1} is {self.y[row]:g}"
            )
        if self.standardized and not is_standardized(x):
            raise DomainError("standardized=True but columns are not centered and scaled")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def max_abs_entry(self):
        """Largest absolute design entry; the boundedness constant of the matrix."""
        return float(np.max(np.abs(self.x)))


@dataclass(frozen=True)
class Coefficients:
    """A dense coefficient vector with support accessors."""

    beta: np.ndarray

    def __post_init__(self):
        b = _frozen_array(self.beta)
        if b.ndim != 1:
            raise ValueError("beta must be a 1-d vector")
        if not np.all(np.isfinite(b)):
            raise ValueError("beta contains non-finite entries")
        object.__setattr__(self, "beta", b)

    def __len__(self):
        return self.beta.shape[0]

    def support(self):
        """Indices of exactly-nonzero coordinates, ascending."""
        return np.nonzero(self.beta != 0.0)[0]

    def support_size(self):
        return int(np.count_nonzero(self.beta))


@dataclass(frozen=True)
class ObjectiveValue:
    """Smooth part, penalty part, and their total for a composite objective."""

    smooth: float
    penalty: float
    total: float

    def __post_init__(self):
        scale = max(1.0, abs(self.smooth), abs(self.penalty))
        if not abs((self.smooth + self.penalty) - self.total) <= 1e-12 * scale:
            raise ValueError("total must equal smooth + penalty")
