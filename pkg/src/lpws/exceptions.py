"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DivergenceError(RuntimeError):
    """A solver exhausted its line search with no usable descent step.

    When a partial fit exists (the last accepted iterate), it is attached
    as ``partial`` so callers can inspect or persist it.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class MissingOracleError(ValueError):
    """A tuning rule that needs the true coefficients was called without them."""


class DegenerateColumnError(ValueError):
    """A design column has zero variance and cannot be standardized."""


class RateOverflowError(OverflowError):
    """A Poisson rate exceeds the range the sampler is validated for."""


class AllLambdasFailedError(RuntimeError):
    """Every penalty level in a cross-validation grid failed on some fold."""


class EmptySupportError(ValueError):
    """An operation that needs a nonempty true support got an all-zero vector."""
