"""Exception types shared across the library."""

from __future__ import annotations


class FourvalError(Exception):
    """Base class for all library errors."""


class ParameterError(FourvalError, ValueError):
    """A parameter record violates its invariants."""


class StripError(FourvalError, ValueError):
    """Evaluation requested outside the analyticity / moment strip."""


class InfeasibleError(FourvalError, ValueError):
    """No admissible configuration exists (empty strip intersection,
    missing exponential moment, model without a free drift, ...)."""


class BranchTrackingError(FourvalError, ArithmeticError):
    """Continuous-branch tracking of a complex logarithm detected a jump
    between adjacent quadrature nodes that it could not resolve."""


class AccuracyError(FourvalError, ArithmeticError):
    """The node budget was exhausted before the tolerance was met.

    Carries the best available estimate and the error actually achieved.
    """

    def __init__(self, message, best_estimate=None, achieved_error=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.achieved_error = achieved_error


class NumericalError(FourvalError, ArithmeticError):
    """A computed quantity violates a hard sanity bound (e.g. a price that
    is negative beyond quadrature noise)."""


class ConfigError(FourvalError, ValueError):
    """A CLI / JSON configuration file failed to parse or validate."""
