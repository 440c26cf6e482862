"""Exception hierarchy shared by every module."""


class FadecapError(Exception):
    """Base class for all library errors."""


class DomainError(FadecapError, ValueError):
    """An argument lies outside the domain of a function."""


class ConfigurationError(FadecapError, ValueError):
    """Unsupported option or malformed run configuration."""


class PreconditionError(FadecapError, ValueError):
    """A documented precondition on the inputs does not hold."""


class DimensionError(FadecapError, ValueError):
    """Incompatible sizes (e.g. K*L exceeds the code length)."""


class DegeneracyError(FadecapError, ArithmeticError):
    """A matrix that must be full rank is numerically rank deficient."""


class LinearAlgebraError(FadecapError, ArithmeticError):
    """A matrix that must be invertible is numerically singular."""


class ConvergenceError(FadecapError, ArithmeticError):
    """An iterative or adaptive routine exhausted its budget.

    The best estimate and its error bound are kept on the exception so the
    caller can decide whether the partial result is usable.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class OptimizationError(FadecapError, RuntimeError):
    """Every restart of an optimizer failed; carries the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
