"""
Exception hierarchy shared by the services and the command line
"""

from typing import Optional, Sequence


class NhGeoError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(NhGeoError, ValueError):
    """Invalid configuration, unknown identifiers or violated input preconditions."""


class NumericalError(NhGeoError, ArithmeticError):
    """Base class for failures of a numerical computation."""


class NonFiniteError(NumericalError):
    """A matrix or state contains NaN or infinite entries."""


class NotPositiveDefiniteError(NumericalError):
    """A metric required to be positive-definite is not."""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.point = None if point is None else [float(x) for x in point]


class SingularMatrixError(NumericalError):
    """A matrix that must be inverted is singular."""


class ConstraintViolationError(NumericalError):
    """A velocity does not lie in the constraint distribution."""


class DomainError(NumericalError):
    """A point (or a finite-difference stencil point) lies outside its domain."""


class BlowUpError(NumericalError):
    """The integrator produced a non-finite state."""


class ConvergenceError(NumericalError):
    """An iterative solver did not converge."""


class VerificationFailed(NhGeoError):
    """A verification stage reported FAIL."""


class CommandExit(Exception):
    """
    Raised by CLI commands to terminate with a given exit code.

    Args:
        exit_code: Process exit status (0 success, 2 config error, 3 numerical failure)
        detail: Human readable reason
    """

    def __init__(self, exit_code: int, detail: str = ""):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail
