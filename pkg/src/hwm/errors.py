"""Exception hierarchy shared by all modules.

Each class maps to one CLI exit code.
"""


class HWMError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(HWMError, ValueError):
    """Input outside the mathematical domain of an operation."""

    exit_code = 2


class InterpolationError(DomainError):
    """Resampling pushed nodes into a region the grid does not resolve."""


class ResolutionError(HWMError, ValueError):
    """Grid, step size or truncation violates a resolution guard."""

    exit_code = 3


class ConvergenceError(HWMError, RuntimeError):
    """An iterative solve did not converge."""

    exit_code = 4
