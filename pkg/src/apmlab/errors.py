"""Exception types shared by the library modules."""

from __future__ import annotations


class ApmError(Exception):
    """Base class for library errors."""


class ValidationError(ApmError, ValueError):
    """Input data violates a documented invariant."""


class DomainError(ApmError, ValueError):
    """A map was evaluated where it is not defined (for example B(xy) <= 0)."""


class ChartEscape(ApmError):
    """An orbit left the local chart.

    Attributes
    ----------
    step : int
        Iteration index at which the orbit was first found outside the chart.
    bound : str
        Name of the violated bound.
    """

    def __init__(self, message: str, step: int = -1, bound: str = ""):
        super().__init__(message)
        self.step = step
        self.bound = bound


class ConvergenceError(ApmError):
    """Newton-type iteration failed (diverged, stagnated or left the chart)."""

    def __init__(self, message: str, reason: str = "diverged"):
        super().__init__(message)
        self.reason = reason


class UnsupportedClass(ApmError):
    """The tangency class has no implemented symbolic description."""
