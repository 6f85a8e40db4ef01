"""Exception hierarchy shared by every module."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class NumericalError(ArithmeticError):
    """Base class for failures of a numerical evaluation.

    Carries a ``diagnostics`` mapping so callers (the CLI in particular) can
    serialize what went wrong without parsing the message.
    """

    def __init__(self, message: str, **diagnostics: object) -> None:
        super().__init__(message)
        self.diagnostics = dict(diagnostics)


class ConvergenceError(NumericalError):
    """A series hit its term budget before the stopping rule fired."""


class CancellationError(NumericalError):
    """An alternating series lost too many digits to cancellation."""


class NegativeProbabilityError(NumericalError):
    """A probability came out negative beyond the rounding band."""


class RangeError(NumericalError):
    """A value that must lie in [0, 1] is outside it by more than rounding."""


class TableOverflowError(NumericalError):
    """An inverse-CDF search had to extend past the hard length limit."""
