"""Exception hierarchy shared by the busyvar library and CLI."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .numerics import SeriesResult


class BusyVarError(Exception):
    """Base class for every error raised by busyvar."""


class InvalidArgumentError(BusyVarError, ValueError):
    """Raised when an input violates an operation's contract."""


class DistributionSpecError(InvalidArgumentError):
    """Raised when a distribution DSL string cannot be parsed."""

    def __init__(self, message: str, position: int, text: str = "") -> None:
        super().__init__(f"{message} (at position {position})")
        self.position = position
        self.text = text


class SampleSizeError(InvalidArgumentError):
    """Raised when a sample set is too small or a request too large."""


class OrderPreconditionError(InvalidArgumentError):
    """Raised when a consequence check is requested for a pair that is not ordered."""


class InfiniteMomentError(BusyVarError):
    """Raised when a moment that must be finite is infinite."""

    def __init__(self, moment: str, detail: str = "") -> None:
        message = f"infinite {moment}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.moment = moment


class NumericFailureError(BusyVarError):
    """Raised when a numerical procedure does not reach its tolerance."""

    def __init__(self, message: str, best_estimate: float | None = None, **details: Any) -> None:
        super().__init__(message)
        self.best_estimate = best_estimate
        self.details = details


class IntegrandFailureError(NumericFailureError):
    """Raised when an integrand returns NaN or an infinite value."""


class SeriesConvergenceError(NumericFailureError):
    """Raised when a series exhausts its term budget."""

    def __init__(self, message: str, partial: SeriesResult) -> None:
        super().__init__(message, best_estimate=partial.value, terms_used=partial.terms_used)
        self.partial = partial


class RangeOverflowError(BusyVarError, OverflowError):
    """Raised when the traffic intensity exceeds the representable range."""


__all__ = [
    "BusyVarError",
    "DistributionSpecError",
    "InfiniteMomentError",
    "IntegrandFailureError",
    "InvalidArgumentError",
    "NumericFailureError",
    "OrderPreconditionError",
    "RangeOverflowError",
    "SampleSizeError",
    "SeriesConvergenceError",
]
