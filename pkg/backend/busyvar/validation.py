"""Input guards used across the analytic and simulation modules."""

from __future__ import annotations

import math
from collections.abc import Sequence

from .config import get_config
from .errors import InvalidArgumentError, RangeOverflowError


def ensure_finite(value: float, *, field: str = "value") -> float:
    """Validate that a number is finite.

    Raises:
        InvalidArgumentError: If the value is NaN or infinite.
    """
    value = float(value)
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{field} must be finite, got {value!r}")
    return value


def ensure_positive(value: float, *, field: str = "value") -> float:
    """Validate that a number is finite and strictly positive."""
    value = ensure_finite(value, field=field)
    if value <= 0.0:
        raise InvalidArgumentError(f"{field} must be > 0, got {value!r}")
    return value


def ensure_nonnegative(value: float, *, field: str = "value") -> float:
    """Validate that a number is finite and not negative."""
    value = ensure_finite(value, field=field)
    if value < 0.0:
        raise InvalidArgumentError(f"{field} must be >= 0, got {value!r}")
    return value


def ensure_within_limits(
    value: int | float,
    min_value: int | float | None = None,
    max_value: int | float | None = None,
    field: str = "value",
) -> None:
    """Validate that a numeric value is within inclusive limits.

    Raises:
        InvalidArgumentError: If the value falls outside the limits.
    """
    if min_value is not None and value < min_value:
        raise InvalidArgumentError(f"{field} must be >= {min_value}, got {value}")
    if max_value is not None and value > max_value:
        raise InvalidArgumentError(f"{field} must be <= {max_value}, got {value}")


def ensure_rho_in_range(rho: float) -> float:
    """Validate a traffic intensity against the overflow guard.

    Raises:
        InvalidArgumentError: If rho is not finite or is negative.
        RangeOverflowError: If rho exceeds the configured limit.
    """
    rho = ensure_nonnegative(rho, field="rho")
    limit = get_config().numerics.rho_limit
    if rho > limit:
        raise RangeOverflowError(f"rho={rho:g} exceeds the overflow guard rho <= {limit:g}")
    return rho


def ensure_probability_vector(values: Sequence[float], *, field: str = "p") -> tuple[float, ...]:
    """Validate branch probabilities in (0, 1] summing to one within 1e-12."""
    probs = tuple(float(v) for v in values)
    if not probs:
        raise InvalidArgumentError(f"{field} must not be empty")
    for p in probs:
        if not (0.0 < p <= 1.0):
            raise InvalidArgumentError(f"{field} entries must lie in (0, 1], got {p!r}")
    total = math.fsum(probs)
    if abs(total - 1.0) > 1e-12:
        raise InvalidArgumentError(f"{field} must sum to 1 within 1e-12, got {total!r}")
    return probs


__all__ = [
    "ensure_finite",
    "ensure_nonnegative",
    "ensure_positive",
    "ensure_probability_vector",
    "ensure_rho_in_range",
    "ensure_within_limits",
]
