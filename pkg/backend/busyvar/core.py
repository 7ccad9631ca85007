"""Busy-period mean and variance of the M/G/inf queue.

Three independent routes are provided:

* ``variance_integral``: quadrature of ``(2 e^rho / lambda) * int_0^inf (e^{lambda h(t)} - 1) dt``
  minus the squared mean.
* ``variance_series``: expansion of the same integral in powers of ``rho`` with the
  normalized coefficients ``b_n``.
* ``variance_mm_exact`` / ``variance_md_exact``: closed forms for exponential and
  constant service.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any

import numpy as np
import structlog

from .config import get_config
from .dist import Deterministic, Exponential, ServiceTimeModel
from .dist.families import FloatArray, MomentSet
from .errors import InfiniteMomentError, InvalidArgumentError
from .numerics import (
    integrate_semi_infinite,
    poisson_tail,
    poisson_term,
    sum_series,
)
from .validation import ensure_nonnegative, ensure_positive, ensure_rho_in_range

logger = structlog.get_logger(__name__)

_MAX_MAP_POWER = 8.0


class VarianceMethod(str, Enum):
    """Route that produced a variance value."""

    INTEGRAL = "integral"
    SERIES = "series"
    MM_EXACT = "mm_exact"
    MD_EXACT = "md_exact"


@dataclass(frozen=True, slots=True)
class QueueInput:
    """Arrival rate plus service-time model of an M/G/inf queue."""

    arrival_rate: float
    model: ServiceTimeModel

    def __post_init__(self) -> None:
        ensure_positive(self.arrival_rate, field="lambda")
        alpha = self.model.alpha
        if not math.isfinite(alpha):
            raise InfiniteMomentError("mean", "traffic intensity is undefined")
        if not (self.arrival_rate * alpha > 0.0 and math.isfinite(self.arrival_rate * alpha)):
            raise InvalidArgumentError("rho = lambda * alpha must be positive and finite")

    @property
    def rho(self) -> float:
        return self.arrival_rate * self.model.alpha

    @property
    def moments(self) -> MomentSet:
        return self.model.moments()


@dataclass(frozen=True, slots=True)
class VarianceResult:
    """Busy-period variance with provenance."""

    value: float
    method: VarianceMethod
    err_est: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def traffic_intensity(q: QueueInput) -> float:
    """Return ``rho = lambda * alpha``."""
    return q.rho


def mean_busy_period(q: QueueInput) -> float:
    """Return ``(e^rho - 1) / lambda``.

    Raises:
        RangeOverflowError: If rho exceeds the overflow guard.
    """
    rho = ensure_rho_in_range(q.rho)
    return math.expm1(rho) / q.arrival_rate


def map_power(model: ServiceTimeModel, multiplicity: int = 1) -> float:
    """Exponent of the half-line map that regularizes ``h(t) ** multiplicity`` at infinity."""
    decay = model.tail_exponent
    if decay is None:
        return 1.0
    effective = decay * multiplicity
    if effective <= 1.0:
        return _MAX_MAP_POWER
    return min(max(2.0 / (effective - 1.0), 1.0), _MAX_MAP_POWER)


def md_core(rho: float) -> float:
    """Return ``e^{2 rho} - 2 rho e^rho - 1`` without cancellation at small rho."""
    if rho >= 1.0:
        return math.expm1(2.0 * rho) - 2.0 * rho * math.exp(rho)
    if rho == 0.0:
        return 0.0
    # sum_{k>=3} (2^k - 2k) rho^k / k!
    result = sum_series(
        lambda k: (2.0**k - 2.0 * k) * poisson_term(rho, k),
        tol=1e-16,
        start=3,
        ratio=lambda k: 4.0 * rho / (k + 1),
    )
    return result.value


def _lower_variance_scale(rho: float, gamma_s2: float, lam: float) -> float:
    lower = (md_core(rho) + math.exp(rho) * rho * rho * gamma_s2) / (lam * lam)
    return max(lower, 0.0)


def _infinite_result(method: VarianceMethod) -> VarianceResult:
    return VarianceResult(math.inf, method, 0.0, {"reason": "infinite second moment"})


def variance_integral(q: QueueInput, tol: float | None = None) -> VarianceResult:
    """Busy-period variance by direct quadrature.

    Returns an infinite result when the service time has no finite second moment.

    Raises:
        RangeOverflowError: If rho exceeds the overflow guard.
        NumericFailureError: If the quadrature does not converge.
    """
    m = q.moments
    if not m.finite_variance:
        return _infinite_result(VarianceMethod.INTEGRAL)
    rho = ensure_rho_in_range(q.rho)
    tol = get_config().numerics.tolerance if tol is None else tol
    lam = q.arrival_rate
    model = q.model

    def integrand(t: FloatArray) -> FloatArray:
        return np.expm1(lam * np.asarray(model.integrated_tail(t)))

    # The outer algebra cancels to the variance; size the quadrature target on it.
    scale = math.exp(rho)
    beta_floor = (poisson_tail(rho, 1) + 0.5 * rho * rho * m.gamma_s2) / lam
    abs_tol = max(
        tol * _lower_variance_scale(rho, m.gamma_s2, lam) * lam / (2.0 * scale),
        64.0 * np.finfo(float).eps * beta_floor,
    )
    quad = integrate_semi_infinite(
        integrand,
        abs_tol=abs_tol,
        rel_tol=0.0,
        scale=m.alpha,
        power=map_power(model),
        breakpoints=model.breakpoints,
    )
    mean = math.expm1(rho) / lam
    value = 2.0 * scale * quad.value / lam - mean * mean
    err_est = 2.0 * scale * quad.abs_err_est / lam
    logger.debug("variance_integral", rho=rho, value=value, evaluations=quad.evaluations)
    return VarianceResult(
        max(value, 0.0),
        VarianceMethod.INTEGRAL,
        err_est,
        {"evaluations": quad.evaluations, "beta": quad.value},
    )


def b_coefficient(model: ServiceTimeModel, n: int, tol: float | None = None) -> float:
    """Normalized power integral ``2 (n+2) int h^{n+1} / (alpha^{n+2} (1 + gamma_s2))``.

    Closed forms: ``(n+2)/(n+1)`` for exponential and ``2`` for constant service.

    Raises:
        InvalidArgumentError: If ``n`` is negative.
        InfiniteMomentError: If the second moment is infinite.
        NumericFailureError: If the quadrature does not converge.
    """
    if n < 0:
        raise InvalidArgumentError(f"n must be >= 0, got {n}")
    tol = get_config().numerics.tolerance if tol is None else tol
    return _b_coefficient_cached(model, int(n), float(tol))


@lru_cache(maxsize=4096)
def _b_coefficient_cached(model: ServiceTimeModel, n: int, tol: float) -> float:
    m = model.moments()
    if not m.finite_variance:
        raise InfiniteMomentError("second moment", "b_n requires a finite second moment")
    if isinstance(model, Exponential):
        return (n + 2.0) / (n + 1.0)
    if isinstance(model, Deterministic):
        return 2.0
    alpha = m.alpha

    def integrand(t: FloatArray) -> FloatArray:
        return (np.asarray(model.integrated_tail(t)) / alpha) ** (n + 1)

    quad = integrate_semi_infinite(
        integrand,
        abs_tol=0.0,
        rel_tol=tol,
        scale=alpha,
        power=map_power(model, n + 1),
        breakpoints=model.breakpoints,
    )
    return 2.0 * (n + 2) * quad.value / (alpha * (1.0 + m.gamma_s2))


def variance_series(
    q: QueueInput,
    tol: float | None = None,
    max_terms: int | None = None,
    *,
    corrected: bool = True,
) -> VarianceResult:
    """Busy-period variance from the ``b_n`` series.

    ``corrected=False`` evaluates the series without the ``(1 + gamma_s2)`` factor on
    the ``n >= 3`` sum, the form found in the published literature; it is exact only
    for constant service.

    Raises:
        RangeOverflowError: If rho exceeds the overflow guard.
        SeriesConvergenceError: If the term budget runs out.
    """
    m = q.moments
    if not m.finite_variance:
        return _infinite_result(VarianceMethod.SERIES)
    rho = ensure_rho_in_range(q.rho)
    tol = get_config().numerics.tolerance if tol is None else tol
    lam = q.arrival_rate
    model = q.model
    e_rho = math.exp(rho)

    base = md_core(rho) / (lam * lam) + e_rho * m.sigma2
    factor = (1.0 + m.gamma_s2) if corrected else 1.0
    floor = 2.0 / (1.0 + m.gamma_s2)
    bracket_max = 2.0 - floor
    prefactor = e_rho * factor / (lam * lam)

    series = sum_series(
        lambda n: poisson_term(rho, n) * (b_coefficient(model, n - 2, tol) - floor),
        tol=tol,
        max_terms=max_terms,
        start=3,
        tail_bound=lambda n, _term: bracket_max * poisson_tail(rho, n),
        abs_tol=tol * base / prefactor if prefactor > 0.0 else 0.0,
    )
    value = base + prefactor * series.value
    err_est = prefactor * (series.truncation_bound + tol * abs(series.value))
    return VarianceResult(
        value,
        VarianceMethod.SERIES,
        err_est,
        {
            "terms_used": series.terms_used,
            "truncation_bound": series.truncation_bound,
            "corrected": corrected,
        },
    )


def _mm_sum(
    rho: float, tol: float | None, max_terms: int | None = None
) -> tuple[float, int, float]:
    # sum_{n>=1} rho^n / (n n!)
    result = sum_series(
        lambda n: poisson_term(rho, n) / n,
        tol=tol,
        max_terms=max_terms,
        start=1,
        ratio=lambda n: rho / (n + 1),
    )
    return result.value, result.terms_used, result.truncation_bound


def variance_mm_exact(lam: float, rho: float, tol: float | None = None) -> VarianceResult:
    """Exact busy-period variance with exponential service.

    Raises:
        RangeOverflowError: If rho exceeds the overflow guard.
        SeriesConvergenceError: If the term budget runs out.
    """
    lam = ensure_positive(lam, field="lambda")
    rho = ensure_rho_in_range(ensure_nonnegative(rho, field="rho"))
    total, terms, bound = _mm_sum(rho, tol)
    e_rho = math.exp(rho)
    # 2 e^rho (1 + rho S) - e^{2 rho} - 1 rearranged to limit cancellation
    value = (2.0 * rho * e_rho * total - math.expm1(rho) ** 2) / (lam * lam)
    err_est = 2.0 * rho * e_rho * bound / (lam * lam)
    return VarianceResult(
        max(value, 0.0),
        VarianceMethod.MM_EXACT,
        err_est,
        {"terms_used": terms, "truncation_bound": bound},
    )


def variance_md_exact(lam: float, rho: float) -> VarianceResult:
    """Exact busy-period variance with constant service time ``rho / lambda``."""
    lam = ensure_positive(lam, field="lambda")
    rho = ensure_rho_in_range(ensure_nonnegative(rho, field="rho"))
    value = md_core(rho) / (lam * lam)
    return VarianceResult(value, VarianceMethod.MD_EXACT, 4.0 * np.finfo(float).eps * value)


__all__ = [
    "QueueInput",
    "VarianceMethod",
    "VarianceResult",
    "b_coefficient",
    "map_power",
    "md_core",
    "mean_busy_period",
    "traffic_intensity",
    "variance_integral",
    "variance_md_exact",
    "variance_mm_exact",
    "variance_series",
]
