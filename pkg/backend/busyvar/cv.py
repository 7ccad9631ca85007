"""Coefficient of variation of the busy period.

``gamma_B^2 = 2 e^rho lambda beta / (e^rho - 1)^2 - 1`` with
``beta = int_0^inf (e^{lambda h(t)} - 1) dt``. For long service times the busy
period approaches the exponential law and ``gamma_B^2`` tends to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import structlog

from .config import default_tolerance
from .core import QueueInput, map_power
from .dist.families import FloatArray
from .numerics import QuadResult, integrate_semi_infinite
from .validation import ensure_positive, ensure_rho_in_range

logger = structlog.get_logger(__name__)

DEFAULT_EXPONENTIALITY_THRESHOLD = 0.01


class Exponentiality(str, Enum):
    """Reporting label for the busy-period CV; not a statistical test."""

    APPROXIMATELY_EXPONENTIAL = "approximately-exponential"
    NOT_EXPONENTIAL = "not-exponential"


@dataclass(frozen=True, slots=True)
class CvResult:
    beta: float
    gamma_b2: float
    err_est: float
    exponentiality_gap: float
    rho: float

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.gamma_b2)


@dataclass(frozen=True, slots=True)
class ExponentialityReport:
    cv: CvResult
    threshold: float
    verdict: Exponentiality

    @property
    def gamma_b2(self) -> float:
        return self.cv.gamma_b2

    @property
    def gap(self) -> float:
        return self.cv.exponentiality_gap


def _beta_quadrature(q: QueueInput, tol: float) -> QuadResult:
    lam = q.arrival_rate
    model = q.model

    def integrand(t: FloatArray) -> FloatArray:
        return np.expm1(lam * np.asarray(model.integrated_tail(t)))

    return integrate_semi_infinite(
        integrand,
        abs_tol=0.0,
        rel_tol=tol,
        scale=model.alpha,
        power=map_power(model),
        breakpoints=model.breakpoints,
    )


def beta_integral(q: QueueInput, tol: float | None = None) -> float:
    """Return ``beta``; infinite when the service time has no finite second moment.

    Raises:
        RangeOverflowError: If rho exceeds the overflow guard.
        NumericFailureError: If the quadrature does not converge.
    """
    if not q.moments.finite_variance:
        return math.inf
    ensure_rho_in_range(q.rho)
    return _beta_quadrature(q, default_tolerance(tol)).value


def cv_squared(q: QueueInput, tol: float | None = None) -> CvResult:
    """Squared coefficient of variation of the busy period.

    Raises:
        RangeOverflowError: If rho exceeds the overflow guard.
        NumericFailureError: If the quadrature does not converge.
    """
    rho = ensure_rho_in_range(q.rho)
    if not q.moments.finite_variance:
        return CvResult(math.inf, math.inf, 0.0, math.inf, rho)
    quad = _beta_quadrature(q, default_tolerance(tol))
    weight = 2.0 * math.exp(rho) * q.arrival_rate / math.expm1(rho) ** 2
    gamma_b2 = max(weight * quad.value - 1.0, 0.0)
    logger.debug("cv_squared", rho=rho, beta=quad.value, gamma_b2=gamma_b2)
    return CvResult(
        beta=quad.value,
        gamma_b2=gamma_b2,
        err_est=weight * quad.abs_err_est,
        exponentiality_gap=abs(gamma_b2 - 1.0),
        rho=rho,
    )


def exponentiality_diagnostic(
    q: QueueInput,
    tol: float | None = None,
    threshold: float = DEFAULT_EXPONENTIALITY_THRESHOLD,
) -> ExponentialityReport:
    """Label the busy period approximately exponential when ``|gamma_B^2 - 1| < threshold``."""
    threshold = ensure_positive(threshold, field="threshold")
    cv = cv_squared(q, tol)
    verdict = (
        Exponentiality.APPROXIMATELY_EXPONENTIAL
        if cv.exponentiality_gap < threshold
        else Exponentiality.NOT_EXPONENTIAL
    )
    return ExponentialityReport(cv, threshold, verdict)


__all__ = [
    "CvResult",
    "Exponentiality",
    "ExponentialityReport",
    "beta_integral",
    "cv_squared",
    "exponentiality_diagnostic",
]
