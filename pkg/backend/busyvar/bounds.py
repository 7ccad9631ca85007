"""Bounds on the M/G/inf busy-period variance.

* ``general_bounds``: bracket depending only on rho and the squared service CV.
* ``improved_upper_mm``: truncated-series upper bound for exponential service.
* ``dfr_lower`` / ``imrl_lower``: lower bounds for DFR and IMRL service.
* ``class_comparison``: the exponential reference value that bounds NBUE / NWUE service.
* ``bounds_table``: the published reference table for exponential service and lambda = 1.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import structlog

from .core import VarianceResult, md_core, variance_mm_exact
from .errors import InfiniteMomentError, InvalidArgumentError, NumericFailureError
from .numerics import poisson_tail, poisson_term, sum_series
from .validation import ensure_nonnegative, ensure_positive, ensure_rho_in_range

logger = structlog.get_logger(__name__)

DEFAULT_TABLE_RHOS: tuple[float, ...] = (0.5, 1.0, 10.0, 20.0, 50.0, 100.0)
DEFAULT_TRUNCATION = 14
REFERENCE_TOLERANCE = 1e-6

# Published values at lambda = 1, M = 14:
# rho -> (upper_general, upper_improved_uncorrected, lower_general)
REFERENCE_TABLE: dict[float, tuple[float, float, float]] = {
    0.5: (0.55954328, 0.50046123, 0.48174095),
    1.0: (4.8574775, 3.9415704, 3.6707743),
    10.0: (1.4545705e9, 5.6362048e8, 4.8692729e8),
    20.0: (7.061558e17, 2.5325047e17, 2.3538545e17),
    50.0: (8.0643512e43, 2.8801252e43, 2.6881171e43),
    100.0: (2.167792e87, 7.7421139e86, 7.2259735e86),
}

UNCORRECTED_NOTICE = (
    "upper_improved_uncorrected omits the (1 + gamma_s2) factor on the n >= 3 sum as published; "
    "it reproduces the reference table but is not a valid upper bound "
    "(it falls below the exact value, e.g. at rho = 0.5)"
)


class BoundVariant(str, Enum):
    """Formula that produced a bound."""

    GENERAL = "general"
    IMPROVED_UNCORRECTED = "improved_mm_uncorrected"
    IMPROVED_CORRECTED = "improved_mm_corrected"
    DFR = "dfr"
    IMRL = "imrl"


class ServiceClass(str, Enum):
    """Reliability classes with an associated variance comparison or bound."""

    NBUE = "nbue"
    NWUE = "nwue"
    DFR = "dfr"
    IMRL = "imrl"


@dataclass(frozen=True, slots=True)
class BoundsReport:
    """Lower and/or upper bound with the inputs that produced it."""

    variant: BoundVariant
    lower: float | None = None
    upper: float | None = None
    inputs: dict[str, float] = field(default_factory=dict)
    certified: bool = True
    err_est: float = 0.0

    def __post_init__(self) -> None:
        if self.lower is not None and self.upper is not None:
            if self.lower > self.upper * (1.0 + 1e-12):
                raise NumericFailureError(
                    f"lower bound {self.lower!r} exceeds upper bound {self.upper!r}",
                    best_estimate=None,
                )


@dataclass(frozen=True, slots=True)
class ClassComparison:
    """Exponential reference value and the direction it bounds a tagged service."""

    service_class: ServiceClass
    relation: str
    reference: VarianceResult

    @property
    def statement(self) -> str:
        return f"VAR {self.relation} {self.reference.value:.8g}"


def _ensure_truncation(truncation: int) -> int:
    if int(truncation) != truncation or truncation < 3:
        raise InvalidArgumentError(f"M must be an integer >= 3, got {truncation!r}")
    return int(truncation)


def _general_pair(lam: float, rho: float, gamma_s2: float) -> tuple[float, float]:
    e_rho = math.exp(rho)
    core = md_core(rho)
    lower = max(core + e_rho * rho * rho * gamma_s2, 0.0) / (lam * lam)
    upper = (core + 2.0 * e_rho * gamma_s2 * poisson_tail(rho, 1)) / (lam * lam)
    return lower, upper


def _improved_upper(lam: float, rho: float, truncation: int, corrected: bool) -> float:
    e_rho = math.exp(rho)
    head = math.fsum(poisson_term(rho, n) / (n - 1) for n in range(3, truncation + 1))
    remainder = poisson_tail(rho, truncation) / truncation
    factor = 2.0 if corrected else 1.0
    return (md_core(rho) + e_rho * rho * rho + e_rho * factor * (head + remainder)) / (lam * lam)


def general_bounds(lam: float, rho: float, gamma_s2: float) -> BoundsReport:
    """Bracket the variance using rho and the squared service CV only.

    Both ends coincide with the constant-service variance when ``gamma_s2 = 0``.

    Raises:
        RangeOverflowError: If rho exceeds the overflow guard.
    """
    lam = ensure_positive(lam, field="lambda")
    rho = ensure_rho_in_range(rho)
    gamma_s2 = ensure_nonnegative(gamma_s2, field="gamma_s2")
    lower, upper = _general_pair(lam, rho, gamma_s2)
    return BoundsReport(
        BoundVariant.GENERAL,
        lower=lower,
        upper=upper,
        inputs={"lambda": lam, "rho": rho, "gamma_s2": gamma_s2},
    )


def improved_upper_mm(
    lam: float,
    rho: float,
    truncation: int = DEFAULT_TRUNCATION,
    *,
    corrected: bool = True,
) -> BoundsReport:
    """Truncated-series upper bound for exponential service.

    Terms ``n > truncation`` of the series are bounded through ``1/(n-1) <= 1/M``.
    ``corrected=False`` drops the factor two on the series part, which reproduces
    the published table but is not a bound.

    Raises:
        InvalidArgumentError: If ``truncation < 3``.
        RangeOverflowError: If rho exceeds the overflow guard.
    """
    lam = ensure_positive(lam, field="lambda")
    rho = ensure_rho_in_range(rho)
    truncation = _ensure_truncation(truncation)
    upper = _improved_upper(lam, rho, truncation, corrected)
    variant = BoundVariant.IMPROVED_CORRECTED if corrected else BoundVariant.IMPROVED_UNCORRECTED
    return BoundsReport(
        variant,
        upper=upper,
        inputs={"lambda": lam, "rho": rho, "gamma_s2": 1.0, "M": float(truncation)},
        certified=corrected,
    )


def _weighted_mm_sum(rho: float, decay: float, tol: float | None) -> tuple[float, float]:
    # sum_{n>=1} rho^n / (n n!) * e^{-n decay}
    ratio_base = rho * math.exp(-decay)
    result = sum_series(
        lambda n: math.exp(-n * decay) * poisson_term(rho, n) / n if rho > 0.0 else 0.0,
        tol=tol,
        start=1,
        ratio=lambda n: ratio_base / (n + 1),
    )
    return result.value, result.truncation_bound


def dfr_lower(lam: float, rho: float, gamma_s2: float, tol: float | None = None) -> BoundsReport:
    """Lower bound for service with a decreasing failure rate.

    Equals the exponential-service variance when ``gamma_s2 = 1``.

    Raises:
        RangeOverflowError: If rho exceeds the overflow guard.
        SeriesConvergenceError: If the series does not converge.
    """
    lam = ensure_positive(lam, field="lambda")
    rho = ensure_rho_in_range(rho)
    gamma_s2 = ensure_nonnegative(gamma_s2, field="gamma_s2")
    if gamma_s2 < 1.0:
        logger.warning("dfr_bound_outside_class", gamma_s2=gamma_s2)
    weighted, bound = _weighted_mm_sum(rho, 0.5 * (gamma_s2 - 1.0), tol)
    e_rho = math.exp(rho)
    value = (2.0 * rho * e_rho * weighted - math.expm1(rho) ** 2) / (lam * lam)
    return BoundsReport(
        BoundVariant.DFR,
        lower=max(value, 0.0),
        inputs={"lambda": lam, "rho": rho, "gamma_s2": gamma_s2},
        err_est=2.0 * rho * e_rho * bound / (lam * lam),
    )


def imrl_lower(
    lam: float, alpha: float, mu2: float, mu3: float, tol: float | None = None
) -> BoundsReport:
    """Lower bound for service with increasing mean residual life.

    Needs the first three raw moments; equals the exponential-service variance
    when ``2 alpha mu3 = 3 mu2 ** 2``.

    Raises:
        InfiniteMomentError: If ``mu2`` or ``mu3`` is infinite.
        RangeOverflowError: If rho exceeds the overflow guard.
    """
    lam = ensure_positive(lam, field="lambda")
    alpha = ensure_positive(alpha, field="alpha")
    if math.isinf(mu2):
        raise InfiniteMomentError("second moment", "the IMRL bound needs mu2")
    if math.isinf(mu3):
        raise InfiniteMomentError("third moment", "the IMRL bound needs mu3")
    mu2 = ensure_positive(mu2, field="mu2")
    mu3 = ensure_positive(mu3, field="mu3")
    rho = ensure_rho_in_range(lam * alpha)
    decay = 2.0 * alpha * mu3 / (3.0 * mu2 * mu2) - 1.0
    weighted, bound = _weighted_mm_sum(rho, decay, tol)
    e_rho = math.exp(rho)
    value = e_rho * mu2 * weighted / rho - math.expm1(rho) ** 2 / (lam * lam)
    return BoundsReport(
        BoundVariant.IMRL,
        lower=max(value, 0.0),
        inputs={"lambda": lam, "rho": rho, "alpha": alpha, "mu2": mu2, "mu3": mu3},
        err_est=e_rho * mu2 * bound / rho,
    )


def class_comparison(
    service_class: ServiceClass | str, lam: float, rho: float, tol: float | None = None
) -> ClassComparison:
    """Return the exponential-service variance and the direction it bounds the class.

    NBUE service has variance at most the exponential value, NWUE at least. The
    class membership itself is the caller's claim.
    """
    service_class = ServiceClass(service_class)
    if service_class not in (ServiceClass.NBUE, ServiceClass.NWUE):
        raise InvalidArgumentError("class comparison is defined for nbue and nwue only")
    relation = "≤" if service_class is ServiceClass.NBUE else "≥"
    return ClassComparison(service_class, relation, variance_mm_exact(lam, rho, tol))


@dataclass(frozen=True, slots=True)
class BoundsTableRow:
    rho: float
    upper_general: float
    upper_improved_uncorrected: float
    lower_general: float
    upper_improved_corrected: float
    exact_mm: float


@dataclass(frozen=True, slots=True)
class BoundsTable:
    """Rows of the exponential-service bounds table plus reference footnotes."""

    arrival_rate: float
    truncation: int
    rows: tuple[BoundsTableRow, ...]
    notes: tuple[str, ...]


def _reference_notes(row: BoundsTableRow) -> list[str]:
    published = REFERENCE_TABLE.get(row.rho)
    if published is None:
        return []
    notes = []
    computed = (row.upper_general, row.upper_improved_uncorrected, row.lower_general)
    names = ("upper_general", "upper_improved_uncorrected", "lower_general")
    for name, value, reference in zip(names, computed, published, strict=True):
        deviation = abs(value - reference) / abs(reference)
        if deviation > REFERENCE_TOLERANCE:
            notes.append(
                f"rho={row.rho:g} {name}: computed {value:.8g} differs from published "
                f"{reference:.8g} (relative {deviation:.1e})"
            )
    return notes


def bounds_table(
    lam: float = 1.0,
    rhos: Sequence[float] = DEFAULT_TABLE_RHOS,
    truncation: int = DEFAULT_TRUNCATION,
    tol: float | None = None,
) -> BoundsTable:
    """Compute the exponential-service bounds table.

    Published reference values are compared only for the default ``lam = 1`` and
    ``truncation = 14``; every deviation above ``1e-6`` relative becomes a note.
    """
    lam = ensure_positive(lam, field="lambda")
    truncation = _ensure_truncation(truncation)
    rows = []
    notes: list[str] = []
    compare = lam == 1.0 and truncation == DEFAULT_TRUNCATION
    for raw_rho in rhos:
        rho = ensure_rho_in_range(raw_rho)
        lower, upper = _general_pair(lam, rho, 1.0)
        row = BoundsTableRow(
            rho=rho,
            upper_general=upper,
            upper_improved_uncorrected=_improved_upper(lam, rho, truncation, corrected=False),
            lower_general=lower,
            upper_improved_corrected=_improved_upper(lam, rho, truncation, corrected=True),
            exact_mm=variance_mm_exact(lam, rho, tol).value,
        )
        rows.append(row)
        if compare:
            notes.extend(_reference_notes(row))
    notes.append(UNCORRECTED_NOTICE)
    return BoundsTable(lam, truncation, tuple(rows), tuple(notes))


__all__ = [
    "BoundVariant",
    "BoundsReport",
    "BoundsTable",
    "BoundsTableRow",
    "ClassComparison",
    "DEFAULT_TABLE_RHOS",
    "REFERENCE_TABLE",
    "ServiceClass",
    "bounds_table",
    "class_comparison",
    "dfr_lower",
    "general_bounds",
    "imrl_lower",
    "improved_upper_mm",
]
