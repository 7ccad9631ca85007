"""Variability ordering of service times and of busy periods.

``G1 <=_V G2`` means equal means and ``h1(t) <= h2(t)`` for every ``t >= 0``, where
``h`` is the integrated tail. Ordered service times give ordered busy-period
variances; whether the busy periods themselves are ordered is only checked
statistically, from simulated samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import structlog
from numpy.typing import ArrayLike
from scipy import stats

from .config import get_config
from .core import QueueInput, VarianceResult, variance_integral
from .dist import ServiceTimeModel
from .dist.families import FloatArray
from .errors import InfiniteMomentError, OrderPreconditionError, SampleSizeError
from .validation import ensure_positive, ensure_within_limits

logger = structlog.get_logger(__name__)

DEFAULT_T_MAX_FACTOR = 40.0
DEFAULT_GRID_POINTS = 512
CONSEQUENCE_SLACK = 1e-8

_GRID_START_FRACTION = 1e-7
_REFINE_POINTS = 33


class OrderOutcome(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, slots=True)
class MeanCheck:
    """Equal-means precondition; ``p_value`` is set for the sample-based check."""

    passed: bool
    mean1: float
    mean2: float
    p_value: float | None = None


@dataclass(frozen=True, slots=True)
class OrderVerdict:
    """Outcome of a variability-order check.

    ``gap`` is the largest signed excess ``h1 - h2`` found on the grid and
    ``witness_t`` the time where it occurs, present only when the order fails.
    """

    outcome: OrderOutcome
    mean_check: MeanCheck
    witness_t: float | None = None
    gap: float | None = None
    evidence_only: bool = False
    details: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class VarianceConsequence:
    """Busy-period variances of two queues whose service times are ordered."""

    first: VarianceResult
    second: VarianceResult
    margin: float
    violated: bool


def _finite_mean(model: ServiceTimeModel, label: str) -> float:
    alpha = model.alpha
    if not math.isfinite(alpha):
        raise InfiniteMomentError("mean", f"{label} has no finite mean")
    return alpha


def _time_grid(t_max: float, n_grid: int, breakpoints: tuple[float, ...]) -> FloatArray:
    geometric = np.geomspace(t_max * _GRID_START_FRACTION, t_max, n_grid)
    extra = [b for b in breakpoints if 0.0 < b <= t_max]
    return np.unique(np.concatenate(([0.0], geometric, extra)))


def _refinement(grid: FloatArray, excess: FloatArray) -> FloatArray:
    # Dense points around the worst excess and around every sign change.
    worst = int(np.argmax(excess))
    signs = np.sign(excess)
    crossings = np.flatnonzero(signs[:-1] * signs[1:] < 0.0)
    centres = {worst, *crossings.tolist(), *(crossings + 1).tolist()}
    pieces = []
    last = len(grid) - 1
    for i in sorted(centres):
        lower = grid[max(i - 1, 0)]
        upper = grid[min(i + 1, last)]
        if upper > lower:
            pieces.append(np.linspace(lower, upper, _REFINE_POINTS))
    if not pieces:
        return np.empty(0)
    return np.unique(np.concatenate(pieces))


def check_variability_order(
    m1: ServiceTimeModel,
    m2: ServiceTimeModel,
    t_max_factor: float = DEFAULT_T_MAX_FACTOR,
    n_grid: int = DEFAULT_GRID_POINTS,
    tol: float | None = None,
) -> OrderVerdict:
    """Check ``m1 <=_V m2`` on a geometric time grid with one refinement pass.

    Mismatched means give ``inconclusive``: equal means are a precondition of the
    order rather than part of the dominance test.

    Raises:
        InfiniteMomentError: If either mean is infinite.
    """
    alpha1 = _finite_mean(m1, "first model")
    alpha2 = _finite_mean(m2, "second model")
    t_max_factor = ensure_positive(t_max_factor, field="t_max_factor")
    ensure_within_limits(n_grid, 2, 1_000_000, field="n_grid")
    scale = max(alpha1, alpha2)
    tol = 1e-9 * scale if tol is None else ensure_positive(tol, field="tol")

    mean_check = MeanCheck(abs(alpha1 - alpha2) <= tol, alpha1, alpha2)
    if not mean_check.passed:
        return OrderVerdict(
            OrderOutcome.INCONCLUSIVE,
            mean_check,
            details={"reason": "means differ", "tolerance": tol},
        )

    breakpoints = m1.breakpoints + m2.breakpoints
    grid = _time_grid(t_max_factor * scale, n_grid, breakpoints)
    excess = np.asarray(m1.integrated_tail(grid)) - np.asarray(m2.integrated_tail(grid))
    refined = _refinement(grid, excess)
    if refined.size:
        grid = np.concatenate((grid, refined))
        excess = np.concatenate(
            (
                excess,
                np.asarray(m1.integrated_tail(refined)) - np.asarray(m2.integrated_tail(refined)),
            )
        )

    worst = int(np.argmax(excess))
    gap = float(excess[worst])
    details = {"grid_points": int(grid.size), "tolerance": tol}
    if gap > tol:
        logger.debug("variability_order_fails", witness_t=float(grid[worst]), gap=gap)
        return OrderVerdict(
            OrderOutcome.FAILS, mean_check, witness_t=float(grid[worst]), gap=gap, details=details
        )
    return OrderVerdict(OrderOutcome.HOLDS, mean_check, gap=gap, details=details)


def variance_consequence(
    m1: ServiceTimeModel,
    m2: ServiceTimeModel,
    lam: float,
    tol: float | None = None,
) -> VarianceConsequence:
    """Busy-period variances of two queues with ordered service times.

    A ``violated`` result beyond ``1e-8`` relative points to a numerical problem,
    since ordered service times always give ordered variances.

    Raises:
        OrderPreconditionError: If ``m1 <=_V m2`` does not hold.
    """
    verdict = check_variability_order(m1, m2)
    if verdict.outcome is not OrderOutcome.HOLDS:
        raise OrderPreconditionError(
            f"service times are not variability-ordered ({verdict.outcome.value})"
        )
    first = variance_integral(QueueInput(lam, m1), tol)
    second = variance_integral(QueueInput(lam, m2), tol)
    margin = second.value - first.value
    violated = first.value > second.value * (1.0 + CONSEQUENCE_SLACK)
    if violated:
        logger.warning("variance_order_violated", first=first.value, second=second.value)
    return VarianceConsequence(first, second, margin, violated)


def _empirical_tail(sorted_samples: FloatArray, grid: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Mean of ``max(X - t, 0)`` and its standard error at every grid point."""
    n = sorted_samples.size
    suffix1 = np.concatenate((np.cumsum(sorted_samples[::-1])[::-1], [0.0]))
    suffix2 = np.concatenate((np.cumsum((sorted_samples**2)[::-1])[::-1], [0.0]))
    first = np.searchsorted(sorted_samples, grid, side="right")
    count = n - first
    s1 = suffix1[first]
    s2 = suffix2[first]
    mean = (s1 - count * grid) / n
    second = (s2 - 2.0 * grid * s1 + count * grid * grid) / n
    variance = np.maximum(second - mean * mean, 0.0) * n / max(n - 1, 1)
    return np.maximum(mean, 0.0), np.sqrt(variance / n)


def _welch_p_value(s1: FloatArray, s2: FloatArray) -> float:
    result = stats.ttest_ind(s1, s2, equal_var=False)
    p_value = float(result.pvalue)
    if math.isnan(p_value):
        # Both samples constant.
        return 1.0 if float(np.mean(s1)) == float(np.mean(s2)) else 0.0
    return p_value


def empirical_busy_order(
    samples1: ArrayLike,
    samples2: ArrayLike,
    n_grid: int = DEFAULT_GRID_POINTS,
    alpha_level: float = 0.05,
) -> OrderVerdict:
    """Look for a significant violation of ``B1 <=_V B2`` in two sample sets.

    Means are compared with Welch's test at ``alpha_level``; the empirical integrated
    tails are compared on a shared quantile grid with a Bonferroni-corrected one-sided
    z bound. ``holds`` only means no violation was detected; the verdict is evidence,
    never proof.

    Raises:
        SampleSizeError: If either sample set is smaller than the configured minimum.
    """
    s1 = np.sort(np.asarray(samples1, dtype=np.float64).ravel())
    s2 = np.sort(np.asarray(samples2, dtype=np.float64).ravel())
    minimum = get_config().simulation.min_order_samples
    if s1.size < minimum or s2.size < minimum:
        raise SampleSizeError(
            f"empirical order needs at least {minimum} samples per set, "
            f"got {s1.size} and {s2.size}"
        )
    ensure_within_limits(alpha_level, 1e-12, 0.5, field="alpha_level")
    ensure_within_limits(n_grid, 2, 1_000_000, field="n_grid")

    p_value = _welch_p_value(s1, s2)
    mean_check = MeanCheck(p_value >= alpha_level, float(np.mean(s1)), float(np.mean(s2)), p_value)
    details: dict[str, Any] = {"n1": int(s1.size), "n2": int(s2.size), "alpha_level": alpha_level}
    if not mean_check.passed:
        return OrderVerdict(
            OrderOutcome.INCONCLUSIVE,
            mean_check,
            evidence_only=True,
            details={**details, "reason": "means differ"},
        )

    pooled = np.concatenate((s1, s2))
    grid = np.unique(np.quantile(pooled, np.linspace(0.0, 1.0, n_grid)))
    tail1, se1 = _empirical_tail(s1, grid)
    tail2, se2 = _empirical_tail(s2, grid)
    excess = tail1 - tail2
    spread = np.sqrt(se1 * se1 + se2 * se2)
    critical = float(stats.norm.ppf(1.0 - alpha_level / grid.size))
    slack = 1e-12 * float(np.max(np.maximum(tail1, tail2)))
    significant = excess > critical * spread + slack
    with np.errstate(divide="ignore", invalid="ignore"):
        z_scores = np.where(spread > 0.0, excess / spread, np.where(excess > slack, np.inf, 0.0))
    details.update(
        {
            "grid_points": int(grid.size),
            "critical_z": critical,
            "max_z": float(np.max(z_scores)),
            "max_excess": float(np.max(excess)),
        }
    )
    if np.any(significant):
        worst = int(np.argmax(np.where(significant, z_scores, -np.inf)))
        return OrderVerdict(
            OrderOutcome.FAILS,
            mean_check,
            witness_t=float(grid[worst]),
            gap=float(excess[worst]),
            evidence_only=True,
            details=details,
        )
    return OrderVerdict(
        OrderOutcome.HOLDS,
        mean_check,
        gap=float(np.max(excess)),
        evidence_only=True,
        details=details,
    )


__all__ = [
    "MeanCheck",
    "OrderOutcome",
    "OrderVerdict",
    "VarianceConsequence",
    "check_variability_order",
    "empirical_busy_order",
    "variance_consequence",
]
