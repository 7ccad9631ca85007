"""Adaptive quadrature and guarded series summation.

Integrals run through QUADPACK (``scipy.integrate.quad``) on a bounded interval,
with the evaluation budget translated into a subinterval limit. Semi-infinite
integrals are mapped to ``[0, 1)`` with ``t = c * (u / (1 - u)) ** power`` first, so
breakpoints and the budget work the same way on both.

Series are summed term by term with an explicit bound on the discarded tail.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy import integrate, special

from .config import get_config
from .errors import IntegrandFailureError, NumericFailureError, SeriesConvergenceError

logger = structlog.get_logger(__name__)

FloatArray = NDArray[np.float64]
Integrand = Callable[[FloatArray], FloatArray]

# quad's finite-interval rule (Gauss-Kronrod 10/21) evaluates 21 points per panel.
RULE_EVALUATIONS = 21
# Roundoff-limited results are kept when their error is within this factor of the target.
ROUNDOFF_SLACK = 1e3
# QUADPACK rejects relative targets below 50 machine epsilons when abs_tol is zero.
_MIN_REL_TOL = 50.0 * np.finfo(float).eps


@dataclass(frozen=True, slots=True)
class QuadResult:
    """Outcome of a quadrature call."""

    value: float
    abs_err_est: float
    evaluations: int


@dataclass(frozen=True, slots=True)
class SeriesResult:
    """Outcome of a series summation."""

    value: float
    terms_used: int
    converged: bool
    truncation_bound: float


def _pointwise(f: Integrand) -> Callable[[float], float]:
    def call(x: float) -> float:
        value = float(np.asarray(f(np.array([x], dtype=np.float64)), dtype=np.float64)[0])
        if not math.isfinite(value):
            raise IntegrandFailureError(f"integrand is not finite at x={x!r}", best_estimate=None)
        return value

    return call


def subinterval_limit(max_evaluations: int, panels: int = 1) -> int:
    """Largest QUADPACK subinterval count whose evaluations fit the budget.

    The first pass costs ``panels`` rules and every bisection two more, so ``limit``
    subintervals cost ``(2 * limit - panels) * 21`` evaluations.
    """
    return max(panels, (max_evaluations // RULE_EVALUATIONS + panels) // 2)


def _quadpack(
    f: Integrand,
    lower: float,
    upper: float,
    inner: Sequence[float],
    abs_tol: float,
    rel_tol: float,
    max_evaluations: int,
) -> QuadResult:
    if upper <= lower:
        return QuadResult(0.0, 0.0, 0)
    if abs_tol <= 0.0:
        rel_tol = max(rel_tol, _MIN_REL_TOL)
    points = list(inner) or None
    limit = subinterval_limit(max_evaluations, len(inner) + 1)
    if points:
        # qagp rejects a limit below the number of breakpoints plus two.
        limit = max(limit, len(points) + 2)
    output = integrate.quad(
        _pointwise(f),
        lower,
        upper,
        epsabs=abs_tol,
        epsrel=rel_tol,
        limit=limit,
        points=points,
        full_output=1,
    )
    value, abs_err, info = float(output[0]), float(output[1]), output[2]
    evaluations = int(info["neval"])
    target = max(abs_tol, rel_tol * abs(value))
    # quad appends a message only when QUADPACK reports a problem.
    if len(output) == 3 or abs_err <= target:
        return QuadResult(value, abs_err, evaluations)
    exhausted = int(info["last"]) >= limit
    if not exhausted and abs_err <= ROUNDOFF_SLACK * target:
        logger.warning("quadrature_roundoff", value=value, abs_err_est=abs_err, target=target)
        return QuadResult(value, abs_err, evaluations)
    if exhausted:
        message = f"quadrature did not converge within {max_evaluations} evaluations"
    else:
        message = f"quadrature failed: {output[3]}"
    raise NumericFailureError(
        message,
        best_estimate=value,
        abs_err_est=abs_err,
        evaluations=evaluations,
    )


def _resolve_tolerances(
    abs_tol: float | None, rel_tol: float | None, max_evaluations: int | None
) -> tuple[float, float, int]:
    numerics = get_config().numerics
    return (
        numerics.abs_tolerance if abs_tol is None else abs_tol,
        numerics.tolerance if rel_tol is None else rel_tol,
        numerics.max_evaluations if max_evaluations is None else max_evaluations,
    )


def integrate_interval(
    f: Integrand,
    lower: float,
    upper: float,
    abs_tol: float | None = None,
    rel_tol: float | None = None,
    *,
    breakpoints: Sequence[float] = (),
    max_evaluations: int | None = None,
) -> QuadResult:
    """Integrate a vectorized ``f`` over the bounded interval ``[lower, upper]``.

    Args:
        f: Callable mapping an array of abscissae to an array of values.
        lower: Finite lower limit.
        upper: Finite upper limit.
        abs_tol: Absolute tolerance (configured default when omitted).
        rel_tol: Relative tolerance (configured default when omitted).
        breakpoints: Interior points where ``f`` is not smooth.
        max_evaluations: Evaluation budget.

    Raises:
        IntegrandFailureError: If ``f`` returns NaN or an infinite value.
        NumericFailureError: If the budget runs out before the tolerance is met.
    """
    abs_tol, rel_tol, budget = _resolve_tolerances(abs_tol, rel_tol, max_evaluations)
    if upper < lower:
        result = integrate_interval(
            f, upper, lower, abs_tol, rel_tol, breakpoints=breakpoints, max_evaluations=budget
        )
        return QuadResult(-result.value, result.abs_err_est, result.evaluations)
    inner = sorted({float(b) for b in breakpoints if lower < b < upper})
    return _quadpack(f, float(lower), float(upper), inner, abs_tol, rel_tol, budget)


def _to_unit(t: float, scale: float, power: float) -> float:
    r = (t / scale) ** (1.0 / power)
    return r / (1.0 + r)


def integrate_semi_infinite(
    f: Integrand,
    abs_tol: float | None = None,
    rel_tol: float | None = None,
    *,
    scale: float = 1.0,
    power: float = 1.0,
    breakpoints: Sequence[float] = (),
    max_evaluations: int | None = None,
) -> QuadResult:
    """Integrate a vectorized ``f`` over ``[0, inf)``.

    The substitution ``t = scale * (u / (1 - u)) ** power`` maps the half line onto
    ``[0, 1)``. ``power = 1`` is the plain rational map; heavier tails decaying like
    ``t ** -p`` become regular at ``u = 1`` with ``power >= 2 / (p - 1)``.

    Args:
        f: Callable mapping an array of abscissae to an array of values; must decay.
        abs_tol: Absolute tolerance (configured default when omitted).
        rel_tol: Relative tolerance (configured default when omitted).
        scale: Characteristic length ``c`` of the integrand, usually the service mean.
        power: Exponent of the map.
        breakpoints: Points in ``t`` where ``f`` is not smooth.
        max_evaluations: Evaluation budget.

    Raises:
        IntegrandFailureError: If ``f`` returns NaN or an infinite value.
        NumericFailureError: If the budget runs out before the tolerance is met.
    """
    if not (scale > 0.0 and math.isfinite(scale)):
        raise ValueError(f"scale must be positive and finite, got {scale!r}")
    if power < 1.0:
        raise ValueError(f"power must be >= 1, got {power!r}")
    abs_tol, rel_tol, budget = _resolve_tolerances(abs_tol, rel_tol, max_evaluations)

    def mapped(u: FloatArray) -> FloatArray:
        ratio = u / (1.0 - u)
        with np.errstate(over="ignore"):
            t = scale * ratio**power
            jacobian = scale * power * ratio ** (power - 1.0) / (1.0 - u) ** 2
        finite = np.isfinite(t) & np.isfinite(jacobian)
        fx = np.zeros_like(u)
        if np.any(finite):
            fx[finite] = np.asarray(f(t[finite]), dtype=np.float64)
        if not np.all(np.isfinite(fx)):
            bad = float(t[finite][~np.isfinite(fx[finite])][0])
            raise IntegrandFailureError(f"integrand is not finite at t={bad!r}")
        out = np.zeros_like(u)
        nonzero = finite & (fx != 0.0)
        out[nonzero] = fx[nonzero] * jacobian[nonzero]
        return out

    inner = sorted(
        u
        for u in {_to_unit(float(b), scale, power) for b in breakpoints if 0.0 < b < math.inf}
        if 0.0 < u < 1.0
    )
    try:
        return _quadpack(mapped, 0.0, 1.0, inner, abs_tol, rel_tol, budget)
    except NumericFailureError as exc:
        logger.warning(
            "quadrature_not_converged",
            best_estimate=exc.best_estimate,
            scale=scale,
            power=power,
            **exc.details,
        )
        raise


def sum_series(
    term: Callable[[int], float],
    tol: float | None = None,
    max_terms: int | None = None,
    *,
    start: int = 1,
    ratio: Callable[[int], float] | None = None,
    tail_bound: Callable[[int, float], float] | None = None,
    abs_tol: float = 0.0,
) -> SeriesResult:
    """Sum ``term(n)`` for ``n = start, start + 1, ...`` with a bounded tail.

    Summation stops at the first ``n`` where both ``|term(n)|`` and the bound on the
    remaining tail are at most ``max(tol * |partial|, abs_tol)``. The tail bound is
    ``tail_bound(n, term_n)`` when given, else the geometric bound
    ``|term_n| * r / (1 - r)`` with ``r = ratio(n)`` bounding every later term ratio.

    Raises:
        NumericFailureError: If a term is not finite.
        SeriesConvergenceError: If ``max_terms`` terms do not meet the tolerance.
    """
    numerics = get_config().numerics
    tol = numerics.tolerance if tol is None else tol
    max_terms = numerics.max_terms if max_terms is None else max_terms

    terms: list[float] = []
    partial = 0.0
    bound = math.inf
    for n in range(start, start + max_terms):
        value = float(term(n))
        if not math.isfinite(value):
            raise NumericFailureError(
                f"series term {n} is not finite", best_estimate=math.fsum(terms)
            )
        terms.append(value)
        partial = math.fsum(terms)
        threshold = max(tol * abs(partial), abs_tol)
        if tail_bound is not None:
            bound = float(tail_bound(n, value))
        elif ratio is not None:
            r = float(ratio(n))
            bound = abs(value) * r / (1.0 - r) if r < 1.0 else math.inf
        else:
            bound = abs(value)
        if abs(value) <= threshold and bound <= threshold:
            return SeriesResult(partial, len(terms), True, bound)

    partial_result = SeriesResult(partial, len(terms), False, bound)
    logger.warning("series_not_converged", terms_used=len(terms), partial=partial, bound=bound)
    raise SeriesConvergenceError(
        f"series did not converge within {max_terms} terms", partial=partial_result
    )


def poisson_term(rho: float, n: int) -> float:
    """Return ``rho ** n / n!`` evaluated in log space."""
    if n < 0:
        return 0.0
    if rho == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(rho) - math.lgamma(n + 1))


def poisson_tail(rho: float, n: int) -> float:
    """Return ``sum(rho ** k / k! for k > n)`` without cancellation."""
    if rho == 0.0:
        return 0.0 if n >= 0 else 1.0
    if n < 0:
        return math.exp(rho)
    return math.exp(rho) * float(special.gammainc(n + 1, rho))


__all__ = [
    "QuadResult",
    "SeriesResult",
    "integrate_interval",
    "integrate_semi_infinite",
    "poisson_tail",
    "poisson_term",
    "subinterval_limit",
    "sum_series",
]
