"""Command-line front end.

Results go to stdout as JSON (default) or CSV; logs and warnings go to stderr.
Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure or range
overflow, 3 infinite moment.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, NoReturn

import structlog
from pydantic import ValidationError

from .bounds import (
    DEFAULT_TABLE_RHOS,
    DEFAULT_TRUNCATION,
    UNCORRECTED_NOTICE,
    BoundsReport,
    ServiceClass,
    bounds_table,
    class_comparison,
    dfr_lower,
    general_bounds,
    imrl_lower,
    improved_upper_mm,
)
from .config import RunFileConfig, get_config
from .core import (
    QueueInput,
    VarianceResult,
    mean_busy_period,
    variance_integral,
    variance_md_exact,
    variance_mm_exact,
    variance_series,
)
from .cv import DEFAULT_EXPONENTIALITY_THRESHOLD, cv_squared, exponentiality_diagnostic
from .dist import Family, ServiceTimeModel, TriState, format_spec, parse_spec
from .errors import (
    InfiniteMomentError,
    InvalidArgumentError,
    NumericFailureError,
    RangeOverflowError,
)
from .monitoring import OperationTimer, configure_logging
from .ordering import (
    OrderOutcome,
    OrderVerdict,
    check_variability_order,
    empirical_busy_order,
    variance_consequence,
)
from .reports import ResultEntry, RunReport, render_csv
from .sim import (
    SimConfig,
    busy_period_samples,
    export_samples,
    simulate_busy_periods,
    simulate_with_samples,
)

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_INFINITE = 3

SERIES_NOTICE = (
    "variance_series multiplies the n >= 3 sum by (1 + gamma_s2); the published series "
    "omits this factor and is exact only for constant service"
)
OVERFLOW_MARGIN = 0.9
DEFAULT_EMPIRICAL_SAMPLES = 100_000
SWEEP_QUANTITIES = ("mean", "integral", "series", "exact", "bounds", "cv")

# Config-file keys that differ from the argparse destination.
_CONFIG_ALIASES = {
    "lambda": "lam",
    "M": "truncation",
    "improved-M": "improved_m",
    "improved_M": "improved_m",
    "class": "classes",
}


class UsageError(InvalidArgumentError):
    """Raised when a command is missing flags or combines them inconsistently."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- argument helpers -------------------------------------------------------------


def _require(args: argparse.Namespace, dest: str, flag: str) -> Any:
    value = getattr(args, dest, None)
    if value is None:
        raise UsageError(f"{args.command} needs {flag}")
    return value


def _model(args: argparse.Namespace, dest: str = "dist", flag: str = "--dist") -> ServiceTimeModel:
    return parse_spec(str(_require(args, dest, flag)))


def _float_list(values: Sequence[str] | None) -> list[float]:
    if not values:
        return []
    out = []
    for chunk in values:
        for item in str(chunk).split(","):
            if item.strip():
                out.append(float(item))
    return out


def _rho_range(text: str) -> list[float]:
    """Inclusive ``start:stop:step`` grid."""
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"--rho-range must look like start:stop:step, got {text!r}") from exc
    if not (step > 0.0 and stop >= start and start > 0.0):
        raise UsageError("--rho-range needs 0 < start <= stop and step > 0")
    count = math.floor((stop - start) / step + 1e-9) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _tol(args: argparse.Namespace) -> float | None:
    return getattr(args, "tol", None)


def _warn_overflow(report: RunReport, rho: float) -> None:
    limit = get_config().numerics.rho_limit
    if OVERFLOW_MARGIN * limit < rho <= limit:
        report.warn(f"rho={rho:g} is close to the overflow guard rho <= {limit:g}")


def _variance_entry(name: str, result: VarianceResult) -> ResultEntry:
    return ResultEntry.of(
        name, result.method.value, result.value, result.err_est, **result.diagnostics
    )


def _bound_entries(report: RunReport, bound: BoundsReport, suffix: str) -> None:
    details = {"certified": bound.certified, **bound.inputs}
    if bound.lower is not None:
        report.add(
            ResultEntry.of(
                f"lower_{suffix}", bound.variant.value, bound.lower, bound.err_est, **details
            )
        )
    if bound.upper is not None:
        report.add(
            ResultEntry.of(
                f"upper_{suffix}", bound.variant.value, bound.upper, bound.err_est, **details
            )
        )


def _verdict_details(verdict: OrderVerdict) -> dict[str, Any]:
    return {
        "outcome": verdict.outcome.value,
        "witness_t": verdict.witness_t,
        "mean_check": {
            "passed": verdict.mean_check.passed,
            "mean1": verdict.mean_check.mean1,
            "mean2": verdict.mean_check.mean2,
            "p_value": verdict.mean_check.p_value,
        },
        "evidence_only": verdict.evidence_only,
        **verdict.details,
    }


def _queue_inputs(report: RunReport, q: QueueInput) -> None:
    report.inputs.update(
        {"lambda": q.arrival_rate, "dist": format_spec(q.model), "rho": q.rho}
    )
    _warn_overflow(report, q.rho)


# -- commands ---------------------------------------------------------------------


def cmd_compute(args: argparse.Namespace, report: RunReport) -> None:
    model = _model(args)
    q = QueueInput(float(_require(args, "lam", "--lambda")), model)
    _queue_inputs(report, q)
    moments = q.moments
    if not moments.finite_variance:
        raise InfiniteMomentError("second moment", f"mu2 is infinite for {format_spec(model)}")
    report.inputs["gamma_s2"] = moments.gamma_s2
    tol = _tol(args)

    mean = mean_busy_period(q)
    mean_err = 4.0 * sys.float_info.epsilon * mean
    report.add(ResultEntry.of("mean_busy_period", "closed_form", mean, mean_err))

    methods: list[str] = [args.method or "integral"]
    if methods == ["all"]:
        methods = ["integral", "series"]
        if model.family is Family.EXPONENTIAL:
            methods.append("mm-exact")
        elif model.family is Family.DETERMINISTIC:
            methods.append("md-exact")

    values: dict[str, float] = {}
    for method in methods:
        if method == "integral":
            result = variance_integral(q, tol)
        elif method == "series":
            result = variance_series(q, tol)
            report.warn(SERIES_NOTICE)
        elif method == "mm-exact":
            if model.family is not Family.EXPONENTIAL:
                raise UsageError("--method mm-exact needs exponential service")
            result = variance_mm_exact(q.arrival_rate, q.rho, tol)
        else:
            if model.family is not Family.DETERMINISTIC:
                raise UsageError("--method md-exact needs deterministic service")
            result = variance_md_exact(q.arrival_rate, q.rho)
        values[result.method.value] = result.value
        report.add(_variance_entry("variance", result))

    for (name_a, a), (name_b, b) in itertools.combinations(values.items(), 2):
        deviation = abs(a - b) / abs(b) if b else abs(a - b)
        report.add(ResultEntry.of("relative_deviation", f"{name_a}~{name_b}", deviation, 0.0))


def cmd_bounds(args: argparse.Namespace, report: RunReport) -> None:
    lam = float(_require(args, "lam", "--lambda"))
    alpha, mu2, mu3 = args.alpha, args.mu2, args.mu3
    rho, gamma_s2 = args.rho, args.gamma_s2
    model: ServiceTimeModel | None = None
    if args.dist is not None:
        model = parse_spec(args.dist)
        moments = model.moments()
        if not moments.finite_mean:
            raise InfiniteMomentError("mean", f"{format_spec(model)} has no finite mean")
        alpha, mu2, mu3 = moments.alpha, moments.mu2, moments.mu3
        rho = lam * alpha
        report.inputs["dist"] = format_spec(model)
    if rho is None and alpha is not None:
        rho = lam * alpha
    if gamma_s2 is None and alpha is not None and mu2 is not None:
        if math.isinf(mu2):
            raise InfiniteMomentError("second moment", "gamma_s2 is undefined")
        gamma_s2 = max(mu2 / (alpha * alpha) - 1.0, 0.0)
    report.inputs.update({"lambda": lam, "rho": rho, "gamma_s2": gamma_s2})
    if rho is not None:
        _warn_overflow(report, rho)
    tol = _tol(args)

    if rho is not None and gamma_s2 is not None:
        _bound_entries(report, general_bounds(lam, rho, gamma_s2), "general")

    if args.improved_m is not None:
        if rho is None:
            raise UsageError("--improved-M needs --rho")
        if gamma_s2 is not None and gamma_s2 != 1.0:
            report.warn("improved bounds assume exponential service (gamma_s2 = 1)")
        _bound_entries(report, improved_upper_mm(lam, rho, args.improved_m), "improved_corrected")
        _bound_entries(
            report,
            improved_upper_mm(lam, rho, args.improved_m, corrected=False),
            "improved_uncorrected",
        )
        report.warn(UNCORRECTED_NOTICE)

    for name in args.classes or []:
        service_class = ServiceClass(name)
        if model is not None:
            tag = getattr(model.reliability_tags(), f"is_{service_class.value}")
            if tag is TriState.NO:
                report.warn(f"{format_spec(model)} is not {service_class.value.upper()}")
        if service_class in (ServiceClass.NBUE, ServiceClass.NWUE):
            if rho is None:
                raise UsageError(f"--class {name} needs --rho")
            comparison = class_comparison(service_class, lam, rho, tol)
            report.add(
                ResultEntry.of(
                    f"{name}_reference",
                    comparison.reference.method.value,
                    comparison.reference.value,
                    comparison.reference.err_est,
                    relation=comparison.relation,
                    statement=comparison.statement,
                )
            )
        elif service_class is ServiceClass.DFR:
            if rho is None or gamma_s2 is None:
                raise UsageError("--class dfr needs --rho and --gamma-s2")
            _bound_entries(report, dfr_lower(lam, rho, gamma_s2, tol), "dfr")
        else:
            if alpha is None or mu2 is None or mu3 is None:
                raise UsageError("--class imrl needs --alpha, --mu2 and --mu3")
            _bound_entries(report, imrl_lower(lam, alpha, mu2, mu3, tol), "imrl")

    if not report.results:
        raise UsageError("nothing to compute: give --rho and --gamma-s2, --improved-M or --class")


_TABLE_COLUMNS = ("rho", "upper_general", "upper_improved_uncorrected", "lower_general")
_TABLE_EXTENDED = ("upper_improved_corrected", "exact_mm")
# CSV header names of the published table layout, keyed by row attribute.
TABLE_HEADER = {
    "rho": "rho",
    "upper_general": "upper_1_3",
    "upper_improved_uncorrected": "upper_1_7_printed",
    "lower_general": "lower_1_3",
    "upper_improved_corrected": "upper_1_7_corrected",
    "exact_mm": "exact_1_4",
}


def cmd_table1(args: argparse.Namespace, report: RunReport) -> str | None:
    rhos = _float_list(args.rho_list) or list(DEFAULT_TABLE_RHOS)
    lam = 1.0 if args.lam is None else float(args.lam)
    truncation = DEFAULT_TRUNCATION if args.truncation is None else args.truncation
    table = bounds_table(lam, rhos, truncation, _tol(args))
    columns = _TABLE_COLUMNS + (_TABLE_EXTENDED if args.extended else ())
    report.inputs.update({"lambda": lam, "M": truncation, "rhos": rhos})
    for note in table.notes:
        report.warn(note)
    if args.format == "json":
        for row in table.rows:
            for column in columns[1:]:
                report.add(ResultEntry.of(column, column, getattr(row, column), 0.0, rho=row.rho))
        return None
    return render_csv(
        [TABLE_HEADER[column] for column in columns],
        ([getattr(row, column) for column in columns] for row in table.rows),
        title="# busyvar table1 schema_version=1",
        notes=table.notes,
    )


def cmd_simulate(args: argparse.Namespace, report: RunReport) -> None:
    model = _model(args)
    cfg = SimConfig(
        arrival_rate=float(_require(args, "lam", "--lambda")),
        model=model,
        n_busy_periods=int(_require(args, "n", "--n")),
        seed=int(_require(args, "seed", "--seed")),
        n_streams=args.streams or 1,
    )
    report.inputs.update(
        {
            "lambda": cfg.arrival_rate,
            "dist": format_spec(model),
            "rho": cfg.arrival_rate * model.alpha,
            "n": cfg.n_busy_periods,
            "seed": cfg.seed,
            "streams": cfg.n_streams,
        }
    )
    if args.emit_samples:
        stats, samples = simulate_with_samples(cfg)
        export_samples(Path(args.emit_samples), samples)
        report.inputs["samples_path"] = str(args.emit_samples)
    else:
        stats = simulate_busy_periods(cfg)
    common = {"n": stats.n, "events": stats.events, "seed": stats.seed, "streams": stats.streams}
    report.add(
        ResultEntry.of(
            "mean_busy_period",
            "monte_carlo",
            stats.mean,
            stats.standard_error,
            ci95=list(stats.ci95_mean),
            **common,
        )
    )
    half_width = 0.5 * (stats.ci95_variance[1] - stats.ci95_variance[0])
    report.add(
        ResultEntry.of(
            "variance",
            "monte_carlo",
            stats.variance,
            half_width,
            ci95=list(stats.ci95_variance),
            **common,
        )
    )


def cmd_order(args: argparse.Namespace, report: RunReport) -> None:
    first = _model(args, "dist1", "--dist1")
    second = _model(args, "dist2", "--dist2")
    report.inputs.update({"dist1": format_spec(first), "dist2": format_spec(second)})
    verdict = check_variability_order(first, second)
    gap = verdict.gap or 0.0
    report.add(
        ResultEntry.of("variability_order", "grid_check", gap, 0.0, **_verdict_details(verdict))
    )

    lam = args.lam
    if lam is not None:
        report.inputs["lambda"] = float(lam)
        if verdict.outcome is OrderOutcome.HOLDS:
            consequence = variance_consequence(first, second, float(lam), _tol(args))
            report.add(_variance_entry("variance1", consequence.first))
            report.add(_variance_entry("variance2", consequence.second))
            report.add(
                ResultEntry.of(
                    "variance_margin",
                    "difference",
                    consequence.margin,
                    consequence.first.err_est + consequence.second.err_est,
                    violated=consequence.violated,
                )
            )
            if consequence.violated:
                report.warn("variance order violated; the quadrature tolerance is too loose")
        else:
            report.warn("variance consequence skipped: the service times are not ordered")

    if args.empirical:
        if lam is None:
            raise UsageError("--empirical needs --lambda")
        n = args.n or DEFAULT_EMPIRICAL_SAMPLES
        seed = 0 if args.seed is None else int(args.seed)
        streams = args.streams or 1
        samples = [
            busy_period_samples(
                SimConfig(
                    arrival_rate=float(lam),
                    model=model,
                    n_busy_periods=n,
                    seed=(seed + offset) % 2**64,
                    n_streams=streams,
                )
            )
            for offset, model in enumerate((first, second))
        ]
        empirical = empirical_busy_order(samples[0], samples[1])
        report.add(
            ResultEntry.of(
                "empirical_busy_order",
                "welch_bonferroni",
                empirical.gap or 0.0,
                0.0,
                n=n,
                seed=seed,
                **_verdict_details(empirical),
            )
        )
        report.warn("empirical busy-period order is statistical evidence, not a proof")


def cmd_cv(args: argparse.Namespace, report: RunReport) -> None:
    q = QueueInput(float(_require(args, "lam", "--lambda")), _model(args))
    _queue_inputs(report, q)
    if not q.moments.finite_variance:
        raise InfiniteMomentError("second moment", f"mu2 is infinite for {format_spec(q.model)}")
    threshold = DEFAULT_EXPONENTIALITY_THRESHOLD if args.threshold is None else args.threshold
    diagnostic = exponentiality_diagnostic(q, _tol(args), threshold)
    cv = diagnostic.cv
    report.add(ResultEntry.of("beta", "integral", cv.beta, 0.0))
    report.add(ResultEntry.of("gamma_b2", "integral", cv.gamma_b2, cv.err_est))
    report.add(
        ResultEntry.of(
            "exponentiality_gap",
            "integral",
            cv.exponentiality_gap,
            cv.err_est,
            threshold=threshold,
            verdict=diagnostic.verdict.value,
        )
    )


def _sweep_row(
    model: ServiceTimeModel,
    lam: float,
    rho: float,
    quantities: Sequence[str],
    gamma_override: float | None,
    tol: float | None,
) -> dict[str, float]:
    q = QueueInput(lam, model.with_mean(rho / lam))
    row: dict[str, float] = {"rho": rho}
    for quantity in quantities:
        if quantity == "mean":
            row["mean_busy_period"] = mean_busy_period(q)
        elif quantity == "integral":
            row["variance_integral"] = variance_integral(q, tol).value
        elif quantity == "series":
            row["variance_series"] = variance_series(q, tol).value
        elif quantity == "exact":
            if model.family is Family.EXPONENTIAL:
                row["exact_mm"] = variance_mm_exact(lam, q.rho, tol).value
            elif model.family is Family.DETERMINISTIC:
                row["exact_md"] = variance_md_exact(lam, q.rho).value
            else:
                raise UsageError("the exact column needs exponential or deterministic service")
        elif quantity == "bounds":
            gamma_s2 = q.moments.gamma_s2 if gamma_override is None else gamma_override
            if math.isinf(gamma_s2):
                raise InfiniteMomentError("second moment", "bounds need a finite gamma_s2")
            bound = general_bounds(lam, q.rho, gamma_s2)
            row["lower_general"] = bound.lower if bound.lower is not None else math.nan
            row["upper_general"] = bound.upper if bound.upper is not None else math.nan
        else:
            cv = cv_squared(q, tol)
            row["gamma_b2"] = cv.gamma_b2
            row["exponentiality_gap"] = cv.exponentiality_gap
    return row


def cmd_sweep(args: argparse.Namespace, report: RunReport) -> str | None:
    model = _model(args)
    lam = float(_require(args, "lam", "--lambda"))
    rhos = _rho_range(str(_require(args, "rho_range", "--rho-range")))
    selector = args.quantities or "mean,integral"
    quantities = [item.strip() for item in selector.split(",") if item.strip()]
    unknown = sorted(set(quantities) - set(SWEEP_QUANTITIES))
    if unknown:
        expected = ", ".join(SWEEP_QUANTITIES)
        raise UsageError(f"unknown sweep quantities {unknown}; expected {expected}")
    report.inputs.update(
        {"lambda": lam, "dist": format_spec(model), "rhos": rhos, "quantities": quantities}
    )
    if "series" in quantities:
        report.warn(SERIES_NOTICE)
    _warn_overflow(report, max(rhos))
    rows = [_sweep_row(model, lam, rho, quantities, args.gamma_s2, _tol(args)) for rho in rhos]
    columns = list(rows[0])
    if args.format == "json":
        for row in rows:
            for column in columns[1:]:
                report.add(ResultEntry.of(column, column, row[column], 0.0, rho=row["rho"]))
        return None
    return render_csv(
        columns,
        ([row[column] for column in columns] for row in rows),
        title="# busyvar sweep schema_version=1",
        notes=report.warnings,
    )


# -- parser -----------------------------------------------------------------------


Command = Callable[[argparse.Namespace, RunReport], str | None]

_CSV_FIRST = {"table1", "bounds-table", "sweep"}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default=None, help="Output format")
    common.add_argument("--tol", type=float, default=None, help="Relative tolerance")
    common.add_argument("--config", default=None, help="JSON file whose keys mirror the flags")
    common.add_argument("--log-level", default=None, help="Log level for stderr output")

    parser = _Parser(prog="busyvar", description="M/G/inf busy-period moments and bounds")
    sub = parser.add_subparsers(dest="command", required=True)

    compute = sub.add_parser("compute", parents=[common], help="Busy-period mean and variance")
    compute.add_argument("--dist", default=None)
    compute.add_argument("--lambda", dest="lam", type=float, default=None)
    compute.add_argument(
        "--method", choices=("integral", "series", "mm-exact", "md-exact", "all"), default=None
    )
    compute.set_defaults(handler=cmd_compute)

    bounds = sub.add_parser("bounds", parents=[common], help="Variance bounds")
    bounds.add_argument("--lambda", dest="lam", type=float, default=None)
    bounds.add_argument("--rho", type=float, default=None)
    bounds.add_argument("--gamma-s2", dest="gamma_s2", type=float, default=None)
    bounds.add_argument("--improved-M", dest="improved_m", type=int, default=None)
    bounds.add_argument(
        "--class",
        dest="classes",
        action="extend",
        nargs="+",
        choices=[c.value for c in ServiceClass],
        default=None,
    )
    bounds.add_argument("--alpha", type=float, default=None)
    bounds.add_argument("--mu2", type=float, default=None)
    bounds.add_argument("--mu3", type=float, default=None)
    bounds.add_argument("--dist", default=None, help="Derive moments and rho from a distribution")
    bounds.set_defaults(handler=cmd_bounds)

    table = sub.add_parser(
        "table1",
        aliases=["bounds-table"],
        parents=[common],
        help="Bounds table for exponential service",
    )
    table.add_argument("--rho-list", dest="rho_list", nargs="+", default=None)
    table.add_argument("--M", dest="truncation", type=int, default=None)
    table.add_argument("--lambda", dest="lam", type=float, default=None)
    table.add_argument("--extended", action="store_true", default=None)
    table.set_defaults(handler=cmd_table1)

    simulate = sub.add_parser("simulate", parents=[common], help="Monte Carlo busy periods")
    simulate.add_argument("--dist", default=None)
    simulate.add_argument("--lambda", dest="lam", type=float, default=None)
    simulate.add_argument("--n", type=int, default=None)
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--streams", type=int, default=None)
    simulate.add_argument("--emit-samples", dest="emit_samples", default=None)
    simulate.set_defaults(handler=cmd_simulate)

    order = sub.add_parser("order", parents=[common], help="Variability order of two services")
    order.add_argument("--dist1", default=None)
    order.add_argument("--dist2", default=None)
    order.add_argument("--lambda", dest="lam", type=float, default=None)
    order.add_argument("--empirical", action="store_true", default=None)
    order.add_argument("--n", type=int, default=None)
    order.add_argument("--seed", type=int, default=None)
    order.add_argument("--streams", type=int, default=None)
    order.set_defaults(handler=cmd_order)

    cv = sub.add_parser("cv", parents=[common], help="Busy-period coefficient of variation")
    cv.add_argument("--dist", default=None)
    cv.add_argument("--lambda", dest="lam", type=float, default=None)
    cv.add_argument("--threshold", type=float, default=None)
    cv.set_defaults(handler=cmd_cv)

    sweep = sub.add_parser("sweep", parents=[common], help="Quantities over a rho grid")
    sweep.add_argument("--dist", default=None)
    sweep.add_argument("--lambda", dest="lam", type=float, default=None)
    sweep.add_argument("--rho-range", dest="rho_range", default=None)
    sweep.add_argument("--quantities", default=None)
    sweep.add_argument("--gamma-s2", dest="gamma_s2", type=float, default=None)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    """Fill flags left unset from the ``--config`` JSON file."""
    if not args.config:
        return
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {args.config!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    by_dest: dict[str, Any] = {}
    for key, value in data.items():
        dest = _CONFIG_ALIASES.get(key, key.replace("-", "_"))
        if dest in {"command", "handler", "config"} or not hasattr(args, dest):
            raise UsageError(f"config key {key!r} is not a flag of {args.command}")
        by_dest[dest] = value
    try:
        flags = RunFileConfig.model_validate(by_dest).flags()
    except ValidationError as exc:
        raise UsageError(f"invalid value in config file {args.config!r}: {exc}") from exc
    for dest, value in flags.items():
        if getattr(args, dest) is None:
            setattr(args, dest, value)


def _emit_warnings(report: RunReport) -> None:
    for message in report.warnings:
        print(f"warning: {message}", file=sys.stderr)


def run(argv: Sequence[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(list(argv))
    _apply_config_file(args)
    configure_logging(level=args.log_level)
    if args.format is None:
        args.format = "csv" if args.command in _CSV_FIRST else "json"
    report = RunReport(command=list(argv))
    handler: Command = args.handler
    with OperationTimer(args.command):
        text = handler(args, report)
    _emit_warnings(report)
    if text is None:
        text = report.to_json() if args.format == "json" else report.to_csv()
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


def _fail(code: int, exc: BaseException) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    argv = sys.argv[1:] if argv is None else argv
    try:
        return run(argv)
    except SystemExit as exc:
        if exc.code is None:
            return EXIT_OK
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except InfiniteMomentError as exc:
        return _fail(EXIT_INFINITE, exc)
    except (NumericFailureError, RangeOverflowError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except (InvalidArgumentError, ValidationError, ValueError) as exc:
        return _fail(EXIT_USAGE, exc)


__all__ = ["build_parser", "main", "run"]
