"""busyvar: busy-period moments, bounds and simulation for the M/G/inf queue."""

from __future__ import annotations

from importlib import import_module
from typing import Any

__version__ = "1.0.0"

# Public name -> submodule that defines it; loaded on first access.
_EXPORTS = {
    "BusyVarConfig": "busyvar.config",
    "get_config": "busyvar.config",
    "QueueInput": "busyvar.core",
    "VarianceResult": "busyvar.core",
    "mean_busy_period": "busyvar.core",
    "traffic_intensity": "busyvar.core",
    "variance_integral": "busyvar.core",
    "variance_series": "busyvar.core",
    "variance_mm_exact": "busyvar.core",
    "variance_md_exact": "busyvar.core",
    "general_bounds": "busyvar.bounds",
    "improved_upper_mm": "busyvar.bounds",
    "dfr_lower": "busyvar.bounds",
    "imrl_lower": "busyvar.bounds",
    "class_comparison": "busyvar.bounds",
    "bounds_table": "busyvar.bounds",
    "check_variability_order": "busyvar.ordering",
    "variance_consequence": "busyvar.ordering",
    "empirical_busy_order": "busyvar.ordering",
    "beta_integral": "busyvar.cv",
    "cv_squared": "busyvar.cv",
    "exponentiality_diagnostic": "busyvar.cv",
    "parse_spec": "busyvar.dist",
    "format_spec": "busyvar.dist",
    "SimConfig": "busyvar.sim",
    "simulate_busy_periods": "busyvar.sim",
    "busy_period_samples": "busyvar.sim",
}

__all__ = ["__version__", *_EXPORTS]


def __getattr__(name: str) -> Any:
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name]), name)
    raise AttributeError(f"module 'busyvar' has no attribute {name!r}")


def __dir__() -> list[str]:
    return sorted(set(globals()) | set(__all__))
