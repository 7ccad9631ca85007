"""Monte Carlo simulator for M/G/inf busy periods."""

from __future__ import annotations

from .moments import StreamingMoments
from .runner import (
    SimConfig,
    SimStats,
    busy_period_samples,
    export_samples,
    simulate_busy_periods,
    simulate_with_samples,
    stream_counts,
    stream_generators,
)
from .scan import RenewalScanner, scan_busy_periods

__all__ = [
    "RenewalScanner",
    "SimConfig",
    "SimStats",
    "StreamingMoments",
    "busy_period_samples",
    "export_samples",
    "scan_busy_periods",
    "simulate_busy_periods",
    "simulate_with_samples",
    "stream_counts",
    "stream_generators",
]
