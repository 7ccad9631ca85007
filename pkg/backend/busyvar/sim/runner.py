"""Monte Carlo busy periods of the M/G/inf queue.

Each stream owns two generators (inter-arrival gaps and service times) derived
from ``SeedSequence(seed, spawn_key=(stream,))``, draws in fixed-size blocks and
feeds a ``RenewalScanner``. Per-stream moments are merged in stream order, so the
result is a pure function of the configuration whether streams run inline or in a
process pool.
"""

from __future__ import annotations

import math
import multiprocessing
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from ..config import get_config
from ..dist import ServiceTimeModel
from ..errors import InfiniteMomentError, SampleSizeError
from ..monitoring import available_memory_bytes
from .moments import StreamingMoments
from .scan import RenewalScanner

logger = structlog.get_logger(__name__)

CONFIDENCE = 0.95
_SAMPLE_BYTES = np.dtype(np.float64).itemsize
_MAX_SEED = 2**64 - 1


class SimConfig(BaseModel):
    """Validated simulation request."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    arrival_rate: float = Field(gt=0.0, allow_inf_nan=False)
    model: ServiceTimeModel
    n_busy_periods: int = Field(ge=1)
    seed: int = Field(default=0, ge=0, le=_MAX_SEED)
    n_streams: int = Field(default=1, ge=1, le=4096)


@dataclass(frozen=True, slots=True)
class SimStats:
    """Sample statistics of simulated busy periods.

    ``ci95_mean`` is the Student t interval; ``ci95_variance`` is the large-sample
    normal interval from the fourth central moment and is approximate.
    """

    n: int
    mean: float
    variance: float
    ci95_mean: tuple[float, float]
    ci95_variance: tuple[float, float]
    events: int
    seed: int
    streams: int

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n > 1 else math.inf


@dataclass(frozen=True, slots=True)
class _StreamTask:
    arrival_rate: float
    model: ServiceTimeModel
    count: int
    seed: int
    stream: int
    block_size: int
    keep_samples: bool


@dataclass(frozen=True, slots=True)
class _StreamOutcome:
    stream: int
    moments: StreamingMoments
    events: int
    samples: NDArray[np.float64] | None


def stream_counts(n: int, streams: int) -> list[int]:
    """Split ``n`` busy periods over streams; the first ``n % streams`` get one extra."""
    base, extra = divmod(n, streams)
    return [base + (1 if i < extra else 0) for i in range(streams)]


def stream_generators(seed: int, stream: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (arrival, service) generators of one stream."""
    arrival_seq, service_seq = np.random.SeedSequence(seed, spawn_key=(stream,)).spawn(2)
    return (
        np.random.Generator(np.random.PCG64(arrival_seq)),
        np.random.Generator(np.random.PCG64(service_seq)),
    )


def _run_stream(task: _StreamTask) -> _StreamOutcome:
    arrivals, services = stream_generators(task.seed, task.stream)
    mean_gap = 1.0 / task.arrival_rate

    def gap_block() -> list[float]:
        return arrivals.exponential(mean_gap, task.block_size).tolist()

    def service_block() -> list[float]:
        return np.asarray(task.model.sample(services, task.block_size)).tolist()

    moments = StreamingMoments()
    kept: list[float] = []
    scanner = RenewalScanner()
    svc = service_block()
    scanner.open(svc[0])
    svc_pos = 1
    gaps = gap_block()
    gap_pos = 0
    events = 1
    remaining = task.count
    while remaining > 0:
        if svc_pos >= len(svc):
            svc, svc_pos = service_block(), 0
        if gap_pos >= len(gaps):
            gaps, gap_pos = gap_block(), 0
        take = min(len(svc) - svc_pos, len(gaps) - gap_pos)
        completed, consumed = scanner.feed(
            gaps[gap_pos : gap_pos + take], svc[svc_pos : svc_pos + take], limit=remaining
        )
        svc_pos += consumed
        gap_pos += consumed
        events += consumed
        if completed:
            moments.push(completed)
            remaining -= len(completed)
            if task.keep_samples:
                kept.extend(completed)

    samples = np.asarray(kept, dtype=np.float64) if task.keep_samples else None
    return _StreamOutcome(task.stream, moments, events, samples)


def _tasks(cfg: SimConfig, keep_samples: bool) -> list[_StreamTask]:
    if not math.isfinite(cfg.model.alpha):
        raise InfiniteMomentError("mean", "busy periods are not finite on average")
    block_size = get_config().simulation.block_size
    return [
        _StreamTask(
            cfg.arrival_rate, cfg.model, count, cfg.seed, stream, block_size, keep_samples
        )
        for stream, count in enumerate(stream_counts(cfg.n_busy_periods, cfg.n_streams))
        if count > 0
    ]


def _execute(tasks: Sequence[_StreamTask]) -> list[_StreamOutcome]:
    settings = get_config().simulation
    if len(tasks) <= 1 or settings.executor == "inline":
        outcomes = [_run_stream(task) for task in tasks]
    else:
        workers = min(len(tasks), settings.max_workers)
        with ProcessPoolExecutor(
            max_workers=workers, mp_context=multiprocessing.get_context("spawn")
        ) as pool:
            # map() yields in submission order, which fixes the merge order.
            outcomes = list(pool.map(_run_stream, tasks))
    for outcome in outcomes:
        # Workers stay silent; their stdout is shared with the result document.
        logger.debug(
            "simulation_stream_finished",
            stream=outcome.stream,
            n=outcome.moments.n,
            events=outcome.events,
        )
    return outcomes


def _intervals(moments: StreamingMoments) -> tuple[tuple[float, float], tuple[float, float]]:
    n = moments.n
    mean = moments.mean
    variance = moments.variance
    if n < 2:
        return (mean, mean), (variance, variance)
    t_crit = float(stats.t.ppf(0.5 + CONFIDENCE / 2.0, n - 1))
    half_mean = t_crit * math.sqrt(variance / n)
    z_crit = float(stats.norm.ppf(0.5 + CONFIDENCE / 2.0))
    spread = max(moments.central_moment4 - variance * variance * (n - 3) / (n - 1), 0.0)
    half_var = z_crit * math.sqrt(spread / n)
    return (
        (mean - half_mean, mean + half_mean),
        (max(variance - half_var, 0.0), variance + half_var),
    )


def _summarize(cfg: SimConfig, outcomes: Sequence[_StreamOutcome]) -> SimStats:
    total = StreamingMoments()
    events = 0
    for outcome in outcomes:
        total.merge(outcome.moments)
        events += outcome.events
    ci_mean, ci_variance = _intervals(total)
    return SimStats(
        n=total.n,
        mean=total.mean,
        variance=total.variance,
        ci95_mean=ci_mean,
        ci95_variance=ci_variance,
        events=events,
        seed=cfg.seed,
        streams=cfg.n_streams,
    )


def simulate_busy_periods(cfg: SimConfig) -> SimStats:
    """Simulate ``cfg.n_busy_periods`` busy periods in constant memory per stream.

    Raises:
        InfiniteMomentError: If the service time has no finite mean.
    """
    outcomes = _execute(_tasks(cfg, keep_samples=False))
    result = _summarize(cfg, outcomes)
    logger.info(
        "simulation_finished", n=result.n, streams=result.streams, events=result.events
    )
    return result


def _check_sample_budget(n: int) -> None:
    limit = get_config().simulation.max_samples
    if n > limit:
        raise SampleSizeError(f"{n} samples exceed the configured maximum of {limit}")
    needed = n * _SAMPLE_BYTES * 2
    available = available_memory_bytes()
    if needed > available:
        raise SampleSizeError(
            f"{n} samples need about {needed} bytes, only {available} are available"
        )


def busy_period_samples(cfg: SimConfig) -> NDArray[np.float64]:
    """Raw busy-period lengths, stream after stream in generation order.

    Raises:
        SampleSizeError: If the samples would not fit the memory budget.
        InfiniteMomentError: If the service time has no finite mean.
    """
    _check_sample_budget(cfg.n_busy_periods)
    outcomes = _execute(_tasks(cfg, keep_samples=True))
    return np.concatenate([o.samples for o in outcomes if o.samples is not None])


def simulate_with_samples(cfg: SimConfig) -> tuple[SimStats, NDArray[np.float64]]:
    """Statistics and raw samples from one simulation run."""
    _check_sample_budget(cfg.n_busy_periods)
    outcomes = _execute(_tasks(cfg, keep_samples=True))
    samples = np.concatenate([o.samples for o in outcomes if o.samples is not None])
    return _summarize(cfg, outcomes), samples


def export_samples(path: str | Path, samples: ArrayLike) -> Path:
    """Write one busy-period length per line as round-trip decimal text."""
    target = Path(path)
    np.savetxt(target, np.asarray(samples, dtype=np.float64).ravel(), fmt="%.17g")
    logger.info("samples_exported", path=str(target))
    return target


__all__ = [
    "SimConfig",
    "SimStats",
    "busy_period_samples",
    "export_samples",
    "simulate_busy_periods",
    "simulate_with_samples",
    "stream_counts",
    "stream_generators",
]
