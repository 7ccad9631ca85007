"""Renewal scan over arrivals of an infinite-server queue.

With infinitely many servers nobody waits, so the system stays busy exactly while
some customer's departure time lies ahead. Only the latest departure of the
current busy period (its coverage end) has to be tracked, in time measured from
the busy period's opening arrival.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidArgumentError


class RenewalScanner:
    """Busy-period scan that can be fed arrivals block by block.

    The first service time opens a busy period; every later arrival comes with the
    gap since the previous arrival. An arrival at or after the coverage end closes
    the current busy period and opens the next one.
    """

    __slots__ = ("_clock", "_coverage_end", "_open")

    def __init__(self) -> None:
        self._clock = 0.0
        self._coverage_end = 0.0
        self._open = False

    @property
    def is_open(self) -> bool:
        return self._open

    def open(self, service: float) -> None:
        self._clock = 0.0
        self._coverage_end = float(service)
        self._open = True

    def feed(
        self, gaps: Sequence[float], services: Sequence[float], limit: int | None = None
    ) -> tuple[list[float], int]:
        """Process arrivals in order and return completed lengths plus arrivals consumed.

        Scanning stops early once ``limit`` busy periods have completed; the arrival
        that closed the last one has then opened the next busy period.
        """
        if not self._open:
            raise InvalidArgumentError("open() must be called before feed()")
        completed: list[float] = []
        clock = self._clock
        end = self._coverage_end
        consumed = 0
        for gap, service in zip(gaps, services, strict=True):
            consumed += 1
            clock += gap
            if clock < end:
                departure = clock + service
                if departure > end:
                    end = departure
                continue
            completed.append(end)
            clock = 0.0
            end = service
            if limit is not None and len(completed) >= limit:
                break
        self._clock = clock
        self._coverage_end = end
        return completed, consumed

    def close(self) -> float:
        """Close the open busy period as if no further arrival came."""
        if not self._open:
            raise InvalidArgumentError("no busy period is open")
        self._open = False
        return self._coverage_end


def scan_busy_periods(interarrivals: ArrayLike, services: ArrayLike) -> list[float]:
    """Busy-period lengths of a finite arrival realization.

    ``services[0]`` belongs to the arrival at time zero; ``interarrivals[i]`` is the
    gap before the arrival with ``services[i + 1]``. The busy period in progress after
    the last arrival is closed at its coverage end.

    Raises:
        InvalidArgumentError: On mismatched lengths or negative times.
    """
    gaps = np.asarray(interarrivals, dtype=np.float64).ravel()
    service = np.asarray(services, dtype=np.float64).ravel()
    if service.size != gaps.size + 1:
        raise InvalidArgumentError(
            f"need one more service time than gaps, got {service.size} and {gaps.size}"
        )
    if not (np.all(gaps >= 0.0) and np.all(service >= 0.0)):
        raise InvalidArgumentError("gaps and service times must be >= 0")
    scanner = RenewalScanner()
    scanner.open(float(service[0]))
    lengths, _ = scanner.feed(gaps.tolist(), service[1:].tolist())
    lengths.append(scanner.close())
    return lengths


__all__ = ["RenewalScanner", "scan_busy_periods"]
