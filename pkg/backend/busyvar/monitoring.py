"""Logging setup and lightweight runtime monitoring for busyvar."""

from __future__ import annotations

import logging
import sys
import time
from types import TracebackType
from typing import Any, TextIO

import psutil
import structlog

from .config import get_config

logger = structlog.get_logger(__name__)


def configure_logging(
    level: str | None = None,
    fmt: str | None = None,
    stream: TextIO | None = None,
) -> None:
    """Configure structlog to write key/value events to stderr.

    stdout is reserved for result documents, so logs never share it.
    """
    monitoring = get_config().monitoring
    level_name = (level or monitoring.log_level).upper()
    renderer: Any = (
        structlog.dev.ConsoleRenderer(colors=False)
        if (fmt or monitoring.log_format) == "console"
        else structlog.processors.JSONRenderer()
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            getattr(logging, level_name, logging.WARNING)
        ),
        logger_factory=structlog.WriteLoggerFactory(file=stream or sys.stderr),
        cache_logger_on_first_use=False,
    )


class OperationTimer:
    """Context manager that binds an operation name and logs its wall time."""

    def __init__(self, operation: str, **context: Any) -> None:
        self.operation = operation
        self.context = context
        self.elapsed_seconds = 0.0
        self._start = 0.0

    def __enter__(self) -> OperationTimer:
        structlog.contextvars.bind_contextvars(operation=self.operation)
        self._start = time.perf_counter()
        logger.debug("operation_started", **self.context)
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.elapsed_seconds = time.perf_counter() - self._start
        if exc is None:
            logger.info("operation_finished", duration_seconds=round(self.elapsed_seconds, 6))
        else:
            logger.warning(
                "operation_failed",
                duration_seconds=round(self.elapsed_seconds, 6),
                error=type(exc).__name__,
            )
        structlog.contextvars.unbind_contextvars("operation")


def available_memory_bytes() -> int:
    """Return the memory currently available to new allocations."""
    return int(psutil.virtual_memory().available)


__all__ = ["OperationTimer", "available_memory_bytes", "configure_logging"]
