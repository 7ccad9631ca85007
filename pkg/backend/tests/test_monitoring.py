"""Tests for logging setup and operation timing."""

from __future__ import annotations

import io
import json

import pytest
import structlog
from busyvar.monitoring import OperationTimer, available_memory_bytes, configure_logging


def _events(stream: io.StringIO) -> list[dict]:
    return [json.loads(line) for line in stream.getvalue().splitlines() if line.strip()]


def test_operation_timer_logs_duration():
    """Test a finished operation is logged with its name and wall time."""
    stream = io.StringIO()
    configure_logging(level="INFO", fmt="json", stream=stream)
    with OperationTimer("compute") as timer:
        pass
    events = _events(stream)
    finished = [e for e in events if e["event"] == "operation_finished"]
    assert len(finished) == 1
    assert finished[0]["operation"] == "compute"
    assert finished[0]["level"] == "info"
    assert timer.elapsed_seconds >= 0.0
    assert "operation" not in structlog.contextvars.get_contextvars()


def test_operation_timer_logs_failure():
    """Test a failing operation is logged as a warning and re-raised."""
    stream = io.StringIO()
    configure_logging(level="WARNING", fmt="json", stream=stream)
    with pytest.raises(ZeroDivisionError), OperationTimer("cv"):
        _ = 1 / 0
    events = _events(stream)
    assert [e["event"] for e in events] == ["operation_failed"]
    assert events[0]["error"] == "ZeroDivisionError"


def test_level_filtering():
    """Test events below the configured level are dropped."""
    stream = io.StringIO()
    configure_logging(level="ERROR", fmt="json", stream=stream)
    with OperationTimer("sweep"):
        pass
    assert stream.getvalue() == ""


def test_console_format():
    """Test the human-readable renderer."""
    stream = io.StringIO()
    configure_logging(level="INFO", fmt="console", stream=stream)
    structlog.get_logger("busyvar.test").info("hello", answer=42)
    assert "hello" in stream.getvalue()
    assert "answer=42" in stream.getvalue()


def test_available_memory_is_positive():
    """Test the available-memory reading."""
    assert available_memory_bytes() > 0
