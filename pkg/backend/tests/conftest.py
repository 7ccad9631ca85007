from __future__ import annotations

import os
import sys
from collections.abc import Callable, Iterator
from dataclasses import dataclass

import pytest
from busyvar.cli import main
from busyvar.config import get_config
from busyvar.dist import (
    Deterministic,
    Erlang,
    Exponential,
    HyperExponential,
    Lomax,
    ServiceTimeModel,
    Uniform,
)
from busyvar.monitoring import configure_logging

# Deterministic test configuration before any module reads settings.
os.environ.setdefault("BUSYVAR_LOG_LEVEL", "WARNING")
os.environ.setdefault("BUSYVAR_LOG_FORMAT", "json")


@pytest.fixture(autouse=True)
def _logging_to_current_stderr() -> Iterator[None]:
    """Bind structlog to the stderr of the running test."""
    configure_logging(level="WARNING", stream=sys.stderr)
    yield


@pytest.fixture
def fresh_config(monkeypatch: pytest.MonkeyPatch) -> Iterator[pytest.MonkeyPatch]:
    """Clear the cached configuration so environment overrides take effect."""
    get_config.cache_clear()
    yield monkeypatch
    monkeypatch.undo()
    get_config.cache_clear()


@pytest.fixture
def exp1() -> Exponential:
    return Exponential(mean=1.0)


@pytest.fixture
def det1() -> Deterministic:
    return Deterministic(mean=1.0)


@pytest.fixture
def erlang2() -> Erlang:
    return Erlang(k=2, mean=1.0)


@pytest.fixture
def uniform02() -> Uniform:
    return Uniform(low=0.0, high=2.0)


@pytest.fixture
def h2() -> HyperExponential:
    """Two-branch hyperexponential with mean 1 and squared CV 1.5."""
    return HyperExponential(p=(0.5, 0.5), means=(0.5, 1.5))


@pytest.fixture
def lomax_heavy() -> Lomax:
    """Finite mean, infinite second moment."""
    return Lomax(shape=1.5, scale=1.0)


@pytest.fixture
def unit_mean_models(
    exp1: Exponential,
    det1: Deterministic,
    erlang2: Erlang,
    uniform02: Uniform,
    h2: HyperExponential,
) -> dict[str, ServiceTimeModel]:
    """Finite-variance models with mean 1."""
    return {
        "exponential": exp1,
        "deterministic": det1,
        "erlang2": erlang2,
        "uniform": uniform02,
        "hyperexponential": h2,
    }


@dataclass
class CliResult:
    code: int
    stdout: str
    stderr: str


@pytest.fixture
def run_cli(capsys: pytest.CaptureFixture[str]) -> Callable[..., CliResult]:
    """Run the CLI in-process and capture its streams."""

    def _run(*argv: str) -> CliResult:
        capsys.readouterr()
        code = main(list(argv))
        captured = capsys.readouterr()
        return CliResult(code, captured.out, captured.err)

    return _run
