"""Result documents written by the CLI."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Sequence
from typing import Any, Literal

from pydantic import BaseModel, Field

SCHEMA_VERSION = 1


class ResultEntry(BaseModel):
    """One tagged number; infinite values serialize as ``value: null, infinite: true``."""

    name: str
    method: str
    value: float | None
    err_est: float | None = None
    infinite: bool = False
    details: dict[str, Any] = Field(default_factory=dict)

    model_config = {
        "extra": "forbid",
    }

    @classmethod
    def of(
        cls,
        name: str,
        method: str,
        value: float,
        err_est: float | None = 0.0,
        **details: Any,
    ) -> ResultEntry:
        infinite = math.isinf(value)
        return cls(
            name=name,
            method=method,
            value=None if infinite else float(value),
            err_est=None if infinite or err_est is None else float(err_est),
            infinite=infinite,
            details=details,
        )


class RunReport(BaseModel):
    """Command echo, inputs, tagged results and warnings of one CLI run."""

    schema_version: Literal[1] = SCHEMA_VERSION
    command: list[str]
    inputs: dict[str, Any] = Field(default_factory=dict)
    results: list[ResultEntry] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)

    model_config = {
        "extra": "forbid",
    }

    def add(self, entry: ResultEntry) -> ResultEntry:
        self.results.append(entry)
        return entry

    def warn(self, message: str) -> None:
        if message not in self.warnings:
            self.warnings.append(message)

    def result(self, name: str) -> ResultEntry:
        for entry in self.results:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def to_csv(self) -> str:
        """Flat ``name,method,value,err_est,infinite`` rows; warnings become ``#`` lines."""
        rows = [
            [e.name, e.method, _cell(e.value), _cell(e.err_est), str(e.infinite).lower()]
            for e in self.results
        ]
        return render_csv(
            ["name", "method", "value", "err_est", "infinite"],
            rows,
            title=f"# busyvar {self.command[0]} schema_version={SCHEMA_VERSION}",
            notes=self.warnings,
        )


def _cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def render_csv(
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    *,
    title: str | None = None,
    notes: Iterable[str] = (),
) -> str:
    """Render a CSV document with an optional ``#`` title line and ``#`` footnotes."""
    buffer = io.StringIO()
    if title:
        buffer.write(title + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) if isinstance(v, float) else v for v in row])
    for note in notes:
        buffer.write(f"# {note}\n")
    return buffer.getvalue()


__all__ = ["ResultEntry", "RunReport", "SCHEMA_VERSION", "render_csv"]
