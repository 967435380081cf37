"""Trace files: newline-delimited JSON event records behind a header line.

The header pins the scenario identity and drone model so traces verify
standalone. Events are written at full float precision; equal runs produce
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from .core import ValidationError
from .scenario import Scenario

TRACE_SCHEMA = 1


class TraceError(ValidationError):
    """A trace file is truncated, corrupt, or not a trace at all."""


def trace_header(scenario: Scenario) -> dict[str, Any]:
    return {
        "type": "header",
        "trace_schema": TRACE_SCHEMA,
        "scenario": scenario.name,
        "pattern": scenario.pattern.value,
        "seed": scenario.seed,
        "dt": scenario.dt,
        "scheduler": scenario.scheduler,
        "drone": scenario.drone.to_wire(),
    }


def dump_line(event: dict[str, Any]) -> str:
    return json.dumps(event, separators=(",", ":"))


def write_trace(path: str | Path, scenario: Scenario, events: Iterable[dict[str, Any]]) -> None:
    with open(path, "w") as fh:
        fh.write(dump_line(trace_header(scenario)) + "\n")
        for event in events:
            fh.write(dump_line(event) + "\n")


def read_trace(path: str | Path) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    """Parse a trace file into (header, events). Raises TraceError when the
    file is malformed."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc}") from None
    if not lines:
        raise TraceError(f"trace {path} is empty")
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            raise TraceError(f"trace {path}:{lineno}: blank line inside trace")
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"trace {path}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict) or "type" not in record:
            raise TraceError(f"trace {path}:{lineno}: records need a 'type' field")
        records.append(record)
    header = records[0]
    if header.get("type") != "header" or header.get("trace_schema") != TRACE_SCHEMA:
        raise TraceError(f"trace {path}: first line must be a schema-{TRACE_SCHEMA} header")
    if len(records) < 2:
        raise TraceError(f"trace {path}: no events after the header")
    return header, records[1:]
