"""Offline invariant checks over a recorded mission trace.

Used by the `replay` CLI command and by tests: every rule re-derives its
verdict from the trace alone, independent of the engine that produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from .core import MissionState
from .sensing import TRANSITIONS

SPEED_SLACK = 1e-9


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.detail}"


def verify_events(header: dict[str, Any], events: list[dict[str, Any]]) -> list[Violation]:
    violations: list[Violation] = []
    violations.extend(_check_speed_clamp(header, events))
    violations.extend(_check_battery(events))
    violations.extend(_check_time_order(events))
    violations.extend(_check_visit_once(events))
    violations.extend(_check_abort_safety(events))
    violations.extend(_check_fsm_path(events))
    return violations


def _telemetry(events: list[dict[str, Any]]) -> list[dict[str, Any]]:
    return [e for e in events if e.get("type") == "telemetry"]


def _check_speed_clamp(header: dict[str, Any], events: list[dict[str, Any]]) -> list[Violation]:
    model = header.get("drone", {})
    max_h = float(model.get("max_horizontal_speed", 1.5))
    max_v = float(model.get("max_vertical_speed", 1.0))
    out = []
    samples = _telemetry(events)
    for prev, cur in zip(samples, samples[1:]):
        dt = cur["sim_time"] - prev["sim_time"]
        if dt <= 0:
            continue
        dx = cur["pose"]["x"] - prev["pose"]["x"]
        dy = cur["pose"]["y"] - prev["pose"]["y"]
        dz = abs(cur["pose"]["z"] - prev["pose"]["z"])
        horizontal = math.hypot(dx, dy)
        if horizontal > max_h * dt + SPEED_SLACK:
            out.append(
                Violation(
                    "speed_clamp",
                    f"horizontal displacement {horizontal:.4f} m exceeds "
                    f"{max_h} m/s over {dt:.4f} s at t={cur['sim_time']:.3f}",
                )
            )
        if dz > max_v * dt + SPEED_SLACK:
            out.append(
                Violation(
                    "speed_clamp",
                    f"vertical displacement {dz:.4f} m exceeds "
                    f"{max_v} m/s over {dt:.4f} s at t={cur['sim_time']:.3f}",
                )
            )
    return out


def _check_battery(events: list[dict[str, Any]]) -> list[Violation]:
    out = []
    samples = _telemetry(events)
    for prev, cur in zip(samples, samples[1:]):
        if cur["battery"] > prev["battery"] + 1e-9:
            out.append(
                Violation(
                    "battery_monotonic",
                    f"battery rose {prev['battery']:.4f} -> {cur['battery']:.4f} "
                    f"at t={cur['sim_time']:.3f}",
                )
            )
        if prev["state"] == MissionState.LANDED.value and cur["battery"] < prev["battery"] - 1e-9:
            out.append(
                Violation(
                    "battery_monotonic",
                    f"battery drained while landed at t={cur['sim_time']:.3f}",
                )
            )
    return out


def _check_time_order(events: list[dict[str, Any]]) -> list[Violation]:
    out = []
    samples = _telemetry(events)
    for prev, cur in zip(samples, samples[1:]):
        if cur["sim_time"] <= prev["sim_time"]:
            out.append(
                Violation(
                    "time_order",
                    f"telemetry sim_time not strictly increasing at {cur['sim_time']}",
                )
            )
    return out


def _check_visit_once(events: list[dict[str, Any]]) -> list[Violation]:
    visited = [
        e["waypoint_id"] for e in events if e.get("type") == "queue" and e.get("action") == "visited"
    ]
    out = []
    seen = set()
    for wid in visited:
        if wid in seen:
            out.append(Violation("visit_once", f"waypoint {wid!r} visited more than once"))
        seen.add(wid)
    samples = _telemetry(events)
    if samples:
        final = samples[-1]["visited_waypoint_ids"]
        if len(set(final)) != len(final):
            out.append(Violation("visit_once", f"duplicate ids in telemetry visit list: {final}"))
    return out


def _check_abort_safety(events: list[dict[str, Any]]) -> list[Violation]:
    out = []
    for i, event in enumerate(events):
        if event.get("type") == "queue" and event.get("action") == "clear":
            pending = set(event.get("waypoint_ids", []))
            visited_after = {
                e["waypoint_id"]
                for e in events[i + 1 :]
                if e.get("type") == "queue" and e.get("action") == "visited"
            }
            overlap = pending & visited_after
            if overlap:
                out.append(
                    Violation(
                        "abort_safety",
                        f"waypoints pending at abort were visited later: {sorted(overlap)}",
                    )
                )
    return out


def _check_fsm_path(events: list[dict[str, Any]]) -> list[Violation]:
    out = []
    transitions = [e for e in events if e.get("type") == "transition"]
    legal_edges = {
        (frm.value, to.value) for frm, edges in TRANSITIONS.items() for to in edges.values()
    }
    prev_state: str | None = None
    for t in transitions:
        frm, to = t["from_state"], t["to_state"]
        if prev_state is not None and frm != prev_state:
            out.append(
                Violation("fsm_path", f"transition chain broken: {prev_state} then {frm}->{to}")
            )
        if (frm, to) not in legal_edges:
            out.append(Violation("fsm_path", f"edge {frm}->{to} is not in the transition table"))
        if frm == MissionState.LANDED.value:
            out.append(Violation("fsm_path", f"landed must be absorbing, saw {frm}->{to}"))
        prev_state = to
    if transitions:
        if transitions[0]["from_state"] != MissionState.INIT.value:
            out.append(Violation("fsm_path", "mission did not start from init"))
    return out
