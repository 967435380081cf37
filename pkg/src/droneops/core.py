"""Shared domain types, geometry helpers, and the canonical wire format.

Every value type in here is immutable and safe to share across threads.
Wire helpers (`to_wire` / `from_wire`) produce and consume plain dicts with
snake_case keys and lowercase string enums, ready for JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping


class ValidationError(ValueError):
    """A domain value violates one of its invariants."""


class NotFoundError(KeyError):
    """A referenced entity (sensor, mission, property) does not exist."""

    def __str__(self) -> str:  # KeyError quotes its message by default
        return self.args[0] if self.args else ""


class CommandRejected(RuntimeError):
    """A command was refused because its preconditions do not hold."""


class Frame(Enum):
    RELATIVE = "relative"
    ABSOLUTE = "absolute"


class NavType(Enum):
    DISTANCE_DRIVEN = "distance_driven"
    ANALYTICS_DRIVEN = "analytics_driven"


class Scheduling(Enum):
    ORDERED = "ordered"
    UNORDERED = "unordered"


class MissionState(Enum):
    """The 13 mission lifecycle states reported by the stat-stream sensor."""

    INIT = "init"
    ARMED = "armed"
    TAKING_OFF = "taking_off"
    HOVER = "hover"
    EN_ROUTE = "en_route"
    WAYPOINT_HOVER = "waypoint_hover"
    TRACKING = "tracking"
    PREEMPTED = "preempted"
    PAUSED = "paused"
    RESUMING = "resuming"
    ABORTED = "aborted"
    LANDING = "landing"
    LANDED = "landed"


def _require_finite(label: str, *values: float) -> None:
    for v in values:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise ValidationError(f"{label} must be finite, got {v!r}")


@dataclass(frozen=True)
class Position3:
    """A point (meters) or rate (meters/second) in the local ENU-style frame.

    z is altitude, up-positive. A pose of a grounded or airborne drone keeps
    z >= 0; rates may carry any sign.
    """

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        _require_finite("position component", self.x, self.y, self.z)

    def offset(self, other: "Position3") -> "Position3":
        return Position3(self.x + other.x, self.y + other.y, self.z + other.z)

    def to_wire(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "z": self.z}

    @classmethod
    def from_wire(cls, data: Mapping[str, Any]) -> "Position3":
        return cls(float(data["x"]), float(data["y"]), float(data["z"]))


def euclidean_distance(a: Position3, b: Position3) -> float:
    """Straight-line distance in meters; the trajectory schedulers' metric."""
    return math.dist((a.x, a.y, a.z), (b.x, b.y, b.z))


def horizontal_distance(a: Position3, b: Position3) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


@dataclass(frozen=True)
class Waypoint:
    id: str
    target: Position3
    hover_duration: float = 0.0
    frame: Frame = Frame.RELATIVE
    deadline: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("waypoint id must be non-empty")
        if self.hover_duration < 0:
            raise ValidationError(f"hover_duration must be >= 0, got {self.hover_duration}")
        if self.deadline is not None and self.deadline <= 0:
            raise ValidationError(f"deadline must be > 0, got {self.deadline}")

    def to_wire(self) -> dict[str, Any]:
        wire: dict[str, Any] = {
            "id": self.id,
            "target": self.target.to_wire(),
            "hover_duration": self.hover_duration,
            "frame": self.frame.value,
        }
        if self.deadline is not None:
            wire["deadline"] = self.deadline
        return wire

    @classmethod
    def from_wire(cls, data: Mapping[str, Any]) -> "Waypoint":
        return cls(
            id=str(data["id"]),
            target=Position3.from_wire(data["target"]),
            hover_duration=float(data.get("hover_duration", 0.0)),
            frame=Frame(data.get("frame", "relative")),
            deadline=float(data["deadline"]) if data.get("deadline") is not None else None,
        )


def resolve_waypoint(wp: Waypoint, takeoff_origin: Position3) -> Position3:
    """Turn a waypoint target into an absolute position.

    Relative targets are offsets from the takeoff point; absolute targets pass
    through unchanged (so resolving twice is harmless).
    """
    _require_finite("takeoff origin", takeoff_origin.x, takeoff_origin.y, takeoff_origin.z)
    if wp.frame is Frame.ABSOLUTE:
        return wp.target
    return takeoff_origin.offset(wp.target)


@dataclass(frozen=True)
class NavigationBatch:
    """A group of waypoints submitted together with shared priority and mode.

    Lower priority value means more urgent: a priority-1 tracking batch
    preempts a priority-2 survey batch.
    """

    nav_type: NavType
    waypoints: tuple[Waypoint, ...]
    scheduling: Scheduling = Scheduling.ORDERED
    priority: int = 2

    def __post_init__(self) -> None:
        if self.priority < 1:
            raise ValidationError(f"batch priority must be >= 1, got {self.priority}")
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        ids = [wp.id for wp in self.waypoints]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate waypoint ids within batch: {ids}")

    def to_wire(self) -> dict[str, Any]:
        return {
            "nav_type": self.nav_type.value,
            "waypoints": [wp.to_wire() for wp in self.waypoints],
            "scheduling": self.scheduling.value,
            "priority": self.priority,
        }

    @classmethod
    def from_wire(cls, data: Mapping[str, Any]) -> "NavigationBatch":
        return cls(
            nav_type=NavType(data["nav_type"]),
            waypoints=tuple(Waypoint.from_wire(w) for w in data["waypoints"]),
            scheduling=Scheduling(data.get("scheduling", "ordered")),
            priority=int(data.get("priority", 2)),
        )


@dataclass(frozen=True)
class TelemetryEvent:
    """One sample of the drone's pose, battery, and mission progress."""

    sim_time: float
    pose: Position3
    velocity: Position3
    battery: float
    state: MissionState
    visited_waypoint_ids: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not 0.0 <= self.battery <= 100.0:
            raise ValidationError(f"battery must be within [0, 100], got {self.battery}")
        object.__setattr__(self, "visited_waypoint_ids", tuple(self.visited_waypoint_ids))

    def to_wire(self) -> dict[str, Any]:
        return {
            "sim_time": self.sim_time,
            "pose": self.pose.to_wire(),
            "velocity": self.velocity.to_wire(),
            "battery": self.battery,
            "state": self.state.value,
            "visited_waypoint_ids": list(self.visited_waypoint_ids),
        }

    @classmethod
    def from_wire(cls, data: Mapping[str, Any]) -> "TelemetryEvent":
        return cls(
            sim_time=float(data["sim_time"]),
            pose=Position3.from_wire(data["pose"]),
            velocity=Position3.from_wire(data["velocity"]),
            battery=float(data["battery"]),
            state=MissionState(data["state"]),
            visited_waypoint_ids=tuple(data.get("visited_waypoint_ids", ())),
        )
