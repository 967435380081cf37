"""Sensor abstraction (push and pull delivery) and the stat-stream state machine.

The stat-stream is a software sensor: a finite state machine over the 13
mission states whose transitions are published like any other sensor sample.
The transition table lives here as plain data so tools and tests can inspect
it without instantiating anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping

from .core import (
    MissionState,
    NotFoundError,
    Position3,
    ValidationError,
    horizontal_distance,
)


class MissionEventKind(Enum):
    """The event alphabet driving the stat-stream state machine."""

    ARM = "arm"
    TAKEOFF_COMPLETE = "takeoff_complete"
    WAYPOINT_DISPATCHED = "waypoint_dispatched"
    ARRIVAL = "arrival"
    HOVER_ELAPSED = "hover_elapsed"
    PREEMPT = "preempt"
    PAUSE = "pause"
    RESUME = "resume"
    ABORT = "abort"
    LAND_COMMAND = "land_command"
    TOUCHDOWN = "touchdown"
    TRACK_ACQUIRED = "track_acquired"
    TRACK_LOST = "track_lost"


_S = MissionState
_E = MissionEventKind

# Allowed (state, event) -> state edges. waypoint_dispatched covers any motion
# directive handed to the motion controller, including the takeoff climb.
# Landed is absorbing: it has no outgoing edges.
TRANSITIONS: dict[MissionState, dict[MissionEventKind, MissionState]] = {
    _S.INIT: {_E.ARM: _S.ARMED},
    _S.ARMED: {_E.WAYPOINT_DISPATCHED: _S.TAKING_OFF},
    _S.TAKING_OFF: {
        _E.TAKEOFF_COMPLETE: _S.HOVER,
        _E.ABORT: _S.ABORTED,
        _E.LAND_COMMAND: _S.LANDING,
    },
    _S.HOVER: {
        _E.WAYPOINT_DISPATCHED: _S.EN_ROUTE,
        _E.TRACK_ACQUIRED: _S.TRACKING,
        _E.PAUSE: _S.PAUSED,
        _E.ABORT: _S.ABORTED,
        _E.LAND_COMMAND: _S.LANDING,
    },
    _S.EN_ROUTE: {
        _E.ARRIVAL: _S.WAYPOINT_HOVER,
        _E.PREEMPT: _S.PREEMPTED,
        _E.TRACK_ACQUIRED: _S.TRACKING,
        _E.PAUSE: _S.PAUSED,
        _E.ABORT: _S.ABORTED,
        _E.LAND_COMMAND: _S.LANDING,
    },
    _S.WAYPOINT_HOVER: {
        _E.HOVER_ELAPSED: _S.HOVER,
        _E.PREEMPT: _S.PREEMPTED,
        _E.PAUSE: _S.PAUSED,
        _E.ABORT: _S.ABORTED,
        _E.LAND_COMMAND: _S.LANDING,
    },
    _S.TRACKING: {
        _E.TRACK_LOST: _S.HOVER,
        _E.PAUSE: _S.PAUSED,
        _E.ABORT: _S.ABORTED,
        _E.LAND_COMMAND: _S.LANDING,
    },
    _S.PREEMPTED: {
        _E.WAYPOINT_DISPATCHED: _S.EN_ROUTE,
        _E.TRACK_ACQUIRED: _S.TRACKING,
        _E.ABORT: _S.ABORTED,
        _E.LAND_COMMAND: _S.LANDING,
    },
    _S.PAUSED: {
        _E.RESUME: _S.RESUMING,
        _E.ABORT: _S.ABORTED,
        _E.LAND_COMMAND: _S.LANDING,
    },
    _S.RESUMING: {
        _E.WAYPOINT_DISPATCHED: _S.EN_ROUTE,
        _E.ARRIVAL: _S.WAYPOINT_HOVER,
        _E.TRACK_ACQUIRED: _S.TRACKING,
        _E.HOVER_ELAPSED: _S.HOVER,
        _E.ABORT: _S.ABORTED,
        _E.LAND_COMMAND: _S.LANDING,
    },
    _S.ABORTED: {
        _E.TRACK_ACQUIRED: _S.TRACKING,
        _E.WAYPOINT_DISPATCHED: _S.EN_ROUTE,
        _E.LAND_COMMAND: _S.LANDING,
    },
    _S.LANDING: {_E.TOUCHDOWN: _S.LANDED},
    _S.LANDED: {},
}


def transition_table_wire() -> dict[str, dict[str, str]]:
    """The transition table as plain JSON-ready data."""
    return {
        state.value: {event.value: nxt.value for event, nxt in edges.items()}
        for state, edges in TRANSITIONS.items()
    }


class IllegalTransition(ValidationError):
    """An event was applied in a state that has no edge for it."""


def stat_stream_transition(current: MissionState, event: MissionEventKind) -> MissionState:
    """Return the next mission state, or raise IllegalTransition."""
    edges = TRANSITIONS[current]
    if event not in edges:
        raise IllegalTransition(f"no transition from {current.value} on {event.value}")
    return edges[event]


@dataclass(frozen=True)
class StatStreamEvent:
    sim_time: float
    from_state: MissionState
    to_state: MissionState
    reason: str = ""

    def to_wire(self) -> dict[str, Any]:
        return {
            "sim_time": self.sim_time,
            "from_state": self.from_state.value,
            "to_state": self.to_state.value,
            "reason": self.reason,
        }

    @classmethod
    def from_wire(cls, data: Mapping[str, Any]) -> "StatStreamEvent":
        return cls(
            sim_time=float(data["sim_time"]),
            from_state=MissionState(data["from_state"]),
            to_state=MissionState(data["to_state"]),
            reason=str(data.get("reason", "")),
        )


class StatStream:
    """Tracks the mission state machine and records every transition."""

    def __init__(self) -> None:
        self.state = MissionState.INIT
        self.events: list[StatStreamEvent] = []

    def apply(self, event: MissionEventKind, sim_time: float, reason: str = "") -> StatStreamEvent:
        nxt = stat_stream_transition(self.state, event)
        record = StatStreamEvent(sim_time, self.state, nxt, reason or event.value)
        self.state = nxt
        self.events.append(record)
        return record


class SensorKind(Enum):
    CAMERA = "camera"
    ODOMETRY = "odometry"
    STAT_STREAM = "stat_stream"


class StreamMode(Enum):
    PUSH = "push"
    PULL = "pull"


@dataclass(frozen=True)
class SensorDescriptor:
    id: str
    kind: SensorKind
    rate: float
    properties: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("sensor id must be non-empty")
        if self.rate <= 0:
            raise ValidationError(f"sensor rate must be > 0, got {self.rate}")
        object.__setattr__(self, "properties", dict(self.properties))

    def property_map(self) -> dict[str, str]:
        merged = {"id": self.id, "kind": self.kind.value, "rate": _format_rate(self.rate)}
        merged.update(self.properties)
        return merged


def _format_rate(rate: float) -> str:
    return str(int(rate)) if float(rate).is_integer() else str(rate)


@dataclass(frozen=True)
class Observation:
    """Ground-truth sighting of one target from the drone's camera."""

    target_id: str
    bearing: float
    range_m: float
    in_fov: bool

    def __post_init__(self) -> None:
        if self.range_m < 0:
            raise ValidationError(f"observation range must be >= 0, got {self.range_m}")

    def to_wire(self) -> dict[str, Any]:
        return {
            "target_id": self.target_id,
            "bearing": self.bearing,
            "range": self.range_m,
            "in_fov": self.in_fov,
        }


@dataclass(frozen=True)
class CameraFrame:
    sim_time: float
    frame_seq: int
    observations: tuple[Observation, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "observations", tuple(self.observations))

    def to_wire(self) -> dict[str, Any]:
        return {
            "sim_time": self.sim_time,
            "frame_seq": self.frame_seq,
            "observations": [o.to_wire() for o in self.observations],
        }


DEFAULT_FOV_HALF_ANGLE_DEG = 60.0
DEFAULT_FOV_RANGE_M = 20.0


def observe_targets(
    drone_pose: Position3,
    facing: float,
    targets: Mapping[str, Position3],
    fov_half_angle_deg: float = DEFAULT_FOV_HALF_ANGLE_DEG,
    fov_range_m: float = DEFAULT_FOV_RANGE_M,
) -> tuple[Observation, ...]:
    """Project world targets into camera observations.

    The camera looks along `facing` (radians, world azimuth of the drone's
    last horizontal motion). A target is inside the field of view when its
    ground range is within `fov_range_m` and its bearing lies within the
    half-angle cone around the facing direction.
    """
    half_angle = math.radians(fov_half_angle_deg)
    observations = []
    for target_id in sorted(targets):
        pos = targets[target_id]
        rng = horizontal_distance(drone_pose, pos)
        bearing = math.atan2(pos.y - drone_pose.y, pos.x - drone_pose.x) if rng > 1e-12 else facing
        delta = _angle_diff(bearing, facing)
        in_fov = rng <= fov_range_m and abs(delta) <= half_angle
        observations.append(Observation(target_id, bearing, rng, in_fov))
    return tuple(observations)


def _angle_diff(a: float, b: float) -> float:
    return math.atan2(math.sin(a - b), math.cos(a - b))


class PullStream:
    """On-demand access to the most recent sample of a sensor."""

    def __init__(self) -> None:
        self._latest: Any = None

    def latest(self) -> Any:
        return self._latest

    def _publish(self, sample: Any) -> None:
        self._latest = sample


class SensorHub:
    """Registry of sensors plus sample scheduling and fan-out.

    The owning simulation loop calls `due()` each tick and `publish()` for
    every produced sample; push subscribers run synchronously inside the
    tick, pull streams just remember the latest sample.
    """

    def __init__(self, descriptors: list[SensorDescriptor] | None = None) -> None:
        self._sensors: dict[str, SensorDescriptor] = {}
        self._push: dict[str, list[Callable[[Any], None]]] = {}
        self._pull: dict[str, list[PullStream]] = {}
        self._emitted: dict[str, int] = {}
        for d in descriptors or []:
            self.add_sensor(d)

    def add_sensor(self, descriptor: SensorDescriptor) -> None:
        if descriptor.id in self._sensors:
            raise ValidationError(f"duplicate sensor id {descriptor.id!r}")
        self._sensors[descriptor.id] = descriptor
        self._push[descriptor.id] = []
        self._pull[descriptor.id] = []
        self._emitted[descriptor.id] = 0

    def sensors(self) -> list[SensorDescriptor]:
        return list(self._sensors.values())

    def descriptor(self, sensor_id: str) -> SensorDescriptor:
        try:
            return self._sensors[sensor_id]
        except KeyError:
            raise NotFoundError(f"unknown sensor {sensor_id!r}") from None

    def get_sensor_property(self, sensor_id: str, key: str) -> str:
        props = self.descriptor(sensor_id).property_map()
        if key not in props:
            raise NotFoundError(f"sensor {sensor_id!r} has no property {key!r}")
        return props[key]

    def get_data_stream(
        self, sensor_id: str, mode: StreamMode, consumer: Callable[[Any], None] | None = None
    ) -> PullStream | None:
        self.descriptor(sensor_id)
        if mode is StreamMode.PUSH:
            if consumer is None:
                raise ValidationError("push mode requires a consumer callback")
            self._push[sensor_id].append(consumer)
            return None
        stream = PullStream()
        self._pull[sensor_id].append(stream)
        return stream

    def due(self, sensor_id: str, clock: float) -> int:
        """How many samples the sensor owes by `clock` (normally 0 or 1)."""
        descriptor = self.descriptor(sensor_id)
        expected = math.floor(clock * descriptor.rate + 1e-9)
        return max(0, expected - self._emitted[sensor_id])

    def publish(self, sensor_id: str, sample: Any, periodic: bool = True) -> None:
        self.descriptor(sensor_id)
        if periodic:
            self._emitted[sensor_id] += 1
        for stream in self._pull[sensor_id]:
            stream._publish(sample)
        for consumer in self._push[sensor_id]:
            consumer(sample)

    def emitted(self, sensor_id: str) -> int:
        self.descriptor(sensor_id)
        return self._emitted[sensor_id]
