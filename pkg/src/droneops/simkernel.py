"""Deterministic fixed-timestep kinematics for one drone plus scripted targets.

Point-mass model: horizontal and vertical speeds are clamped independently,
velocity changes are instantaneous, and the battery drains linearly. Two runs
with the same seed and scenario make exactly the same floating-point moves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

from .core import (
    CommandRejected,
    MissionState,
    Position3,
    ValidationError,
)

AIRBORNE_EXCLUDED = frozenset({MissionState.INIT, MissionState.LANDED})
GROUNDED_STATES = frozenset({MissionState.INIT, MissionState.ARMED, MissionState.LANDED})


@dataclass(frozen=True)
class DroneModel:
    max_horizontal_speed: float = 1.5
    max_vertical_speed: float = 1.0
    takeoff_altitude: float = 1.5
    battery_capacity: float = 100.0
    hover_drain: float = 0.05
    move_drain: float = 0.1
    arrival_epsilon: float = 0.2

    def __post_init__(self) -> None:
        for name in (
            "max_horizontal_speed",
            "max_vertical_speed",
            "takeoff_altitude",
            "battery_capacity",
            "hover_drain",
            "move_drain",
            "arrival_epsilon",
        ):
            if getattr(self, name) <= 0:
                raise ValidationError(f"drone model {name} must be > 0")

    def to_wire(self) -> dict[str, float]:
        return {
            "max_horizontal_speed": self.max_horizontal_speed,
            "max_vertical_speed": self.max_vertical_speed,
            "takeoff_altitude": self.takeoff_altitude,
            "battery_capacity": self.battery_capacity,
            "hover_drain": self.hover_drain,
            "move_drain": self.move_drain,
            "arrival_epsilon": self.arrival_epsilon,
        }

    @classmethod
    def from_wire(cls, data: Mapping[str, Any]) -> "DroneModel":
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class TrackLeg:
    position: Position3
    speed: float

    def __post_init__(self) -> None:
        if self.speed <= 0:
            raise ValidationError(f"track leg speed must be > 0, got {self.speed}")


@dataclass(frozen=True)
class TargetTrack:
    """A scripted moving target: the car, VIP, or a static inspection object.

    The target spawns at the first leg's position; each later leg is a
    destination reached at that leg's speed. A single-leg track stands still.
    """

    id: str
    legs: tuple[TrackLeg, ...]
    loop: bool = False

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("target id must be non-empty")
        if not self.legs:
            raise ValidationError(f"target {self.id!r} needs at least one track leg")
        object.__setattr__(self, "legs", tuple(self.legs))


class TargetState:
    """Mutable progress of one target along its track."""

    def __init__(self, track: TargetTrack) -> None:
        self.track = track
        self.position = track.legs[0].position
        self._next_leg = 1

    def advance(self, dt: float) -> None:
        remaining = dt
        while remaining > 1e-12:
            if self._next_leg >= len(self.track.legs):
                if not self.track.loop or len(self.track.legs) < 2:
                    return
                self._next_leg = 0
            leg = self.track.legs[self._next_leg]
            gap = math.dist(
                (self.position.x, self.position.y, self.position.z),
                (leg.position.x, leg.position.y, leg.position.z),
            )
            step = leg.speed * remaining
            if step < gap - 1e-12:
                frac = step / gap
                self.position = Position3(
                    self.position.x + (leg.position.x - self.position.x) * frac,
                    self.position.y + (leg.position.y - self.position.y) * frac,
                    self.position.z + (leg.position.z - self.position.z) * frac,
                )
                return
            self.position = leg.position
            remaining -= gap / leg.speed if gap > 0 else 0.0
            self._next_leg += 1


class SimWorld:
    """The simulator state: one drone, its setpoints, and the target roster."""

    def __init__(
        self,
        model: DroneModel,
        dt: float = 0.05,
        seed: int = 0,
        targets: list[TargetTrack] | None = None,
        origin: Position3 = Position3(0.0, 0.0, 0.0),
    ) -> None:
        if dt <= 0:
            raise ValidationError(f"dt must be > 0, got {dt}")
        self.model = model
        self.dt = dt
        self.seed = seed
        self.tick_count = 0
        self.pose = origin
        self.velocity = Position3(0.0, 0.0, 0.0)
        self.battery = model.battery_capacity
        self.state = MissionState.INIT
        self.targets = {t.id: TargetState(t) for t in (targets or [])}
        # last nonzero horizontal motion direction; doubles as camera facing
        self.facing = 0.0
        self._position_setpoint: Position3 | None = None
        self._velocity_setpoint: Position3 | None = None
        self._arrival_pending = False

    @property
    def clock(self) -> float:
        return self.tick_count * self.dt

    def target_positions(self) -> dict[str, Position3]:
        return {tid: ts.position for tid, ts in self.targets.items()}

    @property
    def setpoint(self) -> Position3 | None:
        return self._position_setpoint

    # -- commands -----------------------------------------------------------

    def command_goto(self, target: Position3) -> None:
        if self.state in AIRBORNE_EXCLUDED:
            raise CommandRejected(f"goto rejected while {self.state.value}")
        if target.z < 0:
            raise ValidationError("goto target altitude must be >= 0")
        self._position_setpoint = target
        self._velocity_setpoint = None
        self._arrival_pending = True

    def command_velocity(self, v: Position3) -> None:
        if self.state in AIRBORNE_EXCLUDED:
            raise CommandRejected(f"velocity command rejected while {self.state.value}")
        self._velocity_setpoint = v
        self._position_setpoint = None
        self._arrival_pending = False

    def command_hold(self) -> None:
        self._velocity_setpoint = None
        self._position_setpoint = self.pose
        self._arrival_pending = False

    def takeoff(self, altitude: float | None = None) -> float:
        if self.state is not MissionState.ARMED:
            raise CommandRejected(f"takeoff rejected while {self.state.value}")
        alt = self.model.takeoff_altitude if altitude is None else altitude
        if alt <= 0:
            raise ValidationError(f"takeoff altitude must be > 0, got {alt}")
        self._position_setpoint = Position3(self.pose.x, self.pose.y, alt)
        self._velocity_setpoint = None
        self._arrival_pending = False
        return alt

    def land(self) -> None:
        if self.state in GROUNDED_STATES:
            raise CommandRejected(f"land rejected while {self.state.value}")
        self._position_setpoint = Position3(self.pose.x, self.pose.y, 0.0)
        self._velocity_setpoint = None
        self._arrival_pending = False

    # -- integration --------------------------------------------------------

    def step(self, dt: float) -> list[str]:
        """Advance one tick; returns event flags raised during the step."""
        if abs(dt - self.dt) > 1e-12:
            raise ValidationError(f"step dt {dt} does not match configured dt {self.dt}")
        events: list[str] = []

        moved = self._move_drone(dt)
        for target in self.targets.values():
            target.advance(dt)

        if self.state not in (MissionState.INIT, MissionState.LANDED):
            drain = self.model.move_drain if moved else self.model.hover_drain
            self.battery = max(0.0, self.battery - drain * dt)
            if self.battery <= 0.0 and self.state not in GROUNDED_STATES:
                events.append("battery_empty")

        if (
            self._arrival_pending
            and self._position_setpoint is not None
            and self._distance_to(self._position_setpoint) <= self.model.arrival_epsilon
        ):
            self._arrival_pending = False
            events.append("arrival")

        self.tick_count += 1
        return events

    def _move_drone(self, dt: float) -> bool:
        if self._velocity_setpoint is not None:
            vx, vy, vz = self._clamp_velocity(self._velocity_setpoint)
            nz = max(0.0, self.pose.z + vz * dt)
            dz = nz - self.pose.z
            new_pose = Position3(self.pose.x + vx * dt, self.pose.y + vy * dt, nz)
            disp = (vx * dt, vy * dt, dz)
        elif self._position_setpoint is not None:
            disp = self._step_toward(self._position_setpoint, dt)
            new_pose = Position3(
                self.pose.x + disp[0], self.pose.y + disp[1], self.pose.z + disp[2]
            )
        else:
            disp = (0.0, 0.0, 0.0)
            new_pose = self.pose

        self.velocity = Position3(disp[0] / dt, disp[1] / dt, disp[2] / dt)
        # only significant motion re-aims the camera; creeping near a setpoint
        # must not flip the facing direction
        horizontal = math.hypot(disp[0], disp[1])
        if horizontal > 0.01:
            self.facing = math.atan2(disp[1], disp[0])
        self.pose = new_pose
        return any(abs(d) > 1e-12 for d in disp)

    def _clamp_velocity(self, v: Position3) -> tuple[float, float, float]:
        hmag = math.hypot(v.x, v.y)
        scale = self.model.max_horizontal_speed / hmag if hmag > self.model.max_horizontal_speed else 1.0
        vz = max(-self.model.max_vertical_speed, min(self.model.max_vertical_speed, v.z))
        return v.x * scale, v.y * scale, vz

    def _step_toward(self, target: Position3, dt: float) -> tuple[float, float, float]:
        dx, dy = target.x - self.pose.x, target.y - self.pose.y
        gap = math.hypot(dx, dy)
        reach = self.model.max_horizontal_speed * dt
        if gap > reach:
            frac = reach / gap
            dx, dy = dx * frac, dy * frac
        dz = target.z - self.pose.z
        vstep = self.model.max_vertical_speed * dt
        dz = max(-vstep, min(vstep, dz))
        return dx, dy, dz

    def _distance_to(self, target: Position3) -> float:
        return math.dist((self.pose.x, self.pose.y, self.pose.z), (target.x, target.y, target.z))
