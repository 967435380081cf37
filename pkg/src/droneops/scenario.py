"""Scenario file schema: parsing, validation, and defaults.

A scenario is one JSON document (versioned `"schema": 1`) describing the
drone model, world targets, sensors, compute resources, analytics tasks,
mission pattern, waypoint batches, and runtime knobs. Validation errors name
the offending field path so a broken file is quick to fix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .analytics import (
    CLOUD_INFERENCE_LATENCY,
    CLOUD_ROUND_TRIP,
    EDGE_INFERENCE_LATENCY,
    AnalyticsTask,
    ComputeResource,
    FollowGains,
    PLACEMENT_POLICIES,
    ResourceTier,
    TaskKind,
    TriggerAction,
    TriggerBinding,
)
from .core import (
    Frame,
    NavigationBatch,
    NavType,
    Position3,
    Scheduling,
    ValidationError,
    Waypoint,
)
from .navigation import MissionPattern, scheduler_names
from .sensing import SensorDescriptor, SensorKind
from .simkernel import DroneModel, TargetTrack, TrackLeg

SCHEMA_VERSION = 1
PACING_MODES = ("max", "realtime")


class ScenarioError(ValidationError):
    """A scenario document failed validation; `path` names the bad field."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class TimedBatch:
    at: float
    batch: NavigationBatch


@dataclass
class Scenario:
    name: str
    pattern: MissionPattern
    seed: int = 0
    dt: float = 0.05
    duration_limit: float = 600.0
    pacing: str = "max"
    scheduler: str = "ordered"
    placement_policy: str = "least_latency"
    return_home: bool = False
    linger: float = 0.0
    drone: DroneModel = field(default_factory=DroneModel)
    origin: Position3 = Position3(0.0, 0.0, 0.0)
    targets: list[TargetTrack] = field(default_factory=list)
    sensors: list[SensorDescriptor] = field(default_factory=list)
    compute: list[ComputeResource] = field(default_factory=list)
    tasks: list[AnalyticsTask] = field(default_factory=list)
    follow_gains: dict[str, FollowGains] = field(default_factory=dict)
    batches: list[NavigationBatch] = field(default_factory=list)
    injections: list[TimedBatch] = field(default_factory=list)

    def to_wire(self) -> dict[str, Any]:
        wire: dict[str, Any] = {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "pattern": self.pattern.value,
            "seed": self.seed,
            "dt": self.dt,
            "duration_limit": self.duration_limit,
            "pacing": self.pacing,
            "scheduler": self.scheduler,
            "drone": self.drone.to_wire(),
        }
        if self.return_home:
            wire["return_home"] = True
        return wire


def _expect(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ScenarioError(path, message)


def _get(data: Mapping[str, Any], key: str, path: str, kind: type, default: Any = ...) -> Any:
    if key not in data:
        if default is ...:
            raise ScenarioError(f"{path}.{key}" if path else key, "required field is missing")
        return default
    value = data[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not Any and not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ScenarioError(
            f"{path}.{key}" if path else key, f"expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _parse_position(data: Any, path: str) -> Position3:
    _expect(isinstance(data, Mapping), path, "expected an object with x, y, z")
    try:
        return Position3(
            _get(data, "x", path, float), _get(data, "y", path, float), _get(data, "z", path, float)
        )
    except ValidationError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(path, str(exc)) from None


def _parse_enum(value: Any, enum_cls: Any, path: str) -> Any:
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ScenarioError(path, f"invalid value {value!r}; expected one of: {allowed}") from None


def _parse_waypoint(data: Any, path: str) -> Waypoint:
    _expect(isinstance(data, Mapping), path, "expected a waypoint object")
    try:
        return Waypoint(
            id=_get(data, "id", path, str),
            target=_parse_position(_get(data, "target", path, Any), f"{path}.target"),
            hover_duration=_get(data, "hover_duration", path, float, 0.0),
            frame=_parse_enum(_get(data, "frame", path, str, "relative"), Frame, f"{path}.frame"),
            deadline=_get(data, "deadline", path, float, None),
        )
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ScenarioError(path, str(exc)) from None


def _parse_batch(data: Any, path: str) -> NavigationBatch:
    _expect(isinstance(data, Mapping), path, "expected a batch object")
    waypoints = _get(data, "waypoints", path, list)
    try:
        return NavigationBatch(
            nav_type=_parse_enum(
                _get(data, "nav_type", path, str, "distance_driven"), NavType, f"{path}.nav_type"
            ),
            waypoints=tuple(
                _parse_waypoint(w, f"{path}.waypoints[{i}]") for i, w in enumerate(waypoints)
            ),
            scheduling=_parse_enum(
                _get(data, "scheduling", path, str, "ordered"), Scheduling, f"{path}.scheduling"
            ),
            priority=_get(data, "priority", path, int, 2),
        )
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ScenarioError(path, str(exc)) from None


def _parse_binding(data: Any, path: str) -> TriggerBinding:
    _expect(isinstance(data, Mapping), path, "expected a trigger binding object")
    action = _parse_enum(_get(data, "action", path, str), TriggerAction, f"{path}.action")
    batch = None
    if "batch" in data:
        batch = _parse_batch(data["batch"], f"{path}.batch")
    try:
        return TriggerBinding(
            action=action,
            target=_get(data, "target", path, str, ""),
            min_confidence=_get(data, "min_confidence", path, float, 0.0),
            once=_get(data, "once", path, bool, True),
            batch=batch,
            task_id=_get(data, "task_id", path, str, None),
        )
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ScenarioError(path, str(exc)) from None


def _parse_task(data: Any, path: str) -> tuple[AnalyticsTask, FollowGains | None]:
    _expect(isinstance(data, Mapping), path, "expected an analytics task object")
    kind = _parse_enum(_get(data, "kind", path, str), TaskKind, f"{path}.kind")
    bindings = tuple(
        _parse_binding(b, f"{path}.trigger_bindings[{i}]")
        for i, b in enumerate(_get(data, "trigger_bindings", path, list, []))
    )
    gains = None
    if kind is TaskKind.FOLLOW_CONTROLLER:
        raw = _get(data, "gains", path, dict, {})
        try:
            gains = FollowGains(
                kp=_get(raw, "kp", f"{path}.gains", float, FollowGains.kp),
                ki=_get(raw, "ki", f"{path}.gains", float, FollowGains.ki),
                kd=_get(raw, "kd", f"{path}.gains", float, FollowGains.kd),
                setpoint_distance=_get(
                    raw, "setpoint_distance", f"{path}.gains", float, FollowGains.setpoint_distance
                ),
                integral_limit=_get(
                    raw, "integral_limit", f"{path}.gains", float, FollowGains.integral_limit
                ),
                loss_timeout=_get(raw, "loss_timeout", f"{path}.gains", float, FollowGains.loss_timeout),
            )
        except ScenarioError:
            raise
        except ValidationError as exc:
            raise ScenarioError(f"{path}.gains", str(exc)) from None
    try:
        task = AnalyticsTask(
            id=_get(data, "id", path, str),
            kind=kind,
            sensor_id=_get(data, "sensor", path, str, None),
            per_inference_cost=_get(data, "per_inference_cost", path, float, 0.0),
            deadline=_get(data, "deadline", path, float, None),
            stride=_get(data, "stride", path, int, 1),
            matches=tuple(_get(data, "matches", path, list, [])),
            miss_rate=_get(data, "miss_rate", path, float, 0.0),
            bearing_noise=_get(data, "bearing_noise", path, float, 0.0),
            trigger_bindings=bindings,
            fields=tuple(_get(data, "fields", path, list, [])),
            enabled=_get(data, "enabled", path, bool, True),
            source_task=_get(data, "source", path, str, None),
        )
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ScenarioError(path, str(exc)) from None
    return task, gains


def build_scenario(data: Mapping[str, Any]) -> Scenario:
    """Validate a parsed scenario document and build the runtime objects."""
    _expect(isinstance(data, Mapping), "", "scenario must be a JSON object")
    schema = _get(data, "schema", "", int)
    _expect(schema == SCHEMA_VERSION, "schema", f"unsupported schema version {schema}")

    name = _get(data, "name", "", str)
    pattern = _parse_enum(_get(data, "pattern", "", str), MissionPattern, "pattern")
    pacing = _get(data, "pacing", "", str, "max")
    _expect(pacing in PACING_MODES, "pacing", f"expected one of: {', '.join(PACING_MODES)}")
    scheduler = _get(data, "scheduler", "", str, "ordered")
    _expect(
        scheduler in scheduler_names(),
        "scheduler",
        f"unknown scheduler; registered: {', '.join(scheduler_names())}",
    )
    placement = _get(data, "placement_policy", "", str, "least_latency")
    _expect(
        placement in PLACEMENT_POLICIES,
        "placement_policy",
        f"expected one of: {', '.join(PLACEMENT_POLICIES)}",
    )
    dt = _get(data, "dt", "", float, 0.05)
    _expect(dt > 0, "dt", "must be > 0")
    duration = _get(data, "duration_limit", "", float, 600.0)
    _expect(duration > 0, "duration_limit", "must be > 0")
    linger = _get(data, "linger", "", float, 0.0)
    _expect(linger >= 0, "linger", "must be >= 0")

    try:
        drone = DroneModel(
            **{k: float(v) for k, v in _get(data, "drone", "", dict, {}).items()}
        )
    except TypeError as exc:
        raise ScenarioError("drone", str(exc)) from None
    except ValidationError as exc:
        raise ScenarioError("drone", str(exc)) from None

    origin = (
        _parse_position(data["origin"], "origin") if "origin" in data else Position3(0.0, 0.0, 0.0)
    )
    _expect(origin.z >= 0, "origin.z", "must be >= 0")

    targets = []
    for i, raw in enumerate(_get(data, "targets", "", list, [])):
        path = f"targets[{i}]"
        _expect(isinstance(raw, Mapping), path, "expected a target object")
        legs_raw = _get(raw, "path", path, list)
        _expect(bool(legs_raw), f"{path}.path", "must have at least one leg")
        legs = []
        for j, leg in enumerate(legs_raw):
            leg_path = f"{path}.path[{j}]"
            _expect(isinstance(leg, Mapping), leg_path, "expected a path leg object")
            try:
                legs.append(
                    TrackLeg(
                        position=_parse_position(_get(leg, "position", leg_path, Any), f"{leg_path}.position"),
                        speed=_get(leg, "speed", leg_path, float),
                    )
                )
            except ScenarioError:
                raise
            except ValidationError as exc:
                raise ScenarioError(leg_path, str(exc)) from None
        try:
            targets.append(
                TargetTrack(
                    id=_get(raw, "id", path, str),
                    legs=tuple(legs),
                    loop=_get(raw, "loop", path, bool, False),
                )
            )
        except ScenarioError:
            raise
        except ValidationError as exc:
            raise ScenarioError(path, str(exc)) from None
    _expect(
        len({t.id for t in targets}) == len(targets), "targets", "target ids must be unique"
    )

    sensors = []
    for i, raw in enumerate(_get(data, "sensors", "", list, [])):
        path = f"sensors[{i}]"
        _expect(isinstance(raw, Mapping), path, "expected a sensor object")
        props = _get(raw, "properties", path, dict, {})
        try:
            sensors.append(
                SensorDescriptor(
                    id=_get(raw, "id", path, str),
                    kind=_parse_enum(_get(raw, "kind", path, str), SensorKind, f"{path}.kind"),
                    rate=_get(raw, "rate", path, float),
                    properties={str(k): str(v) for k, v in props.items()},
                )
            )
        except ScenarioError:
            raise
        except ValidationError as exc:
            raise ScenarioError(path, str(exc)) from None
    _expect(
        len({s.id for s in sensors}) == len(sensors), "sensors", "sensor ids must be unique"
    )
    sensor_kinds = {s.id: s.kind for s in sensors}

    compute = []
    for i, raw in enumerate(_get(data, "compute", "", list, [])):
        path = f"compute[{i}]"
        _expect(isinstance(raw, Mapping), path, "expected a compute resource object")
        tier = _parse_enum(_get(raw, "tier", path, str), ResourceTier, f"{path}.tier")
        default_latency = EDGE_INFERENCE_LATENCY if tier is ResourceTier.EDGE else CLOUD_INFERENCE_LATENCY
        default_network = 0.0 if tier is ResourceTier.EDGE else CLOUD_ROUND_TRIP
        try:
            compute.append(
                ComputeResource(
                    id=_get(raw, "id", path, str),
                    tier=tier,
                    inference_latency=_get(raw, "inference_latency", path, float, default_latency),
                    round_trip_network=_get(raw, "round_trip_network", path, float, default_network),
                    capacity=_get(raw, "capacity", path, int, 4),
                )
            )
        except ScenarioError:
            raise
        except ValidationError as exc:
            raise ScenarioError(path, str(exc)) from None
    _expect(
        len({c.id for c in compute}) == len(compute), "compute", "compute ids must be unique"
    )

    tasks: list[AnalyticsTask] = []
    follow_gains: dict[str, FollowGains] = {}
    for i, raw in enumerate(_get(data, "analytics", "", list, [])):
        path = f"analytics[{i}]"
        task, gains = _parse_task(raw, path)
        tasks.append(task)
        if gains is not None:
            follow_gains[task.id] = gains
    task_ids = [t.id for t in tasks]
    _expect(len(set(task_ids)) == len(task_ids), "analytics", "task ids must be unique")
    task_by_id = {t.id: t for t in tasks}

    for i, task in enumerate(tasks):
        path = f"analytics[{i}]"
        if task.kind in (TaskKind.DETECTOR,):
            _expect(task.sensor_id is not None, f"{path}.sensor", "detector tasks need a sensor")
            _expect(
                sensor_kinds.get(task.sensor_id) is SensorKind.CAMERA,
                f"{path}.sensor",
                f"detector input {task.sensor_id!r} must be a camera sensor",
            )
            _expect(bool(compute), "compute", f"detector {task.id!r} needs a compute resource")
        if task.kind is TaskKind.FOLLOW_CONTROLLER:
            _expect(
                task.source_task is not None and task.source_task in task_by_id,
                f"{path}.source",
                "follow controllers need an existing detector task as source",
            )
            _expect(
                task_by_id[task.source_task].kind is TaskKind.DETECTOR,
                f"{path}.source",
                f"source {task.source_task!r} must be a detector task",
            )
        if task.kind is TaskKind.MONITOR:
            _expect(bool(task.fields), f"{path}.fields", "monitor tasks need at least one field")
            from .analytics import MONITOR_FIELDS

            unknown = [f for f in task.fields if f not in MONITOR_FIELDS]
            _expect(
                not unknown,
                f"{path}.fields",
                f"unknown fields {unknown}; allowed: {', '.join(MONITOR_FIELDS)}",
            )
        for j, binding in enumerate(task.trigger_bindings):
            bpath = f"{path}.trigger_bindings[{j}]"
            if binding.action in (TriggerAction.FOLLOW, TriggerAction.LAUNCH_TASK):
                _expect(
                    binding.task_id in task_by_id,
                    f"{bpath}.task_id",
                    f"references unknown task {binding.task_id!r}",
                )
                if binding.action is TriggerAction.FOLLOW:
                    _expect(
                        task_by_id[binding.task_id].kind is TaskKind.FOLLOW_CONTROLLER,
                        f"{bpath}.task_id",
                        "follow action must reference a follow_controller task",
                    )

    batches = [
        _parse_batch(raw, f"batches[{i}]") for i, raw in enumerate(_get(data, "batches", "", list, []))
    ]
    injections = []
    for i, raw in enumerate(_get(data, "injections", "", list, [])):
        path = f"injections[{i}]"
        _expect(isinstance(raw, Mapping), path, "expected an injection object")
        at = _get(raw, "at", path, float)
        _expect(at >= 0, f"{path}.at", "must be >= 0")
        injections.append(TimedBatch(at=at, batch=_parse_batch(_get(raw, "batch", path, Any), f"{path}.batch")))
    injections.sort(key=lambda t: t.at)

    initial_ids = [wp.id for b in batches for wp in b.waypoints]
    _expect(
        len(set(initial_ids)) == len(initial_ids),
        "batches",
        "waypoint ids must be unique across initial batches",
    )

    # pattern constraints
    if pattern is MissionPattern.STATIC_PREDEFINED:
        _expect(not injections, "injections", "static_predefined missions forbid injections")
        for i, task in enumerate(tasks):
            for j, binding in enumerate(task.trigger_bindings):
                _expect(
                    binding.action is not TriggerAction.SUBMIT_BATCH,
                    f"analytics[{i}].trigger_bindings[{j}]",
                    "static_predefined missions forbid batch-submitting triggers",
                )
    if pattern is MissionPattern.SENSOR_DRIVEN:
        _expect(not batches, "batches", "sensor_driven missions start with an empty queue")
        _expect(not injections, "injections", "sensor_driven missions forbid injections")

    return Scenario(
        name=name,
        pattern=pattern,
        seed=_get(data, "seed", "", int, 0),
        dt=dt,
        duration_limit=duration,
        pacing=pacing,
        scheduler=scheduler,
        placement_policy=placement,
        return_home=_get(data, "return_home", "", bool, False),
        linger=linger,
        drone=drone,
        origin=origin,
        targets=targets,
        sensors=sensors,
        compute=compute,
        tasks=tasks,
        follow_gains=follow_gains,
        batches=batches,
        injections=injections,
    )


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(str(path), f"cannot read scenario file: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(str(path), f"invalid JSON: {exc}") from None
    return build_scenario(data)
