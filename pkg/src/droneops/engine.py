"""The mission engine: one deterministic tick loop per mission.

Each tick applies inbound control commands, samples sensors, delivers matured
analytics, advances the mission state machine, and integrates the physics.
External producers only ever talk to the serialized command inbox, so two
runs of the same scenario and seed replay the exact same event stream.
"""

from __future__ import annotations

import math
import queue as queuemod
import random
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from .analytics import (
    Detection,
    DetectorRuntime,
    FollowController,
    FollowGains,
    MonitorRuntime,
    TaskKind,
    TriggerAction,
    TriggerBinding,
    generate_navigation_from_analytics,
    schedule_placement,
)
from .core import (
    Frame,
    MissionState,
    NavigationBatch,
    Position3,
    TelemetryEvent,
    ValidationError,
    Waypoint,
    euclidean_distance,
    horizontal_distance,
    resolve_waypoint,
)
from .navigation import (
    DuplicateWaypointError,
    MissionPattern,
    QueueEntry,
    WaypointQueue,
    generate_navigation,
    get_scheduler,
)
from .scenario import Scenario
from .sensing import (
    TRANSITIONS,
    CameraFrame,
    MissionEventKind,
    SensorHub,
    SensorKind,
    StatStream,
    observe_targets,
)

LANDING_MARGIN_S = 120.0


class MissionStatus(Enum):
    CREATED = "created"
    RUNNING = "running"
    COMPLETED = "completed"
    FAULTED = "faulted"
    ABORTED = "aborted"


@dataclass(frozen=True)
class OverheadSample:
    """Wall-clock cost of one camera frame's trip through the framework."""

    frame_seq: int
    total_pipeline_ms: float
    inference_ms: float

    @property
    def overhead_ms(self) -> float:
        return max(0.0, self.total_pipeline_ms - self.inference_ms)


@dataclass
class _PendingCommand:
    kind: str
    batch: NavigationBatch | None
    done: threading.Event = field(default_factory=threading.Event)
    accepted: bool = False
    reason: str = ""
    applied_at: float = 0.0


@dataclass
class _PausedContext:
    leg: QueueEntry | None = None
    hover_remaining: float | None = None
    tracking: bool = False


class MissionEngine:
    """Runs one scenario to completion on a fixed-timestep loop."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.status = MissionStatus.CREATED
        self.fault: str | None = None

        from .simkernel import SimWorld

        self.world = SimWorld(
            model=scenario.drone,
            dt=scenario.dt,
            seed=scenario.seed,
            targets=scenario.targets,
            origin=scenario.origin,
        )
        self.hub = SensorHub(scenario.sensors)
        self.fsm = StatStream()
        self.queue = WaypointQueue()
        self.scheduler = get_scheduler(scenario.scheduler)

        self.events: list[dict[str, Any]] = []
        self.on_event: Callable[[dict[str, Any]], None] | None = None
        self.visited: list[str] = []
        self.visit_positions: list[Position3] = []
        self.overhead_samples: list[OverheadSample] = []
        self.preempt_count = 0
        self.abort_count = 0
        self.total_path_length = 0.0

        self._inbox: "queuemod.Queue[_PendingCommand]" = queuemod.Queue()
        self._current: QueueEntry | None = None
        self._hover_until: float | None = None
        self._takeoff_target: float | None = None
        self._paused_ctx: _PausedContext | None = None
        self._operator_abort = False
        self._returning = False
        self._returned = False
        self._idle_since: float | None = None
        self._queue_view: list[dict[str, Any]] = []

        self._emissions = list(scenario.injections)
        self._fired: dict[str, set[int]] = {t.id: set() for t in scenario.tasks}

        placeable = [t for t in scenario.tasks if t.kind is TaskKind.DETECTOR]
        self._placement = (
            schedule_placement(placeable, scenario.compute, scenario.placement_policy)
            if placeable
            else {}
        )
        resources = {r.id: r for r in scenario.compute}
        self.detectors: dict[str, DetectorRuntime] = {}
        self.followers: dict[str, FollowController] = {}
        self.monitors: dict[str, MonitorRuntime] = {}
        self._follow_enabled: dict[str, bool] = {}
        for task in scenario.tasks:
            if task.kind is TaskKind.DETECTOR:
                # string seeding is stable across processes, unlike hash()
                rng = random.Random(f"{scenario.seed}:{task.id}")
                self.detectors[task.id] = DetectorRuntime(
                    task, resources[self._placement[task.id]], rng
                )
            elif task.kind is TaskKind.FOLLOW_CONTROLLER:
                gains = scenario.follow_gains.get(task.id, FollowGains())
                self.followers[task.id] = FollowController(
                    gains, scenario.drone.max_horizontal_speed
                )
                self._follow_enabled[task.id] = task.enabled
            elif task.kind is TaskKind.MONITOR:
                rate = 1.0
                if task.sensor_id is not None:
                    rate = self.hub.descriptor(task.sensor_id).rate
                self.monitors[task.id] = MonitorRuntime(task, rate=rate)
        self._tasks = {t.id: t for t in scenario.tasks}
        self._follow_active: str | None = None
        self._follow_request: str | None = None

    # -- public surface (thread-safe) ---------------------------------------

    @property
    def state(self) -> MissionState:
        return self.fsm.state

    def queue_snapshot(self) -> list[dict[str, Any]]:
        return self._queue_view

    def submit(self, kind: str, batch: NavigationBatch | None = None, timeout: float = 10.0) -> _PendingCommand:
        """Enqueue a control command; blocks until the engine applies it at a
        tick boundary (or the mission ends first)."""
        cmd = _PendingCommand(kind=kind, batch=batch)
        if self.status not in (MissionStatus.CREATED, MissionStatus.RUNNING):
            cmd.reason = f"mission is {self.status.value}"
            cmd.done.set()
            return cmd
        self._inbox.put(cmd)
        deadline = time.monotonic() + timeout
        while not cmd.done.is_set() and time.monotonic() < deadline:
            cmd.done.wait(0.05)
            if self.status not in (MissionStatus.CREATED, MissionStatus.RUNNING):
                # the loop exited while this command was in flight
                self._drain_inbox_terminal()
        if not cmd.done.is_set():
            cmd.reason = "command was not applied in time"
        return cmd

    # -- event emission -------------------------------------------------------

    def _emit(self, event: dict[str, Any]) -> None:
        self.events.append(event)
        if self.on_event is not None:
            self.on_event(event)

    def _emit_queue(self, action: str, now: float, **extra: Any) -> None:
        self._queue_view = self.queue.snapshot()
        self._emit({"type": "queue", "sim_time": now, "action": action, **extra})

    def _emit_warning(self, now: float, kind: str, detail: str) -> None:
        self._emit({"type": "warning", "sim_time": now, "kind": kind, "detail": detail})

    def _transition(self, event: MissionEventKind, now: float, reason: str = "") -> None:
        record = self.fsm.apply(event, now, reason)
        self.world.state = self.fsm.state
        self._emit({"type": "transition", **record.to_wire()})
        # stat-stream sensors carry the transition feed itself
        for descriptor in self.hub.sensors():
            if descriptor.kind is SensorKind.STAT_STREAM:
                self.hub.publish(descriptor.id, record, periodic=False)

    def _emit_telemetry(self, now: float) -> None:
        sample = TelemetryEvent(
            sim_time=now,
            pose=self.world.pose,
            velocity=self.world.velocity,
            battery=self.world.battery,
            state=self.fsm.state,
            visited_waypoint_ids=tuple(self.visited),
        )
        self._emit({"type": "telemetry", **sample.to_wire()})

    # -- mission loop ---------------------------------------------------------

    def run(self, pacing: str | None = None) -> "MissionResult":
        pacing = pacing or self.scenario.pacing
        self.status = MissionStatus.RUNNING
        max_ticks = int(
            math.ceil((self.scenario.duration_limit + LANDING_MARGIN_S) / self.scenario.dt)
        )
        try:
            self._start()
            while self.fsm.state is not MissionState.LANDED and self.world.tick_count < max_ticks:
                self._tick()
                if pacing == "realtime":
                    time.sleep(self.scenario.dt)
            if self.fsm.state is not MissionState.LANDED:
                raise ValidationError("mission did not reach landed before the safety cap")
            self.status = MissionStatus.ABORTED if self._operator_abort else MissionStatus.COMPLETED
        except Exception as exc:  # a faulted mission still yields a result
            self.fault = str(exc)
            self.status = MissionStatus.FAULTED
            self._emit_warning(self.world.clock, "fault", self.fault)
        finally:
            self._drain_inbox_terminal()
        return self.result()

    def _start(self) -> None:
        self._transition(MissionEventKind.ARM, 0.0, "mission_start")
        for batch in self.scenario.batches:
            ok, reason = self._add_batch(batch, 0.0, source="initial")
            if not ok:
                raise ValidationError(f"initial batch rejected: {reason}")
        alt = self.world.takeoff()
        self._takeoff_target = alt
        self._transition(MissionEventKind.WAYPOINT_DISPATCHED, 0.0, "takeoff")
        self._emit_telemetry(0.0)

    def _tick(self) -> None:
        now = self.world.clock
        self._apply_inbox(now)
        self._apply_emissions(now)
        frames = self._sample_sensors(now)
        t0 = time.perf_counter() if frames else None
        inference_wall = 0.0
        if frames:
            inference_wall = self._run_detectors(frames)
        self._deliver_detections(now)
        self._poll_follow(now)
        if t0 is not None:
            total_ms = (time.perf_counter() - t0) * 1000.0
            for frame in frames:
                self.overhead_samples.append(
                    OverheadSample(frame.frame_seq, total_ms, inference_wall * 1000.0)
                )
        self._mission_logic(now)
        before = self.world.pose
        sim_events = self.world.step(self.scenario.dt)
        self.total_path_length += euclidean_distance(before, self.world.pose)
        now2 = self.world.clock
        self._post_step(sim_events, now2)
        self._emit_telemetry(now2)
        if now2 + 1e-9 >= self.scenario.duration_limit and self.fsm.state not in (
            MissionState.LANDING,
            MissionState.LANDED,
        ):
            self._land_now(now2, "duration_limit")

    # -- tick phases ----------------------------------------------------------

    def _apply_inbox(self, now: float) -> None:
        while True:
            try:
                cmd = self._inbox.get_nowait()
            except queuemod.Empty:
                return
            self._apply_command(cmd, now)
            cmd.done.set()

    def _apply_command(self, cmd: _PendingCommand, now: float) -> None:
        state = self.fsm.state
        if cmd.kind == "inject_batch":
            if self.scenario.pattern in (
                MissionPattern.STATIC_PREDEFINED,
                MissionPattern.SENSOR_DRIVEN,
            ):
                cmd.reason = f"pattern {self.scenario.pattern.value} rejects waypoint injection"
                self._emit_queue("reject", now, reason=cmd.reason, source="operator")
                return
            if cmd.batch is None:
                cmd.reason = "inject_batch requires a batch payload"
                return
            ok, reason = self._add_batch(cmd.batch, now, source="operator")
            cmd.accepted, cmd.reason, cmd.applied_at = ok, reason, now
        elif cmd.kind == "pause":
            if state is MissionState.PAUSED:
                cmd.reason = "already paused"
                return
            if MissionEventKind.PAUSE not in TRANSITIONS[state]:
                cmd.reason = f"cannot pause while {state.value}"
                return
            self._pause(now)
            cmd.accepted, cmd.applied_at = True, now
        elif cmd.kind == "resume":
            if state is not MissionState.PAUSED:
                cmd.reason = f"cannot resume while {state.value}"
                return
            self._transition(MissionEventKind.RESUME, now, "operator_resume")
            cmd.accepted, cmd.applied_at = True, now
        elif cmd.kind == "abort":
            if state in (MissionState.LANDING, MissionState.LANDED):
                cmd.reason = f"cannot abort while {state.value}"
                return
            self._operator_abort = True
            self._abort(now, "operator_abort")
            cmd.accepted, cmd.applied_at = True, now
        else:
            cmd.reason = f"unknown command kind {cmd.kind!r}"

    def _drain_inbox_terminal(self) -> None:
        while True:
            try:
                cmd = self._inbox.get_nowait()
            except queuemod.Empty:
                return
            cmd.reason = f"mission is {self.status.value}"
            cmd.done.set()

    def _apply_emissions(self, now: float) -> None:
        while self._emissions and self._emissions[0].at <= now + 1e-9:
            timed = self._emissions.pop(0)
            ok, reason = self._add_batch(timed.batch, now, source="remote")
            if not ok:
                self._emit_warning(now, "emission_rejected", reason)

    def _sample_sensors(self, now: float) -> list[CameraFrame]:
        frames: list[CameraFrame] = []
        for descriptor in self.hub.sensors():
            if descriptor.kind is SensorKind.STAT_STREAM:
                continue  # delivered on transitions, not the sample clock
            due = self.hub.due(descriptor.id, now)
            for _ in range(due):
                if descriptor.kind is SensorKind.CAMERA:
                    frame = self._build_frame(descriptor.id, now)
                    frames.append(frame)
                    self.hub.publish(descriptor.id, frame)
                else:
                    sample = TelemetryEvent(
                        sim_time=now,
                        pose=self.world.pose,
                        velocity=self.world.velocity,
                        battery=self.world.battery,
                        state=self.fsm.state,
                        visited_waypoint_ids=tuple(self.visited),
                    )
                    self.hub.publish(descriptor.id, sample)
                    self._feed_monitors(descriptor.id, sample)
        return frames

    def _build_frame(self, sensor_id: str, now: float) -> CameraFrame:
        descriptor = self.hub.descriptor(sensor_id)
        props = descriptor.property_map()
        half_angle = float(props.get("fov_half_angle_deg", 60.0))
        fov_range = float(props.get("fov_range_m", 20.0))
        observations = observe_targets(
            self.world.pose,
            self.world.facing,
            self.world.target_positions(),
            fov_half_angle_deg=half_angle,
            fov_range_m=fov_range,
        )
        return CameraFrame(now, self.hub.emitted(sensor_id), observations)

    def _feed_monitors(self, sensor_id: str, sample: TelemetryEvent) -> None:
        camera_frames = 0
        for descriptor in self.hub.sensors():
            if descriptor.kind is SensorKind.CAMERA:
                camera_frames += self.hub.emitted(descriptor.id)
        for monitor in self.monitors.values():
            if monitor.task.sensor_id in (None, sensor_id):
                flag = monitor.observe(sample, camera_frames)
                if flag is not None:
                    self._emit_warning(sample.sim_time, flag["kind"], flag["detail"])

    def _run_detectors(self, frames: list[CameraFrame]) -> float:
        wall = 0.0
        for frame in frames:
            for runtime in self.detectors.values():
                task = runtime.task
                if task.sensor_id is None:
                    continue
                start = time.perf_counter()
                runtime.on_frame(frame)
                wall += time.perf_counter() - start
        return wall

    def _deliver_detections(self, now: float) -> None:
        for task_id, runtime in self.detectors.items():
            detections = runtime.collect(now)
            if not detections:
                continue
            self._feed_followers(task_id, detections)
            task = runtime.task
            if task.trigger_bindings:
                for binding in generate_navigation_from_analytics(
                    task, detections, self._fired[task_id]
                ):
                    self._apply_trigger(binding, now)

    def _feed_followers(self, source_task: str, detections: list[Detection]) -> None:
        for follow_id, controller in self.followers.items():
            task = self._tasks[follow_id]
            if task.source_task != source_task:
                continue
            for det in detections:
                if task.matches and not any(det.target_id.startswith(m) for m in task.matches):
                    continue
                controller.on_detection(det)
            if (
                self._follow_enabled.get(follow_id)
                and controller.engaged
                and self._follow_active is None
                and self._follow_request is None
            ):
                self._follow_request = follow_id

    def _apply_trigger(self, binding: TriggerBinding, now: float) -> None:
        if binding.action is TriggerAction.SUBMIT_BATCH:
            ok, reason = self._add_batch(binding.batch, now, source="analytics")
            if not ok:
                self._emit_warning(now, "trigger_rejected", reason)
        elif binding.action is TriggerAction.CLEAR_NAVIGATION:
            self._abort(now, "analytics_abort")
        elif binding.action is TriggerAction.FOLLOW:
            self._follow_enabled[binding.task_id] = True
            controller = self.followers[binding.task_id]
            if controller.engaged and self._follow_active is None:
                self._follow_request = binding.task_id
        elif binding.action is TriggerAction.LAND:
            self._land_now(now, "analytics_land")
        elif binding.action is TriggerAction.LAUNCH_TASK:
            if binding.task_id in self.detectors:
                self.detectors[binding.task_id].enabled = True
            elif binding.task_id in self._follow_enabled:
                self._follow_enabled[binding.task_id] = True

    def _poll_follow(self, now: float) -> None:
        if self._follow_active is None:
            return
        controller = self.followers[self._follow_active]
        command, lost = controller.poll(now)
        if lost:
            if self.fsm.state is MissionState.TRACKING:
                self._transition(MissionEventKind.TRACK_LOST, now, self._follow_active)
                self.world.command_hold()
            self._follow_active = None
            return
        if command is not None and self.fsm.state is MissionState.TRACKING:
            self.world.command_velocity(command)

    # -- dispatch logic ---------------------------------------------------------

    def _mission_logic(self, now: float) -> None:
        state = self.fsm.state
        if state is MissionState.HOVER:
            if self._try_engage_follow(now):
                return
            entry = self.queue.pop()
            if entry is not None:
                self._dispatch(entry, now)
                return
            self._maybe_finish(now)
        elif state is MissionState.EN_ROUTE:
            if self._follow_request is not None and self.followers[self._follow_request].engaged:
                if self._current is not None:
                    self.queue.suspend(self._current)
                    self._emit_queue(
                        "suspend", now, waypoint_id=self._current.waypoint.id,
                        priority=self._current.priority,
                    )
                    self._current = None
                self._engage_follow(now)
        elif state is MissionState.WAYPOINT_HOVER:
            if self._hover_until is not None and now + 1e-9 >= self._hover_until:
                self._hover_until = None
                self._transition(MissionEventKind.HOVER_ELAPSED, now)
        elif state is MissionState.PREEMPTED:
            if self._try_engage_follow(now):
                return
            entry = self.queue.pop()
            if entry is not None:
                self._dispatch(entry, now)
        elif state is MissionState.RESUMING:
            self._resume_from_pause(now)
        elif state is MissionState.ABORTED:
            if self._try_engage_follow(now):
                return
            entry = self.queue.pop()
            if entry is not None:
                self._dispatch(entry, now)
                return
            if self._operator_abort or not self._has_pending_work():
                self._land_now(now, "abort_complete")

    def _try_engage_follow(self, now: float) -> bool:
        if self._follow_request is None:
            return False
        if not self.followers[self._follow_request].engaged:
            return False
        self._engage_follow(now)
        return True

    def _engage_follow(self, now: float) -> None:
        task_id, self._follow_request = self._follow_request, None
        self._follow_active = task_id
        self._transition(MissionEventKind.TRACK_ACQUIRED, now, task_id)
        command, lost = self.followers[task_id].poll(now)
        if command is not None and not lost:
            self.world.command_velocity(command)

    def _dispatch(self, entry: QueueEntry, now: float) -> None:
        self._transition(MissionEventKind.WAYPOINT_DISPATCHED, now, entry.waypoint.id)
        self.world.command_goto(entry.waypoint.target)
        self._current = entry
        self._idle_since = None
        self._emit_queue("pop", now, waypoint_id=entry.waypoint.id, priority=entry.priority)

    def _maybe_finish(self, now: float) -> None:
        if self.scenario.pattern is MissionPattern.SENSOR_DRIVEN:
            return
        if self._has_pending_work():
            self._idle_since = None
            return
        if self.scenario.return_home and not self._returned:
            self._returning = True
            home = Position3(
                self.scenario.origin.x, self.scenario.origin.y, self.world.pose.z
            )
            self._transition(MissionEventKind.WAYPOINT_DISPATCHED, now, "return_home")
            self.world.command_goto(home)
            return
        if self._idle_since is None:
            self._idle_since = now
        if now + 1e-9 >= self._idle_since + self.scenario.linger:
            self._land_now(now, "mission_complete")

    def _has_pending_work(self) -> bool:
        if len(self.queue) or self._current is not None:
            return True
        if self._emissions:
            return True
        if self._follow_request is not None or self._follow_active is not None:
            return True
        return False

    def _resume_from_pause(self, now: float) -> None:
        ctx = self._paused_ctx or _PausedContext()
        self._paused_ctx = None
        if ctx.leg is not None:
            self._transition(MissionEventKind.WAYPOINT_DISPATCHED, now, ctx.leg.waypoint.id)
            self.world.command_goto(ctx.leg.waypoint.target)
            self._current = ctx.leg
        elif ctx.hover_remaining is not None:
            self._transition(MissionEventKind.ARRIVAL, now, "resume_hover")
            self._hover_until = now + ctx.hover_remaining
        elif ctx.tracking and self._follow_active is not None:
            # returning to a live track: poll() will keep commanding
            self._transition(MissionEventKind.TRACK_ACQUIRED, now, self._follow_active)
        else:
            self._transition(MissionEventKind.HOVER_ELAPSED, now, "resume_idle")

    def _pause(self, now: float) -> None:
        ctx = _PausedContext()
        state = self.fsm.state
        if state is MissionState.EN_ROUTE and self._current is not None:
            ctx.leg = self._current
            self._current = None
        elif state is MissionState.WAYPOINT_HOVER and self._hover_until is not None:
            ctx.hover_remaining = max(0.0, self._hover_until - now)
            self._hover_until = None
        elif state is MissionState.TRACKING:
            ctx.tracking = True
        self._paused_ctx = ctx
        self.world.command_hold()
        self._transition(MissionEventKind.PAUSE, now, "operator_pause")

    def _abort(self, now: float, reason: str) -> None:
        dropped = self.queue.clear()
        self._current = None
        self._hover_until = None
        self._returning = False
        self.abort_count += 1
        self._emit_queue("clear", now, waypoint_ids=dropped, reason=reason)
        if self.fsm.state is not MissionState.ABORTED:
            self._transition(MissionEventKind.ABORT, now, reason)
        self.world.command_hold()

    def _land_now(self, now: float, reason: str) -> None:
        if self.fsm.state in (MissionState.LANDING, MissionState.LANDED):
            return
        self._follow_active = None
        self._follow_request = None
        self._current = None
        self._hover_until = None
        self._transition(MissionEventKind.LAND_COMMAND, now, reason)
        self.world.land()

    def _add_batch(
        self, batch: NavigationBatch, now: float, source: str, pose: Position3 | None = None
    ) -> tuple[bool, str]:
        resolved = NavigationBatch(
            nav_type=batch.nav_type,
            waypoints=tuple(
                Waypoint(
                    id=wp.id,
                    target=resolve_waypoint(wp, self.scenario.origin),
                    hover_duration=wp.hover_duration,
                    frame=Frame.ABSOLUTE,
                    deadline=wp.deadline,
                )
                for wp in batch.waypoints
            ),
            scheduling=batch.scheduling,
            priority=batch.priority,
        )
        ordered = generate_navigation(resolved, pose or self.world.pose, self.scheduler)
        taken = set(self.visited)
        if self._current is not None:
            taken.add(self._current.waypoint.id)
        clash = taken.intersection(wp.id for wp in ordered)
        if clash:
            reason = f"duplicate waypoint ids: {sorted(clash)}"
            self._emit_queue("reject", now, reason=reason, source=source)
            return False, reason
        entries = [QueueEntry(wp, batch.priority, batch.nav_type) for wp in ordered]
        try:
            self.queue.add(entries)
        except DuplicateWaypointError as exc:
            reason = str(exc)
            self._emit_queue("reject", now, reason=reason, source=source)
            return False, reason
        self._emit_queue(
            "add",
            now,
            waypoint_ids=[wp.id for wp in ordered],
            priority=batch.priority,
            source=source,
        )
        if (
            self.fsm.state is MissionState.EN_ROUTE
            and self._current is not None
            and batch.priority < self._current.priority
        ):
            interrupted = self._current
            self._current = None
            self.queue.suspend(interrupted)
            self.preempt_count += 1
            self._emit_queue(
                "suspend", now, waypoint_id=interrupted.waypoint.id, priority=interrupted.priority
            )
            self._transition(MissionEventKind.PREEMPT, now, f"priority_{batch.priority}_batch")
        return True, ""

    # -- post-integration -------------------------------------------------------

    def _post_step(self, sim_events: list[str], now: float) -> None:
        state = self.fsm.state
        if "battery_empty" in sim_events and state not in (
            MissionState.LANDING,
            MissionState.LANDED,
        ):
            self._emit_warning(now, "battery_empty", "battery exhausted; forcing landing")
            self._land_now(now, "battery_empty")
            return
        if state is MissionState.TAKING_OFF:
            if (
                self._takeoff_target is not None
                and self.world.pose.z + 1e-9 >= self._takeoff_target
            ):
                self._takeoff_target = None
                self._transition(MissionEventKind.TAKEOFF_COMPLETE, now)
            return
        if state is MissionState.LANDING:
            if self.world.pose.z <= 1e-9:
                self._transition(MissionEventKind.TOUCHDOWN, now)
            return
        if "arrival" in sim_events and state is MissionState.EN_ROUTE:
            if self._returning:
                self._returning = False
                self._returned = True
                self._transition(MissionEventKind.ARRIVAL, now, "return_home")
                self._hover_until = now
                return
            if self._current is None:
                return
            wp = self._current.waypoint
            self.visited.append(wp.id)
            self.visit_positions.append(wp.target)
            self._current = None
            self._emit_queue("visited", now, waypoint_id=wp.id)
            if wp.deadline is not None and now > wp.deadline:
                self._emit_warning(
                    now, "deadline_expired", f"waypoint {wp.id} visited {now - wp.deadline:.2f}s late"
                )
            self._transition(MissionEventKind.ARRIVAL, now, wp.id)
            self._hover_until = now + wp.hover_duration

    # -- results ------------------------------------------------------------------

    def metrics(self) -> dict[str, Any]:
        tour = 0.0
        pose = self.scenario.origin
        for target in self.visit_positions:
            tour += horizontal_distance(pose, target)
            pose = target
        return {
            "waypoints_visited": len(self.visited),
            "visit_order": list(self.visited),
            "total_path_length_m": self.total_path_length,
            "horizontal_tour_length_m": tour,
            "mission_duration_s": self.world.clock,
            "preempt_count": self.preempt_count,
            "abort_count": self.abort_count,
            "battery_remaining": self.world.battery,
        }

    def result(self) -> "MissionResult":
        return MissionResult(
            status=self.status,
            events=self.events,
            visited=list(self.visited),
            metrics=self.metrics(),
            overhead_samples=list(self.overhead_samples),
            fault=self.fault,
        )


@dataclass
class MissionResult:
    status: MissionStatus
    events: list[dict[str, Any]]
    visited: list[str]
    metrics: dict[str, Any]
    overhead_samples: list[OverheadSample]
    fault: str | None = None


def run_mission(scenario: Scenario, pacing: str | None = None) -> MissionResult:
    """Execute a scenario start to finish and return its trace and metrics."""
    return MissionEngine(scenario).run(pacing=pacing)
