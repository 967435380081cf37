"""Mission lifecycle service and its HTTP control plane.

One serialized inbox per mission keeps concurrent clients safe: every command
lands at a tick boundary in a single total order. Telemetry fan-out replays
the append-only event log per subscriber, so late or reconnecting clients see
the exact same sequence as everyone else.

Endpoints:
    POST /missions                    start a mission from a scenario body
    GET  /missions/{id}/state         status + mission state snapshot
    GET  /missions/{id}/queue         waypoint queue snapshot in pop order
    POST /missions/{id}/commands      inject_batch | pause | resume | abort
    GET  /missions/{id}/telemetry     NDJSON event stream (replay + live)
    GET  /missions/{id}/overhead      per-frame framework overhead report
"""

from __future__ import annotations

import math
import statistics
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .core import NavigationBatch, NotFoundError, ValidationError
from .engine import MissionEngine, MissionStatus, OverheadSample
from .scenario import Scenario, ScenarioError, build_scenario
from .trace import dump_line

MIN_OVERHEAD_FRAMES = 100
TERMINAL = (MissionStatus.COMPLETED, MissionStatus.FAULTED, MissionStatus.ABORTED)


class CommandKind(Enum):
    INJECT_BATCH = "inject_batch"
    PAUSE = "pause"
    RESUME = "resume"
    ABORT = "abort"


@dataclass(frozen=True)
class ControlCommand:
    kind: CommandKind
    payload: NavigationBatch | None = None
    issued_at: float = field(default_factory=time.time)

    def __post_init__(self) -> None:
        if self.kind is CommandKind.INJECT_BATCH and self.payload is None:
            raise ValidationError("inject_batch requires a batch payload")
        if self.kind is not CommandKind.INJECT_BATCH and self.payload is not None:
            raise ValidationError(f"{self.kind.value} must not carry a payload")

    @classmethod
    def from_wire(cls, data: Mapping[str, Any]) -> "ControlCommand":
        kind = CommandKind(data["kind"])
        payload = None
        if data.get("payload") is not None:
            payload = NavigationBatch.from_wire(data["payload"])
        return cls(kind=kind, payload=payload)


@dataclass
class MissionHandle:
    mission_id: str
    scenario_name: str
    status: MissionStatus = MissionStatus.CREATED


class CommandRejectedError(RuntimeError):
    pass


class NotReadyError(RuntimeError):
    pass


class _MissionRun:
    def __init__(self, handle: MissionHandle, scenario: Scenario, engine: MissionEngine) -> None:
        self.handle = handle
        self.scenario = scenario
        self.engine = engine
        self.cond = threading.Condition()
        self.thread: threading.Thread | None = None

    def notify(self, _event: dict[str, Any]) -> None:
        with self.cond:
            self.cond.notify_all()

    @property
    def terminal(self) -> bool:
        return self.engine.status in TERMINAL


class MissionService:
    """Owns every mission in this process; safe for many concurrent clients."""

    def __init__(self) -> None:
        self._missions: dict[str, _MissionRun] = {}
        self._lock = threading.Lock()

    # -- lifecycle ----------------------------------------------------------

    def start_mission(
        self, scenario: Scenario | Mapping[str, Any], pacing: str | None = None
    ) -> MissionHandle:
        if not isinstance(scenario, Scenario):
            scenario = build_scenario(scenario)
        engine = MissionEngine(scenario)
        handle = MissionHandle(mission_id=uuid.uuid4().hex[:12], scenario_name=scenario.name)
        run = _MissionRun(handle, scenario, engine)
        engine.on_event = run.notify
        with self._lock:
            self._missions[handle.mission_id] = run

        def _run() -> None:
            engine.run(pacing=pacing)
            handle.status = engine.status
            with run.cond:
                run.cond.notify_all()

        run.thread = threading.Thread(target=_run, name=f"mission-{handle.mission_id}", daemon=True)
        handle.status = MissionStatus.RUNNING
        run.thread.start()
        return handle

    def wait(self, mission_id: str, timeout: float | None = None) -> MissionStatus:
        run = self._get(mission_id)
        if run.thread is not None:
            run.thread.join(timeout)
        return run.engine.status

    def _get(self, mission_id: str) -> _MissionRun:
        with self._lock:
            try:
                return self._missions[mission_id]
            except KeyError:
                raise NotFoundError(f"unknown mission {mission_id!r}") from None

    # -- queries ------------------------------------------------------------

    def get_state(self, mission_id: str) -> dict[str, Any]:
        run = self._get(mission_id)
        engine = run.engine
        return {
            "mission_id": mission_id,
            "scenario": run.scenario.name,
            "status": engine.status.value,
            "state": engine.state.value,
            "sim_time": engine.world.clock,
            "battery": engine.world.battery,
            "pose": engine.world.pose.to_wire(),
            "visited_waypoint_ids": list(engine.visited),
        }

    def get_queue(self, mission_id: str) -> list[dict[str, Any]]:
        return self._get(mission_id).engine.queue_snapshot()

    def get_result(self, mission_id: str) -> dict[str, Any]:
        run = self._get(mission_id)
        return {
            "status": run.engine.status.value,
            "metrics": run.engine.metrics(),
            "fault": run.engine.fault,
        }

    # -- commands -----------------------------------------------------------

    def submit_command(self, mission_id: str, command: ControlCommand) -> dict[str, Any]:
        run = self._get(mission_id)
        if run.terminal:
            raise CommandRejectedError(f"mission is {run.engine.status.value}")
        pending = run.engine.submit(command.kind.value, command.payload)
        if not pending.accepted:
            raise CommandRejectedError(pending.reason or "command rejected")
        return {"accepted": True, "kind": command.kind.value, "applied_at": pending.applied_at}

    # -- telemetry fan-out -----------------------------------------------------

    def stream(self, mission_id: str, poll_interval: float = 0.05) -> Iterator[dict[str, Any]]:
        """Replay the mission's event log, then follow it live until the
        mission ends. Each subscriber gets the identical ordered sequence."""
        run = self._get(mission_id)
        index = 0
        while True:
            events = run.engine.events
            while index < len(events):
                yield events[index]
                index += 1
            if run.terminal and index >= len(run.engine.events):
                return
            with run.cond:
                run.cond.wait(poll_interval)

    # -- overhead ----------------------------------------------------------------

    def overhead_report(self, mission_id: str) -> dict[str, Any]:
        run = self._get(mission_id)
        samples = list(run.engine.overhead_samples)
        return build_overhead_report(samples)


def build_overhead_report(samples: list[OverheadSample]) -> dict[str, Any]:
    if len(samples) < MIN_OVERHEAD_FRAMES:
        raise NotReadyError(
            f"need at least {MIN_OVERHEAD_FRAMES} frames, have {len(samples)}"
        )
    overheads = sorted(s.overhead_ms for s in samples)
    p95_index = max(0, math.ceil(0.95 * len(overheads)) - 1)
    return {
        "frames": len(samples),
        "median_overhead_ms": statistics.median(overheads),
        "p95_overhead_ms": overheads[p95_index],
        "median_total_ms": statistics.median(s.total_pipeline_ms for s in samples),
        "samples": [
            {
                "frame_seq": s.frame_seq,
                "total_pipeline_ms": s.total_pipeline_ms,
                "inference_ms": s.inference_ms,
                "overhead_ms": s.overhead_ms,
            }
            for s in samples
        ],
    }


def create_app(service: MissionService | None = None, static_dir: str | None = None) -> FastAPI:
    """Build the FastAPI app around a MissionService."""
    service = service or MissionService()
    app = FastAPI(title="droneops control plane", version="0.1.0")
    app.state.service = service

    @app.exception_handler(NotFoundError)
    async def _not_found(_req: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(CommandRejectedError)
    async def _rejected(_req: Request, exc: CommandRejectedError):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(NotReadyError)
    async def _not_ready(_req: Request, exc: NotReadyError):
        return JSONResponse(status_code=409, content={"error": str(exc), "not_ready": True})

    @app.exception_handler(ScenarioError)
    async def _scenario_error(_req: Request, exc: ScenarioError):
        return JSONResponse(status_code=400, content={"error": exc.message, "path": exc.path})

    @app.exception_handler(ValidationError)
    async def _validation_error(_req: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/missions")
    async def start_mission(request: Request):
        body = await request.json()
        pacing = request.query_params.get("pacing")
        handle = service.start_mission(body, pacing=pacing)
        return {"mission_id": handle.mission_id, "scenario": handle.scenario_name}

    @app.get("/missions/{mission_id}/state")
    async def get_state(mission_id: str):
        return service.get_state(mission_id)

    @app.get("/missions/{mission_id}/queue")
    async def get_queue(mission_id: str):
        return {"queue": service.get_queue(mission_id)}

    @app.get("/missions/{mission_id}/result")
    async def get_result(mission_id: str):
        return service.get_result(mission_id)

    @app.post("/missions/{mission_id}/commands")
    async def submit_command(mission_id: str, request: Request):
        body = await request.json()
        try:
            command = ControlCommand.from_wire(body)
        except (KeyError, ValueError) as exc:
            return JSONResponse(status_code=400, content={"error": f"bad command: {exc}"})
        return service.submit_command(mission_id, command)

    @app.get("/missions/{mission_id}/telemetry")
    async def stream_telemetry(mission_id: str):
        service._get(mission_id)  # 404 before the stream starts

        def _lines():
            for event in service.stream(mission_id):
                yield dump_line(event) + "\n"

        return StreamingResponse(_lines(), media_type="application/x-ndjson")

    @app.get("/missions/{mission_id}/overhead")
    async def overhead(mission_id: str):
        return service.overhead_report(mission_id)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
