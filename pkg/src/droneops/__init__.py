"""droneops: a deterministic drone mission runtime.

Compose sensing, analytics, and navigation into executable missions: a
priority waypoint queue with preemption/restore/abort semantics, pluggable
trajectory schedulers, a fixed-timestep kinematic simulator, and an HTTP
control plane for live operation.
"""

from .core import (
    CommandRejected,
    Frame,
    MissionState,
    NavigationBatch,
    NavType,
    NotFoundError,
    Position3,
    Scheduling,
    TelemetryEvent,
    ValidationError,
    Waypoint,
    euclidean_distance,
    resolve_waypoint,
)
from .engine import MissionEngine, MissionResult, MissionStatus, run_mission
from .navigation import (
    MissionPattern,
    NearestNeighborScheduler,
    OrderedScheduler,
    TrajectoryScheduler,
    WaypointQueue,
    generate_navigation,
    get_scheduler,
    register_scheduler,
)
from .scenario import Scenario, ScenarioError, build_scenario, load_scenario
from .sensing import (
    TRANSITIONS,
    IllegalTransition,
    MissionEventKind,
    SensorDescriptor,
    StatStreamEvent,
    stat_stream_transition,
)
from .simkernel import DroneModel, SimWorld, TargetTrack

__version__ = "0.1.0"

__all__ = [
    "CommandRejected",
    "DroneModel",
    "Frame",
    "IllegalTransition",
    "MissionEngine",
    "MissionEventKind",
    "MissionPattern",
    "MissionResult",
    "MissionState",
    "MissionStatus",
    "NavType",
    "NavigationBatch",
    "NearestNeighborScheduler",
    "NotFoundError",
    "OrderedScheduler",
    "Position3",
    "Scenario",
    "ScenarioError",
    "Scheduling",
    "SensorDescriptor",
    "SimWorld",
    "StatStreamEvent",
    "TRANSITIONS",
    "TargetTrack",
    "TelemetryEvent",
    "TrajectoryScheduler",
    "ValidationError",
    "Waypoint",
    "WaypointQueue",
    "build_scenario",
    "euclidean_distance",
    "generate_navigation",
    "get_scheduler",
    "load_scenario",
    "register_scheduler",
    "resolve_waypoint",
    "run_mission",
    "stat_stream_transition",
]
