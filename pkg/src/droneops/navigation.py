"""Priority waypoint queue, pluggable trajectory schedulers, mission patterns.

Pop order is strictly ascending priority value (1 beats 2) and FIFO within a
priority. A leg interrupted by preemption parks in the suspended slot and is
restored as the immediate next item of its priority class once everything
strictly more urgent has drained.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Iterable, Sequence

from .core import (
    NavigationBatch,
    NavType,
    Position3,
    Scheduling,
    ValidationError,
    Waypoint,
    euclidean_distance,
)


class MissionPattern(Enum):
    STATIC_PREDEFINED = "static_predefined"
    DYNAMIC_PREDEFINED = "dynamic_predefined"
    SENSOR_DRIVEN = "sensor_driven"
    ANALYTICS_UPDATE = "analytics_update"
    ANALYTICS_ABORT = "analytics_abort"


@dataclass(frozen=True)
class QueueEntry:
    waypoint: Waypoint
    priority: int
    nav_type: NavType


class DuplicateWaypointError(ValidationError):
    """A waypoint id is already queued or suspended."""


class WaypointQueue:
    """Priority-bucketed FIFO of waypoints with a preemption suspended slot."""

    def __init__(self) -> None:
        self._buckets: dict[int, deque[QueueEntry]] = {}
        self._suspended: QueueEntry | None = None

    def __len__(self) -> int:
        return sum(len(b) for b in self._buckets.values()) + (1 if self._suspended else 0)

    @property
    def suspended(self) -> QueueEntry | None:
        return self._suspended

    def ids(self) -> set[str]:
        found = {e.waypoint.id for b in self._buckets.values() for e in b}
        if self._suspended:
            found.add(self._suspended.waypoint.id)
        return found

    def add(self, entries: Iterable[QueueEntry]) -> None:
        entries = list(entries)
        incoming = [e.waypoint.id for e in entries]
        if len(set(incoming)) != len(incoming):
            raise DuplicateWaypointError(f"duplicate waypoint ids in batch: {incoming}")
        present = self.ids()
        clash = present.intersection(incoming)
        if clash:
            raise DuplicateWaypointError(f"waypoint ids already queued: {sorted(clash)}")
        for entry in entries:
            self._buckets.setdefault(entry.priority, deque()).append(entry)

    def push_front(self, entry: QueueEntry) -> None:
        if entry.waypoint.id in self.ids():
            raise DuplicateWaypointError(f"waypoint {entry.waypoint.id!r} already queued")
        self._buckets.setdefault(entry.priority, deque()).appendleft(entry)

    def suspend(self, entry: QueueEntry) -> None:
        """Park an interrupted leg; any previously suspended leg goes back to
        the head of its bucket so only the most recent interruption occupies
        the slot."""
        if self._suspended is not None:
            old, self._suspended = self._suspended, None
            self.push_front(old)
        if entry.waypoint.id in self.ids():
            raise DuplicateWaypointError(f"waypoint {entry.waypoint.id!r} already queued")
        self._suspended = entry

    def min_pending_priority(self) -> int | None:
        live = [p for p, b in self._buckets.items() if b]
        if self._suspended is not None:
            live.append(self._suspended.priority)
        return min(live) if live else None

    def pop(self) -> QueueEntry | None:
        """Next entry per priority-then-FIFO; the suspended leg outranks its
        own priority class."""
        bucket_priorities = sorted(p for p, b in self._buckets.items() if b)
        head = bucket_priorities[0] if bucket_priorities else None
        if self._suspended is not None and (head is None or self._suspended.priority <= head):
            entry, self._suspended = self._suspended, None
            return entry
        if head is None:
            return None
        return self._buckets[head].popleft()

    def clear(self) -> list[str]:
        """Empty every bucket and the suspended slot; idempotent."""
        dropped = sorted(self.ids())
        self._buckets.clear()
        self._suspended = None
        return dropped

    def snapshot(self) -> list[dict[str, Any]]:
        """Queue contents in pop order: (waypoint id, priority, position)."""
        ordered: list[QueueEntry] = []
        suspended = self._suspended
        for priority in sorted(p for p, b in self._buckets.items() if b):
            if suspended is not None and suspended.priority <= priority:
                ordered.append(suspended)
                suspended = None
            ordered.extend(self._buckets[priority])
        if suspended is not None:
            ordered.append(suspended)
        return [
            {
                "waypoint_id": e.waypoint.id,
                "priority": e.priority,
                "position": i,
                "suspended": e is self._suspended,
                "target": e.waypoint.target.to_wire(),
            }
            for i, e in enumerate(ordered)
        ]


class TrajectoryScheduler:
    """Pluggable policy ordering the waypoints of an unordered batch."""

    name = "base"
    deadline_aware = False

    def order(self, waypoints: Sequence[Waypoint], current_pose: Position3) -> list[Waypoint]:
        raise NotImplementedError


class OrderedScheduler(TrajectoryScheduler):
    name = "ordered"

    def order(self, waypoints: Sequence[Waypoint], current_pose: Position3) -> list[Waypoint]:
        return list(waypoints)


class NearestNeighborScheduler(TrajectoryScheduler):
    """Greedy tour: always fly to the nearest unvisited waypoint next.

    Equidistant candidates break by lexicographic waypoint id so reruns make
    identical tours.
    """

    name = "nearest_neighbor"

    def order(self, waypoints: Sequence[Waypoint], current_pose: Position3) -> list[Waypoint]:
        remaining = list(waypoints)
        tour: list[Waypoint] = []
        pose = current_pose
        while remaining:
            best = min(remaining, key=lambda wp: (euclidean_distance(pose, wp.target), wp.id))
            tour.append(best)
            remaining.remove(best)
            pose = best.target
        return tour


_SCHEDULERS: dict[str, Callable[[], TrajectoryScheduler]] = {}


def register_scheduler(name: str, factory: Callable[[], TrajectoryScheduler]) -> None:
    if not name:
        raise ValidationError("scheduler name must be non-empty")
    _SCHEDULERS[name] = factory


def get_scheduler(name: str) -> TrajectoryScheduler:
    try:
        factory = _SCHEDULERS[name]
    except KeyError:
        raise ValidationError(
            f"unknown scheduler {name!r}; registered: {sorted(_SCHEDULERS)}"
        ) from None
    return factory()


def scheduler_names() -> list[str]:
    return sorted(_SCHEDULERS)


register_scheduler("ordered", OrderedScheduler)
register_scheduler("nearest_neighbor", NearestNeighborScheduler)


def generate_navigation(
    batch: NavigationBatch,
    current_pose: Position3,
    scheduler: TrajectoryScheduler,
) -> list[Waypoint]:
    """Order a batch for flight. Ordered batches pass through untouched;
    unordered ones are handed to the scheduler. Waypoint targets must already
    be absolute."""
    if not batch.waypoints:
        return []
    if batch.scheduling is Scheduling.ORDERED:
        return list(batch.waypoints)
    ordered = scheduler.order(batch.waypoints, current_pose)
    if sorted(wp.id for wp in ordered) != sorted(wp.id for wp in batch.waypoints):
        raise ValidationError(
            f"scheduler {scheduler.name!r} output is not a permutation of its input"
        )
    return ordered


def tour_length(start: Position3, waypoints: Sequence[Waypoint]) -> float:
    """Total 3D leg length of a visit order, starting from `start`."""
    total, pose = 0.0, start
    for wp in waypoints:
        total += euclidean_distance(pose, wp.target)
        pose = wp.target
    return total
