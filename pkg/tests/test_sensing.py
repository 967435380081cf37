"""Stat-stream FSM and sensor hub behavior."""

import math

import pytest

from droneops.core import MissionState, NotFoundError, Position3
from droneops.sensing import (
    TRANSITIONS,
    CameraFrame,
    IllegalTransition,
    MissionEventKind,
    SensorDescriptor,
    SensorHub,
    SensorKind,
    StatStream,
    StreamMode,
    observe_targets,
    stat_stream_transition,
    transition_table_wire,
)


class TestTransitionTable:
    def test_covers_exactly_13_states(self):
        assert set(TRANSITIONS) == set(MissionState)
        assert len(TRANSITIONS) == 13

    def test_every_event_appears_somewhere(self):
        used = {event for edges in TRANSITIONS.values() for event in edges}
        assert used == set(MissionEventKind)

    def test_targets_stay_in_state_set(self):
        for edges in TRANSITIONS.values():
            for target in edges.values():
                assert isinstance(target, MissionState)

    def test_landed_is_absorbing(self):
        assert TRANSITIONS[MissionState.LANDED] == {}

    def test_every_state_reachable_from_init(self):
        reached = {MissionState.INIT}
        frontier = [MissionState.INIT]
        while frontier:
            state = frontier.pop()
            for nxt in TRANSITIONS[state].values():
                if nxt not in reached:
                    reached.add(nxt)
                    frontier.append(nxt)
        assert reached == set(MissionState)

    def test_landed_reachable_from_every_state(self):
        # reverse reachability: every state has some path to landed
        reverse: dict[MissionState, set[MissionState]] = {s: set() for s in MissionState}
        for state, edges in TRANSITIONS.items():
            for nxt in edges.values():
                reverse[nxt].add(state)
        reached = {MissionState.LANDED}
        frontier = [MissionState.LANDED]
        while frontier:
            state = frontier.pop()
            for prev in reverse[state]:
                if prev not in reached:
                    reached.add(prev)
                    frontier.append(prev)
        assert reached == set(MissionState)

    def test_exhaustive_walk_matches_table(self):
        for state in MissionState:
            for event in MissionEventKind:
                if event in TRANSITIONS[state]:
                    assert stat_stream_transition(state, event) is TRANSITIONS[state][event]
                else:
                    with pytest.raises(IllegalTransition):
                        stat_stream_transition(state, event)

    def test_known_edges(self):
        assert (
            stat_stream_transition(MissionState.HOVER, MissionEventKind.WAYPOINT_DISPATCHED)
            is MissionState.EN_ROUTE
        )
        assert (
            stat_stream_transition(MissionState.EN_ROUTE, MissionEventKind.ABORT)
            is MissionState.ABORTED
        )
        with pytest.raises(IllegalTransition):
            stat_stream_transition(MissionState.LANDED, MissionEventKind.TAKEOFF_COMPLETE)

    def test_wire_table_round_trips_names(self):
        wire = transition_table_wire()
        assert wire["hover"]["waypoint_dispatched"] == "en_route"
        assert set(wire) == {s.value for s in MissionState}


class TestStatStream:
    def test_records_connected_path(self):
        stream = StatStream()
        stream.apply(MissionEventKind.ARM, 0.0)
        stream.apply(MissionEventKind.WAYPOINT_DISPATCHED, 0.0)
        stream.apply(MissionEventKind.TAKEOFF_COMPLETE, 1.5)
        stream.apply(MissionEventKind.LAND_COMMAND, 2.0)
        stream.apply(MissionEventKind.TOUCHDOWN, 3.5)
        assert stream.state is MissionState.LANDED
        for prev, cur in zip(stream.events, stream.events[1:]):
            assert prev.to_state is cur.from_state

    def test_illegal_event_does_not_change_state(self):
        stream = StatStream()
        with pytest.raises(IllegalTransition):
            stream.apply(MissionEventKind.ABORT, 0.0)
        assert stream.state is MissionState.INIT
        assert stream.events == []

    def test_event_wire_round_trip(self):
        import json

        from droneops.sensing import StatStreamEvent

        record = StatStreamEvent(3.25, MissionState.HOVER, MissionState.EN_ROUTE, "wp1")
        assert StatStreamEvent.from_wire(json.loads(json.dumps(record.to_wire()))) == record


def make_hub(rate=5.0) -> SensorHub:
    return SensorHub(
        [
            SensorDescriptor("cam1", SensorKind.CAMERA, rate, {"resolution": "720p"}),
            SensorDescriptor("odom", SensorKind.ODOMETRY, 1.0),
        ]
    )


class TestSensorHub:
    def test_property_echo(self):
        hub = make_hub()
        assert hub.get_sensor_property("cam1", "rate") == "5"
        assert hub.get_sensor_property("odom", "kind") == "odometry"
        assert hub.get_sensor_property("cam1", "resolution") == "720p"

    def test_unknown_property_not_found(self):
        hub = make_hub()
        with pytest.raises(NotFoundError):
            hub.get_sensor_property("cam1", "nonexistent")

    def test_unknown_sensor_not_found(self):
        hub = make_hub()
        with pytest.raises(NotFoundError):
            hub.get_data_stream("nope", StreamMode.PULL)

    def test_frame_count_over_four_minutes(self):
        # 5 FPS for 240 s of sim time -> 1200 frames
        hub = make_hub(rate=5.0)
        dt = 0.05
        produced = 0
        for tick in range(int(240 / dt) + 1):
            now = tick * dt
            for _ in range(hub.due("cam1", now)):
                hub.publish("cam1", CameraFrame(now, produced))
                produced += 1
        assert produced == 1200

    def test_push_pull_equivalence(self):
        hub = make_hub(rate=5.0)
        seen: list[int] = []
        hub.get_data_stream("cam1", StreamMode.PUSH, consumer=lambda f: seen.append(f.frame_seq))
        pull = hub.get_data_stream("cam1", StreamMode.PULL)
        dt = 0.05
        pulled: list[int] = []
        for tick in range(int(10 / dt) + 1):
            now = tick * dt
            for _ in range(hub.due("cam1", now)):
                hub.publish("cam1", CameraFrame(now, hub.emitted("cam1")))
            latest = pull.latest()
            if latest is not None and (not pulled or pulled[-1] != latest.frame_seq):
                pulled.append(latest.frame_seq)
        assert seen == pulled
        assert seen == sorted(seen)

    def test_pull_within_one_interval_returns_same_sample(self):
        hub = make_hub(rate=5.0)
        pull = hub.get_data_stream("cam1", StreamMode.PULL)
        hub.publish("cam1", CameraFrame(0.2, 0))
        first = pull.latest()
        second = pull.latest()
        assert first is second

    def test_push_count_matches_rate_property(self):
        for rate in (1.0, 5.0, 15.0):
            hub = SensorHub([SensorDescriptor("s", SensorKind.CAMERA, rate)])
            count = 0
            dt = 0.05
            horizon = 33.0
            for tick in range(int(horizon / dt) + 1):
                due = hub.due("s", tick * dt)
                count += due
                for _ in range(due):
                    hub.publish("s", object())
            assert abs(count - math.floor(rate * horizon)) <= 1


class TestObserveTargets:
    def test_in_range_and_cone(self):
        obs = observe_targets(
            Position3(0, 0, 1.5), 0.0, {"vip1": Position3(4, 0, 0)}, 60.0, 20.0
        )
        assert len(obs) == 1
        assert obs[0].in_fov and obs[0].range_m == pytest.approx(4.0)
        assert obs[0].bearing == pytest.approx(0.0)

    def test_out_of_range(self):
        obs = observe_targets(Position3(0, 0, 1.5), 0.0, {"t": Position3(30, 0, 0)}, 60.0, 20.0)
        assert not obs[0].in_fov

    def test_outside_cone(self):
        obs = observe_targets(Position3(0, 0, 1.5), 0.0, {"t": Position3(-5, 0, 0)}, 60.0, 20.0)
        assert not obs[0].in_fov

    def test_observations_sorted_by_target_id(self):
        obs = observe_targets(
            Position3(0, 0, 1.5),
            0.0,
            {"b": Position3(2, 0, 0), "a": Position3(3, 0, 0)},
        )
        assert [o.target_id for o in obs] == ["a", "b"]
