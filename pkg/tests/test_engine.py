"""Mission engine behavior: patterns, preemption, pause/resume, abort,
command handling, and trace-level consequences."""

import json
import math
from importlib import resources

import pytest

from droneops.core import MissionState, Position3
from droneops.engine import MissionEngine, MissionStatus, run_mission
from droneops.scenario import build_scenario


def shipped(name: str) -> dict:
    return json.loads(
        resources.files("droneops").joinpath("scenarios", f"{name}.json").read_text()
    )


def run_shipped(name: str, **overrides):
    data = shipped(name)
    data.update(overrides)
    return run_mission(build_scenario(data))


def telemetry_of(result):
    return [e for e in result.events if e["type"] == "telemetry"]


def transitions_of(result):
    return [e for e in result.events if e["type"] == "transition"]


def queue_events_of(result, action=None):
    events = [e for e in result.events if e["type"] == "queue"]
    if action is not None:
        events = [e for e in events if e["action"] == action]
    return events


class TestStaticPattern:
    def test_all_waypoints_visited_once_then_landed(self):
        result = run_shipped("farm_survey")
        assert result.status is MissionStatus.COMPLETED
        assert sorted(result.visited) == ["wp1", "wp2", "wp3", "wp4"]
        assert len(result.visited) == len(set(result.visited))
        assert transitions_of(result)[-1]["to_state"] == "landed"

    def test_returns_home_before_landing(self):
        result = run_shipped("farm_survey")
        landing = [t for t in transitions_of(result) if t["to_state"] == "landing"][0]
        pose_at_land = [
            e for e in telemetry_of(result) if e["sim_time"] <= landing["sim_time"]
        ][-1]["pose"]
        assert math.hypot(pose_at_land["x"], pose_at_land["y"]) <= 0.5


class TestDynamicPattern:
    def test_initial_plus_injected_all_visited(self):
        result = run_shipped("disaster_survey")
        assert result.status is MissionStatus.COMPLETED
        assert sorted(result.visited) == ["d1", "d2", "d3", "d4", "e1", "e2", "e3"]


class TestSensorDrivenPattern:
    def test_no_waypoints_motion_from_follow_only(self):
        result = run_shipped("situation_awareness")
        assert result.status is MissionStatus.COMPLETED
        assert result.visited == []
        assert queue_events_of(result, "add") == []
        assert any(t["to_state"] == "tracking" for t in transitions_of(result))


class TestUpdatePattern:
    def test_priority_one_first_and_suspended_restored(self):
        result = run_shipped("surveillance_tracking")
        assert result.status is MissionStatus.COMPLETED
        assert result.metrics["preempt_count"] == 1
        visits = {
            e["waypoint_id"]: e["sim_time"] for e in queue_events_of(result, "visited")
        }
        assert set(visits) == {"track1", "track2", "survey1", "survey2", "survey3"}
        trigger_time = queue_events_of(result, "suspend")[0]["sim_time"]
        p1_times = [visits["track1"], visits["track2"]]
        p2_after = [t for w, t in visits.items() if w.startswith("survey") and t > trigger_time]
        assert max(p1_times) < min(p2_after)
        suspended_id = queue_events_of(result, "suspend")[0]["waypoint_id"]
        assert suspended_id in visits

    def test_preempt_interrupts_leg_immediately(self):
        result = run_shipped("surveillance_tracking")
        suspend = queue_events_of(result, "suspend")[0]
        preempt = [t for t in transitions_of(result) if t["to_state"] == "preempted"][0]
        assert preempt["sim_time"] == pytest.approx(suspend["sim_time"], abs=0.051)


class TestAbortPattern:
    def test_pending_never_visited_and_tracking_entered(self):
        result = run_shipped("search_and_rescue")
        assert result.status is MissionStatus.COMPLETED
        clears = queue_events_of(result, "clear")
        assert len(clears) == 1
        pending_at_abort = set(clears[0]["waypoint_ids"])
        visited_after = {
            e["waypoint_id"]
            for e in queue_events_of(result, "visited")
            if e["sim_time"] > clears[0]["sim_time"]
        }
        assert pending_at_abort & visited_after == set()
        assert "search3" not in result.visited and "search4" not in result.visited
        assert any(t["to_state"] == "tracking" for t in transitions_of(result))

    def test_tower_inspection_climbs_to_ceiling(self):
        result = run_shipped("tower_inspection")
        assert result.status is MissionStatus.COMPLETED
        assert result.visited[-1] == "inspect_top"
        assert max(e["pose"]["z"] for e in telemetry_of(result)) == pytest.approx(35.0, abs=0.3)
        # after the clear, only the replacement batch's waypoints are visited
        clear_time = queue_events_of(result, "clear")[0]["sim_time"]
        after = {
            e["waypoint_id"]
            for e in queue_events_of(result, "visited")
            if e["sim_time"] > clear_time
        }
        assert after == {"inspect_base", "inspect_mid", "inspect_high", "inspect_top"}


class TestOperatorCommands:
    def make_engine(self, name="disaster_survey", **overrides):
        data = shipped(name)
        data.update(overrides)
        return MissionEngine(build_scenario(data))

    def run_with_script(self, engine, script):
        """script: {tick: callable(engine)} applied before that tick."""
        engine.status = MissionStatus.RUNNING
        engine._start()
        tick = 0
        while engine.fsm.state is not MissionState.LANDED and tick < 200000:
            if tick in script:
                script[tick](engine)
            engine._tick()
            tick += 1
        engine.status = (
            MissionStatus.ABORTED if engine._operator_abort else MissionStatus.COMPLETED
        )
        return engine.result()

    def test_pause_holds_position_and_queue(self):
        # farm survey has no scripted injections, so the queue must be
        # identical on both sides of the pause
        engine = self.make_engine("farm_survey")
        snapshots = {}

        def pause(e):
            snapshots["queue_before"] = [row["waypoint_id"] for row in e.queue_snapshot()]
            assert e.submit_sync("pause")

        def resume(e):
            snapshots["queue_after"] = [row["waypoint_id"] for row in e.queue_snapshot()]
            assert e.submit_sync("resume")

        engine.submit_sync = lambda kind: _apply_now(engine, kind)
        result = self.run_with_script(engine, {400: pause, 600: resume})
        assert result.status is MissionStatus.COMPLETED
        assert snapshots["queue_before"] == snapshots["queue_after"]

        paused_window = [
            e
            for e in telemetry_of(result)
            if e["state"] == "paused"
        ]
        assert paused_window, "mission never reported paused state"
        xs = [e["pose"]["x"] for e in paused_window]
        ys = [e["pose"]["y"] for e in paused_window]
        zs = [e["pose"]["z"] for e in paused_window]
        drift = math.dist(
            (min(xs), min(ys), min(zs)), (max(xs), max(ys), max(zs))
        )
        assert drift <= 0.2

    def test_abort_clears_and_lands(self):
        engine = self.make_engine()
        engine.submit_sync = lambda kind: _apply_now(engine, kind)

        def abort(e):
            e.submit_sync("abort")

        result = self.run_with_script(engine, {300: abort})
        assert result.status is MissionStatus.ABORTED
        assert queue_events_of(result, "clear")
        # everything pending at abort stays unvisited
        clear = queue_events_of(result, "clear")[0]
        visited_after = {
            e["waypoint_id"]
            for e in queue_events_of(result, "visited")
            if e["sim_time"] > clear["sim_time"]
        }
        assert set(clear["waypoint_ids"]) & visited_after == set()
        assert transitions_of(result)[-1]["to_state"] == "landed"

    def test_resume_without_pause_rejected(self):
        engine = self.make_engine()
        engine.status = MissionStatus.RUNNING
        engine._start()
        for _ in range(50):
            engine._tick()
        cmd = _apply_now_raw(engine, "resume")
        assert not cmd.accepted
        assert "resume" in cmd.reason

    def test_inject_duplicate_id_rejected(self):
        from droneops.core import NavigationBatch, NavType, Waypoint

        engine = self.make_engine()
        engine.status = MissionStatus.RUNNING
        engine._start()
        for _ in range(50):
            engine._tick()
        dup = NavigationBatch(
            NavType.ANALYTICS_DRIVEN,
            (Waypoint("d1", Position3(9, 9, 1.5)),),
            priority=2,
        )
        cmd = _apply_now_raw(engine, "inject_batch", dup)
        assert not cmd.accepted and "duplicate" in cmd.reason


def _apply_now_raw(engine, kind, batch=None):
    """Apply a command at the next tick without a second thread."""
    from droneops.engine import _PendingCommand

    cmd = _PendingCommand(kind=kind, batch=batch)
    engine._inbox.put(cmd)
    engine._tick()
    return cmd


def _apply_now(engine, kind, batch=None):
    return _apply_now_raw(engine, kind, batch).accepted


class TestStatStreamSensor:
    def test_pull_stream_sees_transitions(self):
        from droneops.sensing import StreamMode

        engine = MissionEngine(build_scenario(shipped("farm_survey")))
        pull = engine.hub.get_data_stream("stat", StreamMode.PULL)
        pushed = []
        engine.hub.get_data_stream("stat", StreamMode.PUSH, consumer=pushed.append)
        engine.run()
        latest = pull.latest()
        assert latest.to_state is MissionState.LANDED
        # the push feed is the full connected transition path
        assert pushed[0].from_state is MissionState.INIT
        assert pushed[-1].to_state is MissionState.LANDED
        for prev, cur in zip(pushed, pushed[1:]):
            assert prev.to_state is cur.from_state


class TestRemoteEmissions:
    def test_duplicate_emission_warns_and_mission_continues(self):
        data = shipped("disaster_survey")
        # schedule a second injection that collides with an initial waypoint id
        data["injections"].append(
            {
                "at": 35,
                "batch": {
                    "nav_type": "analytics_driven",
                    "scheduling": "ordered",
                    "priority": 2,
                    "waypoints": [
                        {"id": "d1", "target": {"x": 1, "y": 1, "z": 1.5}, "frame": "relative"}
                    ],
                },
            }
        )
        result = run_mission(build_scenario(data))
        assert result.status is MissionStatus.COMPLETED
        warnings = [e for e in result.events if e["type"] == "warning"]
        assert any(w["kind"] == "emission_rejected" for w in warnings)
        # the original seven still complete, the duplicate never re-visits
        assert sorted(result.visited) == ["d1", "d2", "d3", "d4", "e1", "e2", "e3"]


class TestForcedLanding:
    def test_battery_exhaustion_forces_landing(self):
        data = shipped("farm_survey")
        data["drone"]["move_drain"] = 3.0
        data["drone"]["hover_drain"] = 3.0
        result = run_mission(build_scenario(data))
        warnings = [e for e in result.events if e["type"] == "warning"]
        assert any(w["kind"] == "battery_empty" for w in warnings)
        assert transitions_of(result)[-1]["to_state"] == "landed"
        assert len(result.visited) < 4


class TestDeadlines:
    def test_expired_deadline_warns_but_still_visits(self):
        data = shipped("farm_survey")
        data["batches"][0]["waypoints"][0]["deadline"] = 1.0
        result = run_mission(build_scenario(data))
        warnings = [e for e in result.events if e["type"] == "warning"]
        assert any(w["kind"] == "deadline_expired" for w in warnings)
        assert "wp1" in result.visited


class TestTriggerActions:
    def test_land_binding_ends_mission_early(self):
        # the emergency-gesture path: a detection mapped straight to landing
        data = shipped("search_and_rescue")
        data["analytics"][0]["trigger_bindings"] = [
            {"action": "land", "target": "vip", "once": True}
        ]
        del data["analytics"][1]  # drop the follow controller
        result = run_mission(build_scenario(data))
        assert result.status is MissionStatus.COMPLETED
        land = [t for t in transitions_of(result) if t["to_state"] == "landing"][0]
        assert land["reason"] == "analytics_land"
        assert result.metrics["mission_duration_s"] < 60

    def test_launch_task_enables_dormant_detector(self):
        data = shipped("search_and_rescue")
        # stage two detectors: the scout launches the dormant vest detector
        data["analytics"] = [
            {
                "id": "scout",
                "kind": "detector",
                "sensor": "cam1",
                "matches": ["vip"],
                "trigger_bindings": [
                    {"action": "launch_task", "target": "vip", "task_id": "vest_detector", "once": True}
                ],
            },
            {
                "id": "vest_detector",
                "kind": "detector",
                "sensor": "cam1",
                "matches": ["vip"],
                "enabled": False,
                "trigger_bindings": [
                    {"action": "clear_navigation", "target": "vip", "once": True},
                    {"action": "follow", "target": "vip", "task_id": "vip_follow", "once": True},
                ],
            },
            {
                "id": "vip_follow",
                "kind": "follow_controller",
                "source": "vest_detector",
                "matches": ["vip"],
                "enabled": False,
                "gains": {"setpoint_distance": 2.0},
            },
        ]
        result = run_mission(build_scenario(data))
        assert result.status is MissionStatus.COMPLETED
        assert queue_events_of(result, "clear"), "launched detector never fired its abort"
        assert any(t["to_state"] == "tracking" for t in transitions_of(result))


class TestEmptyMission:
    def test_zero_batches_takes_off_and_lands(self):
        data = shipped("farm_survey")
        data["batches"] = []
        data["return_home"] = False
        result = run_mission(build_scenario(data))
        assert result.status is MissionStatus.COMPLETED
        assert result.visited == []
        # monitor output aligns with the (short) trace duration
        duration = result.metrics["mission_duration_s"]
        assert duration < 10

    def test_monitor_series_cover_mission_duration(self):
        data = shipped("disaster_survey")
        engine = MissionEngine(build_scenario(data))
        engine.run()
        monitor = engine.monitors["odometry_monitor"]
        duration = engine.metrics()["mission_duration_s"]
        battery = monitor.series["battery"]
        # one odometry sample per second, aligned across all fields
        assert len(battery) == pytest.approx(duration, abs=2)
        assert len(monitor.series["camera"]) == len(battery)
        assert [t for t, _ in monitor.series["gps"]] == [t for t, _ in battery]
        # camera counter is cumulative and non-decreasing
        counts = [v for _, v in monitor.series["camera"]]
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        assert counts[-1] > 0


class TestMetricsInvariants:
    def test_path_length_dominates_endpoint_distance(self):
        for name in ("farm_survey", "disaster_survey", "surveillance_tracking"):
            data = shipped(name)
            scenario = build_scenario(data)
            engine = MissionEngine(scenario)
            engine.run()
            metrics = engine.metrics()
            assert metrics["total_path_length_m"] >= metrics["horizontal_tour_length_m"] - 1e-6
            if engine.visit_positions:
                straight = math.hypot(
                    engine.visit_positions[-1].x - scenario.origin.x,
                    engine.visit_positions[-1].y - scenario.origin.y,
                )
                assert metrics["horizontal_tour_length_m"] >= straight - 1e-6


class TestDeterminismUnit:
    def test_same_seed_same_events(self):
        a = run_shipped("surveillance_tracking")
        b = run_shipped("surveillance_tracking")
        assert a.events == b.events

    def test_telemetry_times_strictly_increase(self):
        result = run_shipped("disaster_survey")
        times = [e["sim_time"] for e in telemetry_of(result)]
        assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))

    def test_battery_never_increases_airborne(self):
        result = run_shipped("farm_survey")
        samples = telemetry_of(result)
        for prev, cur in zip(samples, samples[1:]):
            assert cur["battery"] <= prev["battery"] + 1e-9
