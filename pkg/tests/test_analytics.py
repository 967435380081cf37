"""Detectors, latency accounting, PID follow control, placement, monitoring."""

import math
import random

import pytest
from hypothesis import given, strategies as st

from droneops.analytics import (
    AnalyticsTask,
    ComputeResource,
    Detection,
    FollowController,
    FollowGains,
    NotDeployedError,
    PlacementError,
    ResourceTier,
    TaskKind,
    TriggerAction,
    TriggerBinding,
    analyse,
    deploy,
    follow_control,
    generate_navigation_from_analytics,
    monitor_series,
    schedule_placement,
)
from droneops.core import (
    MissionState,
    NavigationBatch,
    NavType,
    Position3,
    TelemetryEvent,
    ValidationError,
    Waypoint,
)
from droneops.sensing import CameraFrame, Observation

EDGE = ComputeResource("edge", ResourceTier.EDGE, 0.03, 0.0, capacity=4)
CLOUD = ComputeResource("cloud", ResourceTier.CLOUD, 0.10, 0.02, capacity=8)


def detector(task_id="det", **kwargs) -> AnalyticsTask:
    defaults = dict(kind=TaskKind.DETECTOR, sensor_id="cam1", matches=("vip",))
    defaults.update(kwargs)
    return AnalyticsTask(id=task_id, **defaults)


def frame_with(target_id="vip1", rng_m=4.0, bearing=0.0, in_fov=True, t=10.0, seq=0) -> CameraFrame:
    return CameraFrame(t, seq, (Observation(target_id, bearing, rng_m, in_fov),))


class TestAnalyse:
    def test_in_fov_pass_through(self):
        dets = analyse(detector(), frame_with(rng_m=4.0))
        assert len(dets) == 1
        assert dets[0].range_m == 4.0
        assert dets[0].confidence == 1.0

    def test_out_of_fov_empty(self):
        assert analyse(detector(), frame_with(in_fov=False)) == []

    def test_class_filter(self):
        assert analyse(detector(matches=("car",)), frame_with("vip1")) == []
        assert len(analyse(detector(matches=("car",)), frame_with("car1"))) == 1

    def test_seeded_miss_process_is_deterministic(self):
        task = detector(miss_rate=0.5)
        frames = [frame_with(t=float(i), seq=i) for i in range(50)]

        def outcome(seed):
            rng = random.Random(seed)
            return [len(analyse(task, f, rng)) for f in frames]

        assert outcome(9) == outcome(9)
        assert outcome(9) != outcome(10)


class TestDetectorRuntime:
    def test_requires_deployment(self):
        with pytest.raises(NotDeployedError):
            deploy(detector(), None)

    def test_latency_accounting(self):
        runtime = deploy(detector(), EDGE)
        runtime.on_frame(frame_with(t=10.0))
        assert runtime.collect(10.0) == []
        matured = runtime.collect(10.03)
        assert len(matured) == 1
        assert matured[0].sim_time == pytest.approx(10.03)

    def test_latency_includes_task_cost_and_network(self):
        slow = ComputeResource("far", ResourceTier.CLOUD, 0.10, 0.02)
        runtime = deploy(detector(per_inference_cost=0.01), slow)
        runtime.on_frame(frame_with(t=1.0))
        assert runtime.collect(1.12) == []
        assert len(runtime.collect(1.13)) == 1

    def test_stride_skips_frames(self):
        runtime = deploy(detector(stride=2), EDGE)
        for i in range(6):
            runtime.on_frame(frame_with(t=float(i), seq=i))
        assert len(runtime.collect(100.0)) == 3

    def test_causality_no_detection_before_frame(self):
        runtime = deploy(detector(), EDGE)
        frame_time = 5.0
        runtime.on_frame(frame_with(t=frame_time))
        for det in runtime.collect(100.0):
            assert det.sim_time >= frame_time + EDGE.total_latency


class TestFollowControl:
    def test_zero_error_zero_command(self):
        gains = FollowGains(kp=0.5, ki=0.0, kd=0.0, setpoint_distance=2.0)
        cmd, _ = follow_control(gains, Detection(0.0, "vip1", 0.0, 2.0), 0.2, 1.5)
        assert (cmd.x, cmd.y, cmd.z) == (0.0, 0.0, 0.0)

    def test_proportional_term(self):
        gains = FollowGains(kp=0.5, ki=0.0, kd=0.0, setpoint_distance=2.0)
        cmd, _ = follow_control(gains, Detection(0.0, "vip1", 0.0, 4.0), 0.2, 1.5)
        assert cmd.x == pytest.approx(1.0)
        assert cmd.y == pytest.approx(0.0)

    def test_clamped_to_max_speed(self):
        gains = FollowGains(kp=0.5, ki=0.0, kd=0.0, setpoint_distance=2.0)
        cmd, _ = follow_control(gains, Detection(0.0, "vip1", 0.0, 10.0), 0.2, 1.5)
        assert math.hypot(cmd.x, cmd.y) == pytest.approx(1.5)

    def test_command_points_along_bearing(self):
        gains = FollowGains(kp=0.5, ki=0.0, kd=0.0)
        bearing = math.radians(90)
        cmd, _ = follow_control(gains, Detection(0.0, "vip1", bearing, 4.0), 0.2, 1.5)
        assert cmd.x == pytest.approx(0.0, abs=1e-12)
        assert cmd.y == pytest.approx(1.0)

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=0.0, max_value=50.0),
                st.floats(min_value=-math.pi, max_value=math.pi),
            ),
            min_size=1,
            max_size=60,
        )
    )
    def test_output_and_integral_always_bounded(self, samples):
        gains = FollowGains()
        controller = FollowController(gains, max_speed=1.5)
        t = 0.0
        for rng_m, bearing in samples:
            t += 0.2
            cmd = controller.on_detection(Detection(t, "vip1", bearing, rng_m))
            assert math.hypot(cmd.x, cmd.y) <= 1.5 + 1e-9
            assert abs(controller.integral) <= gains.integral_limit + 1e-9

    def test_loss_timeout_emits_track_lost(self):
        controller = FollowController(FollowGains(loss_timeout=2.0), max_speed=1.5)
        controller.on_detection(Detection(1.0, "vip1", 0.0, 5.0))
        cmd, lost = controller.poll(2.0)
        assert not lost and cmd is not None
        cmd, lost = controller.poll(3.1)
        assert lost
        assert (cmd.x, cmd.y, cmd.z) == (0.0, 0.0, 0.0)
        assert not controller.engaged

    def test_poll_before_first_detection(self):
        controller = FollowController(FollowGains(), max_speed=1.5)
        cmd, lost = controller.poll(5.0)
        assert cmd is None and not lost


class TestTriggers:
    def test_kind_guard(self):
        monitor = AnalyticsTask(id="m", kind=TaskKind.MONITOR, fields=("battery",))
        with pytest.raises(ValidationError):
            generate_navigation_from_analytics(monitor, [])

    def test_binding_fires_once(self):
        batch = NavigationBatch(NavType.ANALYTICS_DRIVEN, (Waypoint("t1", Position3(1, 1, 1)),), priority=1)
        task = detector(
            trigger_bindings=(TriggerBinding(TriggerAction.SUBMIT_BATCH, target="vip", batch=batch),)
        )
        det = Detection(1.0, "vip1", 0.0, 3.0)
        fired: set[int] = set()
        first = generate_navigation_from_analytics(task, [det], fired)
        second = generate_navigation_from_analytics(task, [det], fired)
        assert len(first) == 1 and first[0].batch is batch
        assert second == []

    def test_confidence_threshold(self):
        task = detector(
            trigger_bindings=(
                TriggerBinding(TriggerAction.CLEAR_NAVIGATION, target="vip", min_confidence=0.9),
            )
        )
        low = Detection(1.0, "vip1", 0.0, 3.0, confidence=0.5)
        high = Detection(1.0, "vip1", 0.0, 3.0, confidence=0.95)
        assert generate_navigation_from_analytics(task, [low], set()) == []
        assert len(generate_navigation_from_analytics(task, [high], set())) == 1

    def test_submit_batch_requires_batch(self):
        with pytest.raises(ValidationError):
            TriggerBinding(TriggerAction.SUBMIT_BATCH, target="vip")

    def test_no_detections_no_actions(self):
        task = detector(
            trigger_bindings=(TriggerBinding(TriggerAction.LAND, target="vip"),)
        )
        assert generate_navigation_from_analytics(task, [], set()) == []


class TestPlacement:
    def test_least_latency_prefers_edge(self):
        placement = schedule_placement([detector()], [EDGE, CLOUD], "least_latency")
        assert placement == {"det": "edge"}

    def test_single_choice(self):
        placement = schedule_placement([detector()], [CLOUD], "least_latency")
        assert placement == {"det": "cloud"}

    def test_round_robin_rotation(self):
        tasks = [detector(f"t{i}") for i in range(3)]
        r1 = ComputeResource("r1", ResourceTier.EDGE, 0.03, capacity=4)
        r2 = ComputeResource("r2", ResourceTier.EDGE, 0.03, capacity=4)
        placement = schedule_placement(tasks, [r1, r2], "round_robin")
        assert [placement[t.id] for t in tasks] == ["r1", "r2", "r1"]

    def test_edge_only_capacity_exhausted(self):
        tight = ComputeResource("edge", ResourceTier.EDGE, 0.03, capacity=1)
        tasks = [detector("a"), detector("b")]
        with pytest.raises(PlacementError):
            schedule_placement(tasks, [tight, CLOUD], "edge_only")

    def test_cloud_only_ignores_edge(self):
        placement = schedule_placement([detector()], [EDGE, CLOUD], "cloud_only")
        assert placement == {"det": "cloud"}

    def test_least_latency_spills_over_when_full(self):
        tight = ComputeResource("edge", ResourceTier.EDGE, 0.03, capacity=1)
        tasks = [detector("a"), detector("b")]
        placement = schedule_placement(tasks, [tight, CLOUD], "least_latency")
        assert placement == {"a": "edge", "b": "cloud"}

    def test_least_latency_argmin_property(self):
        # no task can strictly improve by moving to a resource with spare room
        rng = random.Random(4)
        for _ in range(50):
            resources = [
                ComputeResource(
                    f"r{i}",
                    rng.choice(list(ResourceTier)),
                    round(rng.uniform(0.01, 0.2), 3),
                    round(rng.uniform(0.0, 0.05), 3),
                    capacity=rng.randint(1, 3),
                )
                for i in range(rng.randint(2, 5))
            ]
            tasks = [detector(f"t{i}") for i in range(rng.randint(1, 6))]
            try:
                placement = schedule_placement(tasks, resources, "least_latency")
            except PlacementError:
                assert len(tasks) > sum(r.capacity for r in resources)
                continue
            load = {r.id: 0 for r in resources}
            for rid in placement.values():
                load[rid] += 1
            by_id = {r.id: r for r in resources}
            for task_id, rid in placement.items():
                mine = by_id[rid].total_latency
                for other in resources:
                    if other.id != rid and load[other.id] < other.capacity:
                        assert other.total_latency >= mine - 1e-12

    def test_tie_breaks_by_resource_id(self):
        a = ComputeResource("a", ResourceTier.EDGE, 0.03)
        b = ComputeResource("b", ResourceTier.EDGE, 0.03)
        placement = schedule_placement([detector()], [b, a], "least_latency")
        assert placement == {"det": "a"}

    def test_unknown_policy(self):
        with pytest.raises(ValidationError):
            schedule_placement([detector()], [EDGE], "random")


def telemetry(t, x=0.0, y=0.0, z=1.5, battery=90.0, state=MissionState.EN_ROUTE):
    return TelemetryEvent(t, Position3(x, y, z), Position3(0, 0, 0), battery, state)


class TestMonitoring:
    def test_two_aligned_series(self):
        events = [telemetry(float(t), x=float(t), battery=100.0 - t) for t in range(20)]
        series, _ = monitor_series(["battery", "height"], events)
        assert len(series["battery"]) == len(series["height"]) == 20
        assert [t for t, _ in series["battery"]] == [t for t, _ in series["height"]]

    def test_empty_stream_empty_series(self):
        series, flags = monitor_series(["battery"], [])
        assert series["battery"] == [] and flags == []

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            monitor_series(["thermal"], [])

    def test_stuck_drone_raises_reconciliation_flag(self):
        # en_route but stationary for longer than the 5 s window
        events = [telemetry(float(t), x=5.0, y=5.0) for t in range(12)]
        _, flags = monitor_series(["battery"], events)
        assert len(flags) == 1
        assert flags[0]["kind"] == "state_odometry_mismatch"

    def test_moving_drone_never_flags(self):
        events = [telemetry(float(t), x=1.4 * t) for t in range(30)]
        _, flags = monitor_series(["battery"], events)
        assert flags == []

    def test_hovering_drone_never_flags(self):
        events = [telemetry(float(t), state=MissionState.HOVER) for t in range(30)]
        _, flags = monitor_series(["battery"], events)
        assert flags == []
