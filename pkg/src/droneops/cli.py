"""Command-line front end: run scenarios, compare schedulers, verify traces,
and serve the live control plane.

Exit codes: 0 ok, 2 input error (bad scenario/trace/arguments), 3 invariant
breach or faulted mission.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from .controlplane import MIN_OVERHEAD_FRAMES, build_overhead_report
from .engine import MissionResult, MissionStatus, run_mission
from .navigation import scheduler_names
from .scenario import Scenario, ScenarioError, load_scenario
from .trace import TraceError, read_trace, write_trace
from .verify import verify_events

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BREACH = 3


@dataclass
class MetricsReport:
    """Per-run metrics plus the optional scheduler comparison table."""

    scenario: str
    status: str
    waypoints_visited: int
    visit_order: list[str]
    total_path_length_m: float
    horizontal_tour_length_m: float
    mission_duration_s: float
    preempt_count: int
    abort_count: int
    overhead: dict[str, Any] | None = None
    comparison: list[dict[str, Any]] = field(default_factory=list)

    @classmethod
    def from_result(cls, scenario: Scenario, result: MissionResult) -> "MetricsReport":
        metrics = result.metrics
        overhead = None
        if len(result.overhead_samples) >= MIN_OVERHEAD_FRAMES:
            overhead = build_overhead_report(result.overhead_samples)
            overhead.pop("samples", None)
        return cls(
            scenario=scenario.name,
            status=result.status.value,
            waypoints_visited=metrics["waypoints_visited"],
            visit_order=metrics["visit_order"],
            total_path_length_m=metrics["total_path_length_m"],
            horizontal_tour_length_m=metrics["horizontal_tour_length_m"],
            mission_duration_s=metrics["mission_duration_s"],
            preempt_count=metrics["preempt_count"],
            abort_count=metrics["abort_count"],
            overhead=overhead,
        )

    def to_wire(self) -> dict[str, Any]:
        wire = {
            "scenario": self.scenario,
            "status": self.status,
            "waypoints_visited": self.waypoints_visited,
            "visit_order": self.visit_order,
            "total_path_length_m": self.total_path_length_m,
            "horizontal_tour_length_m": self.horizontal_tour_length_m,
            "mission_duration_s": self.mission_duration_s,
            "preempt_count": self.preempt_count,
            "abort_count": self.abort_count,
        }
        if self.overhead is not None:
            wire["overhead"] = self.overhead
        if self.comparison:
            wire["comparison"] = self.comparison
        return wire


def print_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    cells = [[str(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(headers)]
    print("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    print("  ".join("-" * w for w in widths))
    for row in cells:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)))


def shipped_scenarios() -> list[str]:
    root = resources.files("droneops").joinpath("scenarios")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario(ref: str) -> Scenario:
    """Accept either a scenario file path or the name of a shipped scenario."""
    path = Path(ref)
    if path.exists():
        return load_scenario(path)
    shipped = resources.files("droneops").joinpath("scenarios", f"{ref}.json")
    if shipped.is_file():
        with resources.as_file(shipped) as real:
            return load_scenario(real)
    raise ScenarioError(ref, f"no such scenario file; shipped scenarios: {', '.join(shipped_scenarios())}")


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    if getattr(args, "scheduler", None):
        if args.scheduler not in scheduler_names():
            raise ScenarioError("scheduler", f"unknown scheduler {args.scheduler!r}")
        scenario.scheduler = args.scheduler
    if getattr(args, "seed", None) is not None:
        scenario.seed = args.seed
    if getattr(args, "duration", None) is not None:
        scenario.duration_limit = args.duration
    if getattr(args, "pacing", None):
        scenario.pacing = args.pacing
    return scenario


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = _apply_overrides(resolve_scenario(args.scenario), args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    result = run_mission(scenario)
    report = MetricsReport.from_result(scenario, result)

    out_dir = Path(args.out) if args.out else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / f"{scenario.name}.trace.jsonl"
    report_path = out_dir / f"{scenario.name}.report.json"
    write_trace(trace_path, scenario, result.events)
    report_path.write_text(json.dumps(report.to_wire(), indent=2) + "\n")

    print(f"mission {scenario.name}: {result.status.value}")
    print_table(
        ["metric", "value"],
        [
            ["waypoints visited", report.waypoints_visited],
            ["visit order", " ".join(report.visit_order) or "-"],
            ["horizontal tour (m)", f"{report.horizontal_tour_length_m:.2f}"],
            ["total path (m)", f"{report.total_path_length_m:.2f}"],
            ["duration (s)", f"{report.mission_duration_s:.2f}"],
            ["preemptions", report.preempt_count],
            ["aborts", report.abort_count],
        ],
    )
    if report.overhead:
        print(
            f"overhead: median {report.overhead['median_overhead_ms']:.3f} ms, "
            f"p95 {report.overhead['p95_overhead_ms']:.3f} ms over {report.overhead['frames']} frames"
        )
    print(f"trace:  {trace_path}")
    print(f"report: {report_path}")

    if result.status is MissionStatus.FAULTED:
        print(f"fault: {result.fault}", file=sys.stderr)
        return EXIT_BREACH
    header, events = read_trace(trace_path)
    violations = verify_events(header, events)
    if violations:
        for v in violations:
            print(f"invariant breach: {v}", file=sys.stderr)
        return EXIT_BREACH
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    names = args.schedulers.split(",") if args.schedulers else ["ordered", "nearest_neighbor"]
    if len(names) < 2:
        print("compare needs at least two schedulers", file=sys.stderr)
        return EXIT_INPUT
    for name in names:
        if name not in scheduler_names():
            print(f"unknown scheduler {name!r}; registered: {', '.join(scheduler_names())}", file=sys.stderr)
            return EXIT_INPUT
    try:
        base = resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    rows = []
    visit_sets = []
    first_report: MetricsReport | None = None
    for name in names:
        scenario = resolve_scenario(args.scenario)
        scenario.scheduler = name
        if args.seed is not None:
            scenario.seed = args.seed
        result = run_mission(scenario)
        if result.status is MissionStatus.FAULTED:
            print(f"scheduler {name}: mission faulted: {result.fault}", file=sys.stderr)
            return EXIT_BREACH
        if first_report is None:
            first_report = MetricsReport.from_result(scenario, result)
        metrics = result.metrics
        visit_sets.append(set(metrics["visit_order"]))
        rows.append(
            {
                "scheduler": name,
                "visit_order": metrics["visit_order"],
                "horizontal_tour_length_m": metrics["horizontal_tour_length_m"],
                "total_path_length_m": metrics["total_path_length_m"],
                "mission_duration_s": metrics["mission_duration_s"],
            }
        )
    if any(vs != visit_sets[0] for vs in visit_sets[1:]):
        print("schedulers visited different waypoint sets", file=sys.stderr)
        return EXIT_BREACH

    print(f"scenario {base.name}: scheduler comparison")
    print_table(
        ["scheduler", "tour (m)", "path (m)", "duration (s)", "visit order"],
        [
            [
                r["scheduler"],
                f"{r['horizontal_tour_length_m']:.2f}",
                f"{r['total_path_length_m']:.2f}",
                f"{r['mission_duration_s']:.2f}",
                " ".join(r["visit_order"]),
            ]
            for r in rows
        ],
    )
    best = min(rows, key=lambda r: r["horizontal_tour_length_m"])
    worst = max(rows, key=lambda r: r["horizontal_tour_length_m"])
    print(f"savings: {worst['horizontal_tour_length_m'] - best['horizontal_tour_length_m']:.2f} m "
          f"({best['scheduler']} vs {worst['scheduler']})")
    if args.out:
        assert first_report is not None
        first_report.comparison = rows
        document = {"scenario": base.name, "rows": rows, "report": first_report.to_wire()}
        Path(args.out).write_text(json.dumps(document, indent=2) + "\n")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        header, events = read_trace(args.trace)
    except TraceError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    violations = verify_events(header, events)
    if not violations:
        print(f"PASS: {args.trace} ({len(events)} events, scenario {header.get('scenario')})")
        return EXIT_OK
    print(f"FAIL: {args.trace} ({len(violations)} violations)")
    for v in violations:
        print(f"  {v}")
    return EXIT_BREACH


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .controlplane import MissionService, create_app

    static = args.static
    if static is not None and not Path(static).is_dir():
        print(f"static dir {static} does not exist", file=sys.stderr)
        return EXIT_INPUT
    app = create_app(MissionService(), static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="droneops",
        description="Deterministic drone mission runtime: run scenarios, compare "
        "trajectory schedulers, verify traces, and serve the operator control plane.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario and write trace + report")
    run_p.add_argument("scenario", help="scenario file path or shipped scenario name")
    run_p.add_argument("--scheduler", help="override the trajectory scheduler")
    run_p.add_argument("--seed", type=int, help="override the scenario seed")
    run_p.add_argument("--duration", type=float, help="override the duration limit (s)")
    run_p.add_argument("--pacing", choices=["max", "realtime"], help="override pacing")
    run_p.add_argument("--out", help="output directory (default: cwd)")
    run_p.set_defaults(func=cmd_run)

    cmp_p = sub.add_parser("compare", help="run one scenario under several schedulers")
    cmp_p.add_argument("scenario", help="scenario file path or shipped scenario name")
    cmp_p.add_argument(
        "--schedulers", help="comma-separated scheduler names (default: ordered,nearest_neighbor)"
    )
    cmp_p.add_argument("--seed", type=int, help="override the scenario seed")
    cmp_p.add_argument("--out", help="write the comparison table to this JSON file")
    cmp_p.set_defaults(func=cmd_compare)

    replay_p = sub.add_parser("replay", help="re-check all invariants over a recorded trace")
    replay_p.add_argument("trace", help="trace file written by `run`")
    replay_p.set_defaults(func=cmd_replay)

    serve_p = sub.add_parser("serve", help="start the HTTP control plane")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8008)
    serve_p.add_argument("--static", help="serve an operator console from this directory")
    serve_p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
