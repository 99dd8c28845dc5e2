"""Command-line interface: plan, riskfield, patch, bench, serve, demo.

Exit codes: 0 success, 2 validation problem, 3 infeasible request,
4 solver timeout. Diagnostics go to stderr; requested artifacts to files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import bench as bench_mod
from . import io as argus_io
from . import planner, replan
from .apulse import SolverConfig
from .demo import write_demo
from .errors import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_TIMEOUT,
    EXIT_VALIDATION,
    ArgusError,
    InfeasibleBudgetError,
    NoPathError,
    ResourceExhaustedError,
    ValidationError,
)
from .risk import build_risk_field, load_threats
from .terrain import build_graph, default_mobility, load_grid, load_mobility


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        timeout_s=args.timeout_s,
        bucket_count_target=args.bucket_target,
    )


def _load_scene(args):
    grid = load_grid(args.terrain)
    mobility = load_mobility(args.mobility) if args.mobility else default_mobility(grid)
    threats = load_threats(args.threats) if args.threats else []
    return grid, mobility, threats


def cmd_plan(args) -> int:
    grid, mobility, threats = _load_scene(args)
    request = argus_io.load_mission(args.mission)
    riskfield = build_risk_field(grid, threats, request.formation_width_m)
    graph = build_graph(grid, mobility).with_log_risk(riskfield.log_risk)
    result = planner.plan(graph, request, riskfield, threats, _solver_config(args))
    payload = argus_io.result_json_bytes(result)
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode())
    if args.waypoints:
        text = argus_io.export_waypoints(grid, list(result.path), args.decimate)
        Path(args.waypoints).write_text(text)
    return EXIT_OK


def cmd_riskfield(args) -> int:
    grid, _, threats = _load_scene(args)
    riskfield = build_risk_field(grid, threats, args.formation_width)
    body = argus_io.riskfield_to_dict(
        riskfield, grid.rows, grid.cols, grid.cell_size_m, grid.origin
    )
    text = json.dumps(body, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_patch(args) -> int:
    grid, mobility, threats = _load_scene(args)
    request = argus_io.load_mission(args.mission)
    event = argus_io.load_event(args.event)
    stored = argus_io.load_result(args.result)
    riskfield = build_risk_field(grid, threats, request.formation_width_m)
    graph = build_graph(grid, mobility).with_log_risk(riskfield.log_risk)

    path = [tuple(cell) for cell in stored["path"]]
    original = planner.compute_kpis(graph, riskfield, threats, path, stored.get("mode"))
    field_new, graph_new, delta = replan.apply_event(graph, riskfield, event)
    threats_all = tuple(threats) + tuple(event.new_threats)
    slack = args.slack if args.slack is not None else request.replan_slack
    baseline = planner.compute_kpis(
        graph_new, field_new, threats_all, list(original.path), original.mode_echo
    )
    repaired = replan.repair(
        graph_new, field_new, original, event, delta, slack, threats_all, _solver_config(args)
    )
    report = replan.build_patch_report(baseline, repaired)
    comparison = replan.compare_repair_vs_full(
        graph_new, field_new, original, event, delta, slack, threats_all, _solver_config(args)
    )
    payload = {
        "result": argus_io.result_to_dict(repaired),
        "report": report,
        "comparison": comparison,
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = []
    for token in args.sizes.split(","):
        token = token.strip().lower()
        if "x" in token:
            r, c = token.split("x")
            sizes.append((int(r), int(c)))
        else:
            sizes.append((int(token), int(token)))
    slacks = [float(a) for a in args.alphas.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    solvers = [s.strip() for s in args.solvers.split(",")]
    rows = bench_mod.run_sweep(
        sizes, slacks, seeds, solvers,
        n_threats=args.threat_count,
        timeout_s=args.timeout_s,
        oracle_max_nodes=args.oracle_max_nodes,
    )
    table = bench_mod.render_table(rows)
    sys.stdout.write(table)
    if args.out:
        bench_mod.write_csv(rows, args.out)
        sys.stderr.write(f"wrote {args.out}\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(state_dir=args.state_dir, max_workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_demo(args) -> int:
    anchor = None
    if args.geo_anchor:
        lat, lon = args.geo_anchor.split(",")
        anchor = (float(lat), float(lon))
    paths = write_demo(args.out, anchor)
    sys.stderr.write(f"wrote {len(paths)} files to {args.out}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="argus", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, mission=True):
        p.add_argument("--terrain", required=True, help="terrain grid JSON")
        p.add_argument("--mobility", help="mobility model JSON (default: uniform 5 m/s)")
        p.add_argument("--threats", help="threat list JSON")
        if mission:
            p.add_argument("--mission", required=True, help="mission request JSON")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--timeout-s", type=float, default=600.0)
        p.add_argument("--bucket-target", type=int, default=8192)
        p.add_argument("--seed", type=int, default=0, help="accepted for interface parity")

    p = sub.add_parser("plan", help="solve one mission request")
    add_common(p)
    p.add_argument("--waypoints", help="also export a QGC WPL waypoint file")
    p.add_argument("--decimate", type=int, default=1)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("riskfield", help="emit the combined risk rasters")
    add_common(p, mission=False)
    p.add_argument("--formation-width", type=float, default=0.0)
    p.set_defaults(fn=cmd_riskfield)

    p = sub.add_parser("patch", help="repair a plan after a dynamic event")
    add_common(p)
    p.add_argument("--result", required=True, help="original plan result JSON")
    p.add_argument("--event", required=True, help="dynamic event JSON")
    p.add_argument("--slack", type=float, default=None,
                   help="override the mission's replan slack")
    p.set_defaults(fn=cmd_patch)

    p = sub.add_parser("bench", help="run the scaling benchmark sweep")
    p.add_argument("--sizes", default="16,32", help="comma list, e.g. 32,64 or 32x48")
    p.add_argument("--alphas", default="0.1,0.5", help="budget slack fractions")
    p.add_argument("--seeds", default="1", help="comma list of seeds")
    p.add_argument("--solvers", default="apulse,baseline")
    p.add_argument("--threat-count", type=int, default=None)
    p.add_argument("--timeout-s", type=float, default=600.0)
    p.add_argument("--oracle-max-nodes", type=int, default=bench_mod.ORACLE_MAX_NODES)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--state-dir", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("demo", help="write the bundled demo scenario files")
    p.add_argument("--out", default="demo")
    p.add_argument("--geo-anchor", help="lat,lon of cell (0,0) for degree waypoints")
    p.set_defaults(fn=cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InfeasibleBudgetError as exc:
        msg = str(exc)
        if math.isfinite(exc.min_time_s):
            msg += f" (minimum feasible time: {exc.min_time_s:.3f}s)"
        sys.stderr.write(f"infeasible: {msg}\n")
        return EXIT_INFEASIBLE
    except NoPathError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except ResourceExhaustedError as exc:
        sys.stderr.write(f"timeout: {exc}\n")
        return EXIT_TIMEOUT
    except ValidationError as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_VALIDATION
    except ArgusError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
