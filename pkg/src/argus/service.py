"""HTTP facade: scenarios, risk fields, plans, events, profiles, waypoints.

Scenario state is held in memory as immutable snapshots; an optional state
directory persists uploads, plans, and applied events across restarts.
Solves run on a bounded worker pool so concurrent requests never share
mutable state.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response, StreamingResponse

from . import apulse, io as argus_io, planner, replan
from .apulse import SolverConfig
from .errors import (
    ArgusError,
    InfeasibleBudgetError,
    NoPathError,
    ParseError,
    ResourceExhaustedError,
    ValidationError,
)
from .risk import RiskField, ThreatSpec, build_risk_field, threat_from_dict, threat_to_dict
from .terrain import (
    CostGraph,
    MobilityModel,
    TerrainGrid,
    build_graph,
    default_mobility,
    grid_from_dict,
    grid_to_dict,
)

STATE_DIR_ENV = "ARGUS_STATE_DIR"


@dataclass
class Scenario:
    id: str
    grid: TerrainGrid
    mobility: MobilityModel
    threats: list[ThreatSpec]
    raw: dict
    plans: dict[str, dict] = field(default_factory=dict)
    events: list[dict] = field(default_factory=list)
    plan_seq: int = 0
    _fields: dict[float, tuple[RiskField, CostGraph]] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def field_for(self, width: float) -> tuple[RiskField, CostGraph]:
        with self.lock:
            cached = self._fields.get(width)
        if cached is not None:
            return cached
        riskfield = build_risk_field(self.grid, self.threats, width)
        graph = build_graph(self.grid, self.mobility).with_log_risk(riskfield.log_risk)
        with self.lock:
            self._fields[width] = (riskfield, graph)
        return riskfield, graph


class ScenarioStore:
    def __init__(self, state_dir: str | None = None):
        self._scenarios: dict[str, Scenario] = {}
        self._lock = threading.Lock()
        self.state_dir = Path(state_dir) if state_dir else None
        if self.state_dir:
            self.state_dir.mkdir(parents=True, exist_ok=True)
            self._restore()

    def _restore(self) -> None:
        for path in sorted(self.state_dir.glob("*.json")):
            raw = json.loads(path.read_text())
            scenario = _scenario_from_raw(raw["scenario"])
            scenario.plans = raw.get("plans", {})
            scenario.plan_seq = raw.get("plan_seq", len(scenario.plans))
            for event_raw in raw.get("events", []):
                _apply_event_to_scenario(scenario, argus_io.event_from_dict(event_raw))
                scenario.events.append(event_raw)
            self._scenarios[scenario.id] = scenario

    def persist(self, scenario: Scenario) -> None:
        if not self.state_dir:
            return
        payload = {
            "scenario": scenario.raw,
            "plans": scenario.plans,
            "events": scenario.events,
            "plan_seq": scenario.plan_seq,
        }
        (self.state_dir / f"{scenario.id}.json").write_text(json.dumps(payload))

    def add(self, scenario: Scenario) -> None:
        with self._lock:
            self._scenarios[scenario.id] = scenario
        self.persist(scenario)

    def get(self, scenario_id: str) -> Scenario | None:
        with self._lock:
            return self._scenarios.get(scenario_id)


def _scenario_from_raw(raw: dict) -> Scenario:
    if "terrain" not in raw:
        raise ValidationError("scenario: missing field 'terrain'")
    grid = grid_from_dict(raw["terrain"])
    threats = [threat_from_dict(t, i) for i, t in enumerate(raw.get("threats", []))]
    if raw.get("mobility"):
        mob_raw = raw["mobility"]
        mobility = MobilityModel(
            class_speed={int(k): float(v) for k, v in mob_raw["class_speed"].items()},
            slope_breaks=tuple((float(s), float(f)) for s, f in mob_raw.get("slope_factor", [[0.0, 1.0]])),
            max_slope=float(mob_raw.get("max_slope", 1.0)),
            ascent_window=int(mob_raw.get("ascent_window", 4)),
            ascent_threshold=float(mob_raw.get("ascent_threshold", 0.6)),
        )
    else:
        mobility = default_mobility(grid)
    content = json.dumps(raw, sort_keys=True).encode()
    sid = hashlib.sha256(content).hexdigest()[:12]
    return Scenario(id=sid, grid=grid, mobility=mobility, threats=threats, raw=raw)


def _apply_event_to_scenario(scenario: Scenario, event: replan.DynamicEvent) -> None:
    """Events permanently add threats; cached fields are rebuilt lazily."""
    scenario.threats = list(scenario.threats) + list(event.new_threats)
    with scenario.lock:
        scenario._fields.clear()


def _error_response(exc: Exception) -> JSONResponse:
    if isinstance(exc, (ValidationError, ParseError)):
        return JSONResponse({"error": str(exc)}, status_code=400)
    if isinstance(exc, InfeasibleBudgetError):
        body = {"error": str(exc)}
        if math.isfinite(exc.min_time_s):
            body["min_time_s"] = exc.min_time_s
        return JSONResponse(body, status_code=409)
    if isinstance(exc, NoPathError):
        return JSONResponse({"error": str(exc)}, status_code=409)
    if isinstance(exc, ResourceExhaustedError):
        return JSONResponse({"error": str(exc)}, status_code=503)
    raise exc


def create_app(state_dir: str | None = None, max_workers: int | None = None) -> FastAPI:
    state_dir = state_dir or os.environ.get(STATE_DIR_ENV) or None
    store = ScenarioStore(state_dir)
    workers = max_workers or os.cpu_count() or 4
    app = FastAPI(title="argus mission planner")
    app.state.store = store
    app.state.pool = ThreadPoolExecutor(max_workers=workers)

    async def run_solve(fn, *args, **kwargs):
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(app.state.pool, lambda: fn(*args, **kwargs))

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.post("/scenario")
    async def upload_scenario(request: Request):
        try:
            raw = await request.json()
        except json.JSONDecodeError as exc:
            return JSONResponse({"error": f"invalid JSON: {exc}"}, status_code=400)
        try:
            scenario = _scenario_from_raw(raw)
            scenario.field_for(0.0)  # validate eagerly
        except ArgusError as exc:
            return _error_response(exc)
        store.add(scenario)
        return {"scenario_id": scenario.id}

    @app.get("/scenario/{scenario_id}/riskfield")
    async def riskfield(scenario_id: str, formation_width: float = 0.0):
        scenario = store.get(scenario_id)
        if scenario is None:
            return JSONResponse({"error": "unknown scenario"}, status_code=404)
        try:
            field_, _ = await run_solve(scenario.field_for, formation_width)
        except ArgusError as exc:
            return _error_response(exc)
        body = argus_io.riskfield_to_dict(
            field_, scenario.grid.rows, scenario.grid.cols,
            scenario.grid.cell_size_m, scenario.grid.origin,
        )
        body["land_cover"] = [int(v) for v in scenario.grid.land_cover.ravel()]
        body["elevation"] = [float(v) for v in scenario.grid.elevation.ravel()]
        body["obstacles"] = [int(v) for v in scenario.grid.obstacle.ravel()]
        body["threats"] = [threat_to_dict(t) for t in scenario.threats]
        return body

    def _solve_plan(scenario: Scenario, req: planner.MissionRequest, config: SolverConfig):
        riskfield_, graph = scenario.field_for(req.formation_width_m)
        result = planner.plan(graph, req, riskfield_, tuple(scenario.threats), config)
        return result

    @app.post("/scenario/{scenario_id}/plan")
    async def plan_mission(scenario_id: str, request: Request, stream: int = 0):
        scenario = store.get(scenario_id)
        if scenario is None:
            return JSONResponse({"error": "unknown scenario"}, status_code=404)
        try:
            raw = await request.json()
        except json.JSONDecodeError as exc:
            return JSONResponse({"error": f"invalid JSON: {exc}"}, status_code=400)
        timeout_s = float(raw.pop("timeout_s", 600.0)) if isinstance(raw, dict) else 600.0
        bucket_target = int(raw.pop("bucket_target", 8192)) if isinstance(raw, dict) else 8192
        try:
            req = argus_io.mission_from_dict(raw)
        except ArgusError as exc:
            return _error_response(exc)
        config = SolverConfig(timeout_s=timeout_s, bucket_count_target=bucket_target)

        if stream:
            return StreamingResponse(
                _stream_plan(scenario, req, config), media_type="application/x-ndjson"
            )
        try:
            result = await run_solve(_solve_plan, scenario, req, config)
        except ArgusError as exc:
            return _error_response(exc)
        plan_id = _register_plan(store, scenario, req, result)
        return Response(
            content=argus_io.result_json_bytes(result),
            media_type="application/json",
            headers={"X-Plan-Id": plan_id},
        )

    def _stream_plan(scenario: Scenario, req: planner.MissionRequest, config: SolverConfig):
        """NDJSON heartbeat while the solve runs, then the result or error."""
        future = app.state.pool.submit(_solve_plan, scenario, req, config)
        import time as _time

        while True:
            try:
                result = future.result(timeout=0.5)
                break
            except FutureTimeout:
                yield json.dumps({"heartbeat": _time.time()}) + "\n"
            except ArgusError as exc:
                yield json.dumps({"error": str(exc)}) + "\n"
                return
        plan_id = _register_plan(store, scenario, req, result)
        yield json.dumps({"plan_id": plan_id, "result": argus_io.result_to_dict(result)}) + "\n"

    @app.post("/scenario/{scenario_id}/event")
    async def inject_event(scenario_id: str, request: Request):
        scenario = store.get(scenario_id)
        if scenario is None:
            return JSONResponse({"error": "unknown scenario"}, status_code=404)
        try:
            raw = await request.json()
        except json.JSONDecodeError as exc:
            return JSONResponse({"error": f"invalid JSON: {exc}"}, status_code=400)
        plan_id = raw.get("plan_id")
        if plan_id not in scenario.plans:
            return JSONResponse({"error": f"unknown plan '{plan_id}'"}, status_code=404)
        stored = scenario.plans[plan_id]
        try:
            event = argus_io.event_from_dict(raw)
            req = argus_io.mission_from_dict(stored["request"])
            repaired, report, comparison = await run_solve(
                _run_event, scenario, stored, req, event, raw
            )
        except ArgusError as exc:
            return _error_response(exc)
        scenario.events.append({k: v for k, v in raw.items() if k != "plan_id"})
        new_id = _register_plan(store, scenario, req, repaired)
        return {
            "plan_id": new_id,
            "result": argus_io.result_to_dict(repaired),
            "report": report,
            "comparison": comparison,
        }

    def _run_event(scenario, stored, req, event, raw):
        riskfield_, graph = scenario.field_for(req.formation_width_m)
        original = _result_from_stored(graph, riskfield_, scenario, stored)
        field_new, graph_new, delta = replan.apply_event(graph, riskfield_, event)
        slack = float(raw.get("slack", req.replan_slack))
        threats_all = tuple(scenario.threats) + tuple(event.new_threats)
        baseline = planner.compute_kpis(
            graph_new, field_new, threats_all, list(original.path), original.mode_echo
        )
        repaired = replan.repair(
            graph_new, field_new, original, event, delta, slack, threats_all
        )
        comparison = replan.compare_repair_vs_full(
            graph_new, field_new, original, event, delta, slack, threats_all
        )
        report = replan.build_patch_report(baseline, repaired)
        _apply_event_to_scenario(scenario, event)
        store.persist(scenario)
        return repaired, report, comparison

    @app.get("/scenario/{scenario_id}/profile")
    async def profile(scenario_id: str, plan: str):
        scenario = store.get(scenario_id)
        if scenario is None:
            return JSONResponse({"error": "unknown scenario"}, status_code=404)
        stored = scenario.plans.get(plan)
        if stored is None:
            return JSONResponse({"error": f"unknown plan '{plan}'"}, status_code=404)
        try:
            req = argus_io.mission_from_dict(stored["request"])
            riskfield_, graph = scenario.field_for(req.formation_width_m)
        except ArgusError as exc:
            return _error_response(exc)
        grid = scenario.grid
        points = []
        dist = t = 0.0
        prev = None
        for r, c in stored["result"]["path"]:
            if prev is not None:
                u = graph.node_of(*prev)
                v = graph.node_of(r, c)
                j = graph.edge_index(u, v)
                dist += float(graph.edist[j])
                t += float(graph.etime[j])
            x, y = grid.cell_xy(r, c)
            points.append(
                {
                    "row": r,
                    "col": c,
                    "x_m": x,
                    "y_m": y,
                    "distance_m": dist,
                    "time_s": t,
                    "altitude_m": float(grid.elevation[r, c]),
                    "risk": float(riskfield_.risk_form[r, c]),
                    "log_risk": float(riskfield_.log_risk[r, c]),
                    "land_cover": int(grid.land_cover[r, c]),
                }
            )
            prev = (r, c)
        return {"plan_id": plan, "points": points}

    @app.get("/scenario/{scenario_id}/waypoints")
    async def waypoints(scenario_id: str, plan: str, decimate: int = 1):
        scenario = store.get(scenario_id)
        if scenario is None:
            return JSONResponse({"error": "unknown scenario"}, status_code=404)
        stored = scenario.plans.get(plan)
        if stored is None:
            return JSONResponse({"error": f"unknown plan '{plan}'"}, status_code=404)
        try:
            path = [tuple(cell) for cell in stored["result"]["path"]]
            text = argus_io.export_waypoints(scenario.grid, path, decimate)
        except ArgusError as exc:
            return _error_response(exc)
        return PlainTextResponse(
            text,
            headers={"Content-Disposition": f'attachment; filename="{plan}.waypoints"'},
        )

    @app.get("/scenario/{scenario_id}/plans")
    async def list_plans(scenario_id: str):
        scenario = store.get(scenario_id)
        if scenario is None:
            return JSONResponse({"error": "unknown scenario"}, status_code=404)
        return {
            "plans": [
                {"plan_id": pid, "request": stored["request"], "kpis": stored["result"]["kpis"]}
                for pid, stored in scenario.plans.items()
            ]
        }

    return app


def _register_plan(
    store: ScenarioStore,
    scenario: Scenario,
    req: planner.MissionRequest,
    result: planner.PlanResult,
) -> str:
    with scenario.lock:
        scenario.plan_seq += 1
        plan_id = f"p{scenario.plan_seq}"
        scenario.plans[plan_id] = {
            "request": argus_io.mission_to_dict(req),
            "result": argus_io.result_to_dict(result),
        }
    store.persist(scenario)
    return plan_id


def _result_from_stored(graph, riskfield_, scenario, stored) -> planner.PlanResult:
    path = [tuple(cell) for cell in stored["result"]["path"]]
    return planner.compute_kpis(
        graph, riskfield_, tuple(scenario.threats), path, stored["result"]["mode"]
    )
