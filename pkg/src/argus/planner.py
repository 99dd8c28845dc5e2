"""Commander-facing mission modes over a sealed cost graph.

Three modes: a weighted blend of normalized time and log-risk, fastest
path under a per-cell risk ceiling (with an automatic ceiling relaxation
fallback), and minimum risk under a hard time budget (delegated to the
label-setting solver). All modes share one KPI builder so results are
comparable and re-verifiable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np

from . import apulse, diagnostics
from .apulse import HeuristicMaps, SolverConfig, SolverStats
from .errors import InfeasibleBudgetError, NoPathError, ValidationError
from .risk import RiskField, ThreatSpec
from .terrain import CostGraph

# Cell-risk thresholds for the exposure breakdown: below the first value is
# low, above the second is high.
RISK_BINS = (0.15, 0.5)
CEILING_TOL = 1e-12


@dataclass(frozen=True)
class Balanced:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must be in [0,1], got {self.alpha}")


@dataclass(frozen=True)
class FastWithinRisk:
    max_risk: float

    def __post_init__(self):
        if not 0.0 <= self.max_risk <= 1.0:
            raise ValidationError(f"max_risk must be in [0,1], got {self.max_risk}")


@dataclass(frozen=True)
class SafeWithinTime:
    budget_s: float

    def __post_init__(self):
        if not self.budget_s > 0:
            raise ValidationError(f"budget_s must be > 0, got {self.budget_s}")


Mode = Balanced | FastWithinRisk | SafeWithinTime


@dataclass(frozen=True)
class MissionRequest:
    start: tuple[int, int]
    goal: tuple[int, int]
    mode: Mode
    formation_width_m: float = 0.0
    replan_slack: float = 0.25

    def __post_init__(self):
        if tuple(self.start) == tuple(self.goal):
            raise ValidationError("start and goal must differ")
        if self.formation_width_m < 0:
            raise ValidationError("formation_width_m must be >= 0")
        if self.replan_slack < 0:
            raise ValidationError("replan_slack must be >= 0")


@dataclass(frozen=True)
class PlanResult:
    path: tuple[tuple[int, int], ...]
    total_time_s: float
    total_distance_m: float
    total_log_risk: float
    survival_probability: float
    cpa_m: dict[str, float]
    exposure_m: dict[str, float]
    mode_echo: dict
    solver_stats: SolverStats
    flags: dict


def node_risk_form(graph: CostGraph) -> np.ndarray:
    """Per-node dilated risk recovered from the stored log cost."""
    return -np.expm1(-graph.node_log_risk)


def build_plan_result(
    graph: CostGraph,
    path_nodes: list[int],
    mode_echo: dict,
    stats: SolverStats | None = None,
    riskfield: RiskField | None = None,
    threats: tuple[ThreatSpec, ...] | list[ThreatSpec] = (),
    flags: dict | None = None,
) -> PlanResult:
    """Recompute all KPIs for a node path and assemble the result record."""
    if not path_nodes:
        raise ValidationError("path must not be empty")
    total_time, total_dist, total_risk = apulse.path_totals(graph, path_nodes)
    survival = math.exp(-total_risk)

    if riskfield is not None:
        rform = graph.raster_values(riskfield.risk_form)
    else:
        rform = node_risk_form(graph)
    exposure = {"low": 0.0, "medium": 0.0, "high": 0.0}
    for u, v in zip(path_nodes, path_nodes[1:]):
        j = graph.edge_index(u, v)
        r = rform[v]  # risk attributed to the entered cell
        if r < RISK_BINS[0]:
            exposure["low"] += float(graph.edist[j])
        elif r <= RISK_BINS[1]:
            exposure["medium"] += float(graph.edist[j])
        else:
            exposure["high"] += float(graph.edist[j])

    cells = [graph.cell_of(v) for v in path_nodes]
    cpa: dict[str, float] = {}
    for threat in threats:
        mr, mc = threat.mean_location_rc()
        best = min(
            math.hypot(r - mr, c - mc) * graph.cell_size_m for r, c in cells
        )
        cpa[threat.id] = best

    all_flags = {"fallback_used": False, "effective_max_risk": None,
                 "full_replan_used": False, "anytime": False}
    if flags:
        all_flags.update(flags)

    return PlanResult(
        path=tuple(cells),
        total_time_s=total_time,
        total_distance_m=total_dist,
        total_log_risk=total_risk,
        survival_probability=survival,
        cpa_m=cpa,
        exposure_m=exposure,
        mode_echo=dict(mode_echo),
        solver_stats=stats or SolverStats(),
        flags=all_flags,
    )


def _astar(
    graph: CostGraph,
    start: int,
    goal: int,
    edge_cost: np.ndarray,
    h: np.ndarray,
    allowed: np.ndarray | None = None,
) -> tuple[list[int], SolverStats]:
    """Single-cost A* with deterministic (f, accumulated-time, node) ordering.

    ``edge_cost`` is aligned with the graph's CSR edge arrays and must be
    non-negative; ``h`` must be admissible and consistent for it.
    """
    n = graph.node_count
    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    etime = graph.etime.tolist()
    cost = edge_cost.tolist()
    hs = h.tolist()
    allowed_list = None if allowed is None else allowed.tolist()

    stats = SolverStats()
    t0 = time.monotonic()
    g = [math.inf] * n
    gt = [math.inf] * n
    parent = [-1] * n
    closed = [False] * n
    g[start] = 0.0
    gt[start] = 0.0
    heap = [(hs[start], 0.0, start)]
    stats.labels_pushed = 1
    while heap:
        f, g_time, u = heappop(heap)
        stats.labels_popped += 1
        if closed[u]:
            continue
        closed[u] = True
        stats.labels_expanded += 1
        if u == goal:
            path = [u]
            while parent[path[-1]] >= 0:
                path.append(parent[path[-1]])
            stats.wall_time_s = time.monotonic() - t0
            return path[::-1], stats
        gu = g[u]
        for j in range(indptr[u], indptr[u + 1]):
            v = nbr[j]
            if closed[v] or (allowed_list is not None and not allowed_list[v]):
                continue
            ng = gu + cost[j]
            ngt = g_time + etime[j]
            if ng < g[v] or (ng == g[v] and ngt < gt[v]):
                g[v] = ng
                gt[v] = ngt
                parent[v] = u
                heappush(heap, (ng + hs[v], ngt, v))
                stats.labels_pushed += 1
    stats.wall_time_s = time.monotonic() - t0
    raise NoPathError(f"no path between nodes {start} and {goal}")


def _edge_target_risk(graph: CostGraph) -> np.ndarray:
    """Log-risk charged per edge: the risk of the entered cell."""
    return graph.node_log_risk[graph.nbr]


def plan_balanced(
    graph: CostGraph,
    req: MissionRequest,
    riskfield: RiskField | None = None,
    threats: tuple[ThreatSpec, ...] = (),
    config: SolverConfig | None = None,
) -> PlanResult:
    """Minimize alpha * normalized time + (1 - alpha) * normalized log-risk.

    Normalizers are the pure minimum time and the pure minimum log-risk
    between the same endpoints, found by two preliminary searches; they are
    echoed in the result so runs are reproducible.
    """
    if not isinstance(req.mode, Balanced):
        raise ValidationError("plan_balanced requires Balanced mode")
    alpha = req.mode.alpha
    start = graph.node_of(*req.start)
    goal = graph.node_of(*req.goal)
    maps = apulse.precompute_heuristics(graph, goal)
    if not math.isfinite(maps.time_to_goal[start]):
        raise NoPathError(f"goal {req.goal} unreachable from start {req.start}")

    risk_edge = _edge_target_risk(graph)
    # pure min-time reference
    tpath, tstats = _astar(graph, start, goal, graph.etime, maps.time_to_goal)
    t_ref = float(maps.time_to_goal[start]) or 1.0
    # pure min-risk reference (risk ties broken by time via the search ordering)
    rpath, rstats = _astar(graph, start, goal, risk_edge, maps.risk_to_goal)
    l_ref = float(maps.risk_to_goal[start])
    if l_ref == 0.0:
        l_ref = 1.0

    echo = {"type": "Balanced", "alpha": alpha, "time_ref_s": t_ref, "log_risk_ref": l_ref}
    if alpha == 1.0:
        return build_plan_result(graph, tpath, echo, tstats, riskfield, threats)
    if alpha == 0.0:
        return build_plan_result(graph, rpath, echo, rstats, riskfield, threats)

    edge_cost = alpha * graph.etime / t_ref + (1.0 - alpha) * risk_edge / l_ref
    h = alpha * maps.time_to_goal / t_ref + (1.0 - alpha) * maps.risk_to_goal / l_ref
    path, stats = _astar(graph, start, goal, edge_cost, h)
    return build_plan_result(graph, path, echo, stats, riskfield, threats)


def plan_fast_within_risk(
    graph: CostGraph,
    req: MissionRequest,
    riskfield: RiskField | None = None,
    threats: tuple[ThreatSpec, ...] = (),
    config: SolverConfig | None = None,
) -> PlanResult:
    """Fastest path through cells whose dilated risk stays under the ceiling.

    When the ceiling disconnects start from goal, it is relaxed to the
    smallest cell-risk value that restores connectivity and the result is
    flagged ``fallback_used`` with the effective ceiling.
    """
    if not isinstance(req.mode, FastWithinRisk):
        raise ValidationError("plan_fast_within_risk requires FastWithinRisk mode")
    ceiling = req.mode.max_risk
    start = graph.node_of(*req.start)
    goal = graph.node_of(*req.goal)
    rform = (
        graph.raster_values(riskfield.risk_form)
        if riskfield is not None
        else node_risk_form(graph)
    )

    effective = ceiling
    fallback = False
    if not _connected_under(graph, start, goal, rform, ceiling):
        fallback = True
        candidates = np.unique(rform[rform > ceiling + CEILING_TOL])
        lo, hi = 0, len(candidates) - 1
        found = None
        if len(candidates) and _connected_under(graph, start, goal, rform, float(candidates[-1])):
            while lo <= hi:
                mid = (lo + hi) // 2
                if _connected_under(graph, start, goal, rform, float(candidates[mid])):
                    found = float(candidates[mid])
                    hi = mid - 1
                else:
                    lo = mid + 1
        if found is None:
            raise NoPathError(
                f"no risk ceiling connects {req.start} to {req.goal}"
            )
        effective = found

    allowed = rform <= effective + CEILING_TOL
    maps_time = apulse._reverse_dijkstra(graph, goal, "time", allowed)
    if not math.isfinite(maps_time[start]):
        raise NoPathError("restricted subgraph became disconnected")
    path, stats = _astar(graph, start, goal, graph.etime, maps_time, allowed)

    worst = float(rform[path].max())
    if worst > effective + CEILING_TOL:
        diagnostics.counters["ceiling_violations"] += 1
        raise AssertionError(f"path risk {worst} violates ceiling {effective}")

    echo = {"type": "FastWithinRisk", "max_risk": ceiling, "effective_max_risk": effective}
    flags = {"fallback_used": fallback, "effective_max_risk": effective}
    return build_plan_result(graph, path, echo, stats, riskfield, threats, flags)


def _connected_under(
    graph: CostGraph, start: int, goal: int, rform: np.ndarray, ceiling: float
) -> bool:
    """BFS connectivity over cells at or below the risk ceiling."""
    allowed = rform <= ceiling + CEILING_TOL
    if not (allowed[start] and allowed[goal]):
        return False
    seen = np.zeros(graph.node_count, dtype=bool)
    seen[start] = True
    frontier = [start]
    nbr = graph.nbr
    indptr = graph.indptr
    while frontier:
        nxt = []
        for u in frontier:
            for j in range(indptr[u], indptr[u + 1]):
                v = int(nbr[j])
                if not seen[v] and allowed[v]:
                    if v == goal:
                        return True
                    seen[v] = True
                    nxt.append(v)
        frontier = nxt
    return False


def plan_safe_within_time(
    graph: CostGraph,
    req: MissionRequest,
    riskfield: RiskField | None = None,
    threats: tuple[ThreatSpec, ...] = (),
    config: SolverConfig | None = None,
) -> PlanResult:
    """Minimum-log-risk path whose total time stays within the budget."""
    if not isinstance(req.mode, SafeWithinTime):
        raise ValidationError("plan_safe_within_time requires SafeWithinTime mode")
    start = graph.node_of(*req.start)
    goal = graph.node_of(*req.goal)
    echo = {"type": "SafeWithinTime", "budget_s": req.mode.budget_s}
    result = apulse.solve(
        graph,
        start,
        goal,
        req.mode.budget_s,
        config=config,
        riskfield=riskfield,
        threats=tuple(threats),
        mode_echo=echo,
    )
    if result.total_time_s > req.mode.budget_s + apulse.BUDGET_TOL_S:
        diagnostics.counters["budget_violations"] += 1
        raise AssertionError("budget violated")
    return result


def plan(
    graph: CostGraph,
    req: MissionRequest,
    riskfield: RiskField | None = None,
    threats: tuple[ThreatSpec, ...] | list[ThreatSpec] = (),
    config: SolverConfig | None = None,
) -> PlanResult:
    """Dispatch a mission request to its mode solver."""
    graph.node_of(*req.start)  # validates non-obstacle, in bounds
    graph.node_of(*req.goal)
    threats = tuple(threats)
    if isinstance(req.mode, Balanced):
        return plan_balanced(graph, req, riskfield, threats, config)
    if isinstance(req.mode, FastWithinRisk):
        return plan_fast_within_risk(graph, req, riskfield, threats, config)
    if isinstance(req.mode, SafeWithinTime):
        return plan_safe_within_time(graph, req, riskfield, threats, config)
    raise ValidationError(f"unknown mission mode {req.mode!r}")


def compute_kpis(
    graph: CostGraph,
    riskfield: RiskField | None,
    threats: tuple[ThreatSpec, ...] | list[ThreatSpec],
    path: list[tuple[int, int]],
    mode_echo: dict | None = None,
) -> PlanResult:
    """KPI record for an externally supplied cell path."""
    nodes = [graph.node_of(r, c) for r, c in path]
    for u, v in zip(nodes, nodes[1:]):
        if not graph.has_edge(u, v):
            raise ValidationError(
                f"path cells {graph.cell_of(u)} -> {graph.cell_of(v)} not connected"
            )
    return build_plan_result(
        graph, nodes, mode_echo or {"type": "external"}, None, riskfield, tuple(threats)
    )
