"""Benchmark harness: seeded instances, an exhaustive oracle, and sweeps.

The oracle enumerates simple paths with branch-and-bound on time and is a
deliberately separate implementation from the main solver: it reuses only
the graph data, never the solver's heuristics or pruning machinery. The
baseline is a classical label-correcting search keeping full Pareto label
sets per node (no heuristics, no buckets); it doubles as a medium-scale
correctness reference and as the speed yardstick the main solver is
measured against.
"""

from __future__ import annotations

import csv
import hashlib
import math
import time
from dataclasses import dataclass
from heapq import heappop, heappush
from pathlib import Path

import numpy as np

from . import apulse
from .apulse import SolverConfig
from .errors import InfeasibleBudgetError, ValidationError
from .risk import DetectionParams, ThreatSpec, build_risk_field
from .terrain import CostGraph, MobilityModel, TerrainGrid, build_graph

ORACLE_MAX_NODES = 60


class BenchTimeout(Exception):
    """Raised internally when a solver exceeds its wall-clock cap."""


@dataclass(frozen=True)
class BenchInstance:
    grid: TerrainGrid
    threats: tuple[ThreatSpec, ...]
    graph: CostGraph
    start: int
    goal: int
    t_min_s: float
    seed: int

    def budget(self, slack: float) -> float:
        return (1.0 + slack) * self.t_min_s

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.graph.etime.tobytes())
        h.update(self.graph.node_log_risk.tobytes())
        h.update(f"{self.start}:{self.goal}".encode())
        return h.hexdigest()[:16]


def generate_instance(
    rows: int,
    cols: int,
    n_threats: int,
    seed: int,
    formation_width_m: float = 0.0,
    blocking_band: bool = True,
    ambient: bool = True,
) -> BenchInstance:
    """Deterministic random instance: flat terrain, threats across the middle.

    Start and goal sit at opposite corners (maximal separation). With
    ``blocking_band`` the threats form sensor curtains whose gaps oppose the
    diagonal, so the time budget genuinely binds. ``ambient`` adds a lattice
    of weak wide-area sensors: every cell carries a small positive risk, so
    aimless wandering costs something and no zero-risk corridor survives.
    """
    if rows < 2 or cols < 2:
        raise ValidationError("instance dimensions must be >= 2")
    rng = np.random.default_rng(seed)
    grid_cell = 25.0
    grid = TerrainGrid(
        rows=rows,
        cols=cols,
        cell_size_m=grid_cell,
        origin=(0.0, 0.0),
        elevation=np.zeros((rows, cols)),
        land_cover=np.zeros((rows, cols), dtype=np.int32),
        obstacle=np.zeros((rows, cols), dtype=bool),
    )
    mobility = MobilityModel(class_speed={0: 5.0})
    placements: list[tuple[int, int, float]] = []
    if n_threats <= 0:
        pass
    elif blocking_band:
        # serpentine sensor curtains: stratified disks chain down jittered
        # columns, each curtain leaving a gap at the end opposing the
        # start-goal diagonal. Reaching both gaps needs doubling back, so
        # the solver must trade curtain crossings against detour time.
        n_curtains = 2
        per = max(3, n_threats // n_curtains)
        gap = max(2, rows // 5)
        for k in range(n_curtains):
            col = int(cols * (k + 1) / (n_curtains + 1))
            # gaps oppose the start-to-goal diagonal (first gap at the far
            # side, next at the near side), so cheap crossings require
            # doubling back rather than a monotone staircase
            lo_r, hi_r = (0, rows - gap) if k % 2 == 0 else (gap, rows)
            spacing_m = (hi_r - lo_r) * grid_cell / per
            for i in range(per):
                c = min(max(col + int(rng.integers(-2, 3)), 0), cols - 1)
                r = int(lo_r + (i + 0.5) * (hi_r - lo_r) / per + rng.integers(-2, 3))
                r = min(max(r, 0), rows - 1)
                lo = max(100.0, 0.7 * spacing_m)
                placements.append((r, c, float(rng.uniform(lo, lo + 100.0))))
    else:
        for _ in range(n_threats):
            r = int(rng.integers(0, rows))
            c = int(rng.integers(0, cols))
            placements.append((r, c, float(rng.uniform(75.0, 200.0))))

    threats = []
    if ambient and n_threats > 0:
        step = 4
        for r0 in range(step // 2, rows, step):
            for c0 in range(step // 2, cols, step):
                threats.append(
                    ThreatSpec(
                        id=f"amb-{r0}-{c0}",
                        detection=DetectionParams(
                            range_m=120.0, plateau_fraction=0.4, decay_exponent=1.5
                        ),
                        impact=0.12,
                        prior_rows=np.array([r0]),
                        prior_cols=np.array([c0]),
                        prior_weights=np.array([1.0]),
                    )
                )
    for i, (r, c, range_m) in enumerate(placements):
        # short multi-cell prior so expected detection grades below 1.0
        dr, dc = ((0, 1), (1, 0), (1, 1))[int(rng.integers(0, 3))]
        support = [(r + k * dr, c + k * dc) for k in range(3)]
        support = [(rr, cc) for rr, cc in support if 0 <= rr < rows and 0 <= cc < cols]
        weights = rng.uniform(0.5, 1.5, size=len(support))
        threats.append(
            ThreatSpec(
                id=f"t{i}",
                detection=DetectionParams(
                    range_m=range_m,
                    plateau_fraction=float(rng.uniform(0.3, 0.5)),
                    decay_exponent=float(rng.uniform(1.0, 3.0)),
                ),
                impact=float(rng.uniform(0.55, 0.75)),
                prior_rows=np.array([s[0] for s in support]),
                prior_cols=np.array([s[1] for s in support]),
                prior_weights=weights,
            )
        )
    field = build_risk_field(grid, threats, formation_width_m)
    graph = build_graph(grid, mobility).with_log_risk(field.log_risk)
    start = graph.node_of(0, 0)
    goal = graph.node_of(rows - 1, cols - 1)
    maps = apulse.precompute_heuristics(graph, goal)
    t_min = float(maps.time_to_goal[start])
    if not math.isfinite(t_min):
        raise ValidationError("generated instance is disconnected")
    return BenchInstance(
        grid=grid,
        threats=tuple(threats),
        graph=graph,
        start=start,
        goal=goal,
        t_min_s=t_min,
        seed=seed,
    )


def _time_lower_bounds(graph: CostGraph, goal: int) -> list[float]:
    """Plain reverse Dijkstra on time, written independently of the solver."""
    n = graph.node_count
    dist = [math.inf] * n
    dist[goal] = 0.0
    # forward time of (u, v) looked up by scanning u's sorted neighbor block
    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    etime = graph.etime.tolist()
    heap = [(0.0, goal)]
    while heap:
        d, v = heappop(heap)
        if d > dist[v]:
            continue
        for j in range(indptr[v], indptr[v + 1]):
            u = nbr[j]
            lo, hi = indptr[u], indptr[u + 1]
            k = lo
            while nbr[k] != v:
                k += 1
            nd = d + etime[k]
            if nd < dist[u]:
                dist[u] = nd
                heappush(heap, (nd, u))
    return dist


def _risk_lower_bounds(graph: CostGraph, goal: int) -> list[float]:
    """Reverse Dijkstra on node log-risk (cells after the departure node)."""
    n = graph.node_count
    dist = [math.inf] * n
    dist[goal] = 0.0
    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    lrisk = graph.node_log_risk.tolist()
    heap = [(0.0, goal)]
    while heap:
        d, v = heappop(heap)
        if d > dist[v]:
            continue
        nd = d + lrisk[v]
        for j in range(indptr[v], indptr[v + 1]):
            u = nbr[j]
            if nd < dist[u]:
                dist[u] = nd
                heappush(heap, (nd, u))
    return dist


def enumerate_paths(
    graph: CostGraph,
    start: int,
    goal: int,
    budget_s: float | None = None,
    max_nodes: int = ORACLE_MAX_NODES,
):
    """Yield (nodes, time_s, log_risk) for every simple start-goal path.

    With a budget, prefixes that cannot reach the goal in time are cut
    using an independent reverse time map; without one, the enumeration is
    complete. Guarded by node count to prevent accidental exponential runs.
    """
    if graph.node_count > max_nodes:
        raise ValidationError(
            f"enumeration refused: {graph.node_count} nodes > guard {max_nodes}"
        )
    tlb = _time_lower_bounds(graph, goal) if budget_s is not None else None
    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    etime = graph.etime.tolist()
    lrisk = graph.node_log_risk.tolist()
    budget_hi = None if budget_s is None else budget_s + 1e-9

    path = [start]
    times = [0.0]
    risks = [0.0]
    visited = 1 << start
    # iterator stack of neighbor cursors
    stack = [indptr[start]]
    while stack:
        j = stack[-1]
        u = path[-1]
        if j >= indptr[u + 1]:
            stack.pop()
            path.pop()
            times.pop()
            risks.pop()
            if path:
                visited &= ~(1 << u)
                stack[-1] += 1
            continue
        v = nbr[j]
        if visited & (1 << v):
            stack[-1] += 1
            continue
        nt = times[-1] + etime[j]
        if budget_hi is not None and nt + tlb[v] > budget_hi:
            stack[-1] += 1
            continue
        nr = risks[-1] + lrisk[v]
        if v == goal:
            yield list(path) + [v], nt, nr
            stack[-1] += 1
            continue
        path.append(v)
        times.append(nt)
        risks.append(nr)
        visited |= 1 << v
        stack.append(indptr[v])


def oracle_optimal(
    graph: CostGraph,
    start: int,
    goal: int,
    budget_s: float,
    max_nodes: int = ORACLE_MAX_NODES,
) -> tuple[float, list[int], float]:
    """Exact constrained optimum by exhaustive simple-path search.

    Branch-and-bound: prefixes are cut on the time budget (independent
    reverse time map) and on the risk incumbent (log-risk never decreases
    along a path). Returns (risk, path, time); raises InfeasibleBudgetError
    when no simple path fits the budget.
    """
    if graph.node_count > max_nodes:
        raise ValidationError(
            f"oracle refused: {graph.node_count} nodes > guard {max_nodes}"
        )
    tlb = _time_lower_bounds(graph, goal)
    if not math.isfinite(tlb[start]) or tlb[start] > budget_s + 1e-9:
        raise InfeasibleBudgetError(
            f"budget {budget_s} below minimum time {tlb[start]}", min_time_s=tlb[start]
        )
    rlb = _risk_lower_bounds(graph, goal)
    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    etime = graph.etime.tolist()
    lrisk = graph.node_log_risk.tolist()
    budget_hi = budget_s + 1e-9

    best_risk = math.inf
    best_path: list[int] = []
    best_time = math.inf

    path = [start]
    times = [0.0]
    risks = [0.0]
    visited = 1 << start
    stack = [indptr[start]]
    while stack:
        j = stack[-1]
        u = path[-1]
        if j >= indptr[u + 1]:
            stack.pop()
            path.pop()
            times.pop()
            risks.pop()
            if path:
                visited &= ~(1 << u)
                stack[-1] += 1
            continue
        v = nbr[j]
        if visited & (1 << v):
            stack[-1] += 1
            continue
        nt = times[-1] + etime[j]
        if nt + tlb[v] > budget_hi:
            stack[-1] += 1
            continue
        nr = risks[-1] + lrisk[v]
        if nr + rlb[v] >= best_risk:
            stack[-1] += 1
            continue
        if v == goal:
            best_risk, best_time = nr, nt
            best_path = list(path) + [v]
            stack[-1] += 1
            continue
        path.append(v)
        times.append(nt)
        risks.append(nr)
        visited |= 1 << v
        stack.append(indptr[v])

    if not best_path:
        raise InfeasibleBudgetError(
            f"no simple path satisfies budget {budget_s}", min_time_s=tlb[start]
        )
    return best_risk, best_path, best_time


def baseline_label_correcting(
    graph: CostGraph,
    start: int,
    goal: int,
    budget_s: float,
    timeout_s: float = 600.0,
) -> tuple[float, float, int]:
    """Exact label-correcting with full Pareto (time, risk) sets per node.

    No heuristics, no buckets: the classical approach the main solver is
    benchmarked against. Returns (risk, time, labels_processed); raises
    BenchTimeout past the wall-clock cap and InfeasibleBudgetError when no
    feasible label reaches the goal.
    """
    t0 = time.monotonic()
    n = graph.node_count
    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    etime = graph.etime.tolist()
    lrisk = graph.node_log_risk.tolist()
    budget_hi = budget_s + 1e-9

    pareto: list[list[tuple[float, float]]] = [[] for _ in range(n)]
    pareto[start] = [(0.0, 0.0)]
    heap = [(0.0, 0.0, start)]
    processed = 0
    goal_best = math.inf
    goal_time = math.inf
    while heap:
        risk, t, u = heappop(heap)
        processed += 1
        if processed % 1024 == 0 and time.monotonic() - t0 > timeout_s:
            raise BenchTimeout(f"baseline exceeded {timeout_s}s")
        # skip labels dominated since insertion
        if any(pr <= risk and pt <= t and (pr, pt) != (risk, t) for pt, pr in pareto[u]):
            continue
        if u == goal:
            if risk < goal_best:
                goal_best, goal_time = risk, t
            continue
        for j in range(indptr[u], indptr[u + 1]):
            v = nbr[j]
            nt = t + etime[j]
            if nt > budget_hi:
                continue
            nr = risk + lrisk[v]
            dominated = False
            keep = []
            for pt, pr in pareto[v]:
                if pt <= nt and pr <= nr:
                    dominated = True
                    keep = None
                    break
                if not (nt <= pt and nr <= pr):
                    keep.append((pt, pr))
            if dominated:
                continue
            keep.append((nt, nr))
            pareto[v] = keep
            heappush(heap, (nr, nt, v))
    if not math.isfinite(goal_best):
        raise InfeasibleBudgetError(
            f"baseline found no path within {budget_s}s", min_time_s=math.nan
        )
    return goal_best, goal_time, processed


@dataclass
class SweepRow:
    rows: int
    cols: int
    nodes: int
    seed: int
    slack: float
    solver: str
    wall_s: float
    risk: float | None
    time_s: float | None
    expansions: int
    pruned: int
    timeout: bool
    optimal: bool | None  # vs oracle, when the oracle is applicable
    gap_pct: float | None


def run_sweep(
    sizes: list[tuple[int, int]],
    slacks: list[float],
    seeds: list[int],
    solvers: list[str] = ("apulse", "baseline"),
    n_threats: int | None = None,
    timeout_s: float = 600.0,
    oracle_max_nodes: int = ORACLE_MAX_NODES,
    config: SolverConfig | None = None,
) -> list[SweepRow]:
    """Grid of (instance, slack, solver) runs; failures are recorded as data."""
    rows_out: list[SweepRow] = []
    for rows, cols in sizes:
        for seed in seeds:
            count = n_threats if n_threats is not None else max(6, rows // 10)
            inst = generate_instance(rows, cols, count, seed)
            oracle_risk = None
            for slack in slacks:
                budget = inst.budget(slack)
                if inst.graph.node_count <= oracle_max_nodes:
                    oracle_risk, _, _ = oracle_optimal(
                        inst.graph, inst.start, inst.goal, budget, oracle_max_nodes
                    )
                for solver in solvers:
                    rows_out.append(
                        _run_cell(inst, slack, budget, solver, timeout_s, oracle_risk, config)
                    )
    return rows_out


def _run_cell(
    inst: BenchInstance,
    slack: float,
    budget: float,
    solver: str,
    timeout_s: float,
    oracle_risk: float | None,
    config: SolverConfig | None,
) -> SweepRow:
    base = dict(
        rows=inst.grid.rows,
        cols=inst.grid.cols,
        nodes=inst.graph.node_count,
        seed=inst.seed,
        slack=slack,
        solver=solver,
    )
    t0 = time.monotonic()
    try:
        if solver == "apulse":
            cfg = config or SolverConfig(timeout_s=timeout_s)
            result = apulse.solve(inst.graph, inst.start, inst.goal, budget, config=cfg)
            wall = time.monotonic() - t0
            stats = result.solver_stats
            risk, t = result.total_log_risk, result.total_time_s
            expansions = stats.labels_expanded
            pruned = stats.pruned_infeasible + stats.pruned_bound + stats.pruned_dominated
            timed_out = result.flags.get("anytime", False)
        elif solver == "baseline":
            risk, t, expansions = baseline_label_correcting(
                inst.graph, inst.start, inst.goal, budget, timeout_s
            )
            wall = time.monotonic() - t0
            pruned = 0
            timed_out = False
        else:
            raise ValidationError(f"unknown solver '{solver}'")
    except BenchTimeout:
        return SweepRow(**base, wall_s=timeout_s, risk=None, time_s=None,
                        expansions=0, pruned=0, timeout=True, optimal=None, gap_pct=None)

    optimal = None
    gap = None
    if oracle_risk is not None and risk is not None:
        gap = (risk - oracle_risk) / oracle_risk * 100.0 if oracle_risk > 0 else 0.0
        optimal = abs(risk - oracle_risk) <= 1e-9 + 1e-9 * abs(oracle_risk)
    return SweepRow(**base, wall_s=wall, risk=risk, time_s=t, expansions=expansions,
                    pruned=pruned, timeout=timed_out, optimal=optimal, gap_pct=gap)


def write_csv(rows: list[SweepRow], path: str | Path) -> None:
    fields = [
        "rows", "cols", "nodes", "seed", "slack", "solver", "wall_s", "risk",
        "time_s", "expansions", "pruned", "timeout", "optimal", "gap_pct",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([getattr(row, f) for f in fields])


def render_table(rows: list[SweepRow]) -> str:
    """Readable runtime table plus an optimality summary."""
    lines = []
    header = f"{'scale':>12} {'slack':>6} {'solver':>9} {'wall (s)':>10} {'risk':>12} {'expanded':>10} {'status':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for row in rows:
        scale = f"{row.rows}x{row.cols}"
        status = "timeout" if row.timeout else "ok"
        risk = "-" if row.risk is None else f"{row.risk:.4f}"
        wall = f"{row.wall_s:.3f}"
        lines.append(
            f"{scale:>12} {row.slack:>6.2f} {row.solver:>9} {wall:>10} {risk:>12} {row.expansions:>10} {status:>8}"
        )
    checked = [r for r in rows if r.optimal is not None]
    if checked:
        n_opt = sum(1 for r in checked if r.optimal)
        lines.append("")
        lines.append(f"optimal vs oracle: {n_opt}/{len(checked)}")
        worst = max((r.gap_pct for r in checked if r.gap_pct is not None), default=0.0)
        lines.append(f"worst gap: {worst:.6f}%")
    return "\n".join(lines) + "\n"
