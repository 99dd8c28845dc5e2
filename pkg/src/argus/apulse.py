"""Time-budgeted risk minimization: A*-guided label setting with pruning.

Finds the path of minimum cumulative node log-risk whose total travel time
stays within a hard budget. Labels are ordered by accumulated risk plus an
admissible risk-to-goal bound, and pruned three ways before expansion:

* feasibility - accumulated time plus the exact time-to-goal bound exceeds
  the budget;
* bound - estimated total risk is no better than the incumbent solution;
* dominance - another label already reached the same node in the same
  accumulated-time bucket with equal or lower risk.

Bucketing trades a small, bounded loss of optimality for a hard cap on
label proliferation; with buckets finer than any difference between
feasible path times the search is exact.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np

from . import diagnostics
from .errors import (
    InfeasibleBudgetError,
    NoPathError,
    ResourceExhaustedError,
    ValidationError,
)
from .terrain import CostGraph

# Absolute slack for budget comparisons; avoids spurious infeasibility when
# the budget is set to an exact path time.
BUDGET_TOL_S = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    bucket_count_target: int = 8192
    timeout_s: float = 600.0
    node_expansion_limit: int | None = None
    bucket_width_s: float | None = None  # None: auto budget/target; 0: exact-time keys
    seed_incumbent: bool = True
    prune_feasibility: bool = True
    prune_bound: bool = True
    enforce_ascent_limit: bool = False

    def __post_init__(self):
        if self.bucket_count_target < 1:
            raise ValidationError("bucket_count_target must be >= 1")
        if self.bucket_width_s is not None and self.bucket_width_s < 0:
            raise ValidationError("bucket_width_s must be >= 0")


def auto_bucket_width(budget_s: float, config: SolverConfig) -> float:
    """Bucket width targeting a fixed number of buckets across the budget."""
    if not budget_s > 0:
        raise ValidationError(f"budget must be > 0, got {budget_s}")
    return budget_s / config.bucket_count_target


@dataclass(frozen=True)
class HeuristicMaps:
    """Exact reverse shortest-path bounds from the goal, one per cost."""

    time_to_goal: np.ndarray
    risk_to_goal: np.ndarray


@dataclass
class SolverStats:
    labels_pushed: int = 0
    labels_popped: int = 0
    labels_expanded: int = 0
    pruned_infeasible: int = 0
    pruned_bound: int = 0
    pruned_dominated: int = 0
    bucket_entries: int = 0
    wall_time_s: float = 0.0
    incumbent_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        # wall time intentionally excluded: result documents must be
        # byte-identical for identical inputs
        return {
            "labels_pushed": self.labels_pushed,
            "labels_popped": self.labels_popped,
            "labels_expanded": self.labels_expanded,
            "pruned_infeasible": self.pruned_infeasible,
            "pruned_bound": self.pruned_bound,
            "pruned_dominated": self.pruned_dominated,
            "bucket_entries": self.bucket_entries,
        }


def _reverse_dijkstra(
    graph: CostGraph,
    goal: int,
    weights: str,
    allowed: np.ndarray | None = None,
) -> np.ndarray:
    """Min cost from every node to the goal under one cost dimension.

    weights='time' uses the directed travel time of the forward edge;
    weights='risk' charges the log-risk of every entered cell (goal cell
    included, departure cell excluded). Unreachable nodes stay at +inf.
    Runs over the reversed graph, which shares the forward structure since
    edge existence is symmetric.
    """
    n = graph.node_count
    dist = [math.inf] * n
    dist[goal] = 0.0
    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    risk = graph.node_log_risk.tolist()
    allowed_list = None if allowed is None else allowed.tolist()
    if allowed_list is not None and not allowed_list[goal]:
        raise ValidationError("goal node excluded by the allowed mask")

    if weights == "time":
        # reverse edge (v -> u) costs the forward traversal time t(u, v)
        pair = _paired_edge_index(graph)
        etime = graph.etime.tolist()
        rev_w = [etime[pair[j]] for j in range(len(nbr))]
    elif weights == "risk":
        rev_w = None  # cost of relaxing from v is always log_risk(v)
    else:
        raise ValueError(f"unknown weight kind {weights!r}")

    heap = [(0.0, goal)]
    while heap:
        d, v = heappop(heap)
        if d > dist[v]:
            continue
        base = d + risk[v] if rev_w is None else 0.0
        for j in range(indptr[v], indptr[v + 1]):
            u = nbr[j]
            if allowed_list is not None and not allowed_list[u]:
                continue
            nd = base if rev_w is None else d + rev_w[j]
            if nd < dist[u]:
                dist[u] = nd
                heappush(heap, (nd, u))
    return np.asarray(dist, dtype=np.float64)


_PAIR_CACHE: dict[int, np.ndarray] = {}


def _paired_edge_index(graph: CostGraph) -> list[int]:
    """For edge j = (u -> v), index of the opposite edge (v -> u)."""
    key = id(graph.nbr)
    cached = _PAIR_CACHE.get(key)
    if cached is None:
        n = graph.node_count
        src = np.repeat(np.arange(n, dtype=np.int64), np.diff(graph.indptr))
        keys = src * n + graph.nbr  # sorted ascending by CSR construction
        rev = graph.nbr.astype(np.int64) * n + src
        cached = np.searchsorted(keys, rev)
        _PAIR_CACHE.clear()  # keep at most one graph resident
        _PAIR_CACHE[key] = cached
    return cached.tolist()


def precompute_heuristics(
    graph: CostGraph, goal: int, allowed: np.ndarray | None = None
) -> HeuristicMaps:
    """Exact minimum time-to-goal and log-risk-to-goal for every node."""
    if not 0 <= goal < graph.node_count:
        raise ValidationError(f"goal node {goal} out of range")
    return HeuristicMaps(
        time_to_goal=_reverse_dijkstra(graph, goal, "time", allowed),
        risk_to_goal=_reverse_dijkstra(graph, goal, "risk", allowed),
    )


def min_time_path(
    graph: CostGraph, start: int, maps: HeuristicMaps, allowed: np.ndarray | None = None
) -> list[int]:
    """Reconstruct a minimum-time path by descending the exact time map.

    Ties broken toward the lower node id, so the result is deterministic.
    """
    ttg = maps.time_to_goal
    if not math.isfinite(ttg[start]):
        raise NoPathError(f"node {start} cannot reach the goal")
    path = [start]
    u = start
    while ttg[u] > 0.0:
        best_v, best_key = -1, None
        for j in range(graph.indptr[u], graph.indptr[u + 1]):
            v = int(graph.nbr[j])
            if allowed is not None and not allowed[v]:
                continue
            key = (float(graph.etime[j] + ttg[v]), v)
            if best_key is None or key < best_key:
                best_key, best_v = key, v
        if best_v < 0:
            raise NoPathError("time map descent stalled")
        path.append(best_v)
        u = best_v
    return path


def min_risk_path(
    graph: CostGraph, start: int, goal: int, maps: HeuristicMaps,
    allowed: np.ndarray | None = None,
) -> list[int]:
    """Unconstrained minimum-log-risk path, ties broken toward lower time.

    Plain A* guided by the exact risk map; zero-risk plateaus make a greedy
    map descent cycle, so the closed-set search is used instead.
    """
    rtg = maps.risk_to_goal.tolist()
    if not math.isfinite(rtg[start]):
        raise NoPathError(f"node {start} cannot reach the goal")
    n = graph.node_count
    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    etime = graph.etime.tolist()
    lrisk = graph.node_log_risk.tolist()
    allowed_list = None if allowed is None else allowed.tolist()

    g = [math.inf] * n
    gt = [math.inf] * n
    parent = [-1] * n
    closed = [False] * n
    g[start] = 0.0
    gt[start] = 0.0
    heap = [(rtg[start], 0.0, start)]
    while heap:
        f, g_time, u = heappop(heap)
        if closed[u]:
            continue
        closed[u] = True
        if u == goal:
            path = [u]
            while parent[path[-1]] >= 0:
                path.append(parent[path[-1]])
            return path[::-1]
        gu = g[u]
        for j in range(indptr[u], indptr[u + 1]):
            v = nbr[j]
            if closed[v] or (allowed_list is not None and not allowed_list[v]):
                continue
            ng = gu + lrisk[v]
            ngt = g_time + etime[j]
            if ng < g[v] or (ng == g[v] and ngt < gt[v]):
                g[v] = ng
                gt[v] = ngt
                parent[v] = u
                heappush(heap, (ng + rtg[v], ngt, v))
    raise NoPathError(f"no path between nodes {start} and {goal}")


def violates_ascent_limit(graph: CostGraph, nodes: list[int]) -> bool:
    """True when any sliding window of cells climbs past the threshold."""
    window = graph.ascent_window - 1
    if window <= 0 or len(nodes) < 2:
        return False
    grads = [float(graph.egrad[graph.edge_index(u, v)]) for u, v in zip(nodes, nodes[1:])]
    for i in range(len(grads)):
        climb = sum(g for g in grads[max(0, i - window + 1):i + 1] if g > 0)
        if climb > graph.ascent_threshold:
            return True
    return False


def path_totals(graph: CostGraph, nodes: list[int]) -> tuple[float, float, float]:
    """(time_s, distance_m, log_risk) recomputed edge by edge from the graph."""
    t = d = 0.0
    for u, v in zip(nodes, nodes[1:]):
        j = graph.edge_index(u, v)
        t += float(graph.etime[j])
        d += float(graph.edist[j])
    lr = float(graph.node_log_risk[nodes[1:]].sum()) if len(nodes) > 1 else 0.0
    return t, d, lr


def solve(
    graph: CostGraph,
    start: int,
    goal: int,
    budget_s: float,
    config: SolverConfig | None = None,
    allowed: np.ndarray | None = None,
    maps: HeuristicMaps | None = None,
    riskfield=None,
    threats: tuple = (),
    mode_echo: dict | None = None,
):
    """Minimum-log-risk path from start to goal with total time <= budget.

    Returns a PlanResult whose totals are exact (never bucket values); the
    ``anytime`` flag marks results returned on timeout or expansion-limit
    with the best incumbent found so far. Raises InfeasibleBudgetError when
    the budget is below the exact minimum feasible time, NoPathError when
    goal is unreachable, ResourceExhaustedError when limits hit with no
    incumbent.
    """
    cfg = config or SolverConfig()
    if not budget_s > 0:
        raise ValidationError(f"budget must be > 0, got {budget_s}")
    n = graph.node_count
    if not (0 <= start < n and 0 <= goal < n):
        raise ValidationError("start/goal node out of range")
    if allowed is not None and not (allowed[start] and allowed[goal]):
        raise ValidationError("start or goal excluded by the allowed mask")

    t_begin = time.monotonic()
    stats = SolverStats()
    if maps is None:
        maps = precompute_heuristics(graph, goal, allowed)
    ttg = maps.time_to_goal.tolist()
    rtg = maps.risk_to_goal.tolist()

    if not math.isfinite(ttg[start]):
        raise NoPathError("goal unreachable from start")
    t_min = ttg[start]
    if t_min > budget_s + BUDGET_TOL_S:
        raise InfeasibleBudgetError(
            f"budget {budget_s:.3f}s below minimum feasible time {t_min:.3f}s",
            min_time_s=t_min,
        )

    anytime = False
    incumbent_risk = math.inf
    incumbent_path: list[int] | None = None
    if start == goal:
        incumbent_path = [start]
        incumbent_risk = 0.0
    elif cfg.seed_incumbent:
        seed_path = min_time_path(graph, start, maps, allowed)
        if not (cfg.enforce_ascent_limit and violates_ascent_limit(graph, seed_path)):
            incumbent_risk = float(graph.node_log_risk[seed_path[1:]].sum())
            incumbent_path = seed_path
            stats.incumbent_history.append(incumbent_risk)
        # when the unconstrained min-risk route fits the budget it is the
        # answer; seeding it lets the bound prune close the search at once
        safe_path = min_risk_path(graph, start, goal, maps, allowed)
        safe_time = sum(
            graph.etime[graph.edge_index(u, v)] for u, v in zip(safe_path, safe_path[1:])
        )
        if safe_time <= budget_s + BUDGET_TOL_S and not (
            cfg.enforce_ascent_limit and violates_ascent_limit(graph, safe_path)
        ):
            safe_risk = float(graph.node_log_risk[safe_path[1:]].sum())
            if safe_risk < incumbent_risk:
                incumbent_risk = safe_risk
                incumbent_path = safe_path
                stats.incumbent_history.append(safe_risk)

    delta_t = cfg.bucket_width_s
    if delta_t is None:
        delta_t = auto_bucket_width(budget_s, cfg)
    exact_keys = delta_t == 0.0
    stride = 0 if exact_keys else int(budget_s / delta_t) + 2

    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    etime = graph.etime.tolist()
    lrisk = graph.node_log_risk.tolist()
    egrad = graph.egrad.tolist() if cfg.enforce_ascent_limit else None
    allowed_list = None if allowed is None else allowed.tolist()
    budget_hi = budget_s + BUDGET_TOL_S

    # parallel label stores; parents index into these lists
    lab_node = [start]
    lab_time = [0.0]
    lab_risk = [0.0]
    lab_parent = [-1]
    lab_grad: list[tuple] | None = [()] if egrad is not None else None
    window = graph.ascent_window - 1 if egrad is not None else 0

    best_risk: dict = {}
    if exact_keys:
        best_risk[(start, 0.0)] = 0.0
    else:
        best_risk[start * stride] = 0.0

    heap = [(rtg[start], 0.0, start, 0)]
    stats.labels_pushed = 1
    pops_since_check = 0

    if start == goal:
        heap = []

    while heap:
        f, g_time, u, lid = heappop(heap)
        stats.labels_popped += 1

        pops_since_check += 1
        if pops_since_check >= 2048:
            pops_since_check = 0
            if time.monotonic() - t_begin > cfg.timeout_s:
                if incumbent_path is None:
                    raise ResourceExhaustedError("solver timeout with no feasible solution")
                anytime = True
                break
        if cfg.node_expansion_limit is not None and stats.labels_expanded >= cfg.node_expansion_limit:
            if incumbent_path is None:
                raise ResourceExhaustedError("expansion limit hit with no feasible solution")
            anytime = True
            break

        g_risk = lab_risk[lid]
        if cfg.prune_bound and f >= incumbent_risk:
            stats.pruned_bound += 1
            continue
        if cfg.prune_feasibility and g_time + ttg[u] > budget_hi:
            stats.pruned_infeasible += 1
            continue
        key = (u, g_time) if exact_keys else u * stride + int(g_time / delta_t)
        if best_risk.get(key, math.inf) < g_risk:
            stats.pruned_dominated += 1
            continue

        stats.labels_expanded += 1
        parent_node = lab_node[lab_parent[lid]] if lab_parent[lid] >= 0 else -1
        for j in range(indptr[u], indptr[u + 1]):
            v = nbr[j]
            if allowed_list is not None and not allowed_list[v]:
                continue
            if v == parent_node and egrad is None:
                continue  # u-turns never improve a simple path
            nt = g_time + etime[j]
            if cfg.prune_feasibility:
                if nt + ttg[v] > budget_hi:
                    stats.pruned_infeasible += 1
                    continue
            elif nt > budget_hi:
                stats.pruned_infeasible += 1
                continue
            nr = g_risk + lrisk[v]
            nf = nr + rtg[v]
            if cfg.prune_bound and nf >= incumbent_risk:
                stats.pruned_bound += 1
                continue
            if egrad is not None:
                grads = (lab_grad[lid] + (egrad[j],))[-window:] if window else ()
                if sum(g for g in grads if g > 0) > graph.ascent_threshold:
                    continue
            if v == goal:
                if nr < incumbent_risk:
                    incumbent_risk = nr
                    path = [v, u]
                    p = lab_parent[lid]
                    while p >= 0:
                        path.append(lab_node[p])
                        p = lab_parent[p]
                    incumbent_path = path[::-1]
                    stats.incumbent_history.append(nr)
                continue
            nkey = (v, nt) if exact_keys else v * stride + int(nt / delta_t)
            prev = best_risk.get(nkey)
            if prev is not None and prev <= nr:
                stats.pruned_dominated += 1
                continue
            best_risk[nkey] = nr
            lab_node.append(v)
            lab_time.append(nt)
            lab_risk.append(nr)
            lab_parent.append(lid)
            if egrad is not None:
                lab_grad.append(grads)
            heappush(heap, (nf, nt, v, len(lab_node) - 1))
            stats.labels_pushed += 1

    stats.bucket_entries = len(best_risk)
    stats.wall_time_s = time.monotonic() - t_begin

    if incumbent_path is None:
        raise InfeasibleBudgetError(
            f"no path satisfies the {budget_s:.3f}s budget", min_time_s=t_min
        )

    total_time, _, total_risk = path_totals(graph, incumbent_path)
    if total_time > budget_s + BUDGET_TOL_S:
        diagnostics.counters["budget_violations"] += 1
        raise AssertionError(
            f"returned path time {total_time} violates budget {budget_s}"
        )

    from .planner import build_plan_result  # late import; planner wraps this solver

    echo = dict(mode_echo or {"type": "SafeWithinTime", "budget_s": budget_s})
    flags = {"anytime": anytime}
    return build_plan_result(
        graph,
        incumbent_path,
        mode_echo=echo,
        stats=stats,
        riskfield=riskfield,
        threats=threats,
        flags=flags,
    )
