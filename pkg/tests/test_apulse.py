from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from argus import apulse, bench
from argus.apulse import SolverConfig, auto_bucket_width, precompute_heuristics
from argus.errors import (
    InfeasibleBudgetError,
    NoPathError,
    ResourceExhaustedError,
    ValidationError,
)
from argus.terrain import CostGraph

from conftest import flat_graph, random_risk_graph


def graph_from_edges(n: int, edges, node_risks) -> CostGraph:
    """Synthetic graph for hand-built cases; edges as (u, v, time_s)."""
    directed = {}
    for u, v, t, *rest in edges:
        back = rest[0] if rest else t
        directed[(u, v)] = t
        directed[(v, u)] = back
    srcs = sorted(directed)
    indptr = np.zeros(n + 1, dtype=np.int64)
    nbr, etime = [], []
    for u in range(n):
        outs = sorted(v for (uu, v) in srcs if uu == u)
        indptr[u + 1] = indptr[u] + len(outs)
        for v in outs:
            nbr.append(v)
            etime.append(directed[(u, v)])
    etime = np.array(etime, dtype=np.float64)
    return CostGraph(
        rows=1,
        cols=n,
        cell_size_m=25.0,
        node_rc=np.array([[0, i] for i in range(n)], dtype=np.int32),
        cell_node=np.arange(n, dtype=np.int32).reshape(1, n),
        indptr=indptr,
        nbr=np.array(nbr, dtype=np.int32),
        etime=etime,
        edist=etime * 5.0,
        egrad=np.zeros_like(etime),
        node_log_risk=np.asarray(node_risks, dtype=np.float64),
    )


def diamond():
    # two arms between node 0 and node 4: slow-safe via 1,2 and fast-risky via 3
    edges = [
        (0, 1, 4.0), (1, 2, 3.0), (2, 4, 3.0),   # total 10 s, risk 0.1
        (0, 3, 2.0), (3, 4, 2.0),                # total 4 s, risk 5.0
    ]
    risks = [0.0, 0.05, 0.05, 5.0, 0.0]
    return graph_from_edges(5, edges, risks)


class TestHeuristics:
    def test_goal_is_zero(self):
        graph = flat_graph(4, 4)
        maps = precompute_heuristics(graph, graph.node_of(3, 3))
        g = graph.node_of(3, 3)
        assert maps.time_to_goal[g] == 0.0
        assert maps.risk_to_goal[g] == 0.0

    def test_corridor_suffix_sums(self):
        edges = [(i, i + 1, float(i + 1)) for i in range(4)]  # times 1,2,3,4
        graph = graph_from_edges(5, edges, [0.0, 0.2, 0.3, 0.4, 0.5])
        maps = precompute_heuristics(graph, 4)
        assert maps.time_to_goal.tolist() == [10.0, 9.0, 7.0, 4.0, 0.0]
        # risk-to-goal charges every entered cell, goal included
        assert maps.risk_to_goal.tolist() == pytest.approx([1.4, 1.2, 0.9, 0.5, 0.0])

    def test_admissible_consistent_on_random_grids(self):
        for seed in range(4):
            graph, _ = random_risk_graph(8, 8, seed=seed)
            goal = graph.node_of(7, 7)
            maps = precompute_heuristics(graph, goal)
            ttg, rtg = maps.time_to_goal, maps.risk_to_goal
            for u in range(graph.node_count):
                for j in range(graph.indptr[u], graph.indptr[u + 1]):
                    v = int(graph.nbr[j])
                    assert ttg[u] <= graph.etime[j] + ttg[v] + 1e-12
                    assert rtg[u] <= graph.node_log_risk[v] + rtg[v] + 1e-12

    def test_unreachable_marked_inf(self):
        graph = flat_graph(3, 3, obstacles=[(0, 1), (1, 0), (1, 1)])
        # (0,0) is walled off from the rest
        maps = precompute_heuristics(graph, graph.node_of(2, 2))
        assert math.isinf(maps.time_to_goal[graph.node_of(0, 0)])


class TestSolveDiamond:
    def test_generous_budget_takes_safe_arm(self):
        result = apulse.solve(diamond(), 0, 4, budget_s=12.0)
        assert result.total_log_risk == pytest.approx(0.1)
        assert result.total_time_s == pytest.approx(10.0)

    def test_tight_budget_takes_risky_arm(self):
        result = apulse.solve(diamond(), 0, 4, budget_s=5.0)
        assert result.total_log_risk == pytest.approx(5.0)
        assert result.total_time_s == pytest.approx(4.0)

    def test_budget_below_min_time_infeasible(self):
        with pytest.raises(InfeasibleBudgetError) as exc:
            apulse.solve(diamond(), 0, 4, budget_s=3.0)
        assert exc.value.min_time_s == pytest.approx(4.0)

    def test_budget_exactly_min_time(self):
        result = apulse.solve(diamond(), 0, 4, budget_s=4.0)
        assert result.total_time_s == pytest.approx(4.0)

    def test_matches_bench_oracle(self):
        graph = diamond()
        risk, path, t = bench.oracle_optimal(graph, 0, 4, budget_s=12.0)
        assert risk == pytest.approx(0.1)
        assert path == [0, 1, 2, 4]


class TestSolveOnGrids:
    def test_oracle_agreement_fine_buckets_100_instances(self):
        # buckets below the minimum positive edge-time gap: solve() must be exact
        config = SolverConfig(bucket_width_s=1e-6)
        exact = 0
        for seed in range(100):
            graph, _ = random_risk_graph(8, 8, seed=1000 + seed, lo=0.02, hi=0.85)
            start, goal = graph.node_of(0, 0), graph.node_of(7, 7)
            budget = 1.2 * precompute_heuristics(graph, goal).time_to_goal[start]
            oracle_risk, _, _ = bench.oracle_optimal(graph, start, goal, budget, max_nodes=64)
            result = apulse.solve(graph, start, goal, budget, config=config)
            assert result.total_time_s <= budget + 1e-9
            if abs(result.total_log_risk - oracle_risk) <= 1e-9:
                exact += 1
        assert exact == 100

    def test_budget_respected_every_run(self):
        for seed in range(20):
            graph, _ = random_risk_graph(6, 6, seed=seed)
            start, goal = graph.node_of(0, 0), graph.node_of(5, 5)
            maps = precompute_heuristics(graph, goal)
            budget = float(maps.time_to_goal[start]) * 1.3
            result = apulse.solve(graph, start, goal, budget, maps=maps)
            assert result.total_time_s <= budget + 1e-9

    def test_incumbent_history_strictly_decreasing(self):
        graph, _ = random_risk_graph(7, 7, seed=3)
        start, goal = graph.node_of(0, 0), graph.node_of(6, 6)
        maps = precompute_heuristics(graph, goal)
        budget = float(maps.time_to_goal[start]) * 1.4
        result = apulse.solve(graph, start, goal, budget, maps=maps)
        hist = result.solver_stats.incumbent_history
        assert hist, "expected at least the seeded incumbent"
        assert all(a > b for a, b in zip(hist, hist[1:]))

    def test_pruning_soundness(self):
        # disabling feasibility/bound pruning and bucketing must not change
        # the optimum on small instances
        for seed in range(6):
            graph, _ = random_risk_graph(4, 4, seed=40 + seed)
            start, goal = graph.node_of(0, 0), graph.node_of(3, 3)
            maps = precompute_heuristics(graph, goal)
            budget = float(maps.time_to_goal[start]) * 1.25
            fast = apulse.solve(graph, start, goal, budget, maps=maps,
                                config=SolverConfig(bucket_width_s=1e-9))
            slow = apulse.solve(
                graph, start, goal, budget, maps=maps,
                config=SolverConfig(
                    bucket_width_s=0.0,
                    prune_feasibility=False,
                    prune_bound=False,
                    seed_incumbent=False,
                ),
            )
            assert fast.total_log_risk == pytest.approx(slow.total_log_risk, abs=1e-9)

    def test_determinism(self):
        graph, _ = random_risk_graph(8, 8, seed=77)
        start, goal = graph.node_of(0, 0), graph.node_of(7, 7)
        maps = precompute_heuristics(graph, goal)
        budget = float(maps.time_to_goal[start]) * 1.3
        a = apulse.solve(graph, start, goal, budget, maps=maps)
        b = apulse.solve(graph, start, goal, budget, maps=maps)
        assert a.path == b.path
        assert a.solver_stats.labels_popped == b.solver_stats.labels_popped

    def test_unreachable_goal(self):
        graph = flat_graph(3, 3, obstacles=[(0, 1), (1, 0), (1, 1)])
        with pytest.raises(NoPathError):
            apulse.solve(graph, graph.node_of(0, 0), graph.node_of(2, 2), 100.0)

    def test_start_equals_goal(self):
        graph = flat_graph(2, 2)
        result = apulse.solve(graph, 0, 0, budget_s=1.0)
        assert result.path == ((0, 0),)
        assert result.total_log_risk == 0.0


class TestLimits:
    def test_expansion_limit_no_incumbent(self):
        graph, _ = random_risk_graph(5, 5, seed=1)
        start, goal = graph.node_of(0, 0), graph.node_of(4, 4)
        cfg = SolverConfig(node_expansion_limit=0, seed_incumbent=False)
        with pytest.raises(ResourceExhaustedError):
            apulse.solve(graph, start, goal, 1000.0, config=cfg)

    def test_expansion_limit_with_incumbent_is_anytime(self):
        graph, _ = random_risk_graph(5, 5, seed=1)
        start, goal = graph.node_of(0, 0), graph.node_of(4, 4)
        maps = precompute_heuristics(graph, goal)
        budget = float(maps.time_to_goal[start]) * 1.2
        cfg = SolverConfig(node_expansion_limit=1)
        result = apulse.solve(graph, start, goal, budget, config=cfg, maps=maps)
        assert result.flags["anytime"] is True
        assert result.total_time_s <= budget + 1e-9


class TestAutoBucketWidth:
    def test_exact_division(self):
        assert auto_bucket_width(8192.0, SolverConfig()) == 1.0

    def test_fraction(self):
        assert auto_bucket_width(1800.0, SolverConfig()) == pytest.approx(0.2197265625)

    def test_single_bucket(self):
        assert auto_bucket_width(60.0, SolverConfig(bucket_count_target=1)) == 60.0

    def test_invalid(self):
        with pytest.raises(ValidationError):
            auto_bucket_width(0.0, SolverConfig())
        with pytest.raises(ValidationError):
            SolverConfig(bucket_count_target=0)

    @given(st.floats(1.0, 1e6), st.integers(1, 100000))
    @settings(max_examples=40, deadline=None)
    def test_width_times_target_recovers_budget(self, budget, target):
        width = auto_bucket_width(budget, SolverConfig(bucket_count_target=target))
        assert width * target == pytest.approx(budget, rel=1e-12)


class TestAscentLimit:
    def test_sustained_climb_pruned(self):
        # corridor 0-1-2-3-4 climbing hard; alternative flat arm 0-5-6-4
        edges = [
            (0, 1, 5.0), (1, 2, 5.0), (2, 3, 5.0), (3, 4, 5.0),
            (0, 5, 9.0), (5, 6, 9.0), (6, 4, 9.0),
        ]
        graph = graph_from_edges(7, edges, [0.0] * 7)
        grads = np.zeros_like(graph.egrad)
        for u, v, g in ((0, 1, 0.3), (1, 2, 0.3), (2, 3, 0.3), (3, 4, 0.3)):
            grads[graph.edge_index(u, v)] = g
            grads[graph.edge_index(v, u)] = -g
        object.__setattr__(graph, "egrad", grads)
        cfg = SolverConfig(enforce_ascent_limit=True)
        # window 4 cells / threshold 0.6: three consecutive 0.3 climbs exceed it
        result = apulse.solve(graph, 0, 4, budget_s=100.0, config=cfg)
        assert result.path == ((0, 0), (0, 5), (0, 6), (0, 4))
        relaxed = apulse.solve(graph, 0, 4, budget_s=100.0)
        assert relaxed.path == ((0, 0), (0, 1), (0, 2), (0, 3), (0, 4))
