from __future__ import annotations

import math

import numpy as np
import pytest

from argus import apulse, diagnostics, planner
from argus.errors import InfeasibleBudgetError, NoPathError, ValidationError
from argus.planner import (
    Balanced,
    FastWithinRisk,
    MissionRequest,
    SafeWithinTime,
    compute_kpis,
    plan,
)
from argus.risk import DetectionParams, ThreatSpec, build_risk_field, log_cost
from argus.terrain import build_graph

from conftest import flat_graph, flat_grid, random_risk_graph, uniform_mobility

import oracles


def request(start, goal, mode, **kw):
    return MissionRequest(start=start, goal=goal, mode=mode, **kw)


def hot_wall_scene(rows=6, cols=6, wall_col=3, wall_risk=0.8):
    """Flat grid with a high-risk vertical wall; detour is impossible."""
    risks = np.full((rows, cols), 0.01)
    risks[:, wall_col] = wall_risk
    graph = flat_graph(rows, cols, risks=risks)
    return graph, risks


class TestBalanced:
    def test_alpha_one_is_min_time(self):
        graph = flat_graph(5, 5)
        result = plan(graph, request((0, 0), (4, 4), Balanced(1.0)))
        assert result.total_time_s == pytest.approx(4 * 25 * math.sqrt(2) / 5.0)
        assert len(result.path) == 5

    def test_alpha_zero_detours_hot_threat(self):
        # one hot disk between start and goal: the safe route leaves the disk
        grid = flat_grid(8, 8)
        threat = ThreatSpec(
            id="hot",
            detection=DetectionParams(range_m=60.0, plateau_fraction=0.5, decay_exponent=2.0),
            prior_rows=np.array([3]),
            prior_cols=np.array([3]),
            prior_weights=np.array([1.0]),
        )
        field = build_risk_field(grid, [threat], 0.0)
        graph = build_graph(grid, uniform_mobility()).with_log_risk(field.log_risk)
        safe = plan(graph, request((0, 0), (7, 7), Balanced(0.0)), field, (threat,))
        for r, c in safe.path:
            assert math.hypot(r - 3, c - 3) * 25.0 >= 60.0
        assert safe.total_log_risk == pytest.approx(0.0)
        fast = plan(graph, request((0, 0), (7, 7), Balanced(1.0)), field, (threat,))
        assert fast.total_log_risk > 0.0
        assert fast.total_time_s < safe.total_time_s

    def test_objective_matches_exhaustive_on_small_grids(self):
        for seed, alpha in ((1, 0.3), (2, 0.5), (3, 0.7)):
            graph, _ = random_risk_graph(4, 4, seed=seed)
            req = request((0, 0), (3, 3), Balanced(alpha))
            result = plan(graph, req)
            t_ref = result.mode_echo["time_ref_s"]
            l_ref = result.mode_echo["log_risk_ref"]
            best = oracles.min_balanced_cost_path(
                graph, graph.node_of(0, 0), graph.node_of(3, 3), alpha, t_ref, l_ref
            )
            got = alpha * result.total_time_s / t_ref + (1 - alpha) * result.total_log_risk / l_ref
            assert got == pytest.approx(best[0], abs=1e-9)

    def test_extremes_match_exhaustive(self):
        graph, risks = random_risk_graph(4, 4, seed=9)
        safe = plan(graph, request((0, 0), (3, 3), Balanced(0.0)))
        best = oracles.min_logrisk_path(graph, graph.node_of(0, 0), graph.node_of(3, 3))
        assert safe.total_log_risk == pytest.approx(best[0], abs=1e-9)

    def test_mode_spectrum_ordering(self):
        for seed in range(5):
            graph, _ = random_risk_graph(6, 6, seed=200 + seed)
            fast = plan(graph, request((0, 0), (5, 5), Balanced(1.0)))
            safe = plan(graph, request((0, 0), (5, 5), Balanced(0.0)))
            mid = plan(graph, request((0, 0), (5, 5), Balanced(0.5)))
            assert fast.total_time_s <= safe.total_time_s + 1e-9
            assert safe.total_log_risk <= fast.total_log_risk + 1e-9
            assert fast.total_time_s <= mid.total_time_s + 1e-9
            assert safe.total_log_risk <= mid.total_log_risk + 1e-9

    def test_alpha_validation(self):
        with pytest.raises(ValidationError):
            Balanced(1.5)


class TestFastWithinRisk:
    def test_vacuous_ceiling_equals_min_time(self):
        graph, _ = random_risk_graph(5, 5, seed=4)
        fast = plan(graph, request((0, 0), (4, 4), Balanced(1.0)))
        ceil = plan(graph, request((0, 0), (4, 4), FastWithinRisk(1.0)))
        assert ceil.total_time_s == pytest.approx(fast.total_time_s, abs=1e-9)
        assert not ceil.flags["fallback_used"]

    def test_wall_triggers_fallback(self):
        graph, risks = hot_wall_scene(wall_risk=0.8)
        result = plan(graph, request((0, 0), (5, 5), FastWithinRisk(0.5)))
        assert result.flags["fallback_used"]
        assert result.flags["effective_max_risk"] == pytest.approx(0.8)
        worst = max(risks[r, c] for r, c in result.path)
        assert worst <= result.flags["effective_max_risk"] + 1e-12

    def test_strict_ceiling_never_faster(self):
        rng = np.random.default_rng(8)
        risks = rng.uniform(0.0, 0.7, size=(6, 6))
        risks[0, 0] = risks[5, 5] = 0.0
        graph = flat_graph(6, 6, risks=risks)
        loose = plan(graph, request((0, 0), (5, 5), FastWithinRisk(0.6)))
        strict = plan(graph, request((0, 0), (5, 5), FastWithinRisk(0.25)))
        assert strict.total_time_s >= loose.total_time_s - 1e-9

    def test_matches_exhaustive_min_time_under_ceiling(self):
        for seed in range(5):
            graph, risks = random_risk_graph(4, 4, seed=300 + seed, lo=0.0, hi=0.9)
            ceiling = 0.55
            rform = [risks[graph.cell_of(v)] for v in range(graph.node_count)]
            best = oracles.min_time_path_under_ceiling(
                graph, rform, ceiling, graph.node_of(0, 0), graph.node_of(3, 3)
            )
            if best is None:
                continue
            result = plan(graph, request((0, 0), (3, 3), FastWithinRisk(ceiling)))
            if not result.flags["fallback_used"]:
                assert result.total_time_s == pytest.approx(best[0], abs=1e-9)

    def test_obstacle_disconnection_raises(self):
        graph = flat_graph(3, 3, obstacles=[(0, 1), (1, 1), (2, 1)])
        with pytest.raises(NoPathError):
            plan(graph, request((0, 0), (0, 2), FastWithinRisk(0.5)))


class TestSafeWithinTime:
    def test_huge_budget_equals_pure_min_risk(self):
        graph, _ = random_risk_graph(5, 5, seed=12)
        safe = plan(graph, request((0, 0), (4, 4), Balanced(0.0)))
        budgeted = plan(graph, request((0, 0), (4, 4), SafeWithinTime(1e6)))
        assert budgeted.total_log_risk == pytest.approx(safe.total_log_risk, abs=1e-9)

    def test_budget_at_exact_min_time(self):
        graph, _ = random_risk_graph(5, 5, seed=13)
        fast = plan(graph, request((0, 0), (4, 4), Balanced(1.0)))
        result = plan(graph, request((0, 0), (4, 4), SafeWithinTime(fast.total_time_s)))
        assert result.total_time_s <= fast.total_time_s + 1e-9

    def test_budget_monotonicity(self):
        graph, _ = random_risk_graph(6, 6, seed=21)
        start, goal = graph.node_of(0, 0), graph.node_of(5, 5)
        t_min = float(apulse.precompute_heuristics(graph, goal).time_to_goal[start])
        risks = []
        for slack in (0.05, 0.15, 0.3, 0.6, 1.2):
            res = plan(graph, request((0, 0), (5, 5), SafeWithinTime(t_min * (1 + slack))))
            risks.append(res.total_log_risk)
        assert all(a >= b - 1e-9 for a, b in zip(risks, risks[1:]))

    def test_infeasible_budget_reports_minimum(self):
        graph = flat_graph(4, 4)
        with pytest.raises(InfeasibleBudgetError) as exc:
            plan(graph, request((0, 0), (3, 3), SafeWithinTime(1.0)))
        assert exc.value.min_time_s == pytest.approx(3 * 25 * math.sqrt(2) / 5.0)


class TestComputeKpis:
    def test_straight_path_hand_values(self):
        graph = flat_graph(1, 4)
        result = compute_kpis(graph, None, (), [(0, 0), (0, 1), (0, 2), (0, 3)])
        assert result.total_distance_m == pytest.approx(75.0)
        assert result.total_time_s == pytest.approx(15.0)
        assert result.survival_probability == 1.0

    def test_survival_identity(self):
        graph, _ = random_risk_graph(5, 5, seed=31)
        result = plan(graph, request((0, 0), (4, 4), Balanced(0.5)))
        assert result.survival_probability == pytest.approx(
            math.exp(-result.total_log_risk), abs=1e-9
        )

    def test_cpa_dirac(self):
        grid = flat_grid(6, 6)
        threat = ThreatSpec(
            id="solo",
            detection=DetectionParams(range_m=50.0, plateau_fraction=0.5, decay_exponent=1.0),
            prior_rows=np.array([5]),
            prior_cols=np.array([0]),
            prior_weights=np.array([1.0]),
        )
        graph = build_graph(grid, uniform_mobility())
        path = [(0, 0), (0, 1), (0, 2)]
        result = compute_kpis(graph, None, (threat,), path)
        expect = min(math.hypot(r - 5, c - 0) for r, c in path) * 25.0
        assert result.cpa_m["solo"] == pytest.approx(expect)

    def test_exposure_bins_sum_to_distance(self):
        graph, _ = random_risk_graph(6, 6, seed=44, lo=0.0, hi=0.95)
        result = plan(graph, request((0, 0), (5, 5), Balanced(0.4)))
        assert sum(result.exposure_m.values()) == pytest.approx(result.total_distance_m)

    def test_disconnected_path_rejected(self):
        graph = flat_graph(3, 3)
        with pytest.raises(ValidationError):
            compute_kpis(graph, None, (), [(0, 0), (2, 2)])

    def test_path_endpoints_and_adjacency(self):
        graph, _ = random_risk_graph(5, 5, seed=50)
        result = plan(graph, request((0, 0), (4, 4), Balanced(0.25)))
        assert result.path[0] == (0, 0)
        assert result.path[-1] == (4, 4)
        for (r0, c0), (r1, c1) in zip(result.path, result.path[1:]):
            assert max(abs(r1 - r0), abs(c1 - c0)) == 1


class TestRequestValidation:
    def test_start_equals_goal(self):
        with pytest.raises(ValidationError):
            MissionRequest(start=(0, 0), goal=(0, 0), mode=Balanced(0.5))

    def test_obstacle_start(self):
        graph = flat_graph(3, 3, obstacles=[(0, 0)])
        with pytest.raises(ValidationError):
            plan(graph, request((0, 0), (2, 2), Balanced(0.5)))

    def test_mode_consistency_counters_stay_zero(self):
        diagnostics.reset()
        for seed in range(3):
            graph, _ = random_risk_graph(5, 5, seed=60 + seed)
            goal = graph.node_of(4, 4)
            t_min = float(apulse.precompute_heuristics(graph, goal).time_to_goal[0])
            plan(graph, request((0, 0), (4, 4), SafeWithinTime(t_min * 1.2)))
            plan(graph, request((0, 0), (4, 4), FastWithinRisk(0.5)))
        assert diagnostics.snapshot() == {"budget_violations": 0, "ceiling_violations": 0}
