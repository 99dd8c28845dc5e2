from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from argus.errors import ShapeError, ValidationError
from argus.risk import (
    LOG_CLAMP_EPS,
    DetectionParams,
    ThreatSpec,
    build_risk_field,
    combine_threats,
    detection_probability,
    expected_detection,
    formation_dilate,
    log_cost,
    path_survival,
    risk_surface,
)

from conftest import flat_graph, flat_grid

import oracles


def dirac_threat(r, c, range_m=100.0, phi=0.5, p=1.0, impact=1.0, tid="t0"):
    return ThreatSpec(
        id=tid,
        detection=DetectionParams(range_m=range_m, plateau_fraction=phi, decay_exponent=p),
        prior_rows=np.array([r]),
        prior_cols=np.array([c]),
        prior_weights=np.array([1.0]),
        impact=impact,
    )


class TestDetectionCurve:
    def test_plateau(self):
        p = DetectionParams(100.0, 0.5, 1.0)
        assert detection_probability(p, 0.0) == 1.0
        assert detection_probability(p, 50.0) == 1.0

    def test_cutoff(self):
        p = DetectionParams(100.0, 0.5, 1.0)
        assert detection_probability(p, 100.0) == 0.0
        assert detection_probability(p, 250.0) == 0.0

    def test_hand_value(self):
        p = DetectionParams(100.0, 0.5, 1.0)
        assert detection_probability(p, 75.0) == pytest.approx(0.75, abs=1e-12)

    @given(
        r=st.floats(10.0, 500.0),
        phi=st.floats(0.05, 0.95),
        p=st.floats(0.2, 5.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_non_increasing_and_continuous(self, r, phi, p):
        params = DetectionParams(r, phi, p)
        ds = np.linspace(0.0, r * 1.1, 400)
        vals = [detection_probability(params, d) for d in ds]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
        plateau_r = phi * r
        # joints take their limit values exactly; one-sided gaps vanish
        assert abs(detection_probability(params, plateau_r) - 1.0) < 1e-9
        assert detection_probability(params, r) == 0.0
        for edge, limit in ((plateau_r, 1.0), (r, 0.0)):
            for sign in (-1, 1):
                gaps = [
                    abs(detection_probability(
                        params, min(max(edge + sign * eps, 0.0), r * 2)) - limit)
                    for eps in (1e-3, 1e-5, 1e-7)
                ]
                assert all(a >= b - 1e-12 for a, b in zip(gaps, gaps[1:]))
                # modulus of continuity at the outer joint scales as eps**p
                modulus = 2.0 * (2e-7 / ((1 - phi) * r)) ** min(p, 1.0) + 1e-9
                assert gaps[-1] <= max(modulus, 1e-6)

    def test_invalid_params(self):
        with pytest.raises(ValidationError):
            DetectionParams(-5.0, 0.5, 1.0)
        with pytest.raises(ValidationError):
            DetectionParams(100.0, 1.0, 1.0)
        with pytest.raises(ValidationError):
            DetectionParams(100.0, 0.5, 0.0)


class TestExpectedDetection:
    def test_dirac_prior_is_pointwise_curve(self):
        grid = flat_grid(6, 6)
        threat = dirac_threat(2, 3, range_m=80.0)
        raster = expected_detection(threat, grid)
        for r in range(6):
            for c in range(6):
                d = math.hypot(r - 2, c - 3) * 25.0
                assert raster[r, c] == pytest.approx(
                    detection_probability(threat.detection, d), abs=1e-12
                )

    def test_two_cell_prior_average(self):
        grid = flat_grid(5, 5)
        threat = ThreatSpec(
            id="pair",
            detection=DetectionParams(100.0, 0.5, 1.0),
            prior_rows=np.array([0, 4]),
            prior_cols=np.array([0, 4]),
            prior_weights=np.array([1.0, 1.0]),
        )
        raster = expected_detection(threat, grid)
        det = threat.detection
        for r, c in ((0, 0), (2, 2), (1, 3)):
            d1 = math.hypot(r - 0, c - 0) * 25.0
            d2 = math.hypot(r - 4, c - 4) * 25.0
            expect = 0.5 * detection_probability(det, d1) + 0.5 * detection_probability(det, d2)
            assert raster[r, c] == pytest.approx(expect, abs=1e-12)

    def test_out_of_range_is_zero(self):
        grid = flat_grid(10, 10)
        threat = dirac_threat(0, 0, range_m=60.0)  # 2.4 cells
        raster = expected_detection(threat, grid)
        assert raster[9, 9] == 0.0
        assert raster[0, 3] == 0.0  # 75 m away

    def test_weighted_average_bound(self):
        grid = flat_grid(8, 8)
        rng = np.random.default_rng(2)
        threat = ThreatSpec(
            id="spread",
            detection=DetectionParams(120.0, 0.4, 2.0),
            prior_rows=rng.integers(0, 8, size=5),
            prior_cols=rng.integers(0, 8, size=5),
            prior_weights=rng.uniform(0.1, 1.0, size=5),
        )
        raster = expected_detection(threat, grid)
        assert raster.max() <= 1.0 + 1e-12

    def test_prior_outside_grid_rejected(self):
        grid = flat_grid(4, 4)
        with pytest.raises(ShapeError):
            expected_detection(dirac_threat(9, 0), grid)

    def test_prior_normalized_on_ingest(self):
        threat = ThreatSpec(
            id="n",
            detection=DetectionParams(100.0, 0.5, 1.0),
            prior_rows=np.array([0, 1]),
            prior_cols=np.array([0, 1]),
            prior_weights=np.array([3.0, 1.0]),
        )
        assert threat.prior_weights.sum() == pytest.approx(1.0)
        assert threat.prior_weights[0] == pytest.approx(0.75)


class TestCombineThreats:
    def test_empty_is_zero(self):
        out = combine_threats([], shape=(3, 3))
        assert out.shape == (3, 3)
        assert not out.any()

    def test_two_halves(self):
        a = np.full((2, 2), 0.5)
        out = combine_threats([a, a])
        assert out[0, 0] == pytest.approx(0.75, abs=1e-12)

    def test_absorbing_one(self):
        a = np.zeros((2, 2))
        b = np.ones((2, 2))
        assert combine_threats([a, b])[1, 1] == 1.0

    @given(st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_permutation_invariant_and_survival_identity(self, seed):
        rng = np.random.default_rng(seed)
        rasters = [rng.uniform(0, 1, size=(3, 3)) for _ in range(4)]
        combined = combine_threats(rasters)
        shuffled = list(rasters)
        rng.shuffle(shuffled)
        assert np.allclose(combined, combine_threats(shuffled), atol=1e-12)
        survival = np.ones((3, 3))
        for r in rasters:
            survival *= 1 - r
        assert np.allclose(1 - combined, survival, atol=1e-12)


class TestRiskSurface:
    def test_identity_impact(self):
        p = np.array([[0.3, 0.8]])
        assert np.array_equal(risk_surface(p, 1.0), p)

    def test_zero_impact(self):
        p = np.array([[0.3, 0.8]])
        assert not risk_surface(p, 0.0).any()

    def test_hand_product(self):
        assert risk_surface(np.array([[0.8]]), 0.5)[0, 0] == pytest.approx(0.4, abs=1e-12)

    def test_out_of_range_impact(self):
        with pytest.raises(ValidationError):
            risk_surface(np.array([[0.5]]), 1.5)


class TestFormationDilate:
    def test_zero_width_identity(self):
        rng = np.random.default_rng(0)
        risk = rng.uniform(0, 1, size=(5, 5))
        assert np.array_equal(formation_dilate(risk, 0.0, 25.0), risk)

    def test_hot_cell_disk(self):
        risk = np.zeros((15, 15))
        risk[7, 7] = 0.9
        out = formation_dilate(risk, 300.0, 25.0)
        # brute force: max over cells within 150 m
        for r in range(15):
            for c in range(15):
                expect = 0.9 if (r - 7) ** 2 + (c - 7) ** 2 <= 36 else 0.0
                assert out[r, c] == expect

    def test_uniform_unchanged(self):
        risk = np.full((6, 6), 0.42)
        assert np.array_equal(formation_dilate(risk, 200.0, 25.0), risk)

    @given(st.integers(0, 10**6), st.floats(0.0, 300.0))
    @settings(max_examples=25, deadline=None)
    def test_pointwise_dominates_original(self, seed, width):
        rng = np.random.default_rng(seed)
        risk = rng.uniform(0, 1, size=(7, 7))
        out = formation_dilate(risk, width, 25.0)
        assert (out >= risk - 1e-15).all()

    def test_matches_bruteforce_random(self):
        rng = np.random.default_rng(9)
        risk = rng.uniform(0, 1, size=(9, 9))
        width = 175.0  # rho = 87.5 m = 3.5 cells
        out = formation_dilate(risk, width, 25.0)
        rho = width / 2
        for r in range(9):
            for c in range(9):
                vals = [
                    risk[rr, cc]
                    for rr in range(9)
                    for cc in range(9)
                    if math.hypot(rr - r, cc - c) * 25.0 <= rho
                ]
                assert out[r, c] == max(vals)


class TestLogCost:
    def test_zero(self):
        assert log_cost(np.array([0.0]))[0] == 0.0

    def test_half(self):
        assert log_cost(np.array([0.5]))[0] == pytest.approx(0.6931471805599453, abs=1e-9)

    def test_clamped_one(self):
        val = log_cost(np.array([1.0]))[0]
        assert val == pytest.approx(-math.log(LOG_CLAMP_EPS), abs=1e-6)
        assert math.isfinite(val)

    def test_monotone(self):
        rs = np.linspace(0, 1, 50)
        ls = log_cost(rs)
        assert (np.diff(ls) >= 0).all()


class TestPathSurvival:
    def test_zero_risk_path(self):
        graph = flat_graph(3, 3)
        assert path_survival(graph, [(0, 0), (1, 1), (2, 2)]) == 1.0

    def test_two_half_risk_cells(self):
        risks = np.zeros((1, 3))
        risks[0, 1] = 0.5
        risks[0, 2] = 0.5
        graph = flat_graph(1, 3, risks=risks)
        assert path_survival(graph, [(0, 0), (0, 1), (0, 2)]) == pytest.approx(0.25, abs=1e-12)

    def test_start_cell_never_charged(self):
        risks = np.zeros((1, 2))
        risks[0, 0] = 0.9
        graph = flat_graph(1, 2, risks=risks)
        assert path_survival(graph, [(0, 0), (0, 1)]) == 1.0

    def test_disconnected_rejected(self):
        graph = flat_graph(3, 3)
        with pytest.raises(ValidationError):
            path_survival(graph, [(0, 0), (2, 2)])

    def test_identity_with_product(self):
        rng = np.random.default_rng(4)
        for seed in range(5):
            risks = np.random.default_rng(seed).uniform(0, 0.95, size=(4, 4))
            graph = flat_graph(4, 4, risks=risks)
            cells = [(0, 0), (1, 1), (2, 1), (3, 2), (3, 3)]
            surv = path_survival(graph, cells)
            product = 1.0
            for cell in cells[1:]:
                product *= 1 - risks[cell]
            assert surv == pytest.approx(product, abs=1e-9)


class TestLogSumVsProductArgmin:
    def test_argmin_identity_small_grids(self):
        # minimizing summed log-cost and maximizing survival product pick the
        # same path; checked exhaustively on small positive-risk instances
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            risks = rng.uniform(0.05, 0.9, size=(3, 3))
            graph = flat_graph(3, 3, risks=risks)
            s, g = graph.node_of(0, 0), graph.node_of(2, 2)
            best_log = oracles.min_logrisk_path(graph, s, g)
            best_surv = oracles.max_survival_path(graph, risks, s, g)
            assert best_log[2] == best_surv[2]
            assert math.exp(-best_log[0]) == pytest.approx(best_surv[0], abs=1e-9)


class TestBuildRiskField:
    def test_pipeline_invariants(self):
        grid = flat_grid(10, 10)
        threats = [dirac_threat(4, 4, impact=0.8), dirac_threat(6, 7, range_m=60.0)]
        field = build_risk_field(grid, threats, formation_width_m=100.0)
        assert ((0 <= field.p_det) & (field.p_det <= 1)).all()
        assert (field.risk <= field.p_det + 1e-15).all()
        assert (field.risk_form >= field.risk - 1e-15).all()
        assert (field.log_risk >= 0).all()
        assert np.isfinite(field.log_risk).all()

    def test_impact_applies_within_coverage_only(self):
        grid = flat_grid(10, 10)
        threats = [dirac_threat(2, 2, range_m=60.0, impact=0.5, tid="a"),
                   dirac_threat(7, 7, range_m=60.0, impact=1.0, tid="b")]
        field = build_risk_field(grid, threats, 0.0)
        assert field.impact[2, 2] == 0.5
        assert field.impact[7, 7] == 1.0
        assert field.impact[0, 9] == 0.0  # covered by neither
        assert field.risk[2, 2] == pytest.approx(0.5)

    def test_no_threats(self):
        grid = flat_grid(4, 4)
        field = build_risk_field(grid, [], 50.0)
        assert not field.risk_form.any()
        assert not field.log_risk.any()
