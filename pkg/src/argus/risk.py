"""Threat intelligence to cost surface: detection, composition, dilation, log-cost.

Each threat carries a plateau-decay detection curve and a locational prior
over the grid. The pipeline is: expected detection per threat (spatial
convolution with the prior), survival composition across threats, impact
scaling, worst-case dilation over the formation footprint, then the log
transform that makes multiplicative survival additive for graph search.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ShapeError, ValidationError
from .terrain import CostGraph, TerrainGrid, _read_json

# Clamp applied before the log so fully-detected cells keep a finite cost;
# such cells are effectively forbidden by cost rather than by structure.
LOG_CLAMP_EPS = 1e-9


@dataclass(frozen=True)
class DetectionParams:
    """Plateau-decay detection curve: certain inside the plateau, zero beyond range."""

    range_m: float
    plateau_fraction: float
    decay_exponent: float

    def __post_init__(self):
        if not self.range_m > 0:
            raise ValidationError(f"detection range must be > 0, got {self.range_m}")
        if not 0.0 < self.plateau_fraction < 1.0:
            raise ValidationError(
                f"plateau fraction must be in (0,1), got {self.plateau_fraction}"
            )
        if not self.decay_exponent > 0:
            raise ValidationError(f"decay exponent must be > 0, got {self.decay_exponent}")


def detection_probability(params: DetectionParams, d: float) -> float:
    """Probability of detection at distance d meters; continuous, non-increasing."""
    if d < 0:
        raise ValidationError(f"distance must be >= 0, got {d}")
    return float(_detection_curve(params, np.asarray([d], dtype=np.float64))[0])


def _detection_curve(params: DetectionParams, d: np.ndarray) -> np.ndarray:
    plateau_r = params.plateau_fraction * params.range_m
    out = np.zeros_like(d, dtype=np.float64)
    out[d <= plateau_r] = 1.0
    mid = (d > plateau_r) & (d < params.range_m)
    if mid.any():
        x = (d[mid] - plateau_r) / (params.range_m - plateau_r)
        out[mid] = (1.0 - x * x) ** params.decay_exponent
    return out


@dataclass(frozen=True)
class ThreatSpec:
    """One threat: detection curve, consequence factor, and locational prior.

    The prior is stored sparsely as parallel arrays (rows, cols, weights) and
    normalized to sum to one on construction. Impact is a scalar in [0,1] or
    a full raster aligned with the grid.
    """

    id: str
    detection: DetectionParams
    prior_rows: np.ndarray
    prior_cols: np.ndarray
    prior_weights: np.ndarray
    impact: float | np.ndarray = 1.0

    def __post_init__(self):
        w = np.asarray(self.prior_weights, dtype=np.float64)
        if w.size == 0:
            raise ValidationError(f"threat '{self.id}': prior has no support cells")
        if np.any(w < 0):
            raise ValidationError(f"threat '{self.id}': prior weights must be >= 0")
        total = w.sum()
        if total <= 0:
            raise ValidationError(f"threat '{self.id}': prior weights sum to zero")
        object.__setattr__(self, "prior_weights", w / total)
        object.__setattr__(self, "prior_rows", np.asarray(self.prior_rows, dtype=np.int64))
        object.__setattr__(self, "prior_cols", np.asarray(self.prior_cols, dtype=np.int64))
        imp = self.impact
        if isinstance(imp, np.ndarray):
            if np.any(imp < 0) or np.any(imp > 1):
                raise ValidationError(f"threat '{self.id}': impact values must be in [0,1]")
        elif not 0.0 <= float(imp) <= 1.0:
            raise ValidationError(f"threat '{self.id}': impact must be in [0,1], got {imp}")

    def mean_location_rc(self) -> tuple[float, float]:
        """Prior-weighted mean position in fractional (row, col) units."""
        r = float(np.dot(self.prior_weights, self.prior_rows))
        c = float(np.dot(self.prior_weights, self.prior_cols))
        return r, c


def threat_from_dict(raw: dict, index: int = 0) -> ThreatSpec:
    try:
        detection = DetectionParams(
            range_m=float(raw["R_m"]),
            plateau_fraction=float(raw["phi"]),
            decay_exponent=float(raw["p"]),
        )
    except KeyError as exc:
        raise ParseError(f"threat #{index}: missing field {exc}") from exc
    prior = raw.get("prior")
    if not isinstance(prior, dict) or "cells" not in prior:
        raise ParseError(f"threat #{index}: field 'prior' must be {{'cells': [[r,c,w],...]}}")
    cells = prior["cells"]
    if not cells:
        raise ParseError(f"threat #{index}: prior.cells must not be empty")
    rows = [int(c[0]) for c in cells]
    cols = [int(c[1]) for c in cells]
    weights = [float(c[2]) for c in cells]
    impact = raw.get("impact", 1.0)
    if isinstance(impact, list):
        impact = np.asarray(impact, dtype=np.float64)
    else:
        impact = float(impact)
    return ThreatSpec(
        id=str(raw.get("id", f"threat-{index}")),
        detection=detection,
        prior_rows=np.array(rows),
        prior_cols=np.array(cols),
        prior_weights=np.array(weights),
        impact=impact,
    )


def threat_to_dict(threat: ThreatSpec) -> dict:
    impact = threat.impact
    return {
        "id": threat.id,
        "R_m": threat.detection.range_m,
        "phi": threat.detection.plateau_fraction,
        "p": threat.detection.decay_exponent,
        "impact": impact.ravel().tolist() if isinstance(impact, np.ndarray) else impact,
        "prior": {
            "cells": [
                [int(r), int(c), float(w)]
                for r, c, w in zip(threat.prior_rows, threat.prior_cols, threat.prior_weights)
            ]
        },
    }


def load_threats(path: str | Path) -> list[ThreatSpec]:
    raw = _read_json(path)
    if not isinstance(raw, list):
        raise ParseError(f"{path}: threat file must be a JSON array")
    return [threat_from_dict(item, i) for i, item in enumerate(raw)]


def expected_detection(threat: ThreatSpec, grid: TerrainGrid) -> np.ndarray:
    """Expected detection raster: prior-weighted average of the curve.

    Centroid-to-centroid planar distances; contributions are exactly zero
    beyond the detection range, so only a bounded window per support cell
    is evaluated.
    """
    if np.any(threat.prior_rows >= grid.rows) or np.any(threat.prior_cols >= grid.cols) or \
            np.any(threat.prior_rows < 0) or np.any(threat.prior_cols < 0):
        raise ShapeError(f"threat '{threat.id}': prior support outside the grid")
    return _expected_detection_raster(threat, grid.rows, grid.cols, grid.cell_size_m)


def _expected_detection_raster(
    threat: ThreatSpec, rows: int, cols: int, cell_size_m: float
) -> np.ndarray:
    out = np.zeros((rows, cols), dtype=np.float64)
    reach = int(math.ceil(threat.detection.range_m / cell_size_m))
    for r0, c0, w in zip(threat.prior_rows, threat.prior_cols, threat.prior_weights):
        if w == 0.0:
            continue
        rlo, rhi = max(0, r0 - reach), min(rows, r0 + reach + 1)
        clo, chi = max(0, c0 - reach), min(cols, c0 + reach + 1)
        rr = np.arange(rlo, rhi, dtype=np.float64) - r0
        cc = np.arange(clo, chi, dtype=np.float64) - c0
        d = np.hypot(rr[:, None], cc[None, :]) * cell_size_m
        out[rlo:rhi, clo:chi] += w * _detection_curve(threat.detection, d)
    return np.clip(out, 0.0, 1.0)


def combine_threats(
    per_threat: list[np.ndarray], shape: tuple[int, int] | None = None
) -> np.ndarray:
    """Combined detection probability under independence: 1 - prod(1 - p_i)."""
    if not per_threat:
        if shape is None:
            raise ValidationError("combine_threats needs a shape when the threat list is empty")
        return np.zeros(shape, dtype=np.float64)
    survival = np.ones_like(per_threat[0], dtype=np.float64)
    for raster in per_threat:
        if raster.shape != per_threat[0].shape:
            raise ShapeError("per-threat rasters must share one shape")
        if np.any(raster < 0) or np.any(raster > 1):
            raise ValidationError("per-threat detection values must be in [0,1]")
        survival *= 1.0 - raster
    return 1.0 - survival


def risk_surface(p_det: np.ndarray, impact: float | np.ndarray) -> np.ndarray:
    """Operational risk: detection probability times local consequence factor."""
    imp = np.asarray(impact, dtype=np.float64)
    if np.any(imp < 0) or np.any(imp > 1):
        raise ValidationError("impact must be within [0,1]")
    if imp.ndim != 0 and imp.shape != p_det.shape:
        raise ShapeError(f"impact shape {imp.shape} != detection shape {p_det.shape}")
    return p_det * imp


def _disk_offsets(radius_m: float, cell_size_m: float) -> list[tuple[int, int]]:
    if radius_m <= 0:
        return [(0, 0)]
    k = int(math.floor(radius_m / cell_size_m + 1e-12))
    out = []
    for dr in range(-k, k + 1):
        for dc in range(-k, k + 1):
            if (dr * dr + dc * dc) * cell_size_m * cell_size_m <= radius_m * radius_m:
                out.append((dr, dc))
    return out


def formation_dilate(
    risk: np.ndarray, formation_width_m: float, cell_size_m: float
) -> np.ndarray:
    """Worst-case risk over a disk of radius formation_width/2 around each cell."""
    if formation_width_m < 0:
        raise ValidationError(f"formation width must be >= 0, got {formation_width_m}")
    out = risk.astype(np.float64).copy()
    rows, cols = risk.shape
    for dr, dc in _disk_offsets(formation_width_m / 2.0, cell_size_m):
        if dr == 0 and dc == 0:
            continue
        r0, r1 = max(0, -dr), rows - max(0, dr)
        c0, c1 = max(0, -dc), cols - max(0, dc)
        if r0 >= r1 or c0 >= c1:
            continue
        np.maximum(
            out[r0 + dr:r1 + dr, c0 + dc:c1 + dc],
            risk[r0:r1, c0:c1],
            out=out[r0 + dr:r1 + dr, c0 + dc:c1 + dc],
        )
    return out


def log_cost(risk_form: np.ndarray) -> np.ndarray:
    """Additive per-cell cost: -log(1 - risk), clamped to stay finite."""
    r = np.asarray(risk_form, dtype=np.float64)
    if np.any(r < 0) or np.any(r > 1):
        raise ValidationError("risk values must be in [0,1]")
    return -np.log1p(-np.minimum(r, 1.0 - LOG_CLAMP_EPS))


@dataclass(frozen=True)
class RiskField:
    """All per-cell risk rasters for one scenario at one formation width."""

    p_det: np.ndarray
    risk: np.ndarray
    risk_form: np.ndarray
    log_risk: np.ndarray
    detection_survival: np.ndarray  # prod_i (1 - p_i), kept for incremental updates
    impact: np.ndarray
    formation_width_m: float

    def __post_init__(self):
        for name in ("p_det", "risk", "risk_form", "log_risk", "detection_survival", "impact"):
            arr = getattr(self, name)
            if arr.shape != self.p_det.shape:
                raise ShapeError(f"risk raster '{name}' shape mismatch")
            arr.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.p_det.shape


def build_risk_field(
    grid: TerrainGrid, threats: list[ThreatSpec], formation_width_m: float = 0.0
) -> RiskField:
    """Run the full threat pipeline over a grid."""
    shape = (grid.rows, grid.cols)
    per_threat = [expected_detection(t, grid) for t in threats]
    survival = np.ones(shape, dtype=np.float64)
    for raster in per_threat:
        survival *= 1.0 - raster
    p_det = 1.0 - survival
    # consequence applies where a threat can actually detect: the combined
    # impact raster is the worst impact among threats covering each cell
    impact = np.ones(shape, dtype=np.float64)
    if threats:
        impact = np.zeros(shape, dtype=np.float64)
        for t, p_bar in zip(threats, per_threat):
            imp = t.impact if isinstance(t.impact, np.ndarray) else np.full(shape, t.impact)
            if imp.shape != shape:
                raise ShapeError(f"threat '{t.id}': impact raster shape mismatch")
            covered = p_bar > 0.0
            impact[covered] = np.maximum(impact[covered], imp[covered])
    risk = risk_surface(p_det, impact)
    risk_form = formation_dilate(risk, formation_width_m, grid.cell_size_m)
    return RiskField(
        p_det=p_det,
        risk=risk,
        risk_form=risk_form,
        log_risk=log_cost(risk_form),
        detection_survival=survival,
        impact=impact,
        formation_width_m=formation_width_m,
    )


def path_survival(graph: CostGraph, path: list[tuple[int, int]]) -> float:
    """Survival probability of a connected cell path: exp(-sum of log-risk).

    The start cell is never charged; every entered cell is.
    """
    if not path:
        raise ValidationError("path must not be empty")
    nodes = [graph.node_of(r, c) for r, c in path]
    for u, v in zip(nodes, nodes[1:]):
        if not graph.has_edge(u, v):
            raise ValidationError(f"path cells {graph.cell_of(u)} -> {graph.cell_of(v)} not connected")
    total = float(graph.node_log_risk[nodes[1:]].sum()) if len(nodes) > 1 else 0.0
    return math.exp(-total)
