"""Local path repair when new threats appear mid-mission.

New threats only touch risk within their detection range plus the
formation radius, so the field is updated copy-on-write on exactly that
region. The repair then re-solves the time-budgeted risk problem inside a
bounded patch window around the change, splices the result back into the
original route, and falls back to a full replan only when the window is
infeasible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import apulse, planner
from .apulse import SolverConfig
from .errors import InfeasibleBudgetError, NoPathError, ValidationError
from .planner import PlanResult, build_plan_result
from .risk import (
    LOG_CLAMP_EPS,
    RiskField,
    ThreatSpec,
    _expected_detection_raster,
    formation_dilate,
)
from .terrain import CostGraph

DEFAULT_SAFETY_MARGIN_CELLS = 2


@dataclass(frozen=True)
class DynamicEvent:
    new_threats: tuple[ThreatSpec, ...]
    current_position_index: int = 0
    timestamp_s: float = 0.0

    def __post_init__(self):
        if self.current_position_index < 0:
            raise ValidationError("current_position_index must be >= 0")
        object.__setattr__(self, "new_threats", tuple(self.new_threats))


@dataclass(frozen=True)
class EventDelta:
    """Bookkeeping from apply_event: where values were recomputed."""

    region: np.ndarray          # cells eligible for recomputation (R + rho disks)
    changed: np.ndarray         # cells whose log-risk actually changed
    recomputed_cells: int

    def __post_init__(self):
        self.region.setflags(write=False)
        self.changed.setflags(write=False)


@dataclass(frozen=True)
class PatchWindow:
    radius_m: float
    allowed: np.ndarray         # node mask: window cells plus one-cell boundary
    entry_index: int            # index into the original path
    exit_index: int

    def __post_init__(self):
        self.allowed.setflags(write=False)


def _support_disk_mask(
    rows: int, cols: int, cell_size_m: float, threats: tuple[ThreatSpec, ...], radius_fn
) -> np.ndarray:
    mask = np.zeros((rows, cols), dtype=bool)
    for threat in threats:
        radius = radius_fn(threat)
        reach = int(math.floor(radius / cell_size_m + 1e-12))
        for r0, c0 in zip(threat.prior_rows, threat.prior_cols):
            rlo, rhi = max(0, r0 - reach), min(rows, r0 + reach + 1)
            clo, chi = max(0, c0 - reach), min(cols, c0 + reach + 1)
            if rlo >= rhi or clo >= chi:
                continue
            rr = (np.arange(rlo, rhi) - r0)[:, None].astype(np.float64)
            cc = (np.arange(clo, chi) - c0)[None, :].astype(np.float64)
            inside = (rr * rr + cc * cc) * cell_size_m * cell_size_m <= radius * radius
            mask[rlo:rhi, clo:chi] |= inside
    return mask


def apply_event(
    graph: CostGraph, riskfield: RiskField, event: DynamicEvent
) -> tuple[RiskField, CostGraph, EventDelta]:
    """Fold new threats into the field, recomputing only affected cells.

    Returns fresh RiskField and CostGraph overlays; the inputs are left
    untouched and cells outside the affected region are bit-identical.
    """
    rows, cols = riskfield.shape
    cell = graph.cell_size_m
    rho = riskfield.formation_width_m / 2.0

    if not event.new_threats:
        empty = np.zeros((rows, cols), dtype=bool)
        return riskfield, graph, EventDelta(region=empty, changed=empty.copy(), recomputed_cells=0)

    region = _support_disk_mask(
        rows, cols, cell, event.new_threats, lambda t: t.detection.range_m + rho
    )

    survival = riskfield.detection_survival.copy()
    impact = riskfield.impact.copy()
    for threat in event.new_threats:
        p_bar = _expected_detection_raster(threat, rows, cols, cell)
        survival[region] *= 1.0 - p_bar[region]
        covered = region & (p_bar > 0.0)
        imp = threat.impact if isinstance(threat.impact, np.ndarray) else float(threat.impact)
        if isinstance(imp, np.ndarray):
            if imp.shape != (rows, cols):
                raise ValidationError(f"threat '{threat.id}': impact raster shape mismatch")
            impact[covered] = np.maximum(impact[covered], imp[covered])
        else:
            impact[covered] = np.maximum(impact[covered], imp)

    p_det = riskfield.p_det.copy()
    risk = riskfield.risk.copy()
    p_det[region] = 1.0 - survival[region]
    risk[region] = p_det[region] * impact[region]

    # dilated risk changes only within rho of changed risk; recompute on a
    # padded bounding box and write back just the affected cells
    risk_form = riskfield.risk_form.copy()
    log_risk = riskfield.log_risk.copy()
    rows_idx, cols_idx = np.nonzero(region)
    pad = int(math.floor(rho / cell + 1e-12))
    rlo, rhi = max(0, rows_idx.min() - pad), min(rows, rows_idx.max() + 1 + pad)
    clo, chi = max(0, cols_idx.min() - pad), min(cols, cols_idx.max() + 1 + pad)
    sub = formation_dilate(risk[rlo:rhi, clo:chi], riskfield.formation_width_m, cell)
    sub_mask = region[rlo:rhi, clo:chi]
    risk_form[rlo:rhi, clo:chi][sub_mask] = sub[sub_mask]
    log_risk[region] = -np.log1p(-np.minimum(risk_form[region], 1.0 - LOG_CLAMP_EPS))

    changed = np.zeros((rows, cols), dtype=bool)
    changed[region] = log_risk[region] != riskfield.log_risk[region]

    updated = RiskField(
        p_det=p_det,
        risk=risk,
        risk_form=risk_form,
        log_risk=log_risk,
        detection_survival=survival,
        impact=impact,
        formation_width_m=riskfield.formation_width_m,
    )
    return (
        updated,
        graph.with_log_risk(log_risk),
        EventDelta(region=region, changed=changed, recomputed_cells=int(region.sum())),
    )


def build_patch_window(
    graph: CostGraph,
    event: DynamicEvent,
    delta: EventDelta,
    path_nodes: list[int],
    formation_width_m: float,
    safety_margin_cells: int = DEFAULT_SAFETY_MARGIN_CELLS,
    widen: float = 1.0,
) -> PatchWindow | None:
    """Bounded region around the new threats plus entry/exit path anchors.

    Returns None when no path cell was touched by the event.
    """
    margin_m = safety_margin_cells * graph.cell_size_m
    rho = formation_width_m / 2.0
    radius = (
        max(t.detection.range_m for t in event.new_threats) + rho + margin_m
    ) * widen

    changed_on_path = [
        i for i, v in enumerate(path_nodes)
        if delta.changed[graph.node_rc[v, 0], graph.node_rc[v, 1]]
    ]
    if not changed_on_path:
        return None
    first, last = changed_on_path[0], changed_on_path[-1]
    entry = max(0, first - 1 - safety_margin_cells, event.current_position_index)
    exit_ = min(len(path_nodes) - 1, last + 1 + safety_margin_cells)

    window = _support_disk_mask(
        graph.rows, graph.cols, graph.cell_size_m, event.new_threats, lambda t: radius
    )
    # one-cell boundary so the solver can skirt the window edge
    grown = window.copy()
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            r0, r1 = max(0, -dr), graph.rows - max(0, dr)
            c0, c1 = max(0, -dc), graph.cols - max(0, dc)
            grown[r0 + dr:r1 + dr, c0 + dc:c1 + dc] |= window[r0:r1, c0:c1]
    allowed = grown[graph.node_rc[:, 0], graph.node_rc[:, 1]]
    allowed = allowed.copy()
    allowed[path_nodes[entry]] = True
    allowed[path_nodes[exit_]] = True
    return PatchWindow(radius_m=radius, allowed=allowed, entry_index=entry, exit_index=exit_)


def _segment_time(graph: CostGraph, nodes: list[int]) -> float:
    t = 0.0
    for u, v in zip(nodes, nodes[1:]):
        t += float(graph.etime[graph.edge_index(u, v)])
    return t


def repair(
    graph_new: CostGraph,
    riskfield_new: RiskField,
    original: PlanResult,
    event: DynamicEvent,
    delta: EventDelta,
    slack: float,
    threats: tuple[ThreatSpec, ...] = (),
    config: SolverConfig | None = None,
) -> PlanResult:
    """Splice a repaired segment into the original path.

    The replaced segment may take at most its original time times
    (1 + slack). The repaired route is never worse than keeping the
    original path on the post-event field; if the patch window is
    infeasible it is widened once by 50%, then a full replan runs with the
    equivalent slackened budget and the result is flagged.
    """
    if slack < 0:
        raise ValidationError("slack must be >= 0")
    if event.current_position_index >= len(original.path):
        raise ValidationError("current_position_index beyond the active path")
    path_nodes = [graph_new.node_of(r, c) for r, c in original.path]
    baseline = build_plan_result(
        graph_new, path_nodes, original.mode_echo, None, riskfield_new, threats,
        flags=dict(original.flags),
    )
    if not event.new_threats:
        return baseline

    flags = {"full_replan_used": False}
    candidate: PlanResult | None = None
    total_time = baseline.total_time_s

    for widen in (1.0, 1.5):
        window = build_patch_window(
            graph_new, event, delta, path_nodes,
            riskfield_new.formation_width_m, widen=widen,
        )
        if window is None:
            return baseline
        entry_node = path_nodes[window.entry_index]
        exit_node = path_nodes[window.exit_index]
        segment = path_nodes[window.entry_index:window.exit_index + 1]
        seg_budget = _segment_time(graph_new, segment) * (1.0 + slack) + apulse.BUDGET_TOL_S
        if entry_node == exit_node:
            break
        try:
            patched = apulse.solve(
                graph_new, entry_node, exit_node, seg_budget,
                config=config, allowed=window.allowed,
                riskfield=riskfield_new, threats=threats,
            )
        except (NoPathError, InfeasibleBudgetError):
            continue
        seg_nodes = [graph_new.node_of(r, c) for r, c in patched.path]
        seg_time = patched.total_time_s
        if seg_time > _segment_time(graph_new, segment) * (1.0 + slack) + 1e-9:
            raise AssertionError("patched segment exceeded its slack budget")
        spliced = (
            path_nodes[:window.entry_index] + seg_nodes + path_nodes[window.exit_index + 1:]
        )
        candidate = build_plan_result(
            graph_new, spliced, original.mode_echo, patched.solver_stats,
            riskfield_new, threats, flags=flags,
        )
        break

    if candidate is None:
        # window infeasible even widened: replan the whole mission with the
        # equivalent slackened budget
        flags["full_replan_used"] = True
        window = build_patch_window(
            graph_new, event, delta, path_nodes, riskfield_new.formation_width_m
        )
        if window is None:
            return baseline
        segment = path_nodes[window.entry_index:window.exit_index + 1]
        budget = total_time + slack * _segment_time(graph_new, segment) + apulse.BUDGET_TOL_S
        candidate = apulse.solve(
            graph_new, path_nodes[0], path_nodes[-1], budget,
            config=config, riskfield=riskfield_new, threats=threats,
            mode_echo=dict(original.mode_echo),
        )
        candidate = build_plan_result(
            graph_new,
            [graph_new.node_of(r, c) for r, c in candidate.path],
            original.mode_echo, candidate.solver_stats, riskfield_new, threats,
            flags=flags,
        )

    # the repair must never make the now-risky route worse
    if candidate.total_log_risk > baseline.total_log_risk + 1e-12:
        return baseline
    return candidate


def compare_repair_vs_full(
    graph_new: CostGraph,
    riskfield_new: RiskField,
    original: PlanResult,
    event: DynamicEvent,
    delta: EventDelta,
    slack: float,
    threats: tuple[ThreatSpec, ...] = (),
    config: SolverConfig | None = None,
) -> dict:
    """Run the local patch and a from-scratch replan; report both."""
    path_nodes = [graph_new.node_of(r, c) for r, c in original.path]
    baseline = build_plan_result(
        graph_new, path_nodes, original.mode_echo, None, riskfield_new, threats
    )

    t0 = time.monotonic()
    patched = repair(graph_new, riskfield_new, original, event, delta, slack, threats, config)
    patch_wall = time.monotonic() - t0

    window = build_patch_window(
        graph_new, event, delta, path_nodes, riskfield_new.formation_width_m
    )
    if window is None:
        seg_extra = 0.0
    else:
        segment = path_nodes[window.entry_index:window.exit_index + 1]
        seg_extra = slack * _segment_time(graph_new, segment)
    budget = baseline.total_time_s + seg_extra + apulse.BUDGET_TOL_S

    t0 = time.monotonic()
    full = apulse.solve(
        graph_new, path_nodes[0], path_nodes[-1], budget,
        config=config, riskfield=riskfield_new, threats=threats,
        mode_echo=dict(original.mode_echo),
    )
    full_wall = time.monotonic() - t0

    gap_pct = (
        (patched.total_log_risk - full.total_log_risk) / full.total_log_risk * 100.0
        if full.total_log_risk > 0
        else 0.0
    )
    return {
        "pre": _kpi_block(baseline),
        "patch": _kpi_block(patched),
        "full": _kpi_block(full),
        "risk_gap_pct": gap_pct,
        "wall_time_s": {"patch": patch_wall, "full": full_wall},
        "full_replan_used": patched.flags.get("full_replan_used", False),
        "stats": {
            "patch_labels_popped": patched.solver_stats.labels_popped,
            "full_labels_popped": full.solver_stats.labels_popped,
        },
    }


def _kpi_block(result: PlanResult) -> dict:
    return {
        "total_time_s": result.total_time_s,
        "total_distance_m": result.total_distance_m,
        "total_log_risk": result.total_log_risk,
        "survival_probability": result.survival_probability,
    }


def build_patch_report(pre: PlanResult, post: PlanResult) -> dict:
    """Pre/post/delta table for one repair, one row group per metric."""
    def pct(a: float, b: float) -> float:
        return (b - a) / a * 100.0 if a != 0 else 0.0

    return {
        "risk_log": {
            "pre": pre.total_log_risk,
            "post": post.total_log_risk,
            "delta_pct": pct(pre.total_log_risk, post.total_log_risk),
        },
        "time_s": {
            "pre": pre.total_time_s,
            "post": post.total_time_s,
            "delta_pct": pct(pre.total_time_s, post.total_time_s),
        },
        "survival": {
            "pre": pre.survival_probability,
            "post": post.survival_probability,
            "delta_abs": post.survival_probability - pre.survival_probability,
        },
    }
