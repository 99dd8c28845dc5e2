"""File formats: waypoint export, mission requests, results, events.

The waypoint writer emits the tab-separated ``QGC WPL 110`` plain-text
format consumed by common mission-control tools; field order and float
formatting are frozen so exports are reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, ValidationError
from .planner import (
    Balanced,
    FastWithinRisk,
    MissionRequest,
    PlanResult,
    SafeWithinTime,
)
from .replan import DynamicEvent
from .risk import threat_from_dict
from .terrain import TerrainGrid, _read_json

WPL_HEADER = "QGC WPL 110"
NAV_WAYPOINT_CMD = 16
FRAME_GLOBAL = 0  # coordinates are degrees (grid carries a geo anchor)
FRAME_LOCAL = 1   # coordinates are local meters from the grid origin
METERS_PER_DEG_LAT = 111_320.0


@dataclass(frozen=True)
class Waypoint:
    index: int
    lat_or_y: float
    lon_or_x: float
    alt_m: float
    is_home: bool


def _turn_points(path: list[tuple[int, int]]) -> set[int]:
    keep = set()
    for i in range(1, len(path) - 1):
        d0 = (path[i][0] - path[i - 1][0], path[i][1] - path[i - 1][1])
        d1 = (path[i + 1][0] - path[i][0], path[i + 1][1] - path[i][1])
        if d0 != d1:
            keep.add(i)
    return keep


def waypoints_for_path(
    grid: TerrainGrid, path: list[tuple[int, int]], decimate: int = 1
) -> list[Waypoint]:
    """Path cells to waypoints: endpoints, turn points, every k-th cell."""
    if not path:
        raise ValidationError("cannot export an empty path")
    if decimate < 1:
        raise ValidationError(f"decimate must be >= 1, got {decimate}")
    keep = {0, len(path) - 1} | _turn_points(path)
    keep |= {i for i in range(len(path)) if i % decimate == 0}
    out = []
    for order, i in enumerate(sorted(keep)):
        r, c = path[i]
        if not grid.in_bounds(r, c):
            raise ValidationError(f"path cell ({r},{c}) outside the grid")
        if grid.geo_anchor is not None:
            lat0, lon0 = grid.geo_anchor
            lat = lat0 - (r * grid.cell_size_m) / METERS_PER_DEG_LAT
            lon = lon0 + (c * grid.cell_size_m) / (
                METERS_PER_DEG_LAT * math.cos(math.radians(lat0))
            )
            a, b = lat, lon
        else:
            x, y = grid.cell_xy(r, c)
            a, b = y, x  # latitude column carries y, longitude column x
        out.append(
            Waypoint(
                index=order,
                lat_or_y=a,
                lon_or_x=b,
                alt_m=float(grid.elevation[r, c]),
                is_home=order == 0,
            )
        )
    return out


def export_waypoints(
    grid: TerrainGrid, path: list[tuple[int, int]], decimate: int = 1
) -> str:
    """Render a path as QGC WPL 110 text, bit-exact field order."""
    frame = FRAME_GLOBAL if grid.geo_anchor is not None else FRAME_LOCAL
    lines = [WPL_HEADER]
    for wp in waypoints_for_path(grid, path, decimate):
        current = 1 if wp.index == 0 else 0
        lines.append(
            "\t".join(
                [
                    str(wp.index),
                    str(current),
                    str(frame),
                    str(NAV_WAYPOINT_CMD),
                    "0.000000",
                    "0.000000",
                    "0.000000",
                    "0.000000",
                    f"{wp.lat_or_y:.8f}",
                    f"{wp.lon_or_x:.8f}",
                    f"{wp.alt_m:.6f}",
                    "1",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def parse_waypoints(text: str) -> list[Waypoint]:
    """Parse WPL-110 text back into waypoints; validates header and indices."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("QGC WPL"):
        raise ParseError("waypoint file missing 'QGC WPL' header")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 12:
            raise ParseError(f"waypoint line {lineno}: expected 12 fields, got {len(parts)}")
        idx = int(parts[0])
        if idx != len(out):
            raise ParseError(f"waypoint line {lineno}: indices must be consecutive from 0")
        out.append(
            Waypoint(
                index=idx,
                lat_or_y=float(parts[8]),
                lon_or_x=float(parts[9]),
                alt_m=float(parts[10]),
                is_home=idx == 0,
            )
        )
    return out


_MODE_KEYS = {
    "Balanced": ("alpha", Balanced),
    "FastWithinRisk": ("max_risk", FastWithinRisk),
    "SafeWithinTime": ("budget_s", SafeWithinTime),
}


def mission_from_dict(raw: dict) -> MissionRequest:
    for key in ("start", "goal", "mode"):
        if key not in raw:
            raise ValidationError(f"mission: missing field '{key}'")
    mode_raw = raw["mode"]
    if not isinstance(mode_raw, dict) or "type" not in mode_raw:
        raise ValidationError("mission: field 'mode' must be an object with a 'type'")
    mode_type = mode_raw["type"]
    if mode_type not in _MODE_KEYS:
        raise ValidationError(
            f"mission: unknown mode '{mode_type}', expected one of {sorted(_MODE_KEYS)}"
        )
    param_key, ctor = _MODE_KEYS[mode_type]
    if param_key not in mode_raw:
        raise ValidationError(f"mission: mode '{mode_type}' requires field '{param_key}'")
    try:
        mode = ctor(float(mode_raw[param_key]))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"mission: mode field '{param_key}' must be a number") from exc

    def cell(name: str) -> tuple[int, int]:
        value = raw[name]
        if not (isinstance(value, (list, tuple)) and len(value) == 2):
            raise ValidationError(f"mission: field '{name}' must be [row, col]")
        return int(value[0]), int(value[1])

    return MissionRequest(
        start=cell("start"),
        goal=cell("goal"),
        mode=mode,
        formation_width_m=float(raw.get("formation_width_m", 0.0)),
        replan_slack=float(raw.get("replan_slack", 0.25)),
    )


def mission_to_dict(req: MissionRequest) -> dict:
    mode = req.mode
    if isinstance(mode, Balanced):
        mode_raw = {"type": "Balanced", "alpha": mode.alpha}
    elif isinstance(mode, FastWithinRisk):
        mode_raw = {"type": "FastWithinRisk", "max_risk": mode.max_risk}
    else:
        mode_raw = {"type": "SafeWithinTime", "budget_s": mode.budget_s}
    return {
        "start": list(req.start),
        "goal": list(req.goal),
        "mode": mode_raw,
        "formation_width_m": req.formation_width_m,
        "replan_slack": req.replan_slack,
    }


def load_mission(path: str | Path) -> MissionRequest:
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: mission file must be a JSON object")
    return mission_from_dict(raw)


def result_to_dict(result: PlanResult) -> dict:
    return {
        "path": [list(cell) for cell in result.path],
        "kpis": {
            "total_time_s": result.total_time_s,
            "total_distance_m": result.total_distance_m,
            "total_log_risk": result.total_log_risk,
            "survival_probability": result.survival_probability,
        },
        "cpa_m": dict(result.cpa_m),
        "exposure_m": dict(result.exposure_m),
        "mode": dict(result.mode_echo),
        "flags": dict(result.flags),
        "stats": result.solver_stats.to_dict(),
    }


def result_json_bytes(result: PlanResult) -> bytes:
    """Canonical serialization; identical results always produce identical bytes."""
    return (json.dumps(result_to_dict(result), sort_keys=True, indent=2) + "\n").encode()


def save_result(result: PlanResult, path: str | Path) -> None:
    Path(path).write_bytes(result_json_bytes(result))


def load_result(path: str | Path) -> dict:
    raw = _read_json(path)
    if not isinstance(raw, dict) or "path" not in raw or "kpis" not in raw:
        raise ParseError(f"{path}: result file missing 'path'/'kpis'")
    return raw


def event_from_dict(raw: dict) -> DynamicEvent:
    if "threats" not in raw:
        raise ValidationError("event: missing field 'threats'")
    threats = [threat_from_dict(t, i) for i, t in enumerate(raw["threats"])]
    return DynamicEvent(
        new_threats=tuple(threats),
        current_position_index=int(raw.get("at_index", 0)),
        timestamp_s=float(raw.get("timestamp_s", 0.0)),
    )


def load_event(path: str | Path) -> DynamicEvent:
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: event file must be a JSON object")
    return event_from_dict(raw)


def riskfield_to_dict(field, rows: int, cols: int, cell_size_m: float, origin) -> dict:
    return {
        "rows": rows,
        "cols": cols,
        "cell_size_m": cell_size_m,
        "origin": [origin[0], origin[1]],
        "formation_width_m": field.formation_width_m,
        "p_det": [float(v) for v in field.p_det.ravel()],
        "risk": [float(v) for v in field.risk.ravel()],
        "risk_form": [float(v) for v in field.risk_form.ravel()],
        "log_risk": [float(v) for v in field.log_risk.ravel()],
    }
