"""Bundled demonstration scenario used by the CLI, tests, and the console.

A 24x24 field with a road band, a forest block, a small obstacle cluster,
gentle elevation, and a picket line of sensors across the middle row. The
picket leaves no zero-risk corridor, so fast and safe routes genuinely
differ and survival lands strictly between 0 and 1.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .risk import DetectionParams, ThreatSpec, threat_to_dict
from .terrain import MobilityModel, TerrainGrid, grid_to_dict

ROWS = 24
COLS = 24
CELL_M = 25.0


def demo_grid(geo_anchor: tuple[float, float] | None = None) -> TerrainGrid:
    elevation = np.zeros((ROWS, COLS))
    # gentle ridge rising toward the north-east corner
    for r in range(ROWS):
        for c in range(COLS):
            elevation[r, c] = 0.5 * c + 2.0 * np.exp(-((r - 4) ** 2 + (c - 18) ** 2) / 40.0)
    land_cover = np.zeros((ROWS, COLS), dtype=np.int32)
    land_cover[10:14, :] = 1          # cross-field road band
    land_cover[16:22, 3:9] = 2        # forest block
    obstacle = np.zeros((ROWS, COLS), dtype=bool)
    obstacle[6:8, 6:9] = True         # walled compound
    return TerrainGrid(
        rows=ROWS,
        cols=COLS,
        cell_size_m=CELL_M,
        origin=(0.0, 0.0),
        elevation=elevation,
        land_cover=land_cover,
        obstacle=obstacle,
        geo_anchor=geo_anchor,
    )


def demo_mobility() -> MobilityModel:
    return MobilityModel(
        class_speed={0: 5.0, 1: 8.0, 2: 3.0},
        slope_breaks=((-0.6, 0.6), (-0.3, 0.85), (0.0, 1.0), (0.3, 0.7), (0.6, 0.4)),
        max_slope=0.6,
        ascent_window=4,
        ascent_threshold=0.6,
    )


def demo_threats() -> list[ThreatSpec]:
    picket_cols = list(range(0, COLS, 2))
    return [
        ThreatSpec(
            id="picket-line",
            detection=DetectionParams(range_m=150.0, plateau_fraction=0.4, decay_exponent=2.0),
            prior_rows=np.full(len(picket_cols), 12),
            prior_cols=np.array(picket_cols),
            prior_weights=np.ones(len(picket_cols)),
        ),
        ThreatSpec(
            id="op-hill",
            detection=DetectionParams(range_m=250.0, plateau_fraction=0.5, decay_exponent=1.5),
            prior_rows=np.array([4, 5]),
            prior_cols=np.array([18, 18]),
            prior_weights=np.array([0.7, 0.3]),
        ),
    ]


def demo_missions() -> dict[str, dict]:
    base = {
        "start": [2, 2],
        "goal": [21, 21],
        "formation_width_m": 100.0,
        "replan_slack": 0.5,
    }
    return {
        "balanced_safe": {**base, "mode": {"type": "Balanced", "alpha": 0.0}},
        "balanced_fast": {**base, "mode": {"type": "Balanced", "alpha": 1.0}},
        "balanced_mid": {**base, "mode": {"type": "Balanced", "alpha": 0.5}},
        "fast_risk_015": {**base, "mode": {"type": "FastWithinRisk", "max_risk": 0.15}},
        "fast_risk_050": {**base, "mode": {"type": "FastWithinRisk", "max_risk": 0.5}},
        "safe_time_150": {**base, "mode": {"type": "SafeWithinTime", "budget_s": 150.0}},
        "safe_time_180": {**base, "mode": {"type": "SafeWithinTime", "budget_s": 180.0}},
    }


def demo_event() -> dict:
    return {
        "at_index": 2,
        "threats": [
            {
                "id": "pop-up",
                "R_m": 125.0,
                "phi": 0.5,
                "p": 2.0,
                "impact": 1.0,
                "prior": {"cells": [[17, 14, 1.0]]},
            }
        ],
    }


def mobility_to_dict(mob: MobilityModel) -> dict:
    return {
        "class_speed": {str(k): v for k, v in mob.class_speed.items()},
        "slope_factor": [[s, f] for s, f in mob.slope_breaks],
        "max_slope": mob.max_slope,
        "ascent_window": mob.ascent_window,
        "ascent_threshold": mob.ascent_threshold,
    }


def write_demo(directory: str | Path, geo_anchor: tuple[float, float] | None = None) -> dict:
    """Write the demo scenario files; returns the paths written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}

    def dump(name: str, payload) -> None:
        p = directory / name
        p.write_text(json.dumps(payload, indent=2) + "\n")
        paths[name] = str(p)

    dump("terrain.json", grid_to_dict(demo_grid(geo_anchor)))
    dump("mobility.json", mobility_to_dict(demo_mobility()))
    dump("threats.json", [threat_to_dict(t) for t in demo_threats()])
    for name, mission in demo_missions().items():
        dump(f"mission_{name}.json", mission)
    dump("event_midpath.json", demo_event())
    return paths
