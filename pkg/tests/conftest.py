from __future__ import annotations

import numpy as np
import pytest

from argus.risk import log_cost
from argus.terrain import CostGraph, MobilityModel, TerrainGrid, build_graph


def flat_grid(rows: int, cols: int, cell: float = 25.0, obstacles=None,
              elevation=None, land_cover=None, geo_anchor=None) -> TerrainGrid:
    obst = np.zeros((rows, cols), dtype=bool)
    if obstacles is not None:
        for r, c in obstacles:
            obst[r, c] = True
    elev = np.zeros((rows, cols)) if elevation is None else np.asarray(elevation, dtype=float)
    cover = (
        np.zeros((rows, cols), dtype=np.int32)
        if land_cover is None
        else np.asarray(land_cover, dtype=np.int32)
    )
    return TerrainGrid(
        rows=rows, cols=cols, cell_size_m=cell, origin=(0.0, 0.0),
        elevation=elev, land_cover=cover, obstacle=obst, geo_anchor=geo_anchor,
    )


def uniform_mobility(speed: float = 5.0, classes=(0,)) -> MobilityModel:
    return MobilityModel(class_speed={c: speed for c in classes})


def flat_graph(rows: int, cols: int, risks=None, **kwargs) -> CostGraph:
    """8-connected flat grid graph, optionally with a per-cell risk raster."""
    grid = flat_grid(rows, cols, **kwargs)
    classes = tuple(int(c) for c in np.unique(grid.land_cover))
    graph = build_graph(grid, uniform_mobility(classes=classes))
    if risks is not None:
        graph = graph.with_log_risk(log_cost(np.asarray(risks, dtype=float)))
    return graph


def random_risk_graph(rows: int, cols: int, seed: int, lo: float = 0.05,
                      hi: float = 0.9) -> tuple[CostGraph, np.ndarray]:
    """Flat graph with strictly positive random cell risks.

    Positive risk everywhere keeps exhaustive branch-and-bound oracles
    tractable: any wandering prefix quickly exceeds the incumbent.
    """
    rng = np.random.default_rng(seed)
    risks = rng.uniform(lo, hi, size=(rows, cols))
    return flat_graph(rows, cols, risks=risks), risks


@pytest.fixture
def demo_scene():
    from argus.demo import demo_grid, demo_mobility, demo_threats
    from argus.risk import build_risk_field
    from argus.terrain import build_graph as bg

    grid = demo_grid()
    mobility = demo_mobility()
    threats = demo_threats()
    field = build_risk_field(grid, threats, 100.0)
    graph = bg(grid, mobility).with_log_risk(field.log_risk)
    return grid, mobility, threats, field, graph
