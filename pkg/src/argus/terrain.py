"""World model: terrain grid, mobility model, and planning-graph construction.

The operating area is a regular grid of square cells. Non-obstacle cells
become graph nodes; 8-connected neighbors are joined by edges carrying a
traversal time derived from land-cover speed and direction-specific slope.
Per-node log-risk is filled in later by the risk module; the assembled
graph is immutable and safe to share across concurrent planner queries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, ShapeError, ValidationError

DEFAULT_CELL_SIZE_M = 25.0
SQRT2 = math.sqrt(2.0)

_ORTHO = ((-1, 0), (1, 0), (0, -1), (0, 1))
_DIAG = ((-1, -1), (-1, 1), (1, -1), (1, 1))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TerrainGrid:
    """Raster world model: elevation, land-cover class and obstacle mask."""

    rows: int
    cols: int
    cell_size_m: float
    origin: tuple[float, float]
    elevation: np.ndarray
    land_cover: np.ndarray
    obstacle: np.ndarray
    geo_anchor: tuple[float, float] | None = None  # (lat, lon) of cell (0,0)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValidationError("grid dimensions must be positive")
        if not self.cell_size_m > 0:
            raise ValidationError(f"cell_size_m must be > 0, got {self.cell_size_m}")
        shape = (self.rows, self.cols)
        for name in ("elevation", "land_cover", "obstacle"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ShapeError(f"raster '{name}' has shape {arr.shape}, expected {shape}")
        _freeze(self.elevation)
        _freeze(self.land_cover)
        _freeze(self.obstacle)

    def in_bounds(self, r: int, c: int) -> bool:
        return 0 <= r < self.rows and 0 <= c < self.cols

    def cell_xy(self, r: int, c: int) -> tuple[float, float]:
        """Planar centroid coordinates in meters (x east along columns)."""
        return (self.origin[0] + c * self.cell_size_m, self.origin[1] + r * self.cell_size_m)


def load_grid(path: str | Path) -> TerrainGrid:
    """Parse a terrain JSON file into a validated TerrainGrid."""
    raw = _read_json(path)
    rows = _require_int(raw, "rows", path)
    cols = _require_int(raw, "cols", path)
    cell = float(raw.get("cell_size_m", DEFAULT_CELL_SIZE_M))
    origin = raw.get("origin", [0.0, 0.0])
    if not (isinstance(origin, (list, tuple)) and len(origin) == 2):
        raise ParseError(f"{path}: field 'origin' must be [x, y]")
    anchor = raw.get("geo_anchor")
    if anchor is not None:
        if not (isinstance(anchor, (list, tuple)) and len(anchor) == 2):
            raise ParseError(f"{path}: field 'geo_anchor' must be [lat, lon]")
        anchor = (float(anchor[0]), float(anchor[1]))

    def raster(name: str, dtype) -> np.ndarray:
        values = raw.get(name)
        if values is None:
            raise ParseError(f"{path}: missing field '{name}'")
        arr = np.asarray(values, dtype=dtype)
        if arr.size != rows * cols:
            raise ShapeError(
                f"{path}: raster '{name}' has {arr.size} values, expected {rows * cols}"
            )
        return arr.reshape(rows, cols)

    return TerrainGrid(
        rows=rows,
        cols=cols,
        cell_size_m=cell,
        origin=(float(origin[0]), float(origin[1])),
        elevation=raster("elevation", np.float64),
        land_cover=raster("land_cover", np.int32),
        obstacle=raster("obstacles", np.int64).astype(bool),
        geo_anchor=anchor,
    )


def grid_to_dict(grid: TerrainGrid) -> dict:
    out = {
        "rows": grid.rows,
        "cols": grid.cols,
        "cell_size_m": grid.cell_size_m,
        "origin": [grid.origin[0], grid.origin[1]],
        "elevation": [float(v) for v in grid.elevation.ravel()],
        "land_cover": [int(v) for v in grid.land_cover.ravel()],
        "obstacles": [int(v) for v in grid.obstacle.ravel()],
    }
    if grid.geo_anchor is not None:
        out["geo_anchor"] = [grid.geo_anchor[0], grid.geo_anchor[1]]
    return out


def grid_from_dict(raw: dict) -> TerrainGrid:
    rows, cols = int(raw["rows"]), int(raw["cols"])
    anchor = raw.get("geo_anchor")
    return TerrainGrid(
        rows=rows,
        cols=cols,
        cell_size_m=float(raw.get("cell_size_m", DEFAULT_CELL_SIZE_M)),
        origin=tuple(float(v) for v in raw.get("origin", (0.0, 0.0))),
        elevation=np.asarray(raw["elevation"], dtype=np.float64).reshape(rows, cols),
        land_cover=np.asarray(raw["land_cover"], dtype=np.int32).reshape(rows, cols),
        obstacle=np.asarray(raw["obstacles"], dtype=np.int64).astype(bool).reshape(rows, cols),
        geo_anchor=None if anchor is None else (float(anchor[0]), float(anchor[1])),
    )


@dataclass(frozen=True)
class MobilityModel:
    """Maps land-cover class and slope to expected vehicle speed.

    ``slope_factor`` is a piecewise-linear table over signed slope
    (rise/run); ascent and descent may be penalized differently, but the
    factor must be 1 at zero slope and non-increasing away from it.
    ``ascent_window``/``ascent_threshold`` configure the optional solver-side
    pruning of sustained climbs (sum of positive gradients over a sliding
    window of that many cells).
    """

    class_speed: dict[int, float]
    slope_breaks: tuple[tuple[float, float], ...] = ((0.0, 1.0),)
    max_slope: float = 1.0
    ascent_window: int = 4
    ascent_threshold: float = 0.6

    def __post_init__(self):
        if not self.class_speed:
            raise ValidationError("class_speed must not be empty")
        for cls, speed in self.class_speed.items():
            if not speed > 0:
                raise ValidationError(f"class_speed[{cls}] must be > 0, got {speed}")
        xs = [s for s, _ in self.slope_breaks]
        if xs != sorted(xs) or len(set(xs)) != len(xs):
            raise ValidationError("slope_factor breakpoints must be strictly increasing in slope")
        for s, f in self.slope_breaks:
            if not 0.0 <= f <= 1.0:
                raise ValidationError(f"slope factor at {s} must be in [0,1], got {f}")
        if abs(self.speed_factor(0.0) - 1.0) > 1e-12:
            raise ValidationError("slope_factor(0) must equal 1")
        # non-increasing in |slope| on each side of zero
        pos = [(s, f) for s, f in self.slope_breaks if s >= 0]
        neg = [(s, f) for s, f in self.slope_breaks if s <= 0]
        if any(f2 > f1 + 1e-12 for (_, f1), (_, f2) in zip(pos, pos[1:])):
            raise ValidationError("slope_factor must be non-increasing for ascending slopes")
        if any(f1 > f2 + 1e-12 for (_, f1), (_, f2) in zip(neg, neg[1:])):
            raise ValidationError("slope_factor must be non-increasing for descending slopes")
        if not self.max_slope > 0:
            raise ValidationError("max_slope must be > 0")
        if self.ascent_window < 2:
            raise ValidationError("ascent_window must be >= 2 cells")

    def speed_factor(self, slope):
        """Multiplicative speed factor for a signed slope (scalar or array)."""
        xs = np.array([s for s, _ in self.slope_breaks])
        ys = np.array([f for _, f in self.slope_breaks])
        out = np.interp(slope, xs, ys)
        return float(out) if np.isscalar(slope) else out

    def speed(self, land_class: int, slope: float) -> float | None:
        """Expected speed in m/s, or None when the move is impassable."""
        if abs(slope) > self.max_slope:
            return None
        base = self.class_speed.get(int(land_class))
        if base is None:
            raise ValidationError(f"land-cover class {land_class} missing from mobility model")
        factor = self.speed_factor(slope)
        if factor <= 0.0:
            return None
        return base * factor

    def covers(self, grid: TerrainGrid) -> None:
        present = np.unique(grid.land_cover)
        missing = [int(c) for c in present if int(c) not in self.class_speed]
        if missing:
            raise ValidationError(f"land-cover classes {missing} missing from mobility model")


def default_mobility(grid: TerrainGrid, speed_mps: float = 5.0) -> MobilityModel:
    """Uniform-speed mobility covering every class present in the grid."""
    classes = {int(c): speed_mps for c in np.unique(grid.land_cover)}
    return MobilityModel(class_speed=classes)


def load_mobility(path: str | Path) -> MobilityModel:
    raw = _read_json(path)
    speeds = raw.get("class_speed")
    if not isinstance(speeds, dict):
        raise ParseError(f"{path}: field 'class_speed' must be a map of class id to m/s")
    breaks = raw.get("slope_factor", [[0.0, 1.0]])
    try:
        slope_breaks = tuple((float(s), float(f)) for s, f in breaks)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: field 'slope_factor' must be a list of [slope, factor]") from exc
    return MobilityModel(
        class_speed={int(k): float(v) for k, v in speeds.items()},
        slope_breaks=slope_breaks,
        max_slope=float(raw.get("max_slope", 1.0)),
        ascent_window=int(raw.get("ascent_window", 4)),
        ascent_threshold=float(raw.get("ascent_threshold", 0.6)),
    )


def derive_slope(grid: TerrainGrid, u: tuple[int, int], v: tuple[int, int]) -> float:
    """Signed gradient (rise/run) from cell u to adjacent cell v."""
    dr, dc = v[0] - u[0], v[1] - u[1]
    if max(abs(dr), abs(dc)) != 1:
        raise ValidationError(f"cells {u} and {v} are not adjacent")
    if not (grid.in_bounds(*u) and grid.in_bounds(*v)):
        raise ValidationError(f"cells {u}, {v} out of bounds")
    d = grid.cell_size_m * (SQRT2 if dr and dc else 1.0)
    return float((grid.elevation[v] - grid.elevation[u]) / d)


def edge_time(
    grid: TerrainGrid, mobility: MobilityModel, u: tuple[int, int], v: tuple[int, int]
) -> float | None:
    """Traversal seconds from u to v, or None when the move is impassable.

    Distance over terrain-dependent speed; the land-cover class is taken
    from the destination cell, the slope is evaluated in travel direction.
    """
    if grid.obstacle[u] or grid.obstacle[v]:
        raise ValidationError(f"edge {u}->{v} touches an obstacle cell")
    slope = derive_slope(grid, u, v)
    # existence must stay symmetric: a zero factor in either direction kills both
    if mobility.speed(grid.land_cover[u], -slope) is None:
        return None
    speed = mobility.speed(grid.land_cover[v], slope)
    if speed is None:
        return None
    dr, dc = v[0] - u[0], v[1] - u[1]
    d = grid.cell_size_m * (SQRT2 if dr and dc else 1.0)
    return d / speed


@dataclass(frozen=True)
class CostGraph:
    """Immutable planning graph over non-obstacle cells.

    Directed CSR adjacency, symmetric in existence: (u,v) exists iff (v,u)
    does, with traversal time evaluated per direction. ``edge_count`` counts
    undirected pairs. Node log-risk starts at zero and is replaced by
    ``with_log_risk`` (copy-on-write; adjacency is shared).
    """

    rows: int
    cols: int
    cell_size_m: float
    node_rc: np.ndarray       # (n, 2) int32, row-major order
    cell_node: np.ndarray     # (rows, cols) int32, -1 for obstacle cells
    indptr: np.ndarray        # (n+1,) int64
    nbr: np.ndarray           # (E,) int32 directed targets, sorted per node
    etime: np.ndarray         # (E,) float64 seconds
    edist: np.ndarray         # (E,) float64 meters
    egrad: np.ndarray         # (E,) float64 signed slope in travel direction
    node_log_risk: np.ndarray  # (n,) float64 >= 0
    ascent_window: int = 4
    ascent_threshold: float = 0.6

    def __post_init__(self):
        for name in ("node_rc", "cell_node", "indptr", "nbr", "etime", "edist",
                     "egrad", "node_log_risk"):
            _freeze(getattr(self, name))

    @property
    def node_count(self) -> int:
        return len(self.node_rc)

    @property
    def edge_count(self) -> int:
        return len(self.nbr) // 2

    def node_of(self, r: int, c: int) -> int:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise ValidationError(f"cell ({r},{c}) out of bounds")
        v = int(self.cell_node[r, c])
        if v < 0:
            raise ValidationError(f"cell ({r},{c}) is an obstacle")
        return v

    def cell_of(self, v: int) -> tuple[int, int]:
        r, c = self.node_rc[v]
        return int(r), int(c)

    def neighbors(self, u: int):
        """Yields (v, time_s, dist_m) for each outgoing edge of u."""
        for j in range(self.indptr[u], self.indptr[u + 1]):
            yield int(self.nbr[j]), float(self.etime[j]), float(self.edist[j])

    def edge_index(self, u: int, v: int) -> int:
        lo, hi = int(self.indptr[u]), int(self.indptr[u + 1])
        j = lo + int(np.searchsorted(self.nbr[lo:hi], v))
        if j >= hi or self.nbr[j] != v:
            raise ValidationError(f"no edge between nodes {u} and {v}")
        return j

    def has_edge(self, u: int, v: int) -> bool:
        lo, hi = int(self.indptr[u]), int(self.indptr[u + 1])
        j = lo + int(np.searchsorted(self.nbr[lo:hi], v))
        return j < hi and self.nbr[j] == v

    def raster_values(self, raster: np.ndarray) -> np.ndarray:
        """Per-node values picked from a rows*cols raster."""
        if raster.shape != (self.rows, self.cols):
            raise ShapeError(f"raster shape {raster.shape} != {(self.rows, self.cols)}")
        return raster[self.node_rc[:, 0], self.node_rc[:, 1]].astype(np.float64)

    def with_log_risk(self, log_risk: np.ndarray) -> "CostGraph":
        """New sealed graph with per-node log-risk taken from a cell raster."""
        if log_risk.shape == (self.rows, self.cols):
            values = self.raster_values(log_risk)
        elif log_risk.shape == (self.node_count,):
            values = log_risk.astype(np.float64).copy()
        else:
            raise ShapeError(f"log_risk shape {log_risk.shape} not understood")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValidationError("node log-risk must be finite and >= 0")
        return replace(self, node_log_risk=values)


def build_graph(grid: TerrainGrid, mobility: MobilityModel) -> CostGraph:
    """Assemble the 8-connected planning graph from grid and mobility model.

    Diagonal moves that would squeeze between two diagonally-touching
    obstacles are dropped; moves steeper than ``max_slope`` (either
    direction) are impassable and omitted rather than penalized.
    """
    mobility.covers(grid)
    free = ~grid.obstacle
    n = int(free.sum())
    if n == 0:
        raise ValidationError("terrain grid has no traversable cells")

    cell_node = np.full((grid.rows, grid.cols), -1, dtype=np.int32)
    cell_node[free] = np.arange(n, dtype=np.int32)
    node_rc = np.argwhere(free).astype(np.int32)

    max_class = int(grid.land_cover.max())
    speed_lut = np.full(max_class + 1, np.nan)
    for cls, speed in mobility.class_speed.items():
        if 0 <= cls <= max_class:
            speed_lut[cls] = speed

    srcs, dsts, times, dists, grads = [], [], [], [], []
    for dr, dc in _ORTHO + _DIAG:
        r0, r1 = max(0, -dr), grid.rows - max(0, dr)
        c0, c1 = max(0, -dc), grid.cols - max(0, dc)
        if r0 >= r1 or c0 >= c1:
            continue
        src = (slice(r0, r1), slice(c0, c1))
        dst = (slice(r0 + dr, r1 + dr), slice(c0 + dc, c1 + dc))
        ok = free[src] & free[dst]
        if dr and dc:
            corner_a = grid.obstacle[slice(r0 + dr, r1 + dr), slice(c0, c1)]
            corner_b = grid.obstacle[slice(r0, r1), slice(c0 + dc, c1 + dc)]
            ok &= ~(corner_a & corner_b)
        d = grid.cell_size_m * (SQRT2 if dr and dc else 1.0)
        slope = (grid.elevation[dst] - grid.elevation[src]) / d
        ok &= np.abs(slope) <= mobility.max_slope
        fwd = mobility.speed_factor(slope)
        rev = mobility.speed_factor(-slope)
        ok &= (fwd > 0.0) & (rev > 0.0)
        if not ok.any():
            continue
        u = cell_node[src][ok]
        v = cell_node[dst][ok]
        speed = speed_lut[grid.land_cover[dst][ok]] * fwd[ok]
        srcs.append(u)
        dsts.append(v)
        times.append(d / speed)
        dists.append(np.full(len(u), d))
        grads.append(slope[ok])

    if srcs:
        src_all = np.concatenate(srcs)
        dst_all = np.concatenate(dsts)
        t_all = np.concatenate(times)
        d_all = np.concatenate(dists)
        g_all = np.concatenate(grads)
        order = np.lexsort((dst_all, src_all))
        src_all, dst_all = src_all[order], dst_all[order]
        t_all, d_all, g_all = t_all[order], d_all[order], g_all[order]
    else:
        src_all = np.empty(0, dtype=np.int32)
        dst_all = np.empty(0, dtype=np.int32)
        t_all = d_all = g_all = np.empty(0, dtype=np.float64)

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src_all, minlength=n), out=indptr[1:])

    return CostGraph(
        rows=grid.rows,
        cols=grid.cols,
        cell_size_m=grid.cell_size_m,
        node_rc=node_rc,
        cell_node=cell_node,
        indptr=indptr,
        nbr=dst_all.astype(np.int32),
        etime=t_all,
        edist=d_all,
        egrad=g_all,
        node_log_risk=np.zeros(n, dtype=np.float64),
        ascent_window=mobility.ascent_window,
        ascent_threshold=mobility.ascent_threshold,
    )


def _read_json(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, (dict, list)):
        raise ParseError(f"{path}: top-level JSON must be an object or array")
    return raw


def _require_int(raw: dict, name: str, path) -> int:
    value = raw.get(name)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"{path}: field '{name}' must be an integer")
    return value
