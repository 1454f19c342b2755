"""
Planar workspace with rectangular obstacles.

Provides collision and line-of-sight queries plus geodesic distance fields
computed by an 8-connected Dijkstra sweep over the free grid cells.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from src.errors import InvalidArgumentError, InvalidQueryError

logger = logging.getLogger(__name__)

Position = tuple[float, float]

# Half of the 8-neighborhood; the graph is undirected.
_GRID_STEPS = ((1, 0), (0, 1), (1, 1), (1, -1))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned closed rectangle [xmin, xmax] x [ymin, ymax]."""
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise InvalidArgumentError(f"Degenerate obstacle rectangle: {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def blocks_segment(self, a: Position, b: Position) -> bool:
        """Liang-Barsky clip of segment a-b against the closed rectangle."""
        t0, t1 = 0.0, 1.0
        dx, dy = b[0] - a[0], b[1] - a[1]
        for p, q in (
            (-dx, a[0] - self.xmin),
            (dx, self.xmax - a[0]),
            (-dy, a[1] - self.ymin),
            (dy, self.ymax - a[1]),
        ):
            if p == 0.0:
                if q < 0.0:
                    return False
                continue
            t = q / p
            if p < 0.0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
            if t0 > t1:
                return False
        return True


@dataclass(frozen=True)
class Workspace:
    """Rectangular 2-D workspace [0, width] x [0, height] with obstacles."""
    width: float
    height: float
    resolution: float
    obstacles: tuple[Rect, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.resolution <= 0:
            raise InvalidArgumentError(
                f"Workspace dimensions and resolution must be positive "
                f"(width={self.width}, height={self.height}, resolution={self.resolution})"
            )
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for rect in self.obstacles:
            if rect.xmin < 0 or rect.ymin < 0 or rect.xmax > self.width or rect.ymax > self.height:
                raise InvalidArgumentError(f"Obstacle {rect} lies outside the workspace")
        if not self.free_cells.any():
            raise InvalidArgumentError("Workspace grid has no free cell")

    # -- continuous queries -------------------------------------------------

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height

    def is_free(self, x: float, y: float) -> bool:
        if not self.in_bounds(x, y):
            return False
        return not any(rect.contains(x, y) for rect in self.obstacles)

    def segment_clear(self, a: Position, b: Position) -> bool:
        return not any(rect.blocks_segment(a, b) for rect in self.obstacles)

    # -- grid ---------------------------------------------------------------

    @cached_property
    def shape(self) -> tuple[int, int]:
        nx = max(1, math.ceil(self.width / self.resolution - 1e-9))
        ny = max(1, math.ceil(self.height / self.resolution - 1e-9))
        return nx, ny

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        nx, ny = self.shape
        ix = min(max(int(math.floor(x / self.resolution)), 0), nx - 1)
        iy = min(max(int(math.floor(y / self.resolution)), 0), ny - 1)
        return ix, iy

    @cached_property
    def free_cells(self) -> np.ndarray:
        """Boolean (nx, ny) mask; a cell is free when its center is free."""
        nx, ny = self.shape
        cx = (np.arange(nx) + 0.5) * self.resolution
        cy = (np.arange(ny) + 0.5) * self.resolution
        gx, gy = np.meshgrid(cx, cy, indexing="ij")
        occupied = np.zeros((nx, ny), dtype=bool)
        for rect in self.obstacles:
            occupied |= (gx >= rect.xmin) & (gx <= rect.xmax) & (gy >= rect.ymin) & (gy <= rect.ymax)
        mask = ~occupied
        mask.setflags(write=False)
        return mask

    def grid_graph(self, free: np.ndarray):
        """Sparse 8-connected adjacency between the cells marked free."""
        nx, ny = self.shape
        flat = np.arange(nx * ny).reshape(nx, ny)
        rows, cols, weights = [], [], []
        for dx, dy in _GRID_STEPS:
            step = self.resolution * (math.sqrt(2.0) if dx and dy else 1.0)
            xs = slice(0, nx - dx)
            xt = slice(dx, nx)
            ys = slice(max(0, -dy), ny - max(0, dy))
            yt = slice(max(0, dy), ny - max(0, -dy))
            both = free[xs, ys] & free[xt, yt]
            rows.append(flat[xs, ys][both])
            cols.append(flat[xt, yt][both])
            weights.append(np.full(int(both.sum()), step))
        size = nx * ny
        return coo_matrix(
            (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
            shape=(size, size),
        ).tocsr()

    @cached_property
    def _free_graph(self):
        return self.grid_graph(self.free_cells)


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Geodesic distances from one source position to every grid cell."""
    workspace: Workspace
    source: Position
    cell_distances: np.ndarray

    def at(self, x: float, y: float) -> float:
        if not self.workspace.in_bounds(x, y):
            raise InvalidQueryError(f"Query ({x}, {y}) is outside the workspace")
        return float(self.cell_distances[self.workspace.cell_of(x, y)])


def is_free(w: Workspace, p: Position) -> bool:
    """True iff p is inside the workspace and inside no obstacle (boundaries occupied)."""
    return w.is_free(p[0], p[1])


def line_of_sight(w: Workspace, a: Position, b: Position) -> bool:
    """
    True iff the segment a-b touches no obstacle.

    Raises:
        InvalidQueryError: If either endpoint is not free.
    """
    if not (is_free(w, a) and is_free(w, b)):
        raise InvalidQueryError(f"Line-of-sight endpoints must be free: {a}, {b}")
    return w.segment_clear(a, b)


def _field_from_cell(w: Workspace, cell: tuple[int, int], source: Position) -> DistanceField:
    nx, ny = w.shape
    src = cell[0] * ny + cell[1]
    free = w.free_cells
    if free[cell]:
        graph = w._free_graph
    else:
        # The source point is free but its cell center is not; let it seed the sweep.
        free = free.copy()
        free[cell] = True
        graph = w.grid_graph(free)
    dist = dijkstra(graph, directed=False, indices=src).reshape(nx, ny)
    dist[~free] = np.inf
    dist[cell] = 0.0
    dist.setflags(write=False)
    return DistanceField(workspace=w, source=source, cell_distances=dist)


def geodesic_field(w: Workspace, source: Position) -> DistanceField:
    """
    Dijkstra distance field over free cells; axis steps cost one resolution,
    diagonal steps cost resolution * sqrt(2). Occupied or unreachable cells get +inf.

    Raises:
        InvalidQueryError: If the source is not free.
    """
    if not is_free(w, source):
        raise InvalidQueryError(f"Distance field source {source} is not free")
    return _field_from_cell(w, w.cell_of(*source), (float(source[0]), float(source[1])))


def geodesic_distance(f: DistanceField, p: Position) -> float:
    """Distance stored for the cell containing p (may be +inf)."""
    return f.at(p[0], p[1])


@lru_cache(maxsize=256)
def _cached_cell_field(w: Workspace, cell: tuple[int, int]) -> DistanceField:
    center = ((cell[0] + 0.5) * w.resolution, (cell[1] + 0.5) * w.resolution)
    return _field_from_cell(w, cell, center)


def cached_field(w: Workspace, p: Position) -> DistanceField:
    """
    Distance field sourced at the cell containing p, clamped into the workspace.

    Used for predicted target positions, which may drift into obstacles or
    past the boundary; the field is shared between callers.
    """
    x = min(max(p[0], 0.0), w.width)
    y = min(max(p[1], 0.0), w.height)
    return _cached_cell_field(w, w.cell_of(x, y))
