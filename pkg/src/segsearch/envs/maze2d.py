"""Planar mazes: node layout, Delaunay edges, random spanning tree, hallway polygon."""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import Delaunay
from shapely.geometry import LineString, Point, Polygon
from shapely.ops import unary_union, voronoi_diagram
from shapely.prepared import prep

from .core import StepResult
from .maze_common import MazeSpec, wilson_spanning_tree

_JITTER = 1e-6  # breaks cocircular grid degeneracy deterministically


def _delaunay_edges(points: np.ndarray, rng) -> set[tuple[int, int]]:
    for attempt in range(5):
        jitter = rng.normal(scale=_JITTER * (attempt + 1), size=points.shape)
        try:
            tri = Delaunay(points + jitter)
        except Exception:
            continue
        edges = set()
        for simplex in tri.simplices:
            for i in range(3):
                a, b = int(simplex[i]), int(simplex[(i + 1) % 3])
                edges.add((min(a, b), max(a, b)))
        return edges
    raise ValueError("degenerate point set: Delaunay triangulation failed")


def _lloyd_relax(points: np.ndarray, boundary: Polygon, iterations: int = 20) -> np.ndarray:
    pts = points.copy()
    from shapely.geometry import MultiPoint

    for _ in range(iterations):
        cells = voronoi_diagram(MultiPoint([Point(p) for p in pts]), envelope=boundary)
        new = pts.copy()
        for cell in cells.geoms:
            clipped = cell.intersection(boundary)
            if clipped.is_empty:
                continue
            c = clipped.centroid
            # match the cell back to the point it contains
            for i, p in enumerate(pts):
                if cell.covers(Point(p)):
                    new[i] = [c.x, c.y]
                    break
        pts = new
    return pts


def _boundary_polygon(kind: str, n_nodes: int, spacing: float) -> Polygon:
    # area sized for n nodes at roughly the requested spacing
    area = n_nodes * (1.3 * spacing) ** 2
    if kind == "triangle":
        side = math.sqrt(4.0 * area / math.sqrt(3.0))
        h = side * math.sqrt(3.0) / 2.0
        return Polygon([(0, 0), (side, 0), (side / 2.0, h)])
    if kind == "pentagon":
        # regular pentagon, area = 5/2 R^2 sin(72 deg)
        radius = math.sqrt(2.0 * area / (5.0 * math.sin(2.0 * math.pi / 5.0)))
        pts = [
            (radius * math.cos(2.0 * math.pi * k / 5.0 + math.pi / 2.0),
             radius * math.sin(2.0 * math.pi * k / 5.0 + math.pi / 2.0))
            for k in range(5)
        ]
        return Polygon(pts)
    raise ValueError(f"unknown polygon maze kind: {kind}")


def generate_maze_2d(
    n_nodes: int,
    kind: str = "rectilinear",
    hallway_width: float = 1.0,
    seed: int = 0,
    node_spacing: float = 2.0,
) -> MazeSpec:
    """Random 2D maze: tree topology over Delaunay edges, hallway-union free space.

    Rectilinear mazes lay nodes on a square grid and keep only lattice-length
    Delaunay edges so hallways stay axis-aligned; polygon mazes spread nodes
    with Lloyd relaxation inside the boundary shape.
    """
    if n_nodes < 2:
        raise ValueError("n_nodes must be >= 2")
    rng = np.random.default_rng(seed)
    if kind == "rectilinear":
        side = round(math.sqrt(n_nodes))
        if side * side != n_nodes:
            raise ValueError("rectilinear mazes need a square node count")
        xs, ys = np.meshgrid(np.arange(side), np.arange(side))
        points = np.column_stack([xs.ravel(), ys.ravel()]).astype(np.float64) * node_spacing
        edges = _delaunay_edges(points, rng)
        keep = 1.05 * node_spacing
        edges = {e for e in edges if np.linalg.norm(points[e[0]] - points[e[1]]) <= keep}
    elif kind in ("triangle", "pentagon"):
        boundary = _boundary_polygon(kind, n_nodes, node_spacing)
        shrunk = boundary.buffer(-0.7 * hallway_width)
        minx, miny, maxx, maxy = shrunk.bounds
        pts = []
        while len(pts) < n_nodes:
            cand = rng.uniform((minx, miny), (maxx, maxy))
            if shrunk.covers(Point(cand)):
                pts.append(cand)
        points = _lloyd_relax(np.asarray(pts), shrunk)
        edges = _delaunay_edges(points, rng)
    else:
        raise ValueError(f"unknown maze kind: {kind}")

    neighbors = {i: [] for i in range(n_nodes)}
    for a, b in sorted(edges):
        neighbors[a].append(b)
        neighbors[b].append(a)
    tree = wilson_spanning_tree(n_nodes, neighbors, rng)

    hallways = [LineString([points[a], points[b]]).buffer(hallway_width / 2.0) for a, b in tree]
    free = unary_union(hallways).simplify(0.02 * hallway_width)
    if free.geom_type == "MultiPolygon":  # should not happen for a tree; keep largest
        free = max(free.geoms, key=lambda g: g.area)
    rings = [list(map(list, free.exterior.coords))] + [
        list(map(list, hole.coords)) for hole in free.interiors
    ]
    return MazeSpec(2, kind, points, tree, hallway_width, seed, boundary=rings)


class Maze2D:
    """Crawl-mode planar maze: moves clamp to max_step and stop at wall contact."""

    def __init__(self, spec: MazeSpec, max_step: float = 0.15):
        if spec.dim != 2:
            raise ValueError("Maze2D requires a 2-dimensional spec")
        self.spec = spec
        self.dim = 2
        self.max_step = max_step
        shell = Polygon(spec.boundary[0], spec.boundary[1:])
        self._free = shell
        self._prep = prep(shell)

    def start_state(self) -> np.ndarray:
        return self.spec.node_points[0].copy()

    def contains(self, point: np.ndarray) -> bool:
        return self._prep.covers(Point(point))

    def step(self, position: np.ndarray, displacement: np.ndarray) -> StepResult:
        disp = np.asarray(displacement, dtype=np.float64)
        norm = float(np.linalg.norm(disp))
        if norm == 0.0:
            return StepResult(position.copy(), False)
        if norm > self.max_step:
            disp = disp * (self.max_step / norm)
            norm = self.max_step
        target = position + disp
        if self._prep.covers(LineString([position, target])):
            return StepResult(target, False)
        # wall contact: largest free prefix of the segment, to 1e-6 units
        lo, hi = 0.0, 1.0
        while (hi - lo) * norm > 1e-6:
            mid = 0.5 * (lo + hi)
            if self._prep.covers(LineString([position, position + mid * disp])):
                lo = mid
            else:
                hi = mid
        return StepResult(position + lo * disp, True)

    def segment_free(self, a: np.ndarray, b: np.ndarray) -> bool:
        """Straight-line reachability probe used by the astute prior."""
        return self._prep.covers(LineString([a, b]))
