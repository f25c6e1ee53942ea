"""Capsule mazes for d >= 2: free space is a union of capsules along tree edges.

Point membership is a minimum point-to-segment distance test, which keeps
collision checking cheap in any dimension. Movement is jump-mode: one action
ray-marches toward its target and stops at the first obstacle.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .core import StepResult
from .maze_common import MazeSpec, wilson_spanning_tree


def generate_capsule_maze(
    d: int,
    n_nodes: int,
    capsule_radius: float = 0.8,
    seed: int = 0,
    node_spacing: float = 2.0,
) -> MazeSpec:
    if d < 2:
        raise ValueError("capsule mazes need d >= 2")
    if n_nodes < 2:
        raise ValueError("n_nodes must be >= 2")
    rng = np.random.default_rng(seed)
    extent = node_spacing * max(2.0, n_nodes ** (1.0 / d) * 1.3)
    points = np.zeros((n_nodes, d))
    count = 0
    attempts = 0
    while count < n_nodes:
        cand = rng.uniform(0.0, extent, size=d)
        attempts += 1
        if count == 0 or np.min(np.linalg.norm(points[:count] - cand, axis=1)) > node_spacing * 0.8:
            points[count] = cand
            count += 1
        if attempts > 20000:
            extent *= 1.3
            attempts = 0
    for attempt in range(5):
        try:
            tri = Delaunay(points + rng.normal(scale=1e-6 * (attempt + 1), size=points.shape))
            break
        except Exception:
            continue
    else:
        raise ValueError("degenerate point set: Delaunay triangulation failed")
    edges = set()
    for simplex in tri.simplices:
        for i in range(len(simplex)):
            for j in range(i + 1, len(simplex)):
                a, b = int(simplex[i]), int(simplex[j])
                edges.add((min(a, b), max(a, b)))
    neighbors = {i: [] for i in range(n_nodes)}
    for a, b in sorted(edges):
        neighbors[a].append(b)
        neighbors[b].append(a)
    tree = wilson_spanning_tree(n_nodes, neighbors, rng)
    return MazeSpec(d, "capsule", points, tree, 2.0 * capsule_radius, seed)


class CapsuleMaze:
    def __init__(self, spec: MazeSpec, march_step: float | None = None):
        self.spec = spec
        self.dim = spec.dim
        self.radius = spec.hallway_width / 2.0
        self.max_step = np.inf  # jump mode: a single action may cross the maze
        self._seg_a = np.array([spec.node_points[a] for a, _ in spec.tree_edges])
        self._seg_b = np.array([spec.node_points[b] for _, b in spec.tree_edges])
        self._seg_d = self._seg_b - self._seg_a
        self._seg_len2 = np.maximum(np.einsum("ij,ij->i", self._seg_d, self._seg_d), 1e-12)
        self.march_step = march_step if march_step is not None else self.radius / 4.0

    def start_state(self) -> np.ndarray:
        return self.spec.node_points[0].copy()

    def contains(self, point: np.ndarray) -> bool:
        t = np.clip(np.einsum("ij,ij->i", point - self._seg_a, self._seg_d) / self._seg_len2, 0, 1)
        closest = self._seg_a + t[:, None] * self._seg_d
        d2 = np.einsum("ij,ij->i", point - closest, point - closest)
        return bool(np.min(d2) <= self.radius * self.radius)

    def step(self, position: np.ndarray, displacement: np.ndarray) -> StepResult:
        disp = np.asarray(displacement, dtype=np.float64)
        norm = float(np.linalg.norm(disp))
        if norm == 0.0:
            return StepResult(position.copy(), False)
        n_steps = max(1, int(np.ceil(norm / self.march_step)))
        unit = disp / norm
        last_free = 0.0
        blocked_at = None
        for k in range(1, n_steps + 1):
            t = min(norm, k * self.march_step)
            if self.contains(position + t * unit):
                last_free = t
            else:
                blocked_at = t
                break
        if blocked_at is None:
            return StepResult(position + disp, False)
        lo, hi = last_free, blocked_at
        while hi - lo > 1e-6:
            mid = 0.5 * (lo + hi)
            if self.contains(position + mid * unit):
                lo = mid
            else:
                hi = mid
        return StepResult(position + lo * unit, True)

    def segment_free(self, a: np.ndarray, b: np.ndarray) -> bool:
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            return self.contains(a)
        n = max(2, int(np.ceil(length / self.march_step)) + 1)
        for t in np.linspace(0.0, 1.0, n):
            if not self.contains(a + t * (b - a)):
                return False
        return True
