"""Maze specification shared by the 2D polygon mazes and d-dimensional capsule mazes."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class MazeSpec:
    dim: int
    kind: str  # rectilinear | triangle | pentagon | capsule
    node_points: np.ndarray  # (n, dim)
    tree_edges: list[tuple[int, int]]  # spanning tree, |nodes| - 1 edges
    hallway_width: float  # full width (2 * capsule radius)
    seed: int
    boundary: list = field(default_factory=list)  # polygon rings, 2D kinds only

    def __post_init__(self):
        self.node_points = np.asarray(self.node_points, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return len(self.node_points)


def wilson_spanning_tree(n: int, neighbors: dict[int, list[int]], rng) -> list[tuple[int, int]]:
    """Uniform random spanning tree by loop-erased random walks."""
    in_tree = np.zeros(n, dtype=bool)
    root = int(rng.integers(n))
    in_tree[root] = True
    nxt = [-1] * n
    for start in range(n):
        if in_tree[start]:
            continue
        u = start
        while not in_tree[u]:
            nbrs = neighbors[u]
            nxt[u] = nbrs[int(rng.integers(len(nbrs)))]
            u = nxt[u]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    edges = []
    for v in range(n):
        if v != root and nxt[v] >= 0 and in_tree[v]:
            edges.append((min(v, nxt[v]), max(v, nxt[v])))
    # loop erasure leaves stale pointers on revisited vertices; keep tree edges only
    uniq = sorted(set(edges))
    assert len(uniq) == n - 1, f"spanning tree has {len(uniq)} edges, expected {n - 1}"
    return uniq


def maze_distances(spec: MazeSpec) -> np.ndarray:
    """All-pairs path length over the spanning tree, Euclidean edge weights."""
    n = spec.n_nodes
    adj: dict[int, list[tuple[int, float]]] = {i: [] for i in range(n)}
    for a, b in spec.tree_edges:
        w = float(np.linalg.norm(spec.node_points[a] - spec.node_points[b]))
        adj[a].append((b, w))
        adj[b].append((a, w))
    out = np.full((n, n), np.inf)
    for s in range(n):
        out[s, s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > out[s, u]:
                continue
            for v, w in adj[u]:
                nd = d + w
                if nd < out[s, v]:
                    out[s, v] = nd
                    heapq.heappush(heap, (nd, v))
    return out


def save_maze_spec(spec: MazeSpec, path: str) -> None:
    doc = {
        "dim": spec.dim,
        "kind": spec.kind,
        "node_points": [[float(x) for x in p] for p in spec.node_points],
        "tree_edges": [[int(a), int(b)] for a, b in spec.tree_edges],
        "hallway_width": spec.hallway_width,
        "seed": spec.seed,
        "boundary": spec.boundary,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_maze_spec(path: str) -> MazeSpec:
    with open(path) as fh:
        doc = json.load(fh)
    return MazeSpec(
        dim=doc["dim"],
        kind=doc["kind"],
        node_points=np.asarray(doc["node_points"], dtype=np.float64),
        tree_edges=[(int(a), int(b)) for a, b in doc["tree_edges"]],
        hallway_width=doc["hallway_width"],
        seed=doc["seed"],
        boundary=doc["boundary"],
    )
