"""Wave-based pathfinding over the disinhibited edge set.

The usable subgraph is frozen into a boolean adjacency matrix (a one-hot
working memory of the graph). Midpoints between a start front and a goal
front are found by propagating the two fronts one hop per step (forward via
the matrix, backward via its transpose) until they overlap; fronts are
cumulative, so members of the overlap always lie on shortest paths. The
recursive decomposition keeps a stack of deferred goal fronts and emits the
next concrete path vertex as soon as a subproblem bottoms out, which is why
the first hop is available after O(shortest-length) front expansions.

Everything here is boolean algebra over an immutable snapshot; no floating
point is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .segraph import Segraph


@dataclass
class GraphMatrix:
    """Boolean adjacency over usable edges: adj[j, i] == True iff i -> j."""

    adj: np.ndarray  # (V, V) bool
    ids: np.ndarray  # row index -> vertex id
    index: dict[int, int]  # vertex id -> row index
    goal_edge: tuple[int, int] | None  # (src id, dst id) of the forced edge

    @property
    def size(self) -> int:
        return self.ids.size


def build_matrix(graph: Segraph, alpha_threshold: float, goal_edge: int | None) -> GraphMatrix:
    """Freeze the currently usable edge set.

    An edge is usable when it is not manually inhibited, not a ghost edge
    (source never visited), and its estimated affordance clears the
    threshold. The goal edge is always usable regardless.
    """
    ids = np.fromiter(graph.vertices.keys(), dtype=np.int64, count=len(graph.vertices))
    index = {int(v): i for i, v in enumerate(ids)}
    n = ids.size
    adj = np.zeros((n, n), dtype=bool)
    eid, src, dst, _, _, _, manual = graph.edge_table()
    if eid.size:
        usable = (~manual) & (~graph.ghost_mask()) & (graph.affordance_vector() >= alpha_threshold)
        if goal_edge is not None:
            usable |= eid == goal_edge
        row_of = np.zeros(int(ids.max()) + 1, dtype=np.int64)
        row_of[ids] = np.arange(n)
        adj[row_of[dst[usable]], row_of[src[usable]]] = True
    pair = None
    if goal_edge is not None:
        e = graph.edges[goal_edge]
        pair = (e.src, e.dst)
    return GraphMatrix(adj, ids, index, pair)


def find_mid(m_s: np.ndarray, m_g: np.ndarray, gm: GraphMatrix):
    """Overlap of the two cumulative wavefronts, or None if they cannot meet.

    Expands the forward front, checks, then the backward front, checks; a
    front that stops growing has saturated its reachable set, so no overlap
    can ever appear and the search is hopeless.
    """
    overlap, _ = _find_mid_counted(m_s, m_g, gm)
    return overlap


def _find_mid_counted(m_s, m_g, gm):
    hit = m_s & m_g
    if hit.any():
        return hit, 0
    f_s = m_s.copy()
    f_g = m_g.copy()
    expansions = 0
    while True:
        new_s = f_s | (gm.adj @ f_s)
        expansions += 1
        grew_s = bool((new_s ^ f_s).any())
        f_s = new_s
        hit = f_s & f_g
        if hit.any():
            return hit, expansions
        new_g = f_g | (gm.adj.T @ f_g)
        expansions += 1
        grew_g = bool((new_g ^ f_g).any())
        f_g = new_g
        hit = f_s & f_g
        if hit.any():
            return hit, expansions
        if not grew_s or not grew_g:
            return None, expansions


def hop_steps(start: int, goal_vertex: int, gm: GraphMatrix, rng: np.random.Generator):
    """Recursive midpoint decomposition toward one goal vertex.

    Yields (vertex id, cumulative front expansions) for each hop, excluding
    the start vertex. Members of a midpoint overlap all sit on shortest
    paths, so any random choice preserves shortest length. Yields nothing
    when start or goal is unknown or unreachable; a clean arrival ends with
    the goal vertex itself.
    """
    if start not in gm.index or goal_vertex not in gm.index:
        return
    if start == goal_vertex:
        return
    n = gm.size
    expansions = 0
    current = gm.index[start]
    m_g = np.zeros(n, dtype=bool)
    m_g[gm.index[goal_vertex]] = True
    stack: list[np.ndarray] = []
    while True:
        if m_g[current]:
            if not stack:
                return
            m_g = stack.pop()
            continue
        m_s = np.zeros(n, dtype=bool)
        m_s[current] = True
        mid, used = _find_mid_counted(m_s, m_g, gm)
        expansions += used
        if mid is None:
            return
        if not (mid & m_g).any():
            stack.append(m_g)
            m_g = mid
            continue
        # the fronts met at the first check: every member is one hop away
        candidates = mid & gm.adj[:, current]
        hits = np.nonzero(candidates)[0]
        if hits.size == 0:
            return
        current = int(hits[rng.integers(hits.size)])
        yield int(gm.ids[current]), expansions
        if not stack:
            return
        m_g = stack.pop()


def find_path_to_vertex(start: int, goal_vertex: int, gm: GraphMatrix, rng: np.random.Generator):
    """Vertex sequence from start (exclusive) ending at goal_vertex, or None."""
    if start == goal_vertex:
        return []
    out = [v for v, _ in hop_steps(start, goal_vertex, gm, rng)]
    return out if out and out[-1] == goal_vertex else None


def find_path(start: int, goal_edge: int, gm: GraphMatrix, rng: np.random.Generator):
    """Vertex sequence from start through the goal edge, or None.

    The path ends with the goal edge's destination appended; every
    consecutive pair (including start to first element) is an edge of the
    matrix. None means no usable route exists.
    """
    if gm.goal_edge is None:
        raise ValueError("matrix was built without a goal edge")
    goal_src, goal_dst = gm.goal_edge
    prefix = find_path_to_vertex(start, goal_src, gm, rng)
    if prefix is None:
        return None
    return prefix + [goal_dst]
