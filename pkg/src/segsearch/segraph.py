"""Self-organizing spatial graph ("segraph").

Vertices carry hyperball fields (center + radius) that segment the state
space; directed edges carry traversal statistics. Mutation operators grow the
graph: refinement covers a vertex's field with smaller children, extension
plants new fields in a shell around a visited vertex, and linking connects
overlapping fields in both directions. All bookkeeping scores used by the
search loop (estimated reliability, affordance, epistemic value, stress,
deletion) live here as well.

Every vertex is also grounded in the phasor key memory: its one-hot code is
bound to the key at its center with the field radius as the storage scale, so
the grounding matrix maps a position key to a vector of Gaussian vertex
activations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hark

SQRT2 = math.sqrt(2.0)

# candidate (center, radius) is redundant against an existing vertex when the
# centers are closer than half the new radius and the radius ratio falls
# strictly inside (1/sqrt(2), sqrt(2)); consecutive sqrt(2)-ladder scales are
# deliberately not redundant.
REDUNDANCY_DIST_FACTOR = 0.5
REDUNDANCY_RATIO = SQRT2


@dataclass(frozen=True)
class ReliabilityConfig:
    pseudo_success: float = 1.0
    pseudo_fail: float = 1.0
    stress_coeff: float = 1.0
    stress_threshold: float = 1.0

    def __post_init__(self):
        if self.pseudo_success + self.pseudo_fail <= 0:
            raise ValueError("pseudo_success + pseudo_fail must be positive")


@dataclass(frozen=True)
class GraphConfig:
    reliability: ReliabilityConfig = field(default_factory=ReliabilityConfig)
    # extension: probe-sample count scales with dimension; shell reaches
    # shell_factor * radius; coarse-scale candidates need local average
    # reachability above extend_threshold
    extend_samples_per_dim: int = 24
    extend_threshold: float = 0.75
    shell_factor: float = 2.0
    # refinement: children shrink by refine_scale; greedy placement stops once
    # refine_coverage of the Monte-Carlo points (uniform ball plus a
    # near-boundary ring, which is where coverage is hard) is reached, or at
    # the child cap
    refine_scale: float = SQRT2 / 2.0
    refine_samples: int = 500
    refine_coverage: float = 1.0
    refine_max_children: int = 32
    refine_candidates: int = 24


@dataclass
class Vertex:
    id: int
    center: np.ndarray
    radius: float
    visits: int = 0
    transits: int = 0
    last_visit_time: int = 0
    reward_avg: float = 0.0
    reward_seen: bool = False
    visited: bool = False


@dataclass
class Edge:
    id: int
    src: int
    dst: int
    n_success: int = 0
    n_fail: int = 0
    n_upsilon: int = 0
    manual_inhibited: bool = False

    @property
    def n(self) -> int:
        return self.n_success + self.n_fail


class _EdgeColumns:
    """Growable parallel arrays over edge slots for vectorized scoring."""

    def __init__(self, capacity: int = 256):
        self.size = 0
        self.eid = np.zeros(capacity, dtype=np.int64)
        self.src = np.zeros(capacity, dtype=np.int64)
        self.dst = np.zeros(capacity, dtype=np.int64)
        self.ns = np.zeros(capacity, dtype=np.int64)
        self.nf = np.zeros(capacity, dtype=np.int64)
        self.nups = np.zeros(capacity, dtype=np.int64)
        self.manual = np.zeros(capacity, dtype=bool)

    def _grow(self):
        cap = self.eid.size * 2
        for name in ("eid", "src", "dst", "ns", "nf", "nups", "manual"):
            arr = getattr(self, name)
            new = np.zeros(cap, dtype=arr.dtype)
            new[: self.size] = arr[: self.size]
            setattr(self, name, new)

    def append(self, eid: int, src: int, dst: int) -> int:
        if self.size == self.eid.size:
            self._grow()
        i = self.size
        self.eid[i], self.src[i], self.dst[i] = eid, src, dst
        self.ns[i] = self.nf[i] = self.nups[i] = 0
        self.manual[i] = False
        self.size += 1
        return i

    def swap_remove(self, slot: int) -> int:
        """Remove slot by moving the last slot into it; returns the moved eid."""
        last = self.size - 1
        moved = int(self.eid[last])
        if slot != last:
            for name in ("eid", "src", "dst", "ns", "nf", "nups", "manual"):
                arr = getattr(self, name)
                arr[slot] = arr[last]
        self.size -= 1
        return moved


class Segraph:
    def __init__(
        self,
        dim: int,
        vertex_cap: int,
        basis: hark.HarkBasis,
        cfg: GraphConfig | None = None,
    ):
        if basis.dim_d != dim:
            raise ValueError("basis dimensionality must match graph dimensionality")
        self.dim = dim
        self.vertex_cap = vertex_cap
        self.basis = basis
        self.cfg = cfg or GraphConfig()
        self.time = 0
        self.vertices: dict[int, Vertex] = {}
        self.edges: dict[int, Edge] = {}
        self._edge_by_pair: dict[tuple[int, int], int] = {}
        self._edge_slot: dict[int, int] = {}
        self._cols = _EdgeColumns()
        self._out: dict[int, set[int]] = {}
        self._in: dict[int, set[int]] = {}
        self._next_vid = 0
        self._next_eid = 0
        # phasor grounding rows: one-hot vertex code bound to the key at the
        # field center, gain-modulated at the field radius
        self.grounding: dict[int, np.ndarray] = {}
        self._geom_dirty = True
        self._ids: np.ndarray | None = None
        self._centers: np.ndarray | None = None
        self._radii: np.ndarray | None = None
        self._visited_lookup: np.ndarray | None = None
        self._measure_lookup: np.ndarray | None = None

    # -- cached geometry ----------------------------------------------------

    def _rebuild_geometry(self):
        n = len(self.vertices)
        self._ids = np.fromiter(self.vertices.keys(), dtype=np.int64, count=n)
        self._centers = np.empty((n, self.dim))
        self._radii = np.empty(n)
        for i, v in enumerate(self.vertices.values()):
            self._centers[i] = v.center
            self._radii[i] = v.radius
        lookup = np.zeros(self._next_vid + 1, dtype=bool)
        measures = np.zeros(self._next_vid + 1)
        for vid, v in self.vertices.items():
            lookup[vid] = v.visited
            measures[vid] = v.radius**self.dim
        self._visited_lookup = lookup
        self._measure_lookup = measures
        self._geom_dirty = False

    def _geometry(self):
        if self._geom_dirty:
            self._rebuild_geometry()
        return self._ids, self._centers, self._radii

    def mark_visited(self, vid: int):
        v = self.vertices[vid]
        v.visits += 1
        v.last_visit_time = self.time
        if not v.visited:
            v.visited = True
            self._geom_dirty = True

    def visited_lookup(self) -> np.ndarray:
        if self._geom_dirty:
            self._rebuild_geometry()
        return self._visited_lookup

    # -- basic queries --------------------------------------------------------

    def edge_between(self, src: int, dst: int) -> int | None:
        return self._edge_by_pair.get((src, dst))

    def out_edges(self, vid: int) -> list[int]:
        return sorted(self._out.get(vid, ()))

    def in_edges(self, vid: int) -> list[int]:
        return sorted(self._in.get(vid, ()))

    def containing_vertices(self, point: np.ndarray) -> list[int]:
        """Ids of all vertices whose field contains the point, smallest first."""
        if not self.vertices:
            return []
        ids, centers, radii = self._geometry()
        point = np.asarray(point, dtype=np.float64)
        inside = np.einsum("ij,ij->i", centers - point, centers - point) <= radii * radii
        hits = np.nonzero(inside)[0]
        order = np.lexsort((ids[hits], radii[hits]))
        return [int(i) for i in ids[hits][order]]

    def smallest_containing(self, point: np.ndarray) -> int | None:
        hits = self.containing_vertices(point)
        return hits[0] if hits else None

    def vertex_activation(self, point: np.ndarray) -> dict[int, float]:
        """Grounding-memory readout: vertex id -> Gaussian field activation."""
        key = hark.key_at(self.basis, np.asarray(point, dtype=np.float64))
        return {vid: float((row @ key).real) for vid, row in self.grounding.items()}

    # -- scores ---------------------------------------------------------------

    def estimated_reliability(self, eid: int) -> float:
        e = self.edges[eid]
        return estimated_reliability(e.n_success, e.n_fail, self.cfg.reliability)

    def measure_vertex(self, vid: int) -> float:
        return self.vertices[vid].radius ** self.dim

    def measure_edge(self, eid: int) -> float:
        e = self.edges[eid]
        return self.measure_vertex(e.src) * self.measure_vertex(e.dst)

    def affordance(self, eid: int) -> float:
        return self.estimated_reliability(eid) * self.measure_edge(eid)

    def is_ghost(self, eid: int) -> bool:
        return not self.vertices[self.edges[eid].src].visited

    def epistemic_score(self, eid: int) -> float:
        if self.is_ghost(eid):
            return 0.0
        e = self.edges[eid]
        return self.measure_edge(eid) / (e.n + e.n_upsilon + 1.0)

    def stress(self, eid: int, c_scale: float = 1.0) -> float:
        e = self.edges[eid]
        c = self.cfg.reliability.stress_coeff * c_scale
        return c * e.n_success * e.n_fail / (e.n + 1.0)

    def deletion_score(self, vid: int) -> float:
        v = self.vertices[vid]
        out = self._out.get(vid, ())
        if out:
            ghosts = sum(1 for e in out if self.is_ghost(e))
            f_ghost = ghosts / len(out)
        else:
            f_ghost = 0.0
        t_last = max(0, self.time - v.last_visit_time)
        num = (1.0 - f_ghost) * (v.transits + 1) * (v.visits + 1) * (self.measure_vertex(vid) + 1)
        return -num / (math.sqrt(t_last) + 1.0)

    # -- vectorized edge scores (used by pathfinding and goal selection) ------

    def edge_table(self):
        c = self._cols
        n = c.size
        return (
            c.eid[:n],
            c.src[:n],
            c.dst[:n],
            c.ns[:n],
            c.nf[:n],
            c.nups[:n],
            c.manual[:n],
        )

    def measure_lookup(self) -> np.ndarray:
        if self._geom_dirty:
            self._rebuild_geometry()
        return self._measure_lookup

    def affordance_vector(self) -> np.ndarray:
        c, n = self._cols, self._cols.size
        rel = self.cfg.reliability
        er = (c.ns[:n] + rel.pseudo_success) / (
            c.ns[:n] + c.nf[:n] + rel.pseudo_success + rel.pseudo_fail
        )
        m = self.measure_lookup()
        return er * m[c.src[:n]] * m[c.dst[:n]]

    def ghost_mask(self) -> np.ndarray:
        c, n = self._cols, self._cols.size
        return ~self.visited_lookup()[c.src[:n]]

    def epistemic_vector(self) -> np.ndarray:
        c, n = self._cols, self._cols.size
        m = self.measure_lookup()
        ups = m[c.src[:n]] * m[c.dst[:n]] / (c.ns[:n] + c.nf[:n] + c.nups[:n] + 1.0)
        ups[self.ghost_mask()] = 0.0
        return ups

    # -- count updates ---------------------------------------------------------

    def record_success(self, eid: int):
        e = self.edges[eid]
        e.n_success += 1
        self._cols.ns[self._edge_slot[eid]] += 1

    def record_failure(self, eid: int):
        e = self.edges[eid]
        e.n_fail += 1
        self._cols.nf[self._edge_slot[eid]] += 1

    def bump_upsilon(self, eid: int):
        e = self.edges[eid]
        e.n_upsilon += 1
        self._cols.nups[self._edge_slot[eid]] += 1

    def set_manual_inhibited(self, eid: int, value: bool):
        self.edges[eid].manual_inhibited = value
        self._cols.manual[self._edge_slot[eid]] = value

    def clear_manual_inhibition(self):
        for e in self.edges.values():
            e.manual_inhibited = False
        self._cols.manual[: self._cols.size] = False

    # -- mutation ----------------------------------------------------------------

    def link(self, src: int, dst: int) -> int:
        """Create the directed edge if absent; idempotent. Self-links rejected."""
        if src == dst:
            raise ValueError("cannot link a vertex to itself")
        if src not in self.vertices or dst not in self.vertices:
            raise KeyError("both endpoints must exist")
        eid = self._edge_by_pair.get((src, dst))
        if eid is not None:
            return eid
        eid = self._next_eid
        self._next_eid += 1
        self.edges[eid] = Edge(eid, src, dst)
        self._edge_by_pair[(src, dst)] = eid
        self._edge_slot[eid] = self._cols.append(eid, src, dst)
        self._out.setdefault(src, set()).add(eid)
        self._in.setdefault(dst, set()).add(eid)
        return eid

    def _remove_edge(self, eid: int):
        e = self.edges.pop(eid)
        del self._edge_by_pair[(e.src, e.dst)]
        self._out[e.src].discard(eid)
        self._in[e.dst].discard(eid)
        slot = self._edge_slot.pop(eid)
        moved = self._cols.swap_remove(slot)
        if moved != eid:
            self._edge_slot[moved] = slot

    def remove_vertex(self, vid: int):
        for eid in list(self._out.get(vid, ())) + list(self._in.get(vid, ())):
            if eid in self.edges:
                self._remove_edge(eid)
        self._out.pop(vid, None)
        self._in.pop(vid, None)
        del self.vertices[vid]
        self.grounding.pop(vid, None)
        self._geom_dirty = True

    def is_redundant(self, center: np.ndarray, radius: float, exempt: frozenset = frozenset()):
        if not self.vertices:
            return False
        ids, centers, radii = self._geometry()
        close = np.linalg.norm(centers - center, axis=1) < REDUNDANCY_DIST_FACTOR * radius
        ratio = radii / radius
        # strict interval with float slack: exact sqrt(2)-ladder steps stay legal
        band = (ratio > (1.0 + 1e-9) / REDUNDANCY_RATIO) & (ratio < REDUNDANCY_RATIO * (1.0 - 1e-9))
        hits = ids[close & band]
        if exempt:
            return any(int(i) not in exempt for i in hits)
        return hits.size > 0

    def add_vertex(
        self,
        center: np.ndarray,
        radius: float,
        protected: tuple[int, ...] = (),
        redundancy_exempt: frozenset = frozenset(),
    ) -> int | None:
        """Add a field, auto-linking every overlapping vertex in both directions.

        Returns None when the candidate is redundant. At the vertex cap the
        highest-deletion-score vertex outside `protected` is evicted first.
        """
        if radius <= 0:
            raise ValueError("radius must be positive")
        center = np.asarray(center, dtype=np.float64).copy()
        if self.is_redundant(center, radius, redundancy_exempt):
            return None
        if len(self.vertices) >= self.vertex_cap:
            if not self._evict(protected):
                return None
        vid = self._next_vid
        self._next_vid += 1
        self.vertices[vid] = Vertex(vid, center, radius, last_visit_time=self.time)
        self._out[vid] = set()
        self._in[vid] = set()
        key = hark.key_at(self.basis, center)
        profile = hark.gain_vector(self.basis, radius)
        g = profile.gains
        self.grounding[vid] = (g * np.conj(key)) / g.sum()
        self._geom_dirty = True
        ids, centers, radii = self._geometry()
        gap = np.linalg.norm(centers - center, axis=1) <= radii + radius
        for other in ids[gap]:
            other = int(other)
            if other != vid:
                self.link(other, vid)
                self.link(vid, other)
        return vid

    def _evict(self, protected: tuple[int, ...]) -> bool:
        blocked = set(protected)
        best_vid, best_score = None, -np.inf
        for vid in self.vertices:
            if vid in blocked:
                continue
            s = self.deletion_score(vid)
            if s > best_score or (s == best_score and best_vid is not None and vid < best_vid):
                best_vid, best_score = vid, s
        if best_vid is None:
            return False
        self.remove_vertex(best_vid)
        return True

    def refine_edge(
        self,
        eid: int,
        rng: np.random.Generator,
        protected: tuple[int, ...] = (),
    ) -> list[int]:
        """Cover the destination vertex's field with children at the next scale down.

        One child sits at the parent center; further children are placed
        greedily on the sphere of radius (1 - a) * sigma until the sampled
        parent ball is covered or the cap is hit. Children start with no
        statistics and link up purely through field overlap. Siblings are
        exempt from mutual redundancy (they are intentionally dense); the cap
        is the only brake.
        """
        cfg = self.cfg
        parent = self.vertices[self.edges[eid].dst]
        a = cfg.refine_scale
        sigma = parent.radius
        child_r = a * sigma
        samples = np.concatenate(
            [
                _ball_samples(rng, parent.center, sigma, cfg.refine_samples, self.dim),
                _sphere_samples(rng, parent.center, 0.995 * sigma, cfg.refine_samples // 2, self.dim),
            ]
        )
        added: list[int] = []
        exempt: set[int] = set()

        def try_add(center) -> int | None:
            vid = self.add_vertex(
                center,
                child_r,
                protected=tuple(protected) + tuple(added) + (parent.id,),
                redundancy_exempt=frozenset(exempt),
            )
            if vid is not None:
                added.append(vid)
                exempt.add(vid)
            return vid

        covered = np.zeros(len(samples), dtype=bool)
        vid = try_add(parent.center)
        if vid is not None:
            covered |= _inside(samples, parent.center, child_r)
        ring = (1.0 - a) * sigma
        target = cfg.refine_coverage
        while covered.mean() < target and len(added) < cfg.refine_max_children:
            dirs = rng.normal(size=(cfg.refine_candidates, self.dim))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            centers = parent.center + ring * dirs
            gains = [
                int(np.sum(~covered & _inside(samples, c, child_r))) for c in centers
            ]
            order = np.argsort(gains)[::-1]
            placed = False
            for k in order:
                if gains[k] <= 0:
                    break
                if try_add(centers[k]) is not None:
                    covered |= _inside(samples, centers[k], child_r)
                    placed = True
                    break
            if not placed:
                break
        return added

    def extend_vertex(
        self,
        vid: int,
        probe,
        rng: np.random.Generator,
        invert: bool = False,
        protected: tuple[int, ...] = (),
    ) -> list[int]:
        """Plant new fields in the shell around a visited vertex.

        Probe values for sampled shell points are written into a scratch key
        memory with a normalizer, then read back as local averages at the
        sqrt(2) ladder of scales. Coarse scales add fields highest-average
        first when the average clears the threshold; the finest scale fills
        whatever samples remain uncovered regardless of the average. A sample
        already inside some field adds no coverage and is skipped, which makes
        extension of a fully surrounded vertex a no-op.
        """
        cfg = self.cfg
        v = self.vertices[vid]
        sigma = v.radius
        n = cfg.extend_samples_per_dim * self.dim
        pts = _shell_samples(rng, v.center, sigma, cfg.shell_factor * sigma, n, self.dim)
        r_vals = np.array([float(probe(v.center, p)) for p in pts])

        keys = np.exp(1j * hark.TWO_PI * (pts @ self.basis.gamma.T))
        n_cells = self.basis.size_n
        value_row = (r_vals[:, None].astype(np.complex128) * np.conj(keys)).sum(axis=0) / n_cells
        norm_row = np.conj(keys).sum(axis=0) / n_cells

        added: list[int] = []
        uncovered = np.array([not self.containing_vertices(p) for p in pts])
        for scale in (SQRT2 * sigma, sigma):
            g = hark.gain_vector(self.basis, scale).gains
            mod = keys * g
            num = (mod @ value_row).real
            den = (mod @ norm_row).real
            with np.errstate(divide="ignore", invalid="ignore"):
                local = np.where(np.abs(den) > 1e-12, num / den, 0.0)
            if invert:
                local = 1.0 - local
            for j in np.lexsort((np.arange(n), -local)):
                if local[j] < cfg.extend_threshold:
                    break
                if not uncovered[j]:
                    continue
                new = self.add_vertex(pts[j], scale, protected=tuple(protected) + tuple(added))
                if new is not None:
                    added.append(new)
                    uncovered &= ~_inside(pts, pts[j], scale)
        fine = cfg.refine_scale * sigma
        for j in range(n):
            if uncovered[j]:
                new = self.add_vertex(pts[j], fine, protected=tuple(protected) + tuple(added))
                if new is not None:
                    added.append(new)
                    uncovered &= ~_inside(pts, pts[j], fine)
        return added

    # -- serialization ---------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "dim": self.dim,
            "vertex_cap": self.vertex_cap,
            "time": self.time,
            "vertices": [
                {
                    "id": v.id,
                    "center": [float(x) for x in v.center],
                    "radius": v.radius,
                    "visits": v.visits,
                    "transits": v.transits,
                    "last_visit": v.last_visit_time,
                    "reward_avg": v.reward_avg,
                }
                for v in self.vertices.values()
            ],
            "edges": [
                {
                    "src": e.src,
                    "dst": e.dst,
                    "n_success": e.n_success,
                    "n_fail": e.n_fail,
                    "n_upsilon": e.n_upsilon,
                    "manual_inhibited": e.manual_inhibited,
                }
                for eid, e in sorted(self.edges.items())
            ],
        }

    @classmethod
    def from_snapshot(cls, snap: dict, basis: hark.HarkBasis, cfg: GraphConfig | None = None):
        g = cls(snap["dim"], snap["vertex_cap"], basis, cfg)
        g.time = snap["time"]
        for row in snap["vertices"]:
            vid = row["id"]
            v = Vertex(
                vid,
                np.asarray(row["center"], dtype=np.float64),
                row["radius"],
                visits=row["visits"],
                transits=row["transits"],
                last_visit_time=row["last_visit"],
                reward_avg=row["reward_avg"],
                visited=row["visits"] > 0,
            )
            v.reward_seen = v.reward_avg != 0.0
            g.vertices[vid] = v
            g._out[vid] = set()
            g._in[vid] = set()
            key = hark.key_at(basis, v.center)
            gains = hark.gain_vector(basis, v.radius).gains
            g.grounding[vid] = (gains * np.conj(key)) / gains.sum()
            g._next_vid = max(g._next_vid, vid + 1)
        for row in snap["edges"]:
            eid = g.link(row["src"], row["dst"])
            e = g.edges[eid]
            e.n_success = row["n_success"]
            e.n_fail = row["n_fail"]
            e.n_upsilon = row["n_upsilon"]
            e.manual_inhibited = row["manual_inhibited"]
            slot = g._edge_slot[eid]
            g._cols.ns[slot] = e.n_success
            g._cols.nf[slot] = e.n_fail
            g._cols.nups[slot] = e.n_upsilon
            g._cols.manual[slot] = e.manual_inhibited
        g._geom_dirty = True
        return g

    def clone(self) -> "Segraph":
        return Segraph.from_snapshot(self.snapshot(), self.basis, self.cfg)


def estimated_reliability(n_success: int, n_fail: int, cfg: ReliabilityConfig) -> float:
    return (n_success + cfg.pseudo_success) / (
        n_success + n_fail + cfg.pseudo_success + cfg.pseudo_fail
    )


def _inside(points: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    d = points - center
    return np.einsum("ij,ij->i", d, d) <= radius * radius


def _ball_samples(rng, center, radius, n, dim):
    dirs = rng.normal(size=(n, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = radius * rng.uniform(size=n) ** (1.0 / dim)
    return center + dirs * r[:, None]


def _sphere_samples(rng, center, radius, n, dim):
    dirs = rng.normal(size=(n, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return center + radius * dirs


def _shell_samples(rng, center, r_in, r_out, n, dim):
    dirs = rng.normal(size=(n, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    u = rng.uniform(size=n)
    r = (u * (r_out**dim - r_in**dim) + r_in**dim) ** (1.0 / dim)
    return center + dirs * r[:, None]
