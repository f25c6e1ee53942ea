import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segsearch import hark
from segsearch.segraph import (
    GraphConfig,
    ReliabilityConfig,
    Segraph,
    estimated_reliability,
)


@pytest.fixture(scope="module")
def basis2():
    return hark.sample_basis(2, 512, 0.125, 4.0, 0.001, 0)


def make_graph(basis, cap=200, cfg=None):
    return Segraph(2, cap, basis, cfg or GraphConfig())


class TestScores:
    def test_estimated_reliability_examples(self):
        cfg = ReliabilityConfig()
        assert estimated_reliability(0, 0, cfg) == 0.5
        assert estimated_reliability(9, 0, cfg) == pytest.approx(10 / 11)
        assert estimated_reliability(0, 100, cfg) == pytest.approx(1 / 102)

    @given(ns=st.integers(0, 10**6), nf=st.integers(0, 10**6))
    @settings(max_examples=200, deadline=None)
    def test_estimated_reliability_in_unit_interval(self, ns, nf):
        r = estimated_reliability(ns, nf, ReliabilityConfig())
        assert 0.0 <= r <= 1.0

    def test_reliability_config_validation(self):
        with pytest.raises(ValueError):
            ReliabilityConfig(pseudo_success=0.0, pseudo_fail=0.0)

    def test_measure(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 2.0)
        assert g.measure_vertex(a) == 1.0
        assert g.measure_vertex(b) == 4.0
        eid = g.link(a, b)
        assert g.measure_edge(eid) == 4.0

    def test_affordance(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        eid = g.link(a, b)
        assert g.affordance(eid) == 0.5  # fresh, symmetric prior, unit measures
        for _ in range(1000):
            g.record_failure(eid)
        assert g.affordance(eid) < 1e-2

    def test_affordance_monotone_in_successes(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        eid = g.link(a, b)
        g.record_failure(eid)
        last = g.affordance(eid)
        for _ in range(20):
            g.record_success(eid)
            cur = g.affordance(eid)
            assert cur >= last
            last = cur

    def test_epistemic_score(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        eid = g.link(a, b)
        g.mark_visited(a)
        assert g.epistemic_score(eid) == 1.0
        for _ in range(3):
            g.record_success(eid)
        assert g.epistemic_score(eid) == 0.25

    def test_ghost_edge_has_zero_epistemic_value(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        eid = g.link(a, b)  # a never visited
        assert g.is_ghost(eid)
        assert g.epistemic_score(eid) == 0.0

    def test_stress_examples(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        eid = g.link(a, b)
        for _ in range(3):
            g.record_success(eid)
        g.record_failure(eid)
        assert g.stress(eid) == pytest.approx(0.6)  # 3*1/(4+1)
        g2 = make_graph(basis2)
        a2 = g2.add_vertex(np.array([0.0, 0.0]), 1.0)
        b2 = g2.add_vertex(np.array([10.0, 0.0]), 1.0)
        e2 = g2.link(a2, b2)
        g2.record_failure(e2)
        assert g2.stress(e2) == 0.0
        e3 = g2.link(b2, a2)
        g2.record_success(e3)
        assert g2.stress(e3) == 0.0

    def test_deletion_score(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        g.time = 100
        # unvisited, no out-edges: F_ghost = 0, M = 1, T_last = 100
        assert g.deletion_score(a) == pytest.approx(-2.0 / 11.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        g.link(a, b)
        # now every out-edge of the unvisited vertex is a ghost
        assert g.deletion_score(a) == 0.0

    def test_deletion_score_stale_vertices_more_deletable(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        g.mark_visited(a)
        g.mark_visited(b)
        g.time = 50
        g.mark_visited(b)  # b re-visited recently
        g.time = 400
        assert g.deletion_score(a) > g.deletion_score(b)


class TestStructure:
    def test_containing_vertices_sorted_smallest_first(self, basis2):
        g = make_graph(basis2)
        big = g.add_vertex(np.array([0.0, 0.0]), 2.0)
        small = g.add_vertex(np.array([0.1, 0.0]), 0.4)
        assert g.containing_vertices(np.array([0.1, 0.0])) == [small, big]
        assert g.containing_vertices(np.array([50.0, 0.0])) == []
        assert g.containing_vertices(np.array([0.0, 0.0]))[-1] == big

    def test_add_vertex_rejects_duplicate(self, basis2):
        g = make_graph(basis2)
        g.add_vertex(np.array([0.0, 0.0]), 1.0)
        assert g.add_vertex(np.array([0.0, 0.0]), 1.0) is None

    def test_sqrt2_ladder_not_redundant(self, basis2):
        g = make_graph(basis2)
        g.add_vertex(np.array([0.0, 0.0]), 1.0)
        assert g.add_vertex(np.array([0.0, 0.0]), np.sqrt(2)) is not None
        assert g.add_vertex(np.array([0.0, 0.0]), np.sqrt(2) / 2) is not None

    def test_add_vertex_rejects_nonpositive_radius(self, basis2):
        g = make_graph(basis2)
        with pytest.raises(ValueError):
            g.add_vertex(np.array([0.0, 0.0]), 0.0)

    def test_overlapping_vertices_linked_both_directions(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([1.5, 0.0]), 1.0)
        c = g.add_vertex(np.array([30.0, 0.0]), 1.0)
        assert g.edge_between(a, b) is not None
        assert g.edge_between(b, a) is not None
        assert g.edge_between(a, c) is None

    def test_link_idempotent_and_self_link_rejected(self, basis2):
        g = make_graph(basis2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        e1 = g.link(a, b)
        e2 = g.link(a, b)
        assert e1 == e2
        with pytest.raises(ValueError):
            g.link(a, a)

    def test_overlap_invariant_after_mutations(self, basis2):
        rng = np.random.default_rng(4)
        g = make_graph(basis2, cap=300)
        vids = [g.add_vertex(rng.uniform(-3, 3, size=2), rng.uniform(0.3, 1.2)) for _ in range(30)]
        vids = [v for v in vids if v is not None]
        for v in vids[:5]:
            g.mark_visited(v)
        eid = next(iter(g.edges))
        g.record_success(eid)
        g.record_failure(eid)
        g.refine_edge(eid, rng)
        g.extend_vertex(vids[0], lambda a, b: 1.0, rng)
        items = list(g.vertices.items())
        for i, (ia, va) in enumerate(items):
            for ib, vb in items[i + 1 :]:
                if np.linalg.norm(va.center - vb.center) <= va.radius + vb.radius:
                    assert g.edge_between(ia, ib) is not None
                    assert g.edge_between(ib, ia) is not None

    def test_cap_evicts_max_deletion_score(self, basis2):
        g = make_graph(basis2, cap=3)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        c = g.add_vertex(np.array([20.0, 0.0]), 1.0)
        g.mark_visited(a)
        g.mark_visited(c)
        g.link(b, a)  # b unvisited with an out-edge: ghost, score 0, most deletable
        d = g.add_vertex(np.array([30.0, 0.0]), 1.0)
        assert d is not None
        assert b not in g.vertices
        assert len(g.vertices) == 3

    def test_cap_eviction_respects_protected(self, basis2):
        g = make_graph(basis2, cap=2)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([10.0, 0.0]), 1.0)
        c = g.add_vertex(np.array([20.0, 0.0]), 1.0, protected=(a, b))
        assert c is None  # nothing evictable
        d = g.add_vertex(np.array([20.0, 0.0]), 1.0, protected=(a,))
        assert d is not None
        assert b not in g.vertices and a in g.vertices


class TestRefine:
    def test_children_have_scaled_radius_and_center_child(self, basis2):
        rng = np.random.default_rng(0)
        g = make_graph(basis2, cap=400)
        a = g.add_vertex(np.array([-5.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        eid = g.link(a, b)
        children = g.refine_edge(eid, rng)
        assert children
        for vid in children:
            assert g.vertices[vid].radius == pytest.approx(np.sqrt(2) / 2)
        assert any(
            np.allclose(g.vertices[vid].center, [0.0, 0.0]) for vid in children
        )
        # parent retained with its edges
        assert b in g.vertices
        assert g.edge_between(a, b) == eid

    def test_children_carry_no_statistics(self, basis2):
        rng = np.random.default_rng(1)
        g = make_graph(basis2, cap=400)
        a = g.add_vertex(np.array([-5.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        eid = g.link(a, b)
        for _ in range(5):
            g.record_success(eid)
        children = g.refine_edge(eid, rng)
        for vid in children:
            for e in g.out_edges(vid) + g.in_edges(vid):
                assert g.edges[e].n == 0

    def test_coverage_of_parent_ball(self, basis2):
        rng = np.random.default_rng(2)
        g = make_graph(basis2, cap=400)
        a = g.add_vertex(np.array([-5.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        eid = g.link(a, b)
        children = g.refine_edge(eid, rng)
        probe = np.random.default_rng(99)
        pts = probe.normal(size=(1000, 2))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        pts *= probe.uniform(size=(1000, 1)) ** 0.5
        covered = 0
        centers = np.array([g.vertices[v].center for v in children])
        radii = np.array([g.vertices[v].radius for v in children])
        for p in pts:
            if np.any(np.linalg.norm(centers - p, axis=1) <= radii):
                covered += 1
        assert covered >= 990


class TestExtend:
    def test_naive_open_space_adds_coarse_children_first(self, basis2):
        rng = np.random.default_rng(3)
        g = make_graph(basis2, cap=400)
        v = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        g.mark_visited(v)
        added = g.extend_vertex(v, lambda a, b: 1.0, rng)
        assert added
        assert g.vertices[added[0]].radius == pytest.approx(np.sqrt(2))

    def test_zero_probe_adds_only_finest_fill(self, basis2):
        rng = np.random.default_rng(5)
        g = make_graph(basis2, cap=400)
        v = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        g.mark_visited(v)
        added = g.extend_vertex(v, lambda a, b: 0.0, rng)
        assert added
        for vid in added:
            assert g.vertices[vid].radius == pytest.approx(np.sqrt(2) / 2)

    def test_misled_inverts_judgment(self, basis2):
        rng = np.random.default_rng(6)
        g = make_graph(basis2, cap=400)
        v = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        g.mark_visited(v)
        added = g.extend_vertex(v, lambda a, b: 1.0, rng, invert=True)
        for vid in added:
            assert g.vertices[vid].radius == pytest.approx(np.sqrt(2) / 2)

    def test_surrounded_vertex_extension_is_empty(self, basis2):
        rng = np.random.default_rng(7)
        g = make_graph(basis2, cap=600)
        v = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        g.mark_visited(v)
        g.extend_vertex(v, lambda a, b: 1.0, rng)
        again = g.extend_vertex(v, lambda a, b: 1.0, rng)
        andagain = g.extend_vertex(v, lambda a, b: 1.0, rng)
        assert len(again) + len(andagain) <= 6  # residual gap-fills only, then none

    def test_shell_coverage_after_naive_extension(self, basis2):
        rng = np.random.default_rng(8)
        g = make_graph(basis2, cap=600)
        v = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        g.mark_visited(v)
        g.extend_vertex(v, lambda a, b: 1.0, rng)
        probe = np.random.default_rng(123)
        dirs = probe.normal(size=(1000, 2))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        u = probe.uniform(size=1000)
        r = (u * (2.0**2 - 1.0) + 1.0) ** 0.5
        pts = dirs * r[:, None]
        covered = sum(1 for p in pts if g.containing_vertices(p))
        assert covered >= 950


class TestGrounding:
    def test_activation_is_gaussian_in_distance(self):
        basis = hark.sample_basis(2, 8192, 0.25, 2.0, 0.001, 1)
        g = Segraph(2, 50, basis)
        v = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        act0 = g.vertex_activation(np.array([0.0, 0.0]))[v]
        act1 = g.vertex_activation(np.array([1.0, 0.0]))[v]
        assert act0 == pytest.approx(1.0, abs=0.05)
        assert act1 == pytest.approx(np.exp(-1.0), abs=0.05)


class TestSnapshot:
    def test_round_trip(self, basis2):
        rng = np.random.default_rng(11)
        g = make_graph(basis2, cap=100)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([1.0, 0.0]), 0.8)
        g.mark_visited(a)
        eid = g.edge_between(a, b)
        g.record_success(eid)
        g.record_failure(eid)
        g.bump_upsilon(eid)
        g.set_manual_inhibited(eid, True)
        g.time = 42
        snap = g.snapshot()
        back = Segraph.from_snapshot(snap, basis2, g.cfg)
        assert back.snapshot() == snap
        e2 = back.edge_between(a, b)
        assert back.edges[e2].n_success == 1
        assert back.edges[e2].manual_inhibited
        assert back.vertices[a].visited and not back.vertices[b].visited

    def test_clone_is_independent(self, basis2):
        g = make_graph(basis2, cap=100)
        a = g.add_vertex(np.array([0.0, 0.0]), 1.0)
        b = g.add_vertex(np.array([1.0, 0.0]), 1.0)
        eid = g.edge_between(a, b)
        c = g.clone()
        c.record_failure(c.edge_between(a, b))
        c.set_manual_inhibited(c.edge_between(a, b), True)
        assert g.edges[eid].n_fail == 0
        assert not g.edges[eid].manual_inhibited
