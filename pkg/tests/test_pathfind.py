from collections import deque

import numpy as np
import pytest

from segsearch import hark, pathfind
from segsearch.segraph import Segraph


def chain_graph(n=4, spacing=10.0):
    """Disjoint fields linked a -> b -> c -> ... manually."""
    basis = hark.sample_basis(2, 128, 0.5, 2.0, 0.001, 0)
    g = Segraph(2, 100, basis)
    vids = [g.add_vertex(np.array([i * spacing, 0.0]), 1.0) for i in range(n)]
    eids = [g.link(vids[i], vids[i + 1]) for i in range(n - 1)]
    for v in vids:
        g.mark_visited(v)
    return g, vids, eids


def front(gm, vids):
    m = np.zeros(gm.size, dtype=bool)
    for v in vids:
        m[gm.index[v]] = True
    return m


def bfs_dist(adj, src, dst):
    """Hop count over adj[j, i] = i->j, or None."""
    if src == dst:
        return 0
    n = adj.shape[0]
    seen = [False] * n
    seen[src] = True
    q = deque([(src, 0)])
    while q:
        u, k = q.popleft()
        for v in np.nonzero(adj[:, u])[0]:
            if v == dst:
                return k + 1
            if not seen[v]:
                seen[v] = True
                q.append((int(v), k + 1))
    return None


class TestBuildMatrix:
    def test_zero_threshold_full_adjacency(self):
        g, vids, eids = chain_graph()
        gm = pathfind.build_matrix(g, 0.0, eids[-1])
        for i in range(3):
            assert gm.adj[gm.index[vids[i + 1]], gm.index[vids[i]]]
        assert gm.adj.sum() == 3

    def test_high_threshold_keeps_only_goal_edge(self):
        g, vids, eids = chain_graph()
        gm = pathfind.build_matrix(g, 1e9, eids[0])
        assert gm.adj.sum() == 1
        assert gm.adj[gm.index[vids[1]], gm.index[vids[0]]]

    def test_manual_inhibition_excluded(self):
        g, vids, eids = chain_graph()
        g.set_manual_inhibited(eids[1], True)
        gm = pathfind.build_matrix(g, 0.0, eids[-1])
        assert not gm.adj[gm.index[vids[2]], gm.index[vids[1]]]

    def test_ghost_edges_excluded_unless_goal(self):
        g, vids, eids = chain_graph()
        g.vertices[vids[1]].visited = False
        g._geom_dirty = True
        gm = pathfind.build_matrix(g, 0.0, eids[-1])
        assert not gm.adj[gm.index[vids[2]], gm.index[vids[1]]]
        gm2 = pathfind.build_matrix(g, 0.0, eids[1])
        assert gm2.adj[gm2.index[vids[2]], gm2.index[vids[1]]]


class TestFindMid:
    def test_chain_hand_trace(self):
        # forward front expands first and is checked first, so the meeting
        # set on a -> b -> c -> d from {a} to {d} is {c}
        g, vids, eids = chain_graph(4)
        gm = pathfind.build_matrix(g, 0.0, eids[-1])
        mid = pathfind.find_mid(front(gm, [vids[0]]), front(gm, [vids[3]]), gm)
        assert set(gm.ids[np.nonzero(mid)[0]]) == {vids[2]}

    def test_initial_overlap_returned(self):
        g, vids, eids = chain_graph(3)
        gm = pathfind.build_matrix(g, 0.0, eids[-1])
        mid = pathfind.find_mid(front(gm, [vids[1]]), front(gm, [vids[1], vids[2]]), gm)
        assert mid is not None and set(gm.ids[np.nonzero(mid)[0]]) == {vids[1]}

    def test_disconnected_returns_none(self):
        g, vids, eids = chain_graph(4)
        g.set_manual_inhibited(eids[1], True)
        gm = pathfind.build_matrix(g, 0.0, eids[0])
        assert pathfind.find_mid(front(gm, [vids[0]]), front(gm, [vids[3]]), gm) is None


class TestFindPath:
    def test_goal_edge_out_of_current_vertex(self):
        g, vids, eids = chain_graph(4)
        gm = pathfind.build_matrix(g, 0.0, eids[0])
        rng = np.random.default_rng(0)
        assert pathfind.find_path(vids[0], eids[0], gm, rng) == [vids[1]]

    def test_chain_path(self):
        g, vids, eids = chain_graph(4)
        gm = pathfind.build_matrix(g, 0.0, eids[2])
        rng = np.random.default_rng(0)
        assert pathfind.find_path(vids[0], eids[2], gm, rng) == [vids[1], vids[2], vids[3]]

    def test_no_usable_out_edge(self):
        g, vids, eids = chain_graph(4)
        g.set_manual_inhibited(eids[0], True)
        gm = pathfind.build_matrix(g, 0.0, eids[2])
        rng = np.random.default_rng(0)
        assert pathfind.find_path(vids[0], eids[2], gm, rng) is None

    def test_determinism(self):
        adj, gm = random_matrix(40, 0.15, seed=5)
        rng_a, rng_b = np.random.default_rng(7), np.random.default_rng(7)
        pa = pathfind.find_path_to_vertex(0, 33, gm, rng_a)
        pb = pathfind.find_path_to_vertex(0, 33, gm, rng_b)
        assert pa == pb


def random_matrix(n, density, seed):
    rng = np.random.default_rng(seed)
    adj = rng.uniform(size=(n, n)) < density
    np.fill_diagonal(adj, False)
    ids = np.arange(n, dtype=np.int64)
    gm = pathfind.GraphMatrix(adj, ids, {i: i for i in range(n)}, None)
    return adj, gm


class TestOracle:
    @pytest.mark.parametrize("seed", range(40))
    def test_agrees_with_bfs(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 120))
        density = float(rng.uniform(0.02, 0.2))
        adj, gm = random_matrix(n, density, seed=seed + 1000)
        pick = np.random.default_rng(seed + 2000)
        for _ in range(4):
            s, t = int(pick.integers(n)), int(pick.integers(n))
            want = bfs_dist(adj, s, t)
            got = pathfind.find_path_to_vertex(s, t, gm, pick)
            if want is None:
                assert got is None
            else:
                assert got is not None
                assert len(got) == want
                prev = s
                for v in got:
                    assert adj[gm.index[v], gm.index[prev]] or prev == v
                    prev = v
                assert len(set(got)) == len(got)

    def test_first_hop_arrives_early(self):
        # first path vertex after O(shortest length) expansions
        adj, gm = random_matrix(150, 0.03, seed=3)
        rng = np.random.default_rng(0)
        checked = 0
        for s in range(0, 150, 7):
            for t in range(3, 150, 11):
                want = bfs_dist(adj, s, t)
                if want is None or want < 4:
                    continue
                steps = list(pathfind.hop_steps(s, t, gm, np.random.default_rng(1)))
                if not steps:
                    continue
                first_exp = steps[0][1]
                total_exp = steps[-1][1]
                assert first_exp <= 4 * want + 4
                assert first_exp < total_exp or len(steps) == 1
                checked += 1
        assert checked > 5
