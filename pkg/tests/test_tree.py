import numpy as np
import pytest

from oracles import brute_stretch, gen_eigs, grid, random_connected, random_tree
from sddsolve.graph import ReducibleError, WeightedGraph, laplacian_of
from sddsolve.tree import (SpanningTree, build_tree, compute_stretch, eta_of, find_splitter,
                           max_weight_tree, path_resistance)

STRATEGIES = ["max-weight", "shortest-path", "cluster", "auto"]


def _tree_edge_set(g, t):
    ids = t.edge_ids[t.edge_ids >= 0]
    return {(int(g.u[i]), int(g.v[i]), float(g.w[i])) for i in ids}


def test_max_weight_triangle():
    g = WeightedGraph.from_edges(3, [(0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)])
    t = build_tree(g, "max-weight")
    assert sorted(w for _, _, w in _tree_edge_set(g, t)) == [2.0, 3.0]


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_tree_input_returned(strategy):
    rng = np.random.default_rng(0)
    par = random_tree(15, rng)
    g = WeightedGraph.from_arrays(15, np.arange(1, 15), par[1:], rng.uniform(1, 2, 14))
    t = build_tree(g, strategy)
    assert len(_tree_edge_set(g, t)) == 14


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_grid_tree_valid(strategy):
    g = grid(3)
    t = build_tree(g, strategy, seed=1)
    edges = _tree_edge_set(g, t)
    assert len(edges) == 8
    # every tree edge is in the graph with identical weight
    for x in range(g.n):
        if x != t.root:
            i = t.edge_ids[x]
            assert {int(g.u[i]), int(g.v[i])} == {x, int(t.parent[x])}
            assert t.weight[x] == g.w[i]


def test_disconnected_rejected():
    g = WeightedGraph.from_edges(4, [(0, 1, 1), (2, 3, 1)])
    with pytest.raises(ReducibleError):
        build_tree(g, "auto")


def test_find_splitter_examples():
    path3 = SpanningTree(np.array([0, 0, 1]), np.ones(3), 0)
    assert find_splitter(path3) == 1
    star = SpanningTree(np.array([0, 0, 0, 0, 0, 0]), np.ones(6), 0)
    assert find_splitter(star) == 0
    path9 = SpanningTree(np.r_[0, np.arange(8)], np.ones(9), 0)
    assert find_splitter(path9) == 4


def _component_sizes_without(par, r):
    n = len(par)
    adj = [[] for _ in range(n)]
    for x in range(n):
        if par[x] != x:
            adj[x].append(par[x])
            adj[par[x]].append(x)
    seen = {r}
    sizes = []
    for s in adj[r]:
        stack = [s]
        seen.add(s)
        c = 0
        while stack:
            x = stack.pop()
            c += 1
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        sizes.append(c)
    return sizes


def test_find_splitter_exhaustive():
    rng = np.random.default_rng(3)
    for n in range(3, 51):
        par = random_tree(n, rng)
        t = SpanningTree(par, np.ones(n), 0)
        r = find_splitter(t)
        assert max(_component_sizes_without(par, r), default=0) <= 2 * n / 3


def test_path_resistance_examples():
    t = SpanningTree(np.array([0, 0, 1, 2]), np.array([0, 1.0, 2.0, 4.0]), 0)
    assert path_resistance(t, 0, 3) == pytest.approx(1.75)
    assert path_resistance(t, 2, 2) == 0.0
    t2 = SpanningTree(np.array([0, 0]), np.array([0, 2.0]), 0)
    assert path_resistance(t2, 0, 1) == 0.5


def test_stretch_examples():
    t = SpanningTree(np.array([0, 0, 1]), np.ones(3), 0)
    st = compute_stretch(t, (np.array([0, 0]), np.array([2, 1]), np.array([1.0, 1.0])))
    assert st.stretch[0] == pytest.approx(2.0)
    assert st.stretch[1] == 1.0
    t = SpanningTree(np.array([0, 0, 1]), np.array([0, 1.0, 2.0]), 0)
    st = compute_stretch(t, (np.array([0]), np.array([2]), np.array([2.0])))
    assert st.stretch[0] == pytest.approx(3.0)


def test_eta_examples():
    t = SpanningTree(np.array([0, 0, 1]), np.array([0, 1.0, 1.0]), 0)
    st = compute_stretch(t, (np.array([0, 0]), np.array([2, 2]), np.array([0.125, 1.5])))
    eta, total = eta_of(st)
    assert np.allclose(st.stretch, [0.25, 3.0])
    assert np.array_equal(eta, [1.0, 3.0]) and total == 4.0
    g = WeightedGraph.from_edges(3, [(0, 1, 5.0), (1, 2, 0.1)])
    tt = build_tree(g)
    st = compute_stretch(tt, g)
    assert np.array_equal(st.stretch, [1.0, 1.0]) and st.eta_total == 2


def test_tree_edges_stretch_exactly_one():
    rng = np.random.default_rng(4)
    g = random_connected(80, 200, rng)
    t = build_tree(g, "cluster", seed=0)
    st = compute_stretch(t, g)
    ids = t.edge_ids[t.edge_ids >= 0]
    assert np.all(st.stretch[ids] == 1.0)
    assert st.eta_total >= g.m


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_stretch_matches_brute_force(strategy):
    rng = np.random.default_rng(5)
    for _ in range(5):
        n = int(rng.integers(2, 120))
        g = random_connected(n, 2 * n, rng)
        t = build_tree(g, strategy, seed=2)
        tedges = [(x, int(t.parent[x]), float(t.weight[x])) for x in range(n) if x != t.root]
        ref = brute_stretch(tedges, n, g.u.tolist(), g.v.tolist(), g.w.tolist())
        assert np.allclose(compute_stretch(t, g).stretch, ref, rtol=1e-9, atol=0)


def test_tree_sandwich():
    rng = np.random.default_rng(6)
    for _ in range(5):
        g = random_connected(40, 60, rng)
        t = max_weight_tree(g)
        ids = t.edge_ids[t.edge_ids >= 0]
        ev = gen_eigs(laplacian_of(g), laplacian_of(g.subgraph(ids)))
        assert ev.min() >= 1 - 1e-6
        assert ev.max() <= compute_stretch(t, g).stretch.sum() + 1e-6


def test_rerooted_and_from_edges():
    t = SpanningTree.from_edges(4, [0, 1, 1], [1, 2, 3], [1.0, 2.0, 3.0], root=0)
    r = t.rerooted(2)
    assert r.root == 2 and r.parent[2] == 2
    assert path_resistance(r, 0, 3) == pytest.approx(path_resistance(t, 0, 3))
    with pytest.raises(ValueError):
        SpanningTree(np.array([1, 0]), np.ones(2), 0)


def test_cluster_beats_max_weight_on_grid():
    g = grid(30, np.random.default_rng(7))
    a = compute_stretch(build_tree(g, "auto"), g).eta_total
    b = compute_stretch(build_tree(g, "max-weight"), g).eta_total
    assert a <= b
