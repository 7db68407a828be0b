"""Test graph families."""

from __future__ import annotations

import numpy as np

from .graph import WeightedGraph, connected_components

FAMILIES = ("grid2d", "path", "random-regular", "random-weighted")


def path_graph(n, w=None) -> WeightedGraph:
    w = np.ones(n - 1) if w is None else w
    return WeightedGraph.from_arrays(n, np.arange(n - 1), np.arange(1, n), w)


def cycle_graph(n, w=None) -> WeightedGraph:
    w = np.ones(n) if w is None else w
    return WeightedGraph.from_arrays(n, np.arange(n), (np.arange(n) + 1) % n, w)


def star_graph(leaves, w=None) -> WeightedGraph:
    w = np.ones(leaves) if w is None else w
    return WeightedGraph.from_arrays(leaves + 1, np.zeros(leaves, np.int64), np.arange(1, leaves + 1), w)


def complete_graph(n) -> WeightedGraph:
    u, v = np.triu_indices(n, 1)
    return WeightedGraph.from_arrays(n, u, v, np.ones(len(u)))


def grid2d(rows, cols=None, rng=None, low=1.0, high=1.0) -> WeightedGraph:
    """``rows x cols`` grid; weights uniform in ``[low, high]``."""
    cols = rows if cols is None else cols
    idx = np.arange(rows * cols).reshape(rows, cols)
    u = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    v = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    if low == high:
        w = np.full(len(u), float(low))
    else:
        w = np.random.default_rng(rng).uniform(low, high, len(u))
    return WeightedGraph.from_arrays(rows * cols, u, v, w)


def random_connected(n, extra, rng=None, low=0.1, high=10.0) -> WeightedGraph:
    """Random spanning tree plus ``extra`` random edges, log-uniform weights."""
    rng = np.random.default_rng(rng)
    p = rng.permutation(n)
    u = [p[1:]]
    v = [p[rng.integers(0, np.arange(1, n))]] if n > 1 else [np.zeros(0, np.int64)]
    a = rng.integers(0, n, extra)
    b = rng.integers(0, n, extra)
    keep = a != b
    u.append(a[keep])
    v.append(b[keep])
    u = np.concatenate(u)
    v = np.concatenate(v)
    w = np.exp(rng.uniform(np.log(low), np.log(high), len(u)))
    return WeightedGraph.from_arrays(n, u, v, w)


def random_regular(n, d=3, rng=None, tries=20) -> WeightedGraph:
    """Connected random ``d``-regular graph with unit weights."""
    import networkx as nx

    rng = np.random.default_rng(rng)
    for _ in range(tries):
        h = nx.random_regular_graph(d, n, seed=int(rng.integers(2**31)))
        e = np.asarray(h.edges(), dtype=np.int64).reshape(-1, 2)
        g = WeightedGraph.from_arrays(n, e[:, 0], e[:, 1], np.ones(len(e)))
        if len(connected_components(g)) == 1:
            return g
    raise RuntimeError("could not draw a connected regular graph")


def family(name: str, size: int, rng=None) -> WeightedGraph:
    """Instance of a benchmark family; ``size`` is the side for grids, else ``n``."""
    if name == "grid2d":
        return grid2d(size, rng=rng, low=1.0, high=10.0)
    if name == "path":
        return path_graph(size, np.random.default_rng(rng).uniform(1.0, 10.0, size - 1))
    if name == "random-regular":
        return random_regular(size, 3, rng)
    if name == "random-weighted":
        return random_connected(size, 2 * size, rng)
    raise ValueError(f"unknown family {name!r}; known: {', '.join(FAMILIES)}")
