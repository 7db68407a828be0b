"""Spanning trees: construction, splitters, path resistances and stretch."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, dijkstra, minimum_spanning_tree

from . import _kernels
from .graph import ReducibleError, WeightedGraph, connected_components


class TreeStrategy(str, enum.Enum):
    MAX_WEIGHT = "max-weight"
    SHORTEST_PATH = "shortest-path"
    CLUSTER = "cluster"
    AUTO = "auto"


class SpanningTree:
    """Rooted spanning tree stored by parent pointers.

    Parameters
    ----------
    parent : array of int
        ``parent[v]`` for every vertex; the root is its own parent.
    weight : array of float
        Weight of the edge from ``v`` to its parent (ignored at the root).
    root : int
    edge_ids : array of int, optional
        For every vertex, the id in the source graph of the edge to its
        parent (-1 at the root).
    """

    def __init__(self, parent, weight, root, edge_ids=None):
        self.parent = np.ascontiguousarray(parent, dtype=np.int64)
        self.weight = np.ascontiguousarray(weight, dtype=np.float64)
        self.root = int(root)
        self.n = len(self.parent)
        if self.weight.shape != (self.n,):
            raise ValueError("weight array has wrong length")
        if not 0 <= self.root < self.n or self.parent[self.root] != self.root:
            raise ValueError("root must be its own parent")
        self.weight[self.root] = 0.0
        if edge_ids is None:
            edge_ids = -np.ones(self.n, np.int64)
        self.edge_ids = np.ascontiguousarray(edge_ids, dtype=np.int64)
        nonroot = np.arange(self.n) != self.root
        if np.any(self.weight[nonroot] <= 0):
            raise ValueError("tree edge weights must be positive")
        if len(self.order) != self.n:
            raise ValueError("parent pointers do not form a spanning tree")

    # -- construction helpers -------------------------------------------
    @classmethod
    def from_edges(cls, n, u, v, w, root=0, edge_ids=None) -> "SpanningTree":
        """Orient an undirected edge list (n-1 edges) away from ``root``."""
        u = np.asarray(u, np.int64)
        v = np.asarray(v, np.int64)
        w = np.asarray(w, float)
        if len(u) != n - 1:
            raise ValueError(f"a spanning tree on {n} vertices needs {n - 1} edges, got {len(u)}")
        ids = np.arange(len(u)) if edge_ids is None else np.asarray(edge_ids, np.int64)
        slot = np.arange(1, len(u) + 1)
        a = sp.csr_matrix((np.concatenate([slot, slot]),
                           (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n))
        order, pred = breadth_first_order(a, root, directed=False, return_predecessors=True)
        if len(order) != n:
            raise ReducibleError("edges do not span the vertex set")
        parent = pred.astype(np.int64)
        parent[root] = root
        nonroot = order[1:]
        eid = np.asarray(a[nonroot, parent[nonroot]]).ravel().astype(np.int64) - 1
        weight = np.zeros(n)
        weight[nonroot] = w[eid]
        out_ids = -np.ones(n, np.int64)
        out_ids[nonroot] = ids[eid]
        return cls(parent, weight, root, out_ids if edge_ids is not None else None)

    @classmethod
    def from_graph_edges(cls, g: WeightedGraph, edge_ids, root=0) -> "SpanningTree":
        edge_ids = np.asarray(edge_ids, np.int64)
        return cls.from_edges(g.n, g.u[edge_ids], g.v[edge_ids], g.w[edge_ids], root, edge_ids)

    def rerooted(self, root) -> "SpanningTree":
        u, v, w = self.tree_edges()
        ids = self.edge_ids[np.arange(self.n) != self.root]
        t = SpanningTree.from_edges(self.n, u, v, w, root, ids)
        if np.all(self.edge_ids < 0):
            t.edge_ids[:] = -1
        return t

    # -- derived structure ----------------------------------------------
    @cached_property
    def order(self) -> np.ndarray:
        """Vertices in breadth-first order from the root."""
        nonroot = np.flatnonzero(np.arange(self.n) != self.root)
        a = sp.csr_matrix((np.ones(len(nonroot)), (self.parent[nonroot], nonroot)),
                          shape=(self.n, self.n))
        return breadth_first_order(a, self.root, directed=True, return_predecessors=False)

    @cached_property
    def children(self):
        """``(ptr, child)`` CSR of children, ascending vertex id within each parent."""
        nonroot = np.flatnonzero(np.arange(self.n) != self.root)
        par = self.parent[nonroot]
        idx = np.lexsort((nonroot, par))
        child = nonroot[idx]
        ptr = np.zeros(self.n + 1, np.int64)
        np.add.at(ptr, par + 1, 1)
        return np.cumsum(ptr), child

    @cached_property
    def depth(self) -> np.ndarray:
        return _kernels.accumulate_down(self.order, self.parent, np.ones(self.n, np.int64))

    @cached_property
    def root_resistance(self) -> np.ndarray:
        """Resistance of the tree path from each vertex to the root."""
        res = np.zeros(self.n)
        nz = self.weight > 0
        res[nz] = 1.0 / self.weight[nz]
        return _kernels.accumulate_down(self.order, self.parent, res)

    def tree_edges(self):
        """``(u, v, w)`` arrays of the tree edges, child first."""
        x = np.flatnonzero(np.arange(self.n) != self.root)
        return x, self.parent[x], self.weight[x]

    def as_graph(self) -> WeightedGraph:
        u, v, w = self.tree_edges()
        return WeightedGraph.from_arrays(self.n, u, v, w)

    @cached_property
    def _csr(self):
        u, v, w = self.tree_edges()
        a = sp.csr_matrix((np.concatenate([1 / w, 1 / w]),
                           (np.concatenate([u, v]), np.concatenate([v, u]))),
                          shape=(self.n, self.n))
        a.sort_indices()
        return a

    @cached_property
    def centroids(self) -> "CentroidTables":
        """Recursive centroid splitting; shared by stretch and ultra-sparsification."""
        a = self._csr
        nlev = max(1, int(math.floor(math.log2(max(self.n, 1)))) + 2)
        cent, dist, par, clevel, cparent = _kernels.centroid_tables(
            a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data, self.n, nlev)
        used = int(clevel.max(initial=0)) + 1
        return CentroidTables(cent[:used], dist[:used], par[:used], clevel, cparent)

    def __repr__(self):
        return f"SpanningTree(n={self.n}, root={self.root})"


@dataclass(frozen=True, eq=False)
class CentroidTables:
    cent: np.ndarray
    dist: np.ndarray
    par: np.ndarray
    clevel: np.ndarray
    cparent: np.ndarray

    def separate(self, u, v):
        """For each pair: level and centroid where the tree path is split, and its resistance."""
        u = np.ascontiguousarray(u, np.int64)
        v = np.ascontiguousarray(v, np.int64)
        return _kernels.separating_centroid(self.cent, self.dist, self.clevel, u, v)


@dataclass(frozen=True, eq=False)
class StretchTable:
    """Per-edge stretch with respect to a tree, and ``eta = max(stretch, 1)``."""

    stretch: np.ndarray
    eta: np.ndarray
    eta_total: float
    # splitting data reused by the ultra-sparsifier
    level: np.ndarray | None = None
    centroid: np.ndarray | None = None


# ---------------------------------------------------------------------------
# tree construction
# ---------------------------------------------------------------------------

def _require_connected(g: WeightedGraph):
    if g.n == 0:
        raise ValueError("empty graph")
    if len(connected_components(g)) != 1:
        raise ReducibleError("graph is disconnected")


def _tree_from_pred(g: WeightedGraph, pred, root) -> SpanningTree:
    x = np.flatnonzero(np.arange(g.n) != root)
    ids = g.find_edges(x, pred[x])
    return SpanningTree.from_graph_edges(g, ids, root)


def max_weight_tree(g: WeightedGraph, root=None) -> SpanningTree:
    """Maximum-weight spanning tree (a spanning tree depends only on weight order)."""
    _require_connected(g)
    a = sp.csr_matrix((1.0 / g.w, (g.u, g.v)), shape=(g.n, g.n))
    mst = minimum_spanning_tree(a).tocoo()
    ids = g.find_edges(mst.row, mst.col)
    t = SpanningTree.from_graph_edges(g, ids, 0)
    if root is None:
        root = find_splitter(t)
    return t.rerooted(root) if root != t.root else t


def shortest_path_tree(g: WeightedGraph, root=None) -> SpanningTree:
    """Shortest-path tree in the resistance metric.

    The root defaults to a splitter of the maximum-weight tree, which puts
    it near the middle of the graph.
    """
    _require_connected(g)
    if root is None:
        root = find_splitter(max_weight_tree(g, root=0))
    lengths = g.adjacency.copy()
    lengths.data = 1.0 / lengths.data
    _, pred = dijkstra(lengths, directed=False, indices=root, return_predecessors=True)
    return _tree_from_pred(g, pred, root)


def cluster_tree(g: WeightedGraph, seed=0, beta_quantile=0.5, beta_scale=0.25) -> SpanningTree:
    """Iterated clustering in the resistance metric (AKPW flavour).

    Each round grows clusters from exponentially shifted start times
    (one Dijkstra from a virtual source), keeps the cluster shortest-path
    trees, contracts the clusters and repeats on the quotient graph.  The
    union of the kept edges is a spanning tree.
    """
    _require_connected(g)
    rng = np.random.default_rng(seed)
    n = g.n
    # current quotient graph: edges point at original edge ids
    eu, ev, eid = g.u.copy(), g.v.copy(), np.arange(g.m)
    nodes = n
    kept = []
    while nodes > 1:
        length = 1.0 / g.w[eid]
        # collapse parallel quotient edges to the heaviest representative
        lo, hi = np.minimum(eu, ev), np.maximum(eu, ev)
        order = np.lexsort((length, hi, lo))
        lo, hi, eid, length = lo[order], hi[order], eid[order], length[order]
        first = np.ones(len(lo), bool)
        first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
        lo, hi, eid, length = lo[first], hi[first], eid[first], length[first]
        beta = beta_scale / np.quantile(length, beta_quantile)
        shift = rng.exponential(1.0 / beta, size=nodes)
        start = shift.max() - shift
        # virtual source is vertex `nodes`
        base = length.min() * 1e-3
        rows = np.concatenate([lo, hi, np.full(nodes, nodes)])
        cols = np.concatenate([hi, lo, np.arange(nodes)])
        data = np.concatenate([length, length, start + base])
        a = sp.csr_matrix((data, (rows, cols)), shape=(nodes + 1, nodes + 1))
        dist, pred = dijkstra(a, directed=True, indices=nodes, return_predecessors=True)
        # cluster center of each node = the node hanging off the virtual source
        center = np.full(nodes, -1)
        for x in np.argsort(dist[:nodes], kind="stable"):
            p = pred[x]
            center[x] = x if p == nodes else center[p]
        inner = np.flatnonzero(pred[:nodes] != nodes)
        if len(inner) == 0:
            # every node started its own cluster; contract the shortest edge
            pick = int(np.argmin(length))
            kept.append(eid[pick:pick + 1])
            center = np.arange(nodes)
            center[hi[pick]] = lo[pick]
        else:
            pl = np.minimum(inner, pred[inner])
            ph = np.maximum(inner, pred[inner])
            pos = np.searchsorted(lo * (nodes + 1) + hi, pl * (nodes + 1) + ph)
            kept.append(eid[pos])
        # relabel clusters
        uniq, newlab = np.unique(center, return_inverse=True)
        nodes = len(uniq)
        cu, cv = newlab[lo], newlab[hi]
        keep = cu != cv
        eu, ev, eid = cu[keep], cv[keep], eid[keep]
    ids = np.concatenate(kept) if kept else np.zeros(0, np.int64)
    t = SpanningTree.from_graph_edges(g, ids, 0)
    return t.rerooted(find_splitter(t))


def build_tree(g: WeightedGraph, strategy=TreeStrategy.AUTO, seed=0) -> SpanningTree:
    """Spanning tree of a connected graph by the named strategy.

    ``auto`` builds the clustered, shortest-path and maximum-weight trees
    and keeps the one with the smallest total ``eta`` over the graph's edges
    (ties go to the earlier one in that order).
    """
    strategy = TreeStrategy(strategy)
    if g.m == g.n - 1:
        _require_connected(g)
        t = SpanningTree.from_graph_edges(g, np.arange(g.m), 0)
        return t.rerooted(find_splitter(t))
    if strategy == TreeStrategy.MAX_WEIGHT:
        return max_weight_tree(g)
    if strategy == TreeStrategy.SHORTEST_PATH:
        return shortest_path_tree(g)
    if strategy == TreeStrategy.CLUSTER:
        return cluster_tree(g, seed=seed)
    cands = [cluster_tree(g, seed=seed), shortest_path_tree(g), max_weight_tree(g)]
    totals = [compute_stretch(c, g).eta_total for c in cands]
    return cands[int(np.argmin(totals))]


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------

def find_splitter(t: SpanningTree) -> int:
    """Vertex whose removal leaves pieces of at most half the vertices.

    This is the tree centroid (smallest id on ties), which is in
    particular a two-thirds splitter.
    """
    c = t.centroids
    return int(np.flatnonzero(c.clevel == 0)[0])


def path_resistance(t: SpanningTree, u, v) -> float:
    """Sum of edge resistances along the tree path from ``u`` to ``v``."""
    if u == v:
        return 0.0
    _, _, r = t.centroids.separate(np.array([u]), np.array([v]))
    return float(r[0])


def compute_stretch(t: SpanningTree, edges) -> StretchTable:
    """Stretch of every edge with respect to ``t``.

    ``edges`` is a :class:`WeightedGraph` or a ``(u, v, w)`` triple of
    arrays.  Each tree path is split at the centroid that first separates
    its endpoints, and its resistance is the sum of the two distances to
    that centroid.
    """
    if isinstance(edges, WeightedGraph):
        u, v, w = edges.u, edges.v, edges.w
    else:
        u, v, w = (np.asarray(a) for a in edges)
    u = np.asarray(u, np.int64)
    v = np.asarray(v, np.int64)
    w = np.asarray(w, float)
    lev, cen, r = t.centroids.separate(u, v)
    s = w * r
    # a tree edge's path is the edge itself; avoid w * (1/w) rounding
    on_tree = t.parent[u] == v
    s[on_tree] = w[on_tree] / t.weight[u[on_tree]]
    on_tree = t.parent[v] == u
    s[on_tree] = w[on_tree] / t.weight[v[on_tree]]
    eta = np.maximum(s, 1.0)
    return StretchTable(s, eta, float(eta.sum()), lev, cen)


def eta_of(s: StretchTable):
    """Per-edge ``eta`` and its total."""
    return s.eta, s.eta_total
