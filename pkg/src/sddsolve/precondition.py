"""Subgraph preconditioners: augmented trees and ultra-sparsifiers.

Both constructions start from a spanning tree, cut it into subtrees with
:func:`~sddsolve.decompose.decompose` and add back one representative
("bridge") edge per pair of adjacent subtrees.  The ultra-sparsifier also
splits the work at tree centroids and thins the bridges with a pluggable
sparsifier.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .decompose import TreeDecomposition, decompose
from .graph import WeightedGraph
from .tree import SpanningTree, TreeStrategy, build_tree, compute_stretch

log = logging.getLogger(__name__)

#: the constant in the ultra-sparsifier's budget formula
ULTRA_T_CONSTANT = 517.0


# ---------------------------------------------------------------------------
# sparsifier plugins
# ---------------------------------------------------------------------------

SparsifierPlugin = Callable[[WeightedGraph, float, np.random.Generator], WeightedGraph]
_SPARSIFIERS: dict[str, SparsifierPlugin] = {}


def register_sparsifier(name: str, fn: SparsifierPlugin):
    """Make ``fn(H, p, rng) -> H_s`` available under ``name``."""
    _SPARSIFIERS[name] = fn


def get_sparsifier(name_or_fn) -> SparsifierPlugin:
    if callable(name_or_fn):
        return name_or_fn
    try:
        return _SPARSIFIERS[name_or_fn]
    except KeyError:
        raise ValueError(f"unknown sparsifier {name_or_fn!r}; known: {sorted(_SPARSIFIERS)}") from None


def identity_sparsifier(h: WeightedGraph, p=0.5, rng=None) -> WeightedGraph:
    return h


def empty_sparsifier(h: WeightedGraph, p=0.5, rng=None) -> WeightedGraph:
    return WeightedGraph.from_edges(h.n, [])


def default_sparsifier(h: WeightedGraph, p=0.5, rng=None, q=4.0) -> WeightedGraph:
    """Sample edges by tree stretch, keeping a spanning forest.

    Off-forest edges are kept with probability proportional to their
    stretch over a maximum-weight spanning forest (an upper bound on
    effective-resistance leverage) and reweighted by the inverse
    probability.  Reweighting is then capped so that at every vertex the
    sum of ``w_s/w`` over kept edges is at most twice the degree.  Graphs
    with at most ``q log(n/p)`` edges per vertex are returned unchanged.
    """
    rng = np.random.default_rng(rng)
    deg = h.degrees()
    active = int(np.count_nonzero(deg))
    if active == 0:
        return h
    budget = q * active * math.log(max(active, 2) / p)
    if h.m <= budget:
        return h
    # spanning forest made connected through a virtual vertex
    from .graph import connected_components
    comps = connected_components(h)
    hub = h.n
    reps = np.array([c[0] for c in comps], np.int64)
    aug = WeightedGraph.from_arrays(h.n + 1, np.concatenate([h.u, reps]),
                                    np.concatenate([h.v, np.full(len(reps), hub)]),
                                    np.concatenate([h.w, np.ones(len(reps))]))
    tree = build_tree(aug, TreeStrategy.MAX_WEIGHT)
    real = aug.find_edges(h.u, h.v)
    s = compute_stretch(tree, (h.u, h.v, h.w)).stretch
    on_tree = np.zeros(aug.m, bool)
    tid = tree.edge_ids[tree.edge_ids >= 0]
    on_tree[tid] = True
    forest = on_tree[real]
    off = ~forest
    n_off = max(budget - np.count_nonzero(forest), 1.0)
    prob = np.ones(h.m)
    tot = s[off].sum()
    if tot > 0:
        prob[off] = np.minimum(1.0, n_off * s[off] / tot)
    keep = forest | (rng.random(h.m) < prob)
    factor = np.where(keep, 1.0 / prob, 0.0)
    # cap the excess reweighting at each vertex by its degree
    excess = np.where(keep, factor - 1.0, 0.0)
    load = np.zeros(h.n)
    np.add.at(load, h.u, excess)
    np.add.at(load, h.v, excess)
    ratio = np.ones(h.n)
    over = load > deg
    ratio[over] = deg[over] / load[over]
    factor = np.where(keep, 1.0 + excess * np.minimum(ratio[h.u], ratio[h.v]), 0.0)
    return WeightedGraph(h.n, h.u[keep], h.v[keep], h.w[keep] * factor[keep])


register_sparsifier("default", default_sparsifier)
register_sparsifier("identity", identity_sparsifier)
register_sparsifier("none", empty_sparsifier)


# ---------------------------------------------------------------------------
# bridges between decomposition pieces
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BridgeSelection:
    """One representative edge per pair of adjacent pieces.

    ``pairs[k] = (i, j)`` with ``i < j``; ``sigma[k]`` indexes the edge
    list that was passed in; ``omega[k]`` is the total weight between the
    two pieces and ``psi[k] = omega[k] / w[sigma[k]]``.
    """

    pairs: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray
    psi: np.ndarray

    def __len__(self):
        return len(self.sigma)


def select_bridges(d: TreeDecomposition, u, v, w, eta) -> BridgeSelection:
    """For each pair of pieces, the edge maximizing ``w/eta`` between them.

    Ties go to the lexicographically least edge by (smaller endpoint,
    larger endpoint), so the result does not depend on input order.
    """
    u = np.asarray(u, np.int64)
    v = np.asarray(v, np.int64)
    w = np.asarray(w, float)
    eta = np.asarray(eta, float)
    cross = np.flatnonzero(d.rho[:, 0] != d.rho[:, 1])
    if len(cross) == 0:
        z = np.zeros(0, np.int64)
        return BridgeSelection(np.zeros((0, 2), np.int64), z, np.zeros(0), np.zeros(0))
    i, j = d.rho[cross, 0], d.rho[cross, 1]
    lo = np.minimum(u[cross], v[cross])
    hi = np.maximum(u[cross], v[cross])
    ratio = w[cross] / eta[cross]
    order = np.lexsort((hi, lo, -ratio, j, i))
    i, j = i[order], j[order]
    new = np.ones(len(order), bool)
    new[1:] = (i[1:] != i[:-1]) | (j[1:] != j[:-1])
    starts = np.flatnonzero(new)
    sigma = cross[order[starts]]
    omega = np.add.reduceat(w[cross[order]], starts)
    psi = omega / w[sigma]
    # a pair with a single edge has psi exactly one
    psi = np.maximum(psi, 1.0)
    return BridgeSelection(np.stack([i[starts], j[starts]], axis=1), sigma, omega, psi)


# ---------------------------------------------------------------------------
# tree augmentation
# ---------------------------------------------------------------------------

def _tree_edge_mask(tree: SpanningTree, u, v, w) -> np.ndarray:
    """Edges of the list that coincide with a tree edge (one per tree edge)."""
    mask = np.zeros(len(u), bool)
    used = np.zeros(tree.n, bool)
    for e in range(len(u)):
        a, b = int(u[e]), int(v[e])
        for c, p in ((a, b), (b, a)):
            if c != tree.root and tree.parent[c] == p and not used[c] and tree.weight[c] == w[e]:
                used[c] = mask[e] = True
                break
    return mask


def augment_tree(tree: SpanningTree, u, v, w, t: int, eta=None) -> np.ndarray:
    """Bridge edges to add to ``tree``: indices into the edge list ``(u, v, w)``.

    With ``eta = max(stretch, 1)`` over the edge list, the returned set has
    at most ``t**2 / 2`` edges, contains no tree edge, and the edge list is
    dominated by ``12 eta(E)/t`` times the augmented tree.  Only the
    off-tree edges are decomposed; when their total ``eta`` is at most
    ``t`` all of them are returned.
    """
    u = np.asarray(u, np.int64)
    v = np.asarray(v, np.int64)
    w = np.asarray(w, float)
    if eta is None:
        eta = compute_stretch(tree, (u, v, w)).eta
    eta = np.asarray(eta, float)
    total = float(np.sum(eta))
    if not (1 < t <= total):
        raise ValueError(f"t must satisfy 1 < t <= eta(E) = {total:.6g}, got {t}")
    off = np.flatnonzero(~_tree_edge_mask(tree, u, v, w))
    if len(off) == 0:
        return off
    if float(np.sum(eta[off])) <= t:
        return off
    d = decompose(tree, u[off], v[off], eta[off], int(t))
    return np.sort(off[select_bridges(d, u[off], v[off], w[off], eta[off]).sigma])


def ultra_simple(g: WeightedGraph, t: int, strategy=TreeStrategy.AUTO, seed=0,
                 tree: SpanningTree | None = None) -> WeightedGraph:
    """Low-stretch spanning tree plus bridges between ``t`` tree pieces.

    Returns ``g`` itself when ``t >= n``.  The result is a subgraph of ``g``
    with the original weights.
    """
    if t >= g.n:
        return g
    if tree is None:
        tree = build_tree(g, strategy, seed=seed)
    st = compute_stretch(tree, g)
    t = int(min(t, math.floor(st.eta_total)))
    tids = tree.edge_ids[tree.edge_ids >= 0]
    if t <= 1:
        return g.subgraph(tids)
    f = augment_tree(tree, g.u, g.v, g.w, t, eta=st.eta)
    return g.subgraph(np.concatenate([tids, f]))


# ---------------------------------------------------------------------------
# ultra-sparsification
# ---------------------------------------------------------------------------

def _branch_of(tree: SpanningTree) -> np.ndarray:
    """For each vertex, the child of the root whose subtree holds it (root: itself)."""
    b = np.arange(tree.n)
    r = tree.root
    for x in tree.order[1:]:
        p = tree.parent[x]
        b[x] = x if p == r else b[p]
    return b


def rooted_ultra_sparsify(u, v, w, tree: SpanningTree, t, p, *, stretch=None,
                          sparsifier="default", rng=None, check=True, stats=None) -> np.ndarray:
    """Sparsify edges whose tree paths all pass through the root.

    Parameters
    ----------
    u, v, w : arrays
        The edges.  Every tree path between endpoints must contain
        ``tree.root``.
    tree : SpanningTree
        Rooted at the common vertex.
    t : int
        Number of pieces to cut the tree into.
    p : float
        Failure probability handed to the sparsifier.
    stretch : array, optional
        Precomputed stretch of the edges over ``tree``.

    Returns
    -------
    ndarray
        Indices of the kept edges (original weights).
    """
    u = np.asarray(u, np.int64)
    v = np.asarray(v, np.int64)
    w = np.asarray(w, float)
    m = len(u)
    if check and m:
        br = _branch_of(tree)
        r = tree.root
        bad = (br[u] == br[v]) & (u != r) & (v != r)
        if np.any(bad):
            raise ValueError("an edge's tree path avoids the root")
    if stretch is None:
        stretch = compute_stretch(tree, (u, v, w)).stretch
    eta = np.maximum(stretch, 1.0)
    if t >= m:
        return np.arange(m)
    eta_total = float(eta.sum())
    d = decompose(tree, u, v, eta, int(t))
    br = select_bridges(d, u, v, w, eta)
    if len(br) == 0:
        return np.zeros(0, np.int64)
    phi = br.psi * eta[br.sigma]
    nb = max(1, math.ceil(math.log2(eta_total)))
    bucket = np.where(phi <= 2, 1, np.ceil(np.log2(np.maximum(phi, 1.0)))).astype(np.int64)
    bucket = np.clip(bucket, 1, nb)
    plugin = get_sparsifier(sparsifier)
    kept = []
    for b in np.unique(bucket):
        sel = np.flatnonzero(bucket == b)
        hb = WeightedGraph(d.h, br.pairs[sel, 0], br.pairs[sel, 1], br.omega[sel])
        hs = plugin(hb, p, rng)
        if hs.m == 0:
            continue
        pos = hb.find_edges(hs.u, hs.v)
        if np.any(pos < 0):
            raise ValueError("sparsifier returned an edge outside its input")
        kept.append(br.sigma[sel[pos]])
    if stats is not None:
        stats.setdefault("rooted_calls", 0)
        stats["rooted_calls"] += 1
        stats.setdefault("bridges", 0)
        stats["bridges"] += len(br)
    return np.unique(np.concatenate(kept)) if kept else np.zeros(0, np.int64)


def _local_tree(tree: SpanningTree, level: int, r: int, verts: np.ndarray) -> tuple[SpanningTree, np.ndarray]:
    """The component of ``r`` at a centroid level, relabeled to ``0..k-1`` and rooted at ``r``."""
    c = tree.centroids
    pos = -np.ones(tree.n, np.int64)
    pos[verts] = np.arange(len(verts))
    gpar = c.par[level, verts].astype(np.int64)
    root = int(pos[r])
    parent = np.where(gpar < 0, root, pos[np.maximum(gpar, 0)])
    # weight of the tree edge between x and its parent in this rooting
    up = tree.parent[verts] == np.maximum(gpar, 0)
    wx = np.where(up, tree.weight[verts], tree.weight[np.maximum(gpar, 0)])
    wx[root] = 0.0
    return SpanningTree(parent, wx, root), pos


def tree_ultra_sparsify(u, v, w, t, tree: SpanningTree, p, *, sparsifier="default", rng=None,
                        stats=None, record=None) -> np.ndarray:
    """Sparsify off-tree edges by splitting the tree at centroids.

    Each edge is handled at the centroid that first separates its
    endpoints; the budget ``t`` is divided among centroids in proportion
    to the ``eta`` mass they handle.  Returns indices of kept edges.

    ``record``, when a list, receives ``(centroid, edge indices, t_r)`` for
    every centroid that handles at least one edge.
    """
    u = np.asarray(u, np.int64)
    v = np.asarray(v, np.int64)
    w = np.asarray(w, float)
    m = len(u)
    if m == 0:
        return np.zeros(0, np.int64)
    st = compute_stretch(tree, (u, v, w))
    eta = st.eta
    cent = st.centroid
    c = tree.centroids
    n = tree.n
    # mass handled at each centroid, then summed over centroid subtrees
    here = np.zeros(n)
    np.add.at(here, cent, eta)
    below = here.copy()
    order = np.argsort(c.clevel, kind="stable")[::-1]
    for x in order:
        pc = c.cparent[x]
        if pc >= 0:
            below[pc] += below[x]
    # each piece passes its budget down in proportion to mass
    budget = np.zeros(n)
    for x in order[::-1]:
        pc = c.cparent[x]
        if pc < 0:
            budget[x] = t
        elif below[pc] > 0:
            budget[x] = budget[pc] * below[x] / below[pc]
    grp = np.argsort(cent, kind="stable")
    cuts = np.searchsorted(cent[grp], np.arange(n + 1))
    kept = []
    # vertices of each centroid component, grouped per level
    level_groups = {}
    for r in np.flatnonzero(here > 0):
        ids = grp[cuts[r]:cuts[r + 1]]
        tr = math.ceil(budget[r] * here[r] / below[r])
        if record is not None:
            record.append((int(r), ids, tr))
        if tr <= 1:
            continue
        lev = int(c.clevel[r])
        if lev not in level_groups:
            o = np.argsort(c.cent[lev], kind="stable")
            level_groups[lev] = (o, np.searchsorted(c.cent[lev][o], np.arange(n + 1)))
        o, cc = level_groups[lev]
        verts = np.sort(o[cc[r]:cc[r + 1]])
        lt, pos = _local_tree(tree, lev, int(r), verts)
        sel = rooted_ultra_sparsify(pos[u[ids]], pos[v[ids]], w[ids], lt, tr, p,
                                    stretch=st.stretch[ids], sparsifier=sparsifier, rng=rng,
                                    check=False, stats=stats)
        kept.append(ids[sel])
    return np.unique(np.concatenate(kept)) if kept else np.zeros(0, np.int64)


@dataclass(eq=False)
class UltraSparsifier:
    """Spanning tree plus a few extra edges of ``graph``.

    ``tree_ids`` and ``extra_ids`` are edge ids of ``graph``.
    """

    graph: WeightedGraph
    tree: SpanningTree
    tree_ids: np.ndarray
    extra_ids: np.ndarray
    k: float
    stats: dict = field(default_factory=dict)

    @property
    def edge_ids(self) -> np.ndarray:
        return np.union1d(self.tree_ids, self.extra_ids)

    def subgraph(self) -> WeightedGraph:
        return self.graph.subgraph(self.edge_ids)


def ultra_sparsify(g: WeightedGraph, k: float, *, strategy=TreeStrategy.AUTO, seed=0,
                   sparsifier="default", t_constant=ULTRA_T_CONSTANT,
                   tree: SpanningTree | None = None) -> UltraSparsifier:
    """Tree plus sparsified off-tree edges aiming at ``U <= G <= k U``.

    The budget is ``t = c max(1, log2 eta) ceil(log_{3/2} n) eta / k`` with
    ``c = t_constant`` and ``eta`` the total of ``max(stretch, 1)`` over
    all edges.  When ``t >= eta`` every edge is kept.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = np.random.default_rng(seed)
    if tree is None:
        tree = build_tree(g, strategy, seed=seed)
    tids = np.sort(tree.edge_ids[tree.edge_ids >= 0])
    st = compute_stretch(tree, g)
    eta = st.eta_total
    n = g.n
    off = np.setdiff1d(np.arange(g.m), tids)
    logn = math.ceil(math.log(n) / math.log(1.5)) if n > 1 else 1
    t = t_constant * max(1.0, math.log2(eta)) * logn * eta / k
    p = 1.0 / (2 * max(1, math.ceil(math.log2(eta))) * n * n)
    stats = {"eta": eta, "t": t, "p": p, "seed": seed, "off_tree": len(off)}
    if t >= eta or len(off) == 0:
        extra = off
        stats["kept_all"] = True
    else:
        sel = tree_ultra_sparsify(g.u[off], g.v[off], g.w[off], t, tree, p,
                                  sparsifier=sparsifier, rng=rng, stats=stats)
        extra = off[sel]
        stats["kept_all"] = False
    stats["extra"] = len(extra)
    return UltraSparsifier(g, tree, tids, np.asarray(extra, np.int64), k, stats)
