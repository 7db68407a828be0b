"""Covering a tree by small subtrees that each see a bounded share of edge mass.

Given a spanning tree ``T``, edges ``E`` with nonnegative masses ``eta`` and
a target count ``t``, :func:`decompose` returns at most ``t`` vertex sets,
each inducing a subtree of ``T``, pairwise overlapping in at most one
vertex, together with a map ``rho`` sending every edge to the one or two
sets holding its endpoints.  Every set with more than one vertex is charged
at most ``4/t`` of the total mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _kernels
from .tree import SpanningTree


@dataclass(frozen=True, eq=False)
class TreeDecomposition:
    """Vertex sets ``W_0..W_{h-1}`` and the edge map ``rho``.

    Attributes
    ----------
    label : ndarray
        ``label[x]`` is the set that owns vertex ``x``.  An edge ``(u, v)``
        maps to ``{label[u], label[v]}``.
    extra_set, extra_vertex : ndarray
        Additional memberships: ``extra_vertex[k]`` also belongs to set
        ``extra_set[k]`` (it was the attachment point of that set).
    h : int
        Number of sets.
    rho : ndarray, shape (m, 2)
        Set indices per edge, sorted; equal entries mean a single set.
    phi_threshold : float or Fraction
        Mass at which the sweep closes a set.
    """

    label: np.ndarray
    extra_set: np.ndarray
    extra_vertex: np.ndarray
    h: int
    rho: np.ndarray
    phi_threshold: object

    @cached_property
    def sets(self) -> list[np.ndarray]:
        """Materialized vertex sets, each sorted."""
        members = [[] for _ in range(self.h)]
        for x, s in enumerate(self.label.tolist()):
            members[s].append(x)
        for s, x in zip(self.extra_set.tolist(), self.extra_vertex.tolist()):
            members[s].append(x)
        return [np.unique(np.asarray(m, np.int64)) for m in members]

    def rho_sets(self, e) -> frozenset:
        return frozenset(self.rho[e].tolist())


def _exact_kind(eta):
    eta = np.asarray(eta)
    if eta.dtype == object:
        return "fraction"
    if np.issubdtype(eta.dtype, np.integer):
        return "int"
    return "float"


def decompose(t_tree: SpanningTree, u, v, eta, t) -> TreeDecomposition:
    """Split ``t_tree`` into at most ``t`` subtrees by edge mass.

    Parameters
    ----------
    t_tree : SpanningTree
        The traversal starts from its root; children are visited in
        ascending id order.
    u, v : array of int
        Endpoints of the edges of ``E``.
    eta : array
        Nonnegative mass per edge.  Integer arrays are handled in exact
        integer arithmetic and object arrays of :class:`fractions.Fraction`
        are scaled to integers first; floats are compared in floating point.
    t : int
        Target number of sets, ``1 < t <= sum(eta)``.
    """
    u = np.asarray(u, np.int64)
    v = np.asarray(v, np.int64)
    n = t_tree.n
    kind = _exact_kind(eta)
    if kind == "fraction":
        den = math.lcm(*(Fraction(x).denominator for x in eta))
        mass = np.array([int(Fraction(x) * den) for x in eta], np.int64)
    elif kind == "int":
        mass = np.asarray(eta, np.int64)
    else:
        mass = np.asarray(eta, np.float64)
    if np.any(mass < 0):
        raise ValueError("edge masses must be nonnegative")
    total = mass.sum()
    if not (1 < t <= total):
        raise ValueError(f"t must satisfy 1 < t <= total mass ({total}), got {t}")
    vmass = np.zeros(n, mass.dtype)
    np.add.at(vmass, u, mass)
    np.add.at(vmass, v, mass)
    cptr, child = t_tree.children
    if kind == "float":
        tt = float(t)
    else:
        if int(t) != t:
            raise ValueError("t must be an integer for exact masses")
        tt = np.int64(t)
    label, es, ev, h = _kernels.decompose_pass(n, t_tree.root, t_tree.parent, cptr, child, vmass, tt, total)
    rho = np.sort(np.stack([label[u], label[v]], axis=1), axis=1) if len(u) else np.zeros((0, 2), np.int64)
    if kind == "float":
        phi = 2 * float(total) / t
    else:
        phi = Fraction(2 * int(total), int(t))
        if kind == "fraction":
            phi = phi / den
    return TreeDecomposition(label, es, ev, int(h), rho, phi)
