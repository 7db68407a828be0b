"""Cholesky-type factorizations of SDDM matrices.

:func:`partial_cholesky` eliminates every vertex of degree at most two
(in graph terms) and leaves a reduced matrix whose vertices all have
degree three or more.  :func:`ldl_base` factors a small matrix completely,
allowing one zero pivot for singular Laplacians.  Both factors apply the
pseudo-inverse by forward and backward substitution.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp

from . import _kernels
from .graph import (Kind, NotSDDError, ReducibleError, SparseSymMatrix, classify,
                    sddm_parts)


def project(b, on: bool) -> np.ndarray:
    """Remove the mean of ``b`` when ``on`` (projection orthogonal to all-ones)."""
    b = np.asarray(b, dtype=float)
    if on and len(b):
        return b - b.mean(axis=0)
    return b


def _require_irreducible_sddm(a: SparseSymMatrix):
    cls = classify(a)
    if not cls.is_sddm:
        raise NotSDDError("matrix is not SDDM0")
    if not cls.irreducible:
        raise ReducibleError("matrix is reducible")
    return cls


@dataclass(frozen=True, eq=False)
class PartialCholFactor:
    """``B = P L diag(I, A1) L^T P^T`` after eliminating low-degree vertices.

    Attributes
    ----------
    perm : ndarray
        New position ``k`` holds original index ``perm[k]``; eliminated
        vertices come first in elimination order, then the vertices of
        ``reduced`` in ascending order.
    nelim : int
        Number of eliminated vertices (columns of ``L`` that differ from
        the identity).
    piv : ndarray
        Diagonal of ``L`` on the eliminated columns (square roots of the
        pivots).
    lptr, lidx, lval : ndarray
        Below-diagonal entries of the eliminated columns in CSC layout, row
        indices in the new order.
    reduced : SparseSymMatrix
        The remaining matrix ``A1`` (may have dimension 0).
    projection : bool
        True for Laplacians: ``B`` is singular with nullspace the constants.
    null_pivot : bool
        True when the elimination ran to the end and the final pivot is
        zero; the last column then sits over a zero block entry.
    """

    n: int
    perm: np.ndarray
    nelim: int
    piv: np.ndarray
    lptr: np.ndarray
    lidx: np.ndarray
    lval: np.ndarray
    reduced: SparseSymMatrix
    projection: bool
    null_pivot: bool = False

    @property
    def eliminated_count(self) -> int:
        return self.nelim

    @property
    def nnz_l(self) -> int:
        return self.n + len(self.lval)

    @property
    def reduced_index(self) -> np.ndarray:
        """Original indices of the rows of ``reduced``."""
        return self.perm[self.nelim:]

    def l_matrix(self) -> sp.csc_matrix:
        """``L`` in the permuted order, as a sparse matrix."""
        n, k = self.n, self.nelim
        rows = np.concatenate([np.arange(n), self.lidx])
        cols = np.concatenate([np.arange(n), np.repeat(np.arange(k), np.diff(self.lptr))])
        diag = np.ones(n)
        diag[:k] = self.piv
        vals = np.concatenate([diag, self.lval])
        return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))

    def reconstruct(self) -> np.ndarray:
        """Dense ``P L C L^T P^T``; for tests."""
        lm = self.l_matrix().toarray()
        c = np.eye(self.n)
        if self.null_pivot:
            c[self.nelim - 1, self.nelim - 1] = 0.0
        c[self.nelim:, self.nelim:] = self.reduced.to_dense()
        b = lm @ c @ lm.T
        out = np.empty_like(b)
        out[np.ix_(self.perm, self.perm)] = b
        return out


def partial_cholesky(b: SparseSymMatrix) -> PartialCholFactor:
    """Eliminate vertices with at most two neighbours until none remain.

    The queue is first-in first-out, seeded in ascending vertex order.
    Eliminating a vertex of degree two joins its neighbours by an edge of
    conductance ``w_a w_b / d`` (merged with an existing edge) and moves the
    vertex's excess diagonal onto them.
    """
    cls = _require_irreducible_sddm(b)
    g, excess = sddm_parts(b)
    n = g.n
    laplacian = cls.kind == Kind.LAPLACIAN
    if laplacian:
        excess = np.zeros(n)
    excess = excess.astype(float).copy()
    adj = [dict() for _ in range(n)]
    for x, y, w in zip(g.u.tolist(), g.v.tolist(), g.w.tolist()):
        adj[x][y] = w
        adj[y][x] = w
    alive = np.ones(n, bool)
    queued = np.zeros(n, bool)
    q = deque()
    for x in range(n):
        if len(adj[x]) <= 2:
            q.append(x)
            queued[x] = True
    order = []
    piv = []
    cols = []
    remaining = n
    null_pivot = False
    scale = float(np.max(np.abs(b.diag))) if n else 1.0
    while q:
        v = q.popleft()
        queued[v] = False
        if not alive[v] or len(adj[v]) > 2:
            continue
        nb = adj[v]
        d = excess[v] + sum(nb.values())
        if len(nb) == 0:
            if remaining > 1:
                raise ReducibleError("matrix is reducible")
            if d <= 1e-12 * scale:
                # the constant vector's slot
                null_pivot = True
                d = 1.0
        elif d <= 0:
            raise ReducibleError("zero pivot before the end of elimination")
        s = np.sqrt(d)
        order.append(v)
        piv.append(s)
        cols.append([(x, -w / s) for x, w in nb.items()])
        items = list(nb.items())
        for x, w in items:
            del adj[x][v]
            excess[x] += w * excess[v] / d
        if len(items) == 2:
            (a, wa), (c, wc) = items
            fill = wa * wc / d
            adj[a][c] = adj[a].get(c, 0.0) + fill
            adj[c][a] = adj[c].get(a, 0.0) + fill
        adj[v] = {}
        alive[v] = False
        remaining -= 1
        for x, _ in items:
            if alive[x] and not queued[x] and len(adj[x]) <= 2:
                q.append(x)
                queued[x] = True
    rest = np.flatnonzero(alive)
    perm = np.concatenate([np.asarray(order, np.int64), rest])
    pos = np.empty(n, np.int64)
    pos[perm] = np.arange(n)
    k = len(order)
    lptr = np.zeros(k + 1, np.int64)
    lptr[1:] = np.cumsum([len(c) for c in cols])
    lidx = np.array([pos[x] for c in cols for x, _ in c], np.int64)
    lval = np.array([val for c in cols for _, val in c], float)
    # reduced matrix on the survivors, ascending order
    rpos = -np.ones(n, np.int64)
    rpos[rest] = np.arange(len(rest))
    ru, rv, rw = [], [], []
    for x in rest.tolist():
        for y, w in adj[x].items():
            if x < y:
                ru.append(rpos[x])
                rv.append(rpos[y])
                rw.append(-w)
    nr = len(rest)
    diag = excess[rest].copy()
    if ru:
        np.add.at(diag, np.asarray(ru), -np.asarray(rw))
        np.add.at(diag, np.asarray(rv), -np.asarray(rw))
    ru = np.asarray(ru, np.int64)
    rv = np.asarray(rv, np.int64)
    rw = np.asarray(rw, float)
    o = np.lexsort((rv, ru))
    reduced = SparseSymMatrix(nr, diag, ru[o], rv[o], rw[o])
    return PartialCholFactor(n, perm, k, np.asarray(piv, float), lptr, lidx, lval,
                             reduced, laplacian, null_pivot)


def _check_len(n, b):
    b = np.asarray(b, dtype=float)
    if b.shape[0] != n:
        raise ValueError(f"dimension mismatch: factor is {n}, vector is {b.shape[0]}")
    return b


def factored_down(f: PartialCholFactor, b) -> np.ndarray:
    """``L^{-1} P^{-1} Pi b`` in the permuted order."""
    y = project(_check_len(f.n, b), f.projection)[f.perm].copy()
    _kernels.forward_sub(f.nelim, f.piv, f.lptr, f.lidx, f.lval, y)
    if f.null_pivot:
        y[f.nelim - 1] = 0.0
    return y


def factored_up(f: PartialCholFactor, y) -> np.ndarray:
    """``Pi P^{-T} L^{-T} y`` for ``y`` in the permuted order."""
    y = np.array(y, dtype=float)
    if f.null_pivot:
        y[f.nelim - 1] = 0.0
    _kernels.backward_sub(f.nelim, f.piv, f.lptr, f.lidx, f.lval, y)
    x = np.empty_like(y)
    x[f.perm] = y
    return project(x, f.projection)


def apply_factored_pinv(f: PartialCholFactor, inner: Callable | None, b) -> np.ndarray:
    """Apply ``Pi P^{-T} L^{-T} diag(I, inner) L^{-1} P^{-1} Pi`` to ``b``.

    ``inner`` applies (an approximation of) the pseudo-inverse of
    ``f.reduced``; it is not called when the reduced matrix is empty.
    """
    y = factored_down(f, b)
    if f.nelim < f.n:
        if inner is None:
            raise ValueError("a solver for the reduced matrix is required")
        y[f.nelim:] = inner(y[f.nelim:])
    return factored_up(f, y)


# ---------------------------------------------------------------------------
# complete factorization of small matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BaseFactor:
    """``A = L D L^T`` with ``D`` the identity except a trailing zero when singular."""

    l: np.ndarray
    d: np.ndarray
    projection: bool

    @property
    def n(self) -> int:
        return len(self.d)


#: dense complete factorizations are refused above this size
BASE_DENSE_CAP = 6000


def ldl_base(a: SparseSymMatrix) -> BaseFactor:
    """Dense Cholesky factor, with a null last pivot for Laplacians.

    For a Laplacian the leading ``n-1`` block is positive definite; its
    Cholesky factor is extended by the row ``c = L11^{-1} a`` and a unit
    diagonal entry sitting over ``D[n-1] = 0``.
    """
    cls = _require_irreducible_sddm(a)
    n = a.n
    if n > BASE_DENSE_CAP:
        raise ValueError(f"dense factorization refused for n = {n} > {BASE_DENSE_CAP}")
    dense = a.to_dense()
    d = np.ones(n)
    if cls.kind != Kind.LAPLACIAN:
        return BaseFactor(sl.cholesky(dense, lower=True), d, False)
    l = np.zeros((n, n))
    if n > 1:
        l11 = sl.cholesky(dense[:-1, :-1], lower=True)
        l[:-1, :-1] = l11
        l[-1, :-1] = sl.solve_triangular(l11, dense[:-1, -1], lower=True)
    l[-1, -1] = 1.0
    d[-1] = 0.0
    return BaseFactor(l, d, True)


def apply_base_pinv(f: BaseFactor, b) -> np.ndarray:
    """``Pi L^{-T} D L^{-1} Pi b``."""
    b = project(_check_len(f.n, b), f.projection)
    if f.n == 0:
        return b.copy()
    y = sl.solve_triangular(f.l, b, lower=True)
    y = (f.d * y.T).T
    x = sl.solve_triangular(f.l, y, lower=True, trans="T")
    return project(x, f.projection)
