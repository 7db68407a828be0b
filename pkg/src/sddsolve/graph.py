"""Weighted graphs, symmetric sparse matrices and the SDD matrix classes.

A Laplacian matrix and a positively weighted undirected graph carry the
same information; most of the package works on the graph side and converts
to matrices only to multiply or to hand results back to the caller.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

#: relative slack of the weak diagonal dominance test
DOMINANCE_RTOL = 1e-12


class NotSDDError(ValueError):
    """Raised when a matrix is outside the class an operation requires."""


class ReducibleError(ValueError):
    """Raised when an operation needs an irreducible (connected) input."""


def _as_index(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


def _as_float(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph on vertices ``0..n-1`` with positive edge weights.

    Edges are stored canonically: ``u < v`` and sorted lexicographically by
    ``(u, v)``, so an edge id is its rank in that order.  Use
    :meth:`from_edges` to build a graph from arbitrary input; the raw
    constructor only validates.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _as_index(self.u))
        object.__setattr__(self, "v", _as_index(self.v))
        object.__setattr__(self, "w", _as_float(self.w))
        u, v, w = self.u, self.v, self.w
        if not (u.shape == v.shape == w.shape and u.ndim == 1):
            raise ValueError("edge arrays must be one-dimensional and equally long")
        if self.n < 0:
            raise ValueError("negative vertex count")
        if len(u):
            if u.min() < 0 or v.max() >= self.n:
                raise ValueError("vertex id out of range")
            if np.any(u >= v):
                raise ValueError("edges must satisfy u < v (no self-loops)")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValueError("edge weights must be finite and positive")
            key = u * self.n + v
            if np.any(np.diff(key) <= 0):
                raise ValueError("edges must be sorted and free of duplicates")

    @classmethod
    def from_arrays(cls, n, u, v, w) -> "WeightedGraph":
        """Canonicalize edge arrays: orient, sort, sum duplicates, drop zeros.

        Negative weights are rejected.
        """
        u = _as_index(u)
        v = _as_index(v)
        w = _as_float(w)
        if np.any(w < 0):
            raise ValueError("negative edge weight")
        if np.any(u == v):
            raise ValueError("self-loop")
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        keep = w != 0
        lo, hi, w = lo[keep], hi[keep], w[keep]
        if len(lo) == 0:
            return cls(n, lo, hi, w)
        key = lo * n + hi
        uniq, inv = np.unique(key, return_inverse=True)
        ws = np.zeros(len(uniq))
        np.add.at(ws, inv, w)
        return cls(n, uniq // n, uniq % n, ws)

    @classmethod
    def from_edges(cls, n, edges) -> "WeightedGraph":
        """Build from an iterable of ``(u, v, w)`` triples."""
        edges = list(edges)
        if not edges:
            return cls(n, np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
        u, v, w = zip(*edges)
        return cls.from_arrays(n, u, v, w)

    @property
    def m(self) -> int:
        return len(self.w)

    def edges(self):
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric CSR adjacency holding the edge weights."""
        a = sp.coo_matrix(
            (np.concatenate([self.w, self.w]),
             (np.concatenate([self.u, self.v]), np.concatenate([self.v, self.u]))),
            shape=(self.n, self.n))
        return a.tocsr()

    @cached_property
    def edge_index(self) -> sp.csr_matrix:
        """CSR matrix mapping ``(u, v)`` to ``edge id + 1`` in both orientations."""
        ids = np.arange(1, self.m + 1, dtype=np.int64)
        a = sp.coo_matrix(
            (np.concatenate([ids, ids]),
             (np.concatenate([self.u, self.v]), np.concatenate([self.v, self.u]))),
            shape=(self.n, self.n))
        return a.tocsr()

    def find_edges(self, a, b) -> np.ndarray:
        """Edge ids of the pairs ``(a[i], b[i])``; -1 where no edge exists."""
        a = _as_index(a)
        b = _as_index(b)
        if len(a) == 0:
            return np.zeros(0, np.int64)
        return np.asarray(self.edge_index[a, b]).ravel().astype(np.int64) - 1

    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.u, self.v]), minlength=self.n)

    def weighted_degrees(self) -> np.ndarray:
        d = np.zeros(self.n)
        np.add.at(d, self.u, self.w)
        np.add.at(d, self.v, self.w)
        return d

    def subgraph(self, edge_ids) -> "WeightedGraph":
        """Same vertex set, only the given edges, original weights."""
        ids = np.unique(_as_index(edge_ids))
        return WeightedGraph(self.n, self.u[ids], self.v[ids], self.w[ids])

    def laplacian(self) -> "SparseSymMatrix":
        return laplacian_of(self)

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class SparseSymMatrix:
    """Symmetric matrix kept as a diagonal plus its strict upper triangle."""

    n: int
    diag: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diag", _as_float(self.diag))
        object.__setattr__(self, "rows", _as_index(self.rows))
        object.__setattr__(self, "cols", _as_index(self.cols))
        object.__setattr__(self, "vals", _as_float(self.vals))
        if self.diag.shape != (self.n,):
            raise ValueError("diagonal has wrong length")
        if len(self.rows) and np.any(self.rows >= self.cols):
            raise ValueError("off-diagonal entries must be stored with i < j")

    @classmethod
    def from_coo(cls, n, i, j, v) -> "SparseSymMatrix":
        """Build from coordinate triples given in either triangle.

        Duplicate entries are summed.  When a pair is supplied in both
        orientations the two values must agree; a pair given in only one
        orientation is mirrored.
        """
        i = _as_index(i)
        j = _as_index(j)
        v = _as_float(v)
        if len(i) and (min(i.min(), j.min()) < 0 or max(i.max(), j.max()) >= n):
            raise ValueError("index out of range")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite entry")
        d = np.zeros(n)
        on = i == j
        np.add.at(d, i[on], v[on])
        i, j, v = i[~on], j[~on], v[~on]
        upper = i < j
        up = _coalesce(n, i[upper], j[upper], v[upper])
        lo = _coalesce(n, j[~upper], i[~upper], v[~upper])
        if len(up[0]) and len(lo[0]):
            ku = up[0] * n + up[1]
            kl = lo[0] * n + lo[1]
            common, iu, il = np.intersect1d(ku, kl, return_indices=True)
            if len(common):
                a, b = up[2][iu], lo[2][il]
                if not np.allclose(a, b, rtol=1e-12, atol=0):
                    raise ValueError("matrix is not symmetric")
                keep_lo = np.ones(len(kl), bool)
                keep_lo[il] = False
                lo = tuple(x[keep_lo] for x in lo)
        r = np.concatenate([up[0], lo[0]])
        c = np.concatenate([up[1], lo[1]])
        val = np.concatenate([up[2], lo[2]])
        r, c, val = _coalesce(n, r, c, val)
        nz = val != 0
        return cls(n, d, r[nz], c[nz], val[nz])

    @classmethod
    def from_dense(cls, a) -> "SparseSymMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        if not np.allclose(a, a.T, rtol=1e-12, atol=0):
            raise ValueError("matrix is not symmetric")
        r, c = np.nonzero(np.triu(a, 1))
        return cls(a.shape[0], np.diag(a).copy(), r, c, a[r, c])

    @classmethod
    def from_sddm_parts(cls, g: WeightedGraph, excess) -> "SparseSymMatrix":
        """Matrix ``L_G + diag(excess)``."""
        lap = laplacian_of(g)
        return cls(g.n, lap.diag + _as_float(excess), lap.rows, lap.cols, lap.vals)

    @property
    def noff(self) -> int:
        """Number of nonzero off-diagonal entries in the upper triangle."""
        return len(self.vals)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        n = self.n
        r = np.concatenate([self.rows, self.cols, np.arange(n)])
        c = np.concatenate([self.cols, self.rows, np.arange(n)])
        v = np.concatenate([self.vals, self.vals, self.diag])
        return sp.csr_matrix((v, (r, c)), shape=(n, n))

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def matvec(self, x) -> np.ndarray:
        return apply(self, x)

    def __matmul__(self, x):
        return self.csr @ x

    def submatrix(self, idx) -> "SparseSymMatrix":
        """Principal submatrix on the (sorted) index set ``idx``."""
        idx = np.sort(_as_index(idx))
        pos = -np.ones(self.n, np.int64)
        pos[idx] = np.arange(len(idx))
        keep = (pos[self.rows] >= 0) & (pos[self.cols] >= 0)
        return SparseSymMatrix(len(idx), self.diag[idx], pos[self.rows[keep]],
                               pos[self.cols[keep]], self.vals[keep])

    def permuted(self, perm) -> "SparseSymMatrix":
        """Symmetric permutation: new index ``k`` is old index ``perm[k]``."""
        perm = _as_index(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        return SparseSymMatrix.from_coo(self.n, np.concatenate([inv[self.rows], np.arange(self.n)]),
                                        np.concatenate([inv[self.cols], np.arange(self.n)]),
                                        np.concatenate([self.vals, self.diag[perm]]))

    def __repr__(self):
        return f"SparseSymMatrix(n={self.n}, noff={self.noff})"


def _coalesce(n, r, c, v):
    if len(r) == 0:
        return r, c, v
    key = r * n + c
    uniq, inv = np.unique(key, return_inverse=True)
    s = np.zeros(len(uniq))
    np.add.at(s, inv, v)
    return uniq // n, uniq % n, s


class Kind(enum.IntEnum):
    """Matrix classes ordered from most to least specific."""

    LAPLACIAN = 0
    SDDM0 = 1
    SDD0 = 2
    NOT_SDD = 3


@dataclass(frozen=True)
class MatrixClass:
    kind: Kind
    irreducible: bool
    singular: bool

    @property
    def is_sdd(self) -> bool:
        return self.kind <= Kind.SDD0

    @property
    def is_sddm(self) -> bool:
        return self.kind <= Kind.SDDM0


def laplacian_of(g: WeightedGraph) -> SparseSymMatrix:
    """Laplacian ``L_G``: weighted degrees on the diagonal, ``-w`` off it."""
    return SparseSymMatrix(g.n, g.weighted_degrees(), g.u.copy(), g.v.copy(), -g.w)


def apply(a: SparseSymMatrix, x) -> np.ndarray:
    """Return ``A @ x``."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != a.n:
        raise ValueError(f"dimension mismatch: matrix is {a.n}, vector is {x.shape[0]}")
    return a.csr @ x


def quadratic_form(g: WeightedGraph, x) -> float:
    """``x^T L_G x`` evaluated edge by edge."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"dimension mismatch: graph has {g.n} vertices, vector is {x.shape}")
    d = x[g.u] - x[g.v]
    return float(np.dot(g.w, d * d))


def _row_abs_offdiag(a: SparseSymMatrix) -> np.ndarray:
    s = np.zeros(a.n)
    av = np.abs(a.vals)
    np.add.at(s, a.rows, av)
    np.add.at(s, a.cols, av)
    return s


def _dominance_slack(a: SparseSymMatrix):
    """Per-row ``A_ii - sum |A_ij|`` and the tolerance it is compared with."""
    off = _row_abs_offdiag(a)
    scale = np.maximum(np.abs(a.diag), off)
    return a.diag - off, DOMINANCE_RTOL * np.maximum(scale, np.finfo(float).tiny)


def structure_components(a: SparseSymMatrix) -> list[np.ndarray]:
    """Connected components of the nonzero structure, each sorted, ordered by first vertex."""
    adj = sp.coo_matrix((np.ones(a.noff), (a.rows, a.cols)), shape=(a.n, a.n))
    k, labels = _cc(adj, directed=False)
    return _group_labels(labels, k)


def _group_labels(labels, k) -> list[np.ndarray]:
    order = np.argsort(labels, kind="stable")
    cuts = np.searchsorted(labels[order], np.arange(1, k))
    groups = np.split(order, cuts)
    groups.sort(key=lambda g: g[0])
    return groups


def connected_components(g: WeightedGraph) -> list[np.ndarray]:
    """Vertex sets of the connected components of ``g``."""
    if g.n == 0:
        return []
    k, labels = _cc(g.adjacency, directed=False)
    return _group_labels(labels, k)


def _balanced_signing(a: SparseSymMatrix) -> bool:
    """True when some +-1 diagonal S makes every off-diagonal of S A S nonpositive."""
    sign = np.zeros(a.n, np.int8)
    adj = sp.coo_matrix((np.sign(a.vals), (a.rows, a.cols)), shape=(a.n, a.n))
    adj = (adj + adj.T).tocsr()
    for s in range(a.n):
        if sign[s]:
            continue
        sign[s] = 1
        stack = [s]
        while stack:
            x = stack.pop()
            lo, hi = adj.indptr[x], adj.indptr[x + 1]
            for y, sg in zip(adj.indices[lo:hi], adj.data[lo:hi]):
                want = -sign[x] if sg > 0 else sign[x]
                if sign[y] == 0:
                    sign[y] = want
                    stack.append(y)
                elif sign[y] != want:
                    return False
    return True


def classify(a: SparseSymMatrix) -> MatrixClass:
    """Most specific class of ``a`` plus irreducibility and singularity flags.

    Negative diagonal entries put a matrix outside SDD0 here, since the
    solvers need positive semi-definite input.  Singularity is decided
    structurally: an irreducible SDD0 matrix is singular exactly when every
    row is tight and a diagonal signing turns it into a Laplacian.
    """
    comps = structure_components(a)
    irreducible = len(comps) <= 1
    slack, tol = _dominance_slack(a)
    if np.any(a.diag < -tol) or np.any(slack < -tol):
        return MatrixClass(Kind.NOT_SDD, irreducible, False)
    tight = np.abs(slack) <= tol
    if np.any(a.vals > 0):
        singular = False
        for comp in comps:
            if np.all(tight[comp]) and _balanced_signing(a.submatrix(comp)):
                singular = True
                break
        return MatrixClass(Kind.SDD0, irreducible, singular)
    singular = any(bool(np.all(tight[comp])) for comp in comps)
    kind = Kind.LAPLACIAN if np.all(tight) else Kind.SDDM0
    return MatrixClass(kind, irreducible, singular)


def split_sddm(a: SparseSymMatrix):
    """Write an SDDM0 matrix as ``A_L + diag(A_D)``.

    Returns the Laplacian part and the nonnegative diagonal excess as an
    array.  Excess inside the dominance tolerance is rounded to zero.
    """
    slack, tol = _dominance_slack(a)
    if np.any(a.vals > 0) or np.any(slack < -tol) or np.any(a.diag < -tol):
        raise NotSDDError("matrix is not SDDM0")
    excess = np.where(slack <= tol, 0.0, slack)
    lap = SparseSymMatrix(a.n, a.diag - excess, a.rows, a.cols, a.vals)
    return lap, excess


def sddm_parts(a: SparseSymMatrix):
    """``(graph, excess)`` with ``a == L_graph + diag(excess)``."""
    lap, excess = split_sddm(a)
    g = WeightedGraph(a.n, lap.rows, lap.cols, -lap.vals)
    return g, excess


def graph_of(lap: SparseSymMatrix) -> WeightedGraph:
    """Weighted graph of a Laplacian matrix."""
    cls = classify(lap)
    if cls.kind != Kind.LAPLACIAN:
        raise NotSDDError("matrix is not a Laplacian")
    return WeightedGraph(lap.n, lap.rows, lap.cols, -lap.vals)


def gremban_reduce(a: SparseSymMatrix, b):
    """Double an SDD0 system into an SDDM0 one.

    ``A = D + A_n + A_p`` becomes ``[[D + A_n, -A_p], [-A_p, D + A_n]]`` with
    right-hand side ``(b, -b)``.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (a.n,):
        raise ValueError("dimension mismatch")
    if classify(a).kind == Kind.NOT_SDD:
        raise NotSDDError("matrix is not SDD0")
    n = a.n
    neg = a.vals < 0
    pos = ~neg
    rows = np.concatenate([a.rows[neg], a.rows[neg] + n, a.rows[pos], a.cols[pos]])
    cols = np.concatenate([a.cols[neg], a.cols[neg] + n, a.cols[pos] + n, a.rows[pos] + n])
    vals = np.concatenate([a.vals[neg], a.vals[neg], -a.vals[pos], -a.vals[pos]])
    diag = np.concatenate([a.diag, a.diag])
    big = SparseSymMatrix.from_coo(2 * n, np.concatenate([rows, np.arange(2 * n)]),
                                   np.concatenate([cols, np.arange(2 * n)]),
                                   np.concatenate([vals, diag]))
    return big, np.concatenate([b, -b])


def gremban_recover(xhat) -> np.ndarray:
    """``(x1 - x2) / 2`` from a solution of the doubled system."""
    xhat = np.asarray(xhat, dtype=float)
    if xhat.ndim != 1 or len(xhat) % 2:
        raise ValueError("doubled solution must have even length")
    n = len(xhat) // 2
    return (xhat[:n] - xhat[n:]) / 2
