"""Reading and writing graphs, matrices and vectors.

Two matrix formats are supported: whitespace-separated edge lists
``u v w`` (0-based vertex ids, positive weights) read as a
:class:`WeightedGraph`, and Matrix Market real coordinate files
(``general`` or ``symmetric``) read as a :class:`SparseSymMatrix`.
Parse errors carry the offending line number.
"""

from __future__ import annotations

import math
import os

import numpy as np
import scipy.sparse as sp

from .graph import SparseSymMatrix, WeightedGraph, laplacian_of


class ParseError(ValueError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


def _data_lines(path, comment="#%"):
    with open(path) as fh:
        for no, raw in enumerate(fh, 1):
            s = raw.strip()
            if s and s[0] not in comment:
                yield no, s


def _number(tok, path, no, kind=float):
    try:
        x = kind(tok)
    except ValueError:
        raise ParseError(path, no, f"not a number: {tok!r}") from None
    if kind is float and not math.isfinite(x):
        raise ParseError(path, no, f"non-finite value {tok!r}")
    return x


def read_edge_list(path, n: int | None = None) -> WeightedGraph:
    """Read ``u v w`` lines; ``n`` defaults to one more than the largest id.

    A missing weight means 1.  Duplicate edges are summed.
    """
    us, vs, ws = [], [], []
    for no, s in _data_lines(path):
        tok = s.split()
        if len(tok) not in (2, 3):
            raise ParseError(path, no, f"expected 'u v w', got {len(tok)} fields")
        a = _number(tok[0], path, no, int)
        b = _number(tok[1], path, no, int)
        w = _number(tok[2], path, no) if len(tok) == 3 else 1.0
        if a < 0 or b < 0:
            raise ParseError(path, no, "negative vertex id")
        if a == b:
            raise ParseError(path, no, "self-loop")
        if w <= 0:
            raise ParseError(path, no, "edge weight must be positive")
        us.append(a)
        vs.append(b)
        ws.append(w)
    if not us:
        raise ParseError(path, 1, "empty edge list")
    nn = max(max(us), max(vs)) + 1
    if n is not None:
        if n < nn:
            raise ValueError(f"vertex id {nn - 1} out of range for n = {n}")
        nn = n
    return WeightedGraph.from_arrays(nn, us, vs, ws)


def read_matrix_market(path) -> SparseSymMatrix:
    """Read a real coordinate Matrix Market file; duplicates are summed."""
    with open(path) as fh:
        header = fh.readline()
    if not header:
        raise ParseError(path, 1, "empty file")
    h = header.lower().split()
    if len(h) != 5 or h[0] != "%%matrixmarket" or h[1] != "matrix":
        raise ParseError(path, 1, "missing '%%MatrixMarket matrix' header")
    if h[2] != "coordinate":
        raise ParseError(path, 1, f"only coordinate format is supported, got {h[2]!r}")
    if h[3] not in ("real", "integer"):
        raise ParseError(path, 1, f"unsupported field {h[3]!r}")
    if h[4] not in ("general", "symmetric"):
        raise ParseError(path, 1, f"unsupported symmetry {h[4]!r}")
    lines = _data_lines(path, comment="%")
    try:
        no, s = next(lines)
    except StopIteration:
        raise ParseError(path, 1, "missing size line") from None
    tok = s.split()
    if len(tok) != 3:
        raise ParseError(path, no, "size line must be 'rows cols entries'")
    nr, nc, nnz = (_number(x, path, no, int) for x in tok)
    if nr != nc:
        raise ParseError(path, no, "matrix is not square")
    rows, cols, vals = [], [], []
    for no, s in lines:
        tok = s.split()
        if len(tok) != 3:
            raise ParseError(path, no, "entry line must be 'i j value'")
        i = _number(tok[0], path, no, int) - 1
        j = _number(tok[1], path, no, int) - 1
        x = _number(tok[2], path, no)
        if not (0 <= i < nr and 0 <= j < nr):
            raise ParseError(path, no, "index out of range")
        if h[4] == "symmetric" and j > i:
            raise ParseError(path, no, "symmetric files store the lower triangle only")
        rows.append(i)
        cols.append(j)
        vals.append(x)
    if len(vals) != nnz:
        raise ParseError(path, no, f"expected {nnz} entries, found {len(vals)}")
    if h[4] == "general":
        m = sp.coo_matrix((vals, (rows, cols)), shape=(nr, nr)).tocsr()
        diff = abs(m - m.T)
        if diff.nnz and diff.max() > 1e-12 * abs(m).max():
            raise ValueError(f"{path}: matrix is not symmetric")
    return SparseSymMatrix.from_coo(nr, rows, cols, vals)


def detect_format(path) -> str:
    with open(path) as fh:
        first = fh.readline()
    if first.lower().startswith("%%matrixmarket"):
        return "matrix-market"
    return "edge-list"


def read_matrix(path, format: str | None = None):
    """Read ``path`` as ``"edge-list"`` (a graph) or ``"matrix-market"`` (a matrix)."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    format = format or detect_format(path)
    if format == "edge-list":
        return read_edge_list(path)
    if format in ("matrix-market", "matrix-market-symmetric-coordinate"):
        return read_matrix_market(path)
    raise ValueError(f"unknown format {format!r}")


def as_matrix(obj) -> SparseSymMatrix:
    """Graphs become their Laplacians."""
    return laplacian_of(obj) if isinstance(obj, WeightedGraph) else obj


def write_edge_list(path, g: WeightedGraph):
    with open(path, "w") as fh:
        for a, b, w in zip(g.u.tolist(), g.v.tolist(), g.w.tolist()):
            fh.write(f"{a} {b} {w!r}\n")


def write_matrix_market(path, a: SparseSymMatrix):
    """Lower triangle, symmetric coordinate."""
    nz = np.flatnonzero(a.diag)
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{a.n} {a.n} {len(nz) + a.noff}\n")
        for i, x in zip(nz.tolist(), a.diag[nz].tolist()):
            fh.write(f"{i + 1} {i + 1} {x!r}\n")
        for i, j, x in zip(a.rows.tolist(), a.cols.tolist(), a.vals.tolist()):
            fh.write(f"{j + 1} {i + 1} {x!r}\n")


def read_vector(path, n: int | None = None, rng=None) -> np.ndarray:
    """One value per line; ``"ones"`` and ``"random"`` need ``n``."""
    if path in ("ones", "random"):
        if n is None:
            raise ValueError(f"'{path}' needs a dimension")
        if path == "ones":
            return np.ones(n)
        return np.random.default_rng(rng).standard_normal(n)
    vals = []
    for no, s in _data_lines(path):
        vals.append(_number(s, path, no))
    return np.asarray(vals, dtype=float)


def write_vector(path, x):
    with open(path, "w") as fh:
        for val in np.asarray(x, dtype=float).tolist():
            fh.write(f"{val!r}\n")
