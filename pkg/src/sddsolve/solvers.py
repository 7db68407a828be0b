"""Iterative solvers and the recursive preconditioner chain.

The chain alternates two reductions: replace the current matrix by an
ultra-sparse subgraph preconditioner, then eliminate that preconditioner's
degree-one and degree-two vertices.  Solving with a level's preconditioner
runs a fixed number of Chebyshev iterations on the next, smaller matrix,
so every solve is a fixed symmetric linear operator.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .factor import (BaseFactor, PartialCholFactor, apply_base_pinv, apply_factored_pinv,
                     factored_down, factored_up, ldl_base, partial_cholesky, project)
from .graph import (Kind, NotSDDError, ReducibleError, SparseSymMatrix, classify,
                    gremban_recover, gremban_reduce, sddm_parts, structure_components)
from .precondition import get_sparsifier, ultra_sparsify
from .report import SolveReport
from .tree import TreeStrategy, build_tree

log = logging.getLogger(__name__)

#: Chebyshev error used at every inner level
LEVEL_EPS = 2 * math.exp(-2)


def _as_operator(a) -> Callable:
    if callable(a) and not isinstance(a, (SparseSymMatrix, np.ndarray)) and not sp.issparse(a):
        return a
    if isinstance(a, SparseSymMatrix):
        m = a.csr
        return lambda x: m @ x
    return lambda x: a @ x


# ---------------------------------------------------------------------------
# Chebyshev
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChebyParams:
    """Spectral bounds and iteration count of a fixed Chebyshev sweep."""

    lambda_min: float
    lambda_max: float
    t: int

    def __post_init__(self):
        if not (0 < self.lambda_min <= self.lambda_max):
            raise ValueError("need 0 < lambda_min <= lambda_max")
        if self.t < 1:
            raise ValueError("t must be at least 1")

    @staticmethod
    def iterations(lambda_min, lambda_max, eps) -> int:
        """Smallest t with error at most ``eps`` over ``[lambda_min, lambda_max]``."""
        return max(1, math.ceil(0.5 * math.sqrt(lambda_max / lambda_min) * math.log(2 / eps)))

    @classmethod
    def for_error(cls, lambda_min, lambda_max, eps) -> "ChebyParams":
        return cls(lambda_min, lambda_max, cls.iterations(lambda_min, lambda_max, eps))

    @classmethod
    def level_default(cls, k) -> "ChebyParams":
        return cls(1 - LEVEL_EPS, (1 + LEVEL_EPS) * k, math.ceil(1.33 * math.sqrt(k)))


def precond_cheby(a, b, t, f, lambda_min, lambda_max) -> np.ndarray:
    """``t`` steps of preconditioned Chebyshev iteration from ``x = 0``.

    Uses the three-term recurrence ``alpha_1 = 1/d``,
    ``beta_2 = (c alpha_1)^2 / 2``, ``beta_i = (c alpha_{i-1} / 2)^2`` and
    ``alpha_i = 1 / (d - beta_i / alpha_{i-1})``, with ``d`` and ``c`` the
    centre and half-width of ``[lambda_min, lambda_max]``.  The map
    ``b -> x`` is linear and symmetric whenever ``f`` is.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    if not (0 < lambda_min <= lambda_max):
        raise ValueError("need 0 < lambda_min <= lambda_max")
    a = _as_operator(a)
    b = np.asarray(b, dtype=float)
    d = (lambda_max + lambda_min) / 2
    c = (lambda_max - lambda_min) / 2
    x = np.zeros_like(b)
    r = b
    p = None
    alpha = 0.0
    for i in range(1, t + 1):
        z = f(r)
        if i == 1:
            p = z
            alpha = 1.0 / d
        else:
            beta = 0.5 * (c * alpha) ** 2 if i == 2 else (c * alpha / 2) ** 2
            alpha = 1.0 / (d - beta / alpha)
            p = z + beta * p
        x = x + alpha * p
        if i < t:
            r = b - a(x)
    return x


# ---------------------------------------------------------------------------
# conjugate gradients
# ---------------------------------------------------------------------------

class BreakdownError(ArithmeticError):
    """A vanishing inner product stopped the iteration."""


@dataclass
class PCGResult:
    x: np.ndarray
    iterations: int
    converged: bool
    status: str
    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)

    def ritz_values(self) -> np.ndarray:
        return _ritz(self.alphas, self.betas)


def _ritz(alphas, betas) -> np.ndarray:
    """Eigenvalue estimates of ``M A`` from CG coefficients."""
    k = len(alphas)
    if k == 0:
        return np.zeros(0)
    al = np.asarray(alphas)
    be = np.asarray(betas[:k])
    diag = 1 / al
    diag[1:] += be[:k - 1] / al[:-1]
    off = np.sqrt(np.maximum(be[:k - 1], 0)) / al[:-1]
    if k == 1:
        return diag
    return sl.eigvalsh_tridiagonal(diag, off)


def pcg(a, precond, b, eps=1e-8, max_iters=None, *, x0=None, anorm=False, margin=1.1,
        min_iters=0) -> PCGResult:
    """Preconditioned conjugate gradients.

    Stops when the preconditioned residual norm ``sqrt(r^T M r)`` drops
    below ``eps`` times its initial value.  With ``anorm=True`` the
    threshold is tightened by ``sqrt(margin * theta_max)``, where
    ``theta_max`` is the current largest Ritz value; when ``M A`` has no
    eigenvalue below one (a subgraph preconditioner solved exactly) this
    bounds the relative A-norm error by ``eps``.
    """
    a = _as_operator(a)
    precond = _as_operator(precond) if precond is not None else (lambda r: r)
    b = np.asarray(b, dtype=float)
    n = len(b)
    if max_iters is None:
        max_iters = max(10, int(10 * math.sqrt(n)))
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - a(x) if x0 is not None else b.copy()
    z = precond(r)
    rz = float(r @ z)
    if rz < 0:
        raise BreakdownError("preconditioner is not positive semi-definite")
    if rz == 0.0:
        return PCGResult(x, 0, True, "converged")
    bz = float(b @ precond(b)) if x0 is not None else rz
    target = eps * math.sqrt(bz)
    p = z.copy()
    alphas, betas = [], []
    tiny = np.finfo(float).eps ** 2
    for it in range(1, max_iters + 1):
        ap = a(p)
        pap = float(p @ ap)
        if pap <= tiny * rz:
            return PCGResult(x, it - 1, False, "breakdown", alphas, betas)
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        z = precond(r)
        rz_new = float(r @ z)
        if rz_new < -tiny * rz:
            return PCGResult(x, it, False, "breakdown", alphas, betas)
        beta = rz_new / rz
        alphas.append(alpha)
        betas.append(beta)
        rz = max(rz_new, 0.0)
        thr = target
        if anorm:
            theta = _ritz(alphas, betas)
            thr = target / math.sqrt(margin * max(float(theta[-1]), 1.0))
        if it >= min_iters and math.sqrt(rz) <= thr:
            return PCGResult(x, it, True, "converged", alphas, betas)
        p = z + beta * p
    return PCGResult(x, max_iters, False, "max_iters", alphas, betas)


def spectrum_estimate(a, precond, n, rng, steps=30, projection=False):
    """Extreme eigenvalues of ``precond * a`` estimated by a short Lanczos run."""
    b = rng.standard_normal(n)
    b = project(b, projection)
    # stop before the residual reaches rounding level, where Ritz values degrade
    res = pcg(a, precond, b, eps=1e-10, max_iters=min(steps, max(n, 1)))
    th = res.ritz_values()
    if len(th) == 0:
        return 1.0, 1.0
    return float(th[0]), float(th[-1])


# ---------------------------------------------------------------------------
# the preconditioner chain
# ---------------------------------------------------------------------------

@dataclass
class ChainConfig:
    """Parameters of :func:`build_preconditioners`.

    ``chi`` and ``k`` default to ``chi = max(1, c3 log2(n)^c4)`` and
    ``k = (14 chi + 1)^2`` clamped to ``k_cap``.  The ultra-sparsifier
    budget uses ``t_constant`` in place of its large worst-case constant.
    With ``calibrate`` the Chebyshev bounds of every level are measured
    (bottom-up Lanczos runs) instead of taken from ``k``.
    """

    k: float | None = None
    chi: float | None = None
    c3: float = 1.0
    c4: float = 2.0
    k_cap: float = 400.0
    base_threshold: int | None = None
    base_cap: int = 512
    t_constant: float = 0.02
    tree: str = TreeStrategy.AUTO.value
    sparsifier: str = "default"
    seed: int = 0
    calibrate: bool = True
    margin: float = 1.15
    lanczos_steps: int = 40
    retries: int = 3
    max_levels: int = 40
    presparsify: bool = False

    def resolve(self, n: int):
        chi = self.chi if self.chi is not None else max(1.0, self.c3 * math.log2(max(n, 2)) ** self.c4)
        k = self.k if self.k is not None else min((14 * chi + 1) ** 2, self.k_cap, n)
        k = max(k, 1.0)
        thr = self.base_threshold
        if thr is None:
            thr = int(min(66 * chi + 6, self.base_cap))
        return chi, k, thr


@dataclass(eq=False)
class ChainLevel:
    """One level: ``B`` preconditions ``a_prev``; ``factor`` reduces ``B`` to ``a``."""

    a_prev: SparseSymMatrix
    b: SparseSymMatrix
    factor: PartialCholFactor
    cheby: ChebyParams | None = None
    stats: dict = field(default_factory=dict)

    @property
    def a(self) -> SparseSymMatrix:
        return self.factor.reduced


class SolverChain:
    """Preconditioners ``B_1..B_l``, their factors and the base factor."""

    def __init__(self, a0, levels, base, chi, k, base_threshold, top=None, stats=None):
        self.a0 = a0
        self.levels: list[ChainLevel] = levels
        self.base: BaseFactor | None = base
        self.chi = chi
        self.k = k
        self.base_threshold = base_threshold
        self.top = top
        self.stats = stats or {}
        self.applications = 0

    @property
    def depth(self) -> int:
        return len(self.levels)

    def solve_level(self, i: int, b) -> np.ndarray:
        """Approximate ``B_i^+ b`` (levels are numbered from 1)."""
        if not 1 <= i <= self.depth:
            raise IndexError(f"level {i} outside 1..{self.depth}")
        self.applications += 1
        lev = self.levels[i - 1]
        f = lev.factor
        s = factored_down(f, b)
        if f.nelim < f.n:
            s1 = s[f.nelim:]
            if i == self.depth:
                s[f.nelim:] = apply_base_pinv(self.base, s1)
            else:
                c = lev.cheby
                s[f.nelim:] = precond_cheby(lev.a, s1, c.t, lambda r: self.solve_level(i + 1, r),
                                            c.lambda_min, c.lambda_max)
        return factored_up(f, s)

    def preconditioner(self) -> Callable:
        """The operator used by the outermost iteration."""
        if self.depth == 0:
            return lambda r: apply_base_pinv(self.base, r)
        return lambda r: self.solve_level(1, r)

    def summary(self) -> list[dict]:
        rows = []
        for i, lev in enumerate(self.levels, 1):
            row = {"level": i, "dim_prev": lev.a_prev.n, "noff_prev": lev.a_prev.noff,
                   "noff_b": lev.b.noff, "dim": lev.a.n, "noff": lev.a.noff}
            if lev.cheby is not None:
                row.update(cheby_lambda_min=lev.cheby.lambda_min, cheby_lambda_max=lev.cheby.lambda_max,
                           cheby_t=lev.cheby.t)
            row.update({k: v for k, v in lev.stats.items() if np.isscalar(v)})
            rows.append(row)
        return rows


def _base_of(a: SparseSymMatrix) -> BaseFactor | None:
    return ldl_base(a) if a.n else None


def build_preconditioners(a0: SparseSymMatrix, cfg: ChainConfig | None = None) -> SolverChain:
    """Build the chain for an irreducible SDDM0 matrix."""
    cfg = cfg or ChainConfig()
    cls = classify(a0)
    if not cls.is_sddm:
        raise NotSDDError("matrix is not SDDM0")
    if not cls.irreducible:
        raise ReducibleError("matrix is reducible")
    chi, k, thr = cfg.resolve(a0.n)
    rng = np.random.default_rng(cfg.seed)
    levels: list[ChainLevel] = []
    cur = a0
    t0 = time.perf_counter()
    while cur.n >= thr and len(levels) < cfg.max_levels:
        g, excess = sddm_parts(cur)
        if cfg.presparsify and not levels:
            # dense inputs: sparsify first, then build the ultra-sparsifier on the result
            g = get_sparsifier("default")(g, 0.5, rng)
        tc = cfg.t_constant
        best = None
        for attempt in range(cfg.retries + 1):
            seed = int(rng.integers(2**31))
            tree = build_tree(g, cfg.tree, seed=seed)
            usp = ultra_sparsify(g, k, seed=seed, sparsifier=cfg.sparsifier, t_constant=tc, tree=tree)
            bmat = SparseSymMatrix.from_sddm_parts(usp.subgraph(), excess)
            fac = partial_cholesky(bmat)
            if best is None or fac.reduced.n < best[1].reduced.n:
                best = (bmat, fac, usp, tc)
            # keep shrinking the budget until the level makes real progress
            if fac.reduced.n <= 0.5 * cur.n:
                break
            tc /= 4
        bmat, fac, usp, tc = best
        stats = dict(usp.stats)
        stats["t_constant"] = tc
        # observed decay, compared against the 3 chi / k and 2 chi / k rates
        if cur.noff:
            stats["noff_ratio"] = fac.reduced.noff / cur.noff
            stats["dim_ratio"] = fac.reduced.n / cur.noff
            stats["decay_ok"] = bool(stats["noff_ratio"] <= 3 * chi / k and stats["dim_ratio"] <= 2 * chi / k)
        log.info("level %d: dim %d -> %d, noff %d -> %d", len(levels) + 1, cur.n, fac.reduced.n,
                 cur.noff, fac.reduced.noff)
        levels.append(ChainLevel(cur, bmat, fac, stats=stats))
        if fac.reduced.n >= cur.n:
            log.warning("chain stalled at dimension %d", cur.n)
            break
        cur = fac.reduced
    base = _base_of(cur) if levels else ldl_base(a0)
    chain = SolverChain(a0, levels, base, chi, k, thr,
                        stats={"build_time": time.perf_counter() - t0})
    if levels and levels[-1].a.n == 0:
        chain.base = None
    _set_parameters(chain, cfg, rng)
    return chain


def _set_parameters(chain: SolverChain, cfg: ChainConfig, rng):
    """Chebyshev bounds for every level, bottom-up, and for the outer sweep."""
    levels = chain.levels
    if not levels:
        chain.top = None
        return
    t0 = time.perf_counter()
    for i in range(len(levels) - 1, 0, -1):
        lev = levels[i - 1]
        if lev.a.n == 0:
            continue
        if not cfg.calibrate:
            lev.cheby = ChebyParams.level_default(chain.k)
            continue
        lo, hi = _measure(lev.a, lambda r, j=i + 1: chain.solve_level(j, r), cfg, rng)
        lev.cheby = ChebyParams.for_error(lo, hi, LEVEL_EPS)
    if cfg.calibrate:
        lo, hi = _measure(chain.a0, chain.preconditioner(), cfg, rng)
        chain.top = (lo, hi)
    else:
        chain.top = (1 - LEVEL_EPS, (1 + LEVEL_EPS) * chain.k)
    chain.stats["calibration_time"] = time.perf_counter() - t0


def _measure(a: SparseSymMatrix, prec, cfg: ChainConfig, rng):
    proj = classify(a).kind == Kind.LAPLACIAN
    lo, hi = spectrum_estimate(a, prec, a.n, rng, steps=cfg.lanczos_steps, projection=proj)
    if not lo > 0:
        raise ArithmeticError("preconditioned operator is not positive definite on the range")
    lo = min(1 - LEVEL_EPS, lo / cfg.margin)
    hi = max(hi * cfg.margin, lo)
    return lo, hi


def solve_level(chain: SolverChain, i: int, b) -> np.ndarray:
    return chain.solve_level(i, b)


# ---------------------------------------------------------------------------
# top-level solvers
# ---------------------------------------------------------------------------

def _outer_recursive(a, b, eps, chain: SolverChain, max_rounds):
    """Outer Chebyshev sweeps with refinement until the A-norm bound holds."""
    prec = chain.preconditioner()
    lo, hi = chain.top
    t = ChebyParams.iterations(lo, hi, eps)
    op = _as_operator(a)
    x = precond_cheby(a, b, t, prec, lo, hi)
    bsb = float(b @ prec(b))
    rounds = 0
    iters = t
    bound = float("inf")
    while True:
        r = b - op(x)
        rsr = float(r @ prec(r))
        bound = math.sqrt(max(rsr, 0.0) / bsb * hi / lo) if bsb > 0 else 0.0
        if bound <= eps or rounds >= max_rounds:
            break
        # the bound overestimates: target only the missing factor
        t2 = ChebyParams.iterations(lo, hi, min(0.5, eps / bound * 0.5))
        x = x + precond_cheby(a, r, t2, prec, lo, hi)
        iters += t2
        rounds += 1
    return x, iters, rounds, bound


def _solve_sddm_component(a, b, eps, cfg, mode, report, max_rounds):
    n = a.n
    proj = classify(a).kind == Kind.LAPLACIAN
    if n <= 2 or (mode == "recursive" and n < cfg.resolve(n)[2]):
        x = apply_base_pinv(ldl_base(a), b)
        report.chain.append({"dim": n, "direct": True})
        return x, 0, 0, 0.0
    if mode == "recursive":
        chain = build_preconditioners(a, cfg)
        report.chain.extend(chain.summary())
        report.timings["build"] = report.timings.get("build", 0.0) + chain.stats.get("build_time", 0.0)
        report.timings["calibrate"] = (report.timings.get("calibrate", 0.0)
                                       + chain.stats.get("calibration_time", 0.0))
        if chain.depth == 0:
            return apply_base_pinv(chain.base, b), 0, 0, 0.0
        return _outer_recursive(a, b, eps, chain, max_rounds)
    if mode in ("one-level", "pcg-tree"):
        prec, info = _one_level_preconditioner(a, cfg, tree_only=(mode == "pcg-tree"))
        report.chain.append(info)
        res = pcg(a, prec, b, eps=eps, max_iters=max(50, 20 * int(math.sqrt(n)) + 100), anorm=True)
        if res.status == "breakdown":
            report.notes.append("pcg breakdown")
        th = res.ritz_values()
        hi = float(th[-1]) * 1.1 if len(th) else 1.0
        r = b - a.csr @ res.x
        rmr = float(r @ prec(r))
        bmb = float(b @ prec(b))
        bound = math.sqrt(max(rmr, 0) / bmb * max(hi, 1.0)) if bmb > 0 else 0.0
        return res.x, res.iterations, 0, bound
    raise ValueError(f"unknown mode {mode!r}")


def _one_level_preconditioner(a: SparseSymMatrix, cfg: ChainConfig, tree_only=False, k=None):
    """Subgraph preconditioner with its reduced system solved (nearly) exactly."""
    g, excess = sddm_parts(a)
    tree = build_tree(g, cfg.tree, seed=cfg.seed)
    if tree_only:
        ids = tree.edge_ids[tree.edge_ids >= 0]
        sub = g.subgraph(ids)
    else:
        k = k or max(1.0, math.sqrt(g.m))
        usp = ultra_sparsify(g, k, seed=cfg.seed, sparsifier=cfg.sparsifier,
                             t_constant=cfg.t_constant, tree=tree)
        sub = usp.subgraph()
    bmat = SparseSymMatrix.from_sddm_parts(sub, excess)
    fac = partial_cholesky(bmat)
    red = fac.reduced
    info = {"dim": a.n, "noff_b": bmat.noff, "reduced_dim": red.n, "reduced_noff": red.noff}
    if red.n == 0:
        inner = None
    elif red.n <= 3000:
        base = ldl_base(red)
        inner = lambda y: apply_base_pinv(base, y)
    else:
        proj = classify(red).kind == Kind.LAPLACIAN
        csr = red.csr
        dinv = 1.0 / red.diag

        def inner(y):
            y = project(y, proj)
            res = pcg(csr, lambda r: dinv * r, y, eps=1e-13, max_iters=20 * red.n)
            return project(res.x, proj)
    return (lambda r: apply_factored_pinv(fac, inner, r)), info


def solve(a: SparseSymMatrix, b, eps=1e-6, cfg: ChainConfig | None = None, mode="recursive",
          max_rounds=20):
    """Solve ``A x = b`` for an SDD0 matrix ``A``.

    Positive off-diagonals are removed by the doubling reduction, reducible
    matrices are split into components, and for singular components the
    right-hand side is projected onto the range (this is recorded in the
    report).  The returned ``x`` targets relative A-norm error ``eps``;
    ``report.error_bound`` is an a posteriori bound on that error computed
    from measured spectral bounds, and ``report.status`` is ``"ok"`` when it
    is at most ``eps``.
    """
    cfg = cfg or ChainConfig()
    t_start = time.perf_counter()
    b = np.asarray(b, dtype=float)
    if b.shape != (a.n,):
        raise ValueError(f"dimension mismatch: matrix is {a.n}, right-hand side is {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side has non-finite entries")
    report = SolveReport(mode=mode, eps_requested=eps, seed=cfg.seed, config=asdict(cfg))
    cls = classify(a)
    if cls.kind == Kind.NOT_SDD:
        raise NotSDDError("classification: matrix is not symmetric diagonally dominant")
    if cls.kind == Kind.SDD0:
        big, bb = gremban_reduce(a, b)
        xx, rep = solve(big, bb, eps, cfg, mode, max_rounds)
        x = gremban_recover(xx)
        rep.gremban = True
        rep.residual_achieved = _rel_residual(a, x, b)
        rep.timings["total"] = time.perf_counter() - t_start
        return x, rep
    x = np.zeros(a.n)
    comps = structure_components(a)
    report.components = len(comps)
    worst = 0.0
    for comp in comps:
        sub = a.submatrix(comp)
        bc = b[comp]
        if classify(sub).kind == Kind.LAPLACIAN:
            mean = bc.mean()
            if abs(mean) > 1e-12 * (np.abs(bc).max() + 1e-300):
                report.projected_rhs = True
            bc = bc - mean
        if sub.n == 1:
            x[comp] = bc / sub.diag if sub.diag[0] != 0 else 0.0
            continue
        xc, iters, rounds, bound = _solve_sddm_component(sub, bc, eps, cfg, mode, report, max_rounds)
        x[comp] = xc
        report.outer_iterations += iters
        report.refinement_rounds += rounds
        worst = max(worst, bound)
    report.error_bound = worst
    report.residual_achieved = _rel_residual(a, x, b if not report.projected_rhs else None)
    report.status = "ok" if worst <= eps else "unverified"
    report.timings["total"] = time.perf_counter() - t_start
    return x, report


def _rel_residual(a: SparseSymMatrix, x, b=None) -> float:
    if b is None:
        return float("nan")
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(b - a.csr @ x) / nb) if nb > 0 else float(np.linalg.norm(a.csr @ x))


def one_level_solve(a: SparseSymMatrix, b, eps=1e-6, cfg: ChainConfig | None = None):
    """PCG with a single subgraph preconditioner whose reduced system is solved exactly."""
    return solve(a, b, eps, cfg, mode="one-level")


# ---------------------------------------------------------------------------
# dense oracle
# ---------------------------------------------------------------------------

ORACLE_CAP = 400


def finite_condition_number(a, b, cap=ORACLE_CAP, tol=1e-9) -> float:
    """Ratio of extreme nonzero eigenvalues of ``A B^+`` (dense).

    Both matrices must have the same nullspace.
    """
    a = a.to_dense() if isinstance(a, SparseSymMatrix) else np.asarray(a, float)
    b = b.to_dense() if isinstance(b, SparseSymMatrix) else np.asarray(b, float)
    n = a.shape[0]
    if n > cap:
        raise ValueError(f"dense oracle refused for n = {n} > {cap}")
    wb, vb = np.linalg.eigh(b)
    scale = max(np.abs(wb).max(), 1e-300)
    keep = wb > tol * scale
    q = vb[:, keep]
    null_b = vb[:, ~keep]
    wa = np.linalg.eigvalsh(a)
    rank_a = int(np.sum(wa > tol * max(np.abs(wa).max(), 1e-300)))
    if rank_a != q.shape[1] or (null_b.size and np.abs(a @ null_b).max() > 1e-7 * max(np.abs(a).max(), 1)):
        raise ValueError("matrices have different nullspaces")
    ev = sl.eigh(q.T @ a @ q, q.T @ b @ q, eigvals_only=True)
    return float(ev.max() / ev.min())


def generalized_eigenvalues(a, b, tol=1e-9) -> np.ndarray:
    """Nonzero eigenvalues of ``A B^+`` restricted to the range of ``B``."""
    a = a.to_dense() if isinstance(a, SparseSymMatrix) else np.asarray(a, float)
    b = b.to_dense() if isinstance(b, SparseSymMatrix) else np.asarray(b, float)
    wb, vb = np.linalg.eigh(b)
    q = vb[:, wb > tol * max(np.abs(wb).max(), 1e-300)]
    return np.sort(sl.eigh(q.T @ a @ q, q.T @ b @ q, eigvals_only=True))
