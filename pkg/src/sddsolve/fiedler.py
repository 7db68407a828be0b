"""Approximate Fiedler vectors by inverse power iteration through the solver chain."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .factor import apply_base_pinv, ldl_base, project
from .graph import Kind, NotSDDError, ReducibleError, SparseSymMatrix, classify
from .solvers import ChainConfig, ChebyParams, build_preconditioners, precond_cheby


@dataclass
class FiedlerResult:
    v: np.ndarray
    rayleigh: float
    trials: int
    seed: int
    power_steps: int = 0
    cheby_t: int = 0


def rayleigh_quotient(a: SparseSymMatrix, v) -> float:
    """``v^T A v / v^T v``."""
    v = np.asarray(v, dtype=float)
    vv = float(v @ v)
    if vv == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector")
    return float(v @ (a.csr @ v)) / vv


def _unit_perp(v) -> np.ndarray:
    v = project(v, True)
    return v / np.linalg.norm(v)


def power_steps(n: int, eps: float) -> int:
    """Number of inverse power steps, ``8 ln(18 (n-1) / eps) / eps``."""
    return max(1, math.ceil(8 * math.log(18 * max(n - 1, 1) / eps) / eps))


def approx_fiedler(a: SparseSymMatrix, eps=0.1, p=0.25, cfg: ChainConfig | None = None,
                   seed=None) -> FiedlerResult:
    """Unit vector orthogonal to the constants with small Rayleigh quotient.

    Runs ``ceil(log2(1/p))`` independent trials.  Each starts from a random
    unit vector orthogonal to all-ones and applies a fixed approximate
    pseudo-inverse of ``A`` (a Chebyshev sweep preconditioned by the solver
    chain, accurate to ``eps/4``) ``power_steps(n, eps)`` times,
    re-projecting and normalizing after every step.  The trial with the
    smallest Rayleigh quotient is returned.
    """
    cfg = cfg or ChainConfig()
    seed = cfg.seed if seed is None else seed
    if not (0 < eps <= 1):
        raise ValueError("eps must lie in (0, 1]")
    if not (0 < p < 1):
        raise ValueError("p must lie in (0, 1)")
    cls = classify(a)
    if cls.kind != Kind.LAPLACIAN:
        raise NotSDDError("input is not a Laplacian")
    if not cls.irreducible:
        raise ReducibleError("graph is disconnected")
    n = a.n
    if n < 2:
        raise ValueError("need at least two vertices")
    steps = power_steps(n, eps)
    trials = max(1, math.ceil(math.log2(1 / p)))
    chain = build_preconditioners(a, cfg)
    if chain.depth == 0:
        base = chain.base
        z = lambda x: apply_base_pinv(base, x)
        tcheb = 0
    else:
        lo, hi = chain.top
        tcheb = ChebyParams.iterations(lo, hi, eps / 4)
        prec = chain.preconditioner()
        z = lambda x: precond_cheby(a, x, tcheb, prec, lo, hi)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(trials):
        v = _unit_perp(rng.standard_normal(n))
        for _ in range(steps):
            w = project(z(v), True)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                break
            v = w / nw
        v = _unit_perp(v)
        rq = rayleigh_quotient(a, v)
        if best is None or rq < best[0]:
            best = (rq, v)
    return FiedlerResult(best[1], best[0], trials, seed, steps, tcheb)
