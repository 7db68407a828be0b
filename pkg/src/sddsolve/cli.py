"""Command line interface: ``sddsolve {solve,fiedler,precondition,bench}``.

Exit codes: 0 success (for ``solve``: verified convergence), 1 input
error, 2 converged but the error bound could not be verified.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from . import io
from .fiedler import approx_fiedler
from .generators import FAMILIES, family
from .graph import (NotSDDError, ReducibleError, WeightedGraph, classify, connected_components,
                    graph_of, laplacian_of)
from .precondition import ULTRA_T_CONSTANT, ultra_simple, ultra_sparsify
from .solvers import ORACLE_CAP, ChainConfig, finite_condition_number, solve
from .tree import TreeStrategy, build_tree, compute_stretch

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNVERIFIED = 2

log = logging.getLogger("sddsolve")


class InputError(Exception):
    pass


def _config(args) -> ChainConfig:
    kw = {"seed": args.seed}
    for name in ("k", "chi", "tree", "sparsifier", "t_constant", "base_threshold"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    if getattr(args, "presparsify", False):
        kw["presparsify"] = True
    return ChainConfig(**kw)


def _load_graph(path) -> WeightedGraph:
    obj = io.read_matrix(path)
    if isinstance(obj, WeightedGraph):
        return obj
    try:
        return graph_of(obj)
    except (NotSDDError, ValueError) as e:
        raise InputError(f"{path}: not a Laplacian ({e})") from None


def _connected(g: WeightedGraph):
    if g.n == 0 or len(connected_components(g)) != 1:
        raise InputError("graph is disconnected")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    a = io.as_matrix(io.read_matrix(args.matrix))
    b = io.read_vector(args.rhs, a.n, rng=args.seed)
    if b.shape != (a.n,):
        raise InputError(f"dimension mismatch: matrix is {a.n}, right-hand side has {len(b)} entries")
    if not classify(a).is_sdd:
        raise InputError("classification: matrix is not symmetric diagonally dominant")
    x, rep = solve(a, b, args.eps, _config(args), mode=args.mode)
    if args.out:
        io.write_vector(args.out, x)
    text = rep.to_json()
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    print(f"status {rep.status}  error bound {rep.error_bound:.3e}  "
          f"residual {rep.residual_achieved:.3e}  iterations {rep.outer_iterations}")
    return EXIT_OK if rep.status == "ok" else EXIT_UNVERIFIED


def cmd_fiedler(args) -> int:
    g = _load_graph(args.graph)
    _connected(g)
    res = approx_fiedler(laplacian_of(g), args.eps, args.p, _config(args), seed=args.seed)
    if args.out:
        io.write_vector(args.out, res.v)
        with open(args.out, "a") as fh:
            fh.write(f"# rayleigh {res.rayleigh!r}\n")
    print(f"rayleigh {res.rayleigh!r}")
    return EXIT_OK


def cmd_precondition(args) -> int:
    g = _load_graph(args.graph)
    _connected(g)
    tree = build_tree(g, args.tree, seed=args.seed)
    if args.method == "ultra-simple":
        if args.t is None:
            raise InputError("--t is required for ultra-simple")
        u = ultra_simple(g, args.t, tree=tree)
        bound = 12 * compute_stretch(tree, g).eta_total / args.t if args.t < g.n else 1.0
    else:
        if args.k is None:
            raise InputError("--k is required for ultra-sparsify")
        tc = ULTRA_T_CONSTANT if args.t_constant is None else args.t_constant
        u = ultra_sparsify(g, args.k, seed=args.seed, sparsifier=args.sparsifier or "default",
                           t_constant=tc, tree=tree).subgraph()
        bound = args.k
    io.write_edge_list(args.out, u)
    print(f"edges {u.m} of {g.m}")
    if args.kappa:
        if g.n > ORACLE_CAP:
            print(f"kappa skipped: n = {g.n} exceeds the oracle cap {ORACLE_CAP}")
        else:
            kappa = finite_condition_number(laplacian_of(g), laplacian_of(u))
            with open(args.out, "a") as fh:
                fh.write(f"# kappa {kappa!r}\n# bound {bound!r}\n")
            print(f"kappa {kappa:.6g}  bound {bound:.6g}")
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    modes = [m for m in args.modes.split(",") if m]
    rows = []
    for size in sizes:
        g = family(args.family, size, rng=args.seed)
        a = laplacian_of(g)
        b = np.random.default_rng(args.seed).standard_normal(a.n)
        b -= b.mean()
        for mode in modes:
            t0 = time.perf_counter()
            x, rep = solve(a, b, args.eps, _config(args), mode=mode)
            dt = time.perf_counter() - t0
            rows.append({"family": args.family, "size": size, "n": a.n, "m": g.m, "mode": mode,
                         "iterations": rep.outer_iterations, "time": dt,
                         "error_bound": rep.error_bound, "residual": rep.residual_achieved,
                         "status": rep.status})
    print(f"{'size':>6} {'n':>8} {'mode':>10} {'iters':>6} {'time':>9} {'bound':>10} {'status':>10}")
    for r in rows:
        print(f"{r['size']:>6} {r['n']:>8} {r['mode']:>10} {r['iterations']:>6} "
              f"{r['time']:>9.3f} {r['error_bound']:>10.2e} {r['status']:>10}")
    if args.report:
        with open(args.report, "w") as fh:
            json.dump({"schema": "sddsolve.bench/1", "rows": rows}, fh, indent=2, sort_keys=True)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _chain_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=float)
    p.add_argument("--chi", type=float)
    p.add_argument("--tree", choices=[s.value for s in TreeStrategy])
    p.add_argument("--sparsifier")
    p.add_argument("--t-constant", type=float, dest="t_constant")
    p.add_argument("--base-threshold", type=int, dest="base_threshold")
    p.add_argument("--presparsify", action="store_true")
    p.add_argument("--threads", type=int, default=1, help="accepted for compatibility; runs single-threaded")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sddsolve", description="SDD linear systems and Fiedler vectors")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve A x = b")
    p.add_argument("--matrix", required=True)
    p.add_argument("--rhs", required=True, help="file, 'ones' or 'random'")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--mode", choices=["recursive", "one-level", "pcg-tree"], default="recursive")
    p.add_argument("--out")
    p.add_argument("--report")
    _chain_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fiedler", help="approximate Fiedler vector")
    p.add_argument("--graph", required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--p", type=float, default=0.25)
    p.add_argument("--out")
    _chain_flags(p)
    p.set_defaults(func=cmd_fiedler)

    p = sub.add_parser("precondition", help="emit a subgraph preconditioner")
    p.add_argument("--graph", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=float)
    g.add_argument("--t", type=int)
    p.add_argument("--method", choices=["ultra-simple", "ultra-sparsify"], default="ultra-sparsify")
    p.add_argument("--out", required=True)
    p.add_argument("--kappa", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tree", choices=[s.value for s in TreeStrategy], default=TreeStrategy.AUTO.value)
    p.add_argument("--sparsifier")
    p.add_argument("--t-constant", type=float, dest="t_constant")
    p.set_defaults(func=cmd_precondition)

    p = sub.add_parser("bench", help="run solvers on generated instances")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--sizes", required=True, help="comma-separated")
    p.add_argument("--modes", default="recursive")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--report")
    _chain_flags(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                         format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, NotSDDError, ReducibleError, ValueError, OSError) as e:
        msg = str(e)
        if isinstance(e, NotSDDError) and "classification" not in msg:
            msg = f"classification: {msg}"
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
