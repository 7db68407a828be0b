import json
import math

import numpy as np
import pytest

from oracles import (a_norm_rel_error, cycle, dense_pinv_solve, four_vertex_matrix, gen_eigs, grid,
                     materialize, path, random_connected, random_sdd_positive, random_sddm,
                     random_tree)
from sddsolve.graph import NotSDDError, ReducibleError, SparseSymMatrix, WeightedGraph, laplacian_of
from sddsolve.report import SolveReport
from sddsolve.tree import build_tree
from sddsolve.solvers import (ChainConfig, ChebyParams, PCGResult, build_preconditioners,
                              finite_condition_number, generalized_eigenvalues, one_level_solve,
                              pcg, precond_cheby, solve)


def _spd(n, rng):
    q = rng.standard_normal((n, n))
    return q @ q.T + n * np.eye(n)


# -- Chebyshev -----------------------------------------------------------------

def test_cheby_exact_inverse_one_step():
    rng = np.random.default_rng(0)
    a = _spd(6, rng)
    b = rng.standard_normal(6)
    f = lambda r: np.linalg.solve(a, r)
    x = precond_cheby(lambda y: a @ y, b, 1, f, 1.0, 1.0)
    assert np.allclose(x, np.linalg.solve(a, b))
    x = precond_cheby(lambda y: a @ y, b, 2, f, 1.0, 1.0)
    assert np.allclose(x, np.linalg.solve(a, b))


def test_cheby_zero_rhs():
    a = np.diag([1.0, 2.0])
    assert np.all(precond_cheby(a, np.zeros(2), 5, lambda r: r, 1.0, 2.0) == 0)


def test_cheby_error_bound():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = 12
        w = np.sort(rng.uniform(1, 30, n))
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        a = q @ np.diag(w) @ q.T
        b = rng.standard_normal(n)
        for eps in (0.5, 0.1, 1e-3):
            t = ChebyParams.iterations(w[0], w[-1], eps)
            x = precond_cheby(a, b, t, lambda r: r, w[0], w[-1])
            xs = np.linalg.solve(a, b)
            e = x - xs
            assert math.sqrt(e @ a @ e / (xs @ a @ xs)) <= eps


def test_cheby_symmetric_linear_map():
    rng = np.random.default_rng(2)
    a = _spd(8, rng)
    z = materialize(lambda b: precond_cheby(a, b, 4, lambda r: r / 10, 0.5, 3.0), 8)
    assert np.allclose(z, z.T, atol=1e-10)


def test_cheby_params_validation():
    with pytest.raises(ValueError):
        ChebyParams(0.0, 1.0, 3)
    with pytest.raises(ValueError):
        ChebyParams(2.0, 1.0, 3)
    with pytest.raises(ValueError):
        precond_cheby(np.eye(2), np.ones(2), 0, lambda r: r, 1.0, 1.0)
    p = ChebyParams.level_default(4)
    assert p.t == math.ceil(1.33 * 2) and p.lambda_min < 1 < p.lambda_max


# -- conjugate gradients --------------------------------------------------------

def test_pcg_identity_preconditioner():
    rng = np.random.default_rng(3)
    a = _spd(20, rng)
    b = rng.standard_normal(20)
    res = pcg(a, None, b, eps=1e-12, max_iters=100)
    assert res.converged and np.allclose(res.x, np.linalg.solve(a, b))


def test_pcg_exact_preconditioner_one_step():
    rng = np.random.default_rng(4)
    a = _spd(10, rng)
    b = rng.standard_normal(10)
    res = pcg(a, lambda r: np.linalg.solve(a, r), b, eps=1e-10)
    assert res.iterations == 1 and np.allclose(res.x, np.linalg.solve(a, b))


def test_pcg_identity_one_step():
    b = np.array([1.0, -2.0, 3.0])
    res = pcg(np.eye(3), None, b, eps=1e-12)
    assert res.iterations == 1 and np.allclose(res.x, b)


def test_pcg_zero_rhs():
    res = pcg(np.eye(3), None, np.zeros(3))
    assert res.converged and res.iterations == 0 and np.all(res.x == 0)


def test_pcg_breakdown_on_indefinite():
    a = np.diag([1.0, -1.0])
    res = pcg(a, None, np.array([1.0, 1.0]), eps=1e-12)
    assert not res.converged and res.status == "breakdown"


def test_pcg_ritz_values_bracket_spectrum():
    rng = np.random.default_rng(5)
    w = np.linspace(1, 50, 30)
    q, _ = np.linalg.qr(rng.standard_normal((30, 30)))
    a = q @ np.diag(w) @ q.T
    res = pcg(a, None, rng.standard_normal(30), eps=1e-14, max_iters=30)
    th = res.ritz_values()
    assert th[0] >= 1 - 1e-8 and th[-1] <= 50 + 1e-8


def test_pcg_anorm_stop():
    rng = np.random.default_rng(6)
    for _ in range(10):
        g = random_connected(60, 120, rng)
        a = laplacian_of(g)
        b = rng.standard_normal(60)
        b -= b.mean()
        # subgraph preconditioner solved exactly: eigenvalues of M A are >= 1
        tids = build_tree(g).edge_ids
        tids = tids[tids >= 0]
        extra = np.setdiff1d(np.arange(g.m), tids)[:20]
        sub = laplacian_of(g.subgraph(np.r_[tids, extra]))
        pinv = np.linalg.pinv(sub.to_dense(), hermitian=True)
        res = pcg(a.csr, lambda r: pinv @ r, b, eps=1e-6, max_iters=500, anorm=True)
        assert res.converged and a_norm_rel_error(a, res.x, b) <= 1e-6


# -- the chain -------------------------------------------------------------------

def test_chain_below_threshold_is_direct():
    chain = build_preconditioners(four_vertex_matrix())
    assert chain.depth == 0 and chain.base is not None


def test_chain_on_tree_is_single_level():
    rng = np.random.default_rng(7)
    par = random_tree(30, rng)
    g = WeightedGraph.from_arrays(30, np.arange(1, 30), par[1:], np.ones(29))
    chain = build_preconditioners(laplacian_of(g), ChainConfig(base_threshold=4))
    assert chain.depth == 1 and chain.levels[0].a.n == 0 and chain.base is None


def test_chain_on_grid_shrinks():
    chain = build_preconditioners(laplacian_of(grid(20)), ChainConfig(base_threshold=8, k=9))
    dims = [chain.levels[0].a_prev.n] + [lev.a.n for lev in chain.levels]
    assert chain.depth >= 1 and all(x > y for x, y in zip(dims, dims[1:]))
    rows = chain.summary()
    assert len(rows) == chain.depth and "cheby_t" in rows[0]


def test_chain_preconditioner_is_symmetric():
    a = laplacian_of(grid(8, np.random.default_rng(8)))
    chain = build_preconditioners(a, ChainConfig(base_threshold=8, k=9))
    z = materialize(chain.preconditioner(), a.n)
    assert np.allclose(z, z.T, atol=1e-8 * np.abs(z).max())


def test_chain_rejects_bad_input():
    with pytest.raises(NotSDDError):
        build_preconditioners(SparseSymMatrix.from_dense(np.array([[1.0, 2.0], [2.0, 1.0]])))
    g = WeightedGraph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(ReducibleError):
        build_preconditioners(laplacian_of(g))


# -- solve -------------------------------------------------------------------------

def test_solve_diagonal():
    x, rep = solve(SparseSymMatrix.from_dense(np.diag([2.0, 4.0])), [1.0, 1.0], 1e-10)
    assert np.allclose(x, [0.5, 0.25]) and rep.status == "ok" and rep.components == 2
    x, _ = solve(SparseSymMatrix.from_dense(np.diag([2.0, 4.0])), [2.0, 4.0], 1e-10)
    assert np.allclose(x, [1.0, 1.0])


def test_solve_four_vertex():
    a = four_vertex_matrix()
    b = np.array([1.0, -2.0, 0.5, 0.5])
    x, rep = solve(a, b, 1e-8)
    assert a_norm_rel_error(a, x, b) <= 1e-8 and abs(x.sum()) < 1e-10
    assert rep.status == "ok"


def test_solve_positive_offdiagonal():
    x, rep = solve(SparseSymMatrix.from_dense(np.array([[2.0, 1.0], [1.0, 2.0]])), [1.0, 1.0], 1e-10)
    assert np.allclose(x, [1 / 3, 1 / 3]) and rep.gremban


def test_solve_projects_inconsistent_rhs():
    a = laplacian_of(path(5))
    x, rep = solve(a, np.ones(5), 1e-8)
    assert rep.projected_rhs and np.allclose(x, 0)


def test_solve_disconnected_components():
    g = WeightedGraph.from_edges(5, [(0, 1, 1.0), (1, 2, 2.0), (3, 4, 1.0)])
    a = laplacian_of(g)
    b = np.array([1.0, 0.0, -1.0, 2.0, -2.0])
    x, rep = solve(a, b, 1e-10)
    assert rep.components == 2 and np.allclose(x, dense_pinv_solve(a, b), atol=1e-8)


@pytest.mark.parametrize("mode", ["recursive", "one-level", "pcg-tree"])
def test_solve_modes(mode):
    rng = np.random.default_rng(9)
    cfg = ChainConfig(base_threshold=8, k=9, seed=1)
    for singular in (True, False):
        a = random_sddm(80, 160, rng, singular)
        b = rng.standard_normal(80)
        if singular:
            b -= b.mean()
        x, rep = solve(a, b, 1e-6, cfg, mode=mode)
        assert rep.status == "ok"
        assert a_norm_rel_error(a, x, b) <= 1e-6


def test_solve_sdd_general():
    rng = np.random.default_rng(10)
    a = random_sdd_positive(30, 40, rng)
    b = rng.standard_normal(30)
    x, rep = solve(a, b, 1e-8)
    assert np.allclose(x, np.linalg.solve(a.to_dense(), b), atol=1e-6)


def test_one_level_agrees_with_solve():
    rng = np.random.default_rng(11)
    a = laplacian_of(grid(12, rng))
    b = rng.standard_normal(a.n)
    b -= b.mean()
    x1, _ = one_level_solve(a, b, 1e-9)
    x2, _ = solve(a, b, 1e-9, ChainConfig(base_threshold=8))
    assert np.allclose(x1, x2, atol=1e-6 * np.abs(x1).max())


def test_solve_input_errors():
    a = four_vertex_matrix()
    with pytest.raises(ValueError):
        solve(a, np.ones(3))
    with pytest.raises(ValueError):
        solve(a, [np.nan, 0, 0, 0])
    with pytest.raises(NotSDDError):
        solve(SparseSymMatrix.from_dense(np.array([[1.0, 2.0], [2.0, 1.0]])), [1.0, 1.0])


def test_report_json_round_trip():
    a = laplacian_of(cycle(6))
    b = np.arange(6.0) - 2.5
    x, rep = solve(a, b, 1e-8)
    assert abs(x.sum()) < 1e-10
    text = rep.to_json()
    d = json.loads(text)
    assert d["status"] == "ok" and d["eps_requested"] == 1e-8
    back = SolveReport.from_json(text)
    assert back.to_dict() == rep.to_dict()
    with pytest.raises(ValueError):
        SolveReport.from_json(json.dumps({"schema": "other"}))


# -- dense oracle -----------------------------------------------------------------

def test_condition_number_examples():
    a = laplacian_of(random_connected(20, 30, np.random.default_rng(12)))
    assert finite_condition_number(a, a) == pytest.approx(1.0)
    half = SparseSymMatrix(a.n, a.diag / 2, a.rows, a.cols, a.vals / 2)
    assert finite_condition_number(a, half) == pytest.approx(1.0)
    assert generalized_eigenvalues(a, half) == pytest.approx(np.full(19, 2.0))
    c4 = laplacian_of(cycle(4))
    p4 = laplacian_of(path(4))
    assert finite_condition_number(c4, p4) <= 6.0
    assert np.allclose(generalized_eigenvalues(c4, p4), gen_eigs(c4, p4))


def test_condition_number_nullspace_mismatch():
    a = laplacian_of(path(3))
    with pytest.raises(ValueError):
        finite_condition_number(a, SparseSymMatrix.from_dense(np.eye(3)))


def test_condition_number_cap():
    a = laplacian_of(path(10))
    with pytest.raises(ValueError):
        finite_condition_number(a, a, cap=5)
