from fractions import Fraction

import numpy as np
import pytest

from oracles import random_tree
from sddsolve.decompose import decompose
from sddsolve.tree import SpanningTree


def _check(par, n, u, v, eta, t, d):
    assert d.h <= t
    total = sum(eta)
    sets = d.sets
    for i, w in enumerate(sets):
        ws = set(w.tolist())
        inside = sum(1 for x in ws if par[x] != x and par[x] in ws)
        assert inside == len(ws) - 1, "set does not induce a subtree"
        if len(ws) > 1:
            mass = sum(eta[e] for e in range(len(u)) if i in d.rho_sets(e))
            assert mass * t <= 4 * total
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            assert len(np.intersect1d(sets[i], sets[j])) <= 1
    assert set().union(*[set(w.tolist()) for w in sets]) == set(range(n))
    for e in range(len(u)):
        a, b = d.rho[e]
        assert (u[e] in sets[a] and v[e] in sets[b]) or (u[e] in sets[b] and v[e] in sets[a])


def test_path_golden():
    t = SpanningTree(np.array([0, 0, 1, 2, 3]), np.ones(5), 0)
    u = np.array([0, 1, 2, 3, 0])
    v = np.array([1, 2, 3, 4, 4])
    eta = np.array([1, 1, 1, 1, 4])
    d = decompose(t, u, v, eta, 3)
    assert d.phi_threshold == Fraction(16, 3)
    assert d.h == 2
    assert [s.tolist() for s in d.sets] == [[3, 4], [0, 1, 2]]
    assert d.rho.tolist() == [[1, 1], [1, 1], [0, 1], [0, 0], [0, 1]]
    _check([0, 0, 1, 2, 3], 5, u, v, [1, 1, 1, 1, 4], 3, d)



def test_single_edge():
    # one tree edge with unit mass admits no t with 1 < t <= 1; mass 2 is the smallest case
    t = SpanningTree(np.array([0, 0]), np.ones(2), 0)
    d = decompose(t, np.array([0]), np.array([1]), np.array([2]), 2)
    assert d.h <= 2
    _check([0, 0], 2, [0], [1], [2], 2, d)


def test_t_range():
    t = SpanningTree(np.array([0, 0]), np.ones(2), 0)
    with pytest.raises(ValueError):
        decompose(t, np.array([0]), np.array([1]), np.array([1]), 2)
    with pytest.raises(ValueError):
        decompose(t, np.array([0]), np.array([1]), np.array([5]), 1)
    d = decompose(t, np.array([0]), np.array([1]), np.array([2]), 2)
    _check([0, 0], 2, [0], [1], [2], 2, d)


def test_large_t_singletons_allowed():
    rng = np.random.default_rng(1)
    n = 30
    par = random_tree(n, rng)
    t = SpanningTree(par, np.ones(n), 0)
    u = np.arange(1, n)
    v = par[1:]
    eta = np.full(n - 1, 5)
    d = decompose(t, u, v, eta, int(eta.sum()))
    _check(par, n, u, v, list(eta), int(eta.sum()), d)


@pytest.mark.parametrize("kind", ["int", "fraction", "float"])
def test_fuzz(kind):
    rng = np.random.default_rng({"int": 2, "fraction": 3, "float": 4}[kind])
    done = 0
    while done < 150:
        n = int(rng.integers(2, 300 if done % 10 == 0 else 40))
        par = random_tree(n, rng)
        tree = SpanningTree(par, np.ones(n), 0)
        m = int(rng.integers(1, 3 * n))
        u = rng.integers(0, n, m)
        v = rng.integers(0, n, m)
        keep = u != v
        u, v = u[keep], v[keep]
        if not len(u):
            continue
        if kind == "int":
            eta = [int(x) for x in rng.integers(0, 11, len(u))]
            arr = np.array(eta, np.int64)
        elif kind == "fraction":
            eta = [Fraction(int(rng.integers(0, 30)), int(rng.integers(1, 4))) for _ in u]
            arr = np.array(eta, dtype=object)
        else:
            # dyadic values are exact in binary floating point
            eta = [int(x) / 4 for x in rng.integers(0, 41, len(u))]
            arr = np.array(eta, float)
        total = sum(eta)
        if total < 2:
            continue
        t = int(rng.integers(2, int(total) + 1))
        _check(par, n, u, v, eta, t, decompose(tree, u, v, arr, t))
        done += 1


def test_deep_path_no_recursion_limit():
    n = 20000
    par = np.r_[0, np.arange(n - 1)]
    tree = SpanningTree(par, np.ones(n), 0)
    u = np.arange(n - 1)
    v = np.arange(1, n)
    d = decompose(tree, u, v, np.ones(n - 1, np.int64), 100)
    assert d.h <= 100
