import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from oracles import four_vertex_matrix, grid, random_connected
from sddsolve import io
from sddsolve.cli import EXIT_INPUT, EXIT_OK, main
from sddsolve.generators import FAMILIES, family
from sddsolve.graph import SparseSymMatrix, WeightedGraph, laplacian_of

DATA = os.path.join(os.path.dirname(__file__), "data")
FOUR_VERTEX = os.path.join(DATA, "four_vertex.txt")


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _vector(path):
    return np.array([float(s) for s in open(path) if s.strip() and not s.startswith("#")])


# -- readers and writers -----------------------------------------------------------

def test_edge_list_four_vertex():
    g = io.read_edge_list(FOUR_VERTEX)
    assert np.allclose(laplacian_of(g).to_dense(), four_vertex_matrix().to_dense())


def test_edge_list_defaults_and_comments(tmp_path):
    p = _write(tmp_path, "g.txt", "# header\n0 1\n\n1 2 2.5\n")
    g = io.read_edge_list(p)
    assert g.n == 3 and g.w.tolist() == [1.0, 2.5]
    assert io.read_edge_list(p, n=5).n == 5
    with pytest.raises(ValueError):
        io.read_edge_list(p, n=2)


@pytest.mark.parametrize("text,line", [("", 1), ("0 1 1\n0 1 x\n", 2), ("0 1 1\n\n1 1 2\n", 3),
                                       ("0 1 -1\n", 1), ("0 1 nan\n", 1), ("0 1 2 3\n", 1),
                                       ("0 -1 1\n", 1)])
def test_edge_list_errors(tmp_path, text, line):
    p = _write(tmp_path, "bad.txt", text)
    with pytest.raises(io.ParseError) as e:
        io.read_edge_list(p)
    assert e.value.line == line


def test_matrix_market_small(tmp_path):
    p = _write(tmp_path, "a.mtx", "%%MatrixMarket matrix coordinate real symmetric\n% c\n"
                                  "2 2 3\n1 1 2\n2 1 -1\n2 2 2\n")
    a = io.read_matrix(p)
    assert isinstance(a, SparseSymMatrix)
    assert np.allclose(a.to_dense(), [[2, -1], [-1, 2]])


def test_matrix_market_general_and_duplicates(tmp_path):
    p = _write(tmp_path, "a.mtx", "%%MatrixMarket matrix coordinate real general\n"
                                  "2 2 5\n1 1 1\n1 1 1\n1 2 -1\n2 1 -1\n2 2 2\n")
    assert np.allclose(io.read_matrix_market(p).to_dense(), [[2, -1], [-1, 2]])


@pytest.mark.parametrize("text,line", [
    ("%%MatrixMarket matrix array real general\n2 2\n", 1),
    ("%%MatrixMarket matrix coordinate pattern symmetric\n2 2 1\n1 1\n", 1),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1\n", 2),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n1 2 -1\n", 4),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n", 3),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1\n", 3),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 inf\n", 3),
])
def test_matrix_market_errors(tmp_path, text, line):
    p = _write(tmp_path, "bad.mtx", text)
    with pytest.raises(io.ParseError) as e:
        io.read_matrix_market(p)
    assert e.value.line == line


def test_matrix_market_asymmetric_general(tmp_path):
    p = _write(tmp_path, "a.mtx", "%%MatrixMarket matrix coordinate real general\n"
                                  "2 2 3\n1 1 2\n1 2 -1\n2 2 2\n")
    with pytest.raises(ValueError):
        io.read_matrix_market(p)


def test_round_trips(tmp_path):
    rng = np.random.default_rng(0)
    g = random_connected(15, 20, rng)
    p = str(tmp_path / "g.txt")
    io.write_edge_list(p, g)
    h = io.read_edge_list(p)
    assert np.array_equal(h.u, g.u) and np.array_equal(h.w, g.w)
    a = laplacian_of(g)
    q = str(tmp_path / "a.mtx")
    io.write_matrix_market(q, a)
    assert np.array_equal(io.read_matrix(q).to_dense(), a.to_dense())
    x = rng.standard_normal(7)
    r = str(tmp_path / "x.txt")
    io.write_vector(r, x)
    assert np.array_equal(io.read_vector(r), x)


def test_read_vector_keywords():
    assert np.array_equal(io.read_vector("ones", 3), np.ones(3))
    assert np.array_equal(io.read_vector("random", 4, rng=1), io.read_vector("random", 4, rng=1))
    with pytest.raises(ValueError):
        io.read_vector("ones")


def test_generators():
    for name in FAMILIES:
        g = family(name, 10, rng=0)
        assert g.n >= 10 and g.m >= g.n - 1
    with pytest.raises(ValueError):
        family("nope", 3)


# -- command line ------------------------------------------------------------------

def test_cli_solve_four_vertex(tmp_path, capsys):
    out = str(tmp_path / "x.txt")
    rep = str(tmp_path / "r.json")
    code = main(["solve", "--matrix", FOUR_VERTEX, "--rhs", os.path.join(DATA, "four_vertex_rhs.txt"),
                 "--eps", "1e-8", "--out", out, "--report", rep])
    assert code == EXIT_OK
    x = _vector(out)
    xs = _vector(os.path.join(DATA, "four_vertex_solution.txt"))
    a = four_vertex_matrix().to_dense()
    e = x - xs
    assert math.sqrt(e @ a @ e / (xs @ a @ xs)) <= 1e-8
    assert json.load(open(rep))["status"] == "ok"
    assert "status ok" in capsys.readouterr().out


@pytest.mark.parametrize("mode", ["one-level", "pcg-tree"])
def test_cli_solve_modes(tmp_path, mode):
    p = str(tmp_path / "g.txt")
    io.write_edge_list(p, grid(10))
    assert main(["solve", "--matrix", p, "--rhs", "random", "--mode", mode]) == EXIT_OK


def test_cli_solve_errors(tmp_path, capsys):
    rhs = _write(tmp_path, "b.txt", "1\n2\n")
    assert main(["solve", "--matrix", FOUR_VERTEX, "--rhs", rhs]) == EXIT_INPUT
    assert "dimension mismatch" in capsys.readouterr().err
    mtx = _write(tmp_path, "a.mtx", "%%MatrixMarket matrix coordinate real symmetric\n"
                                    "2 2 3\n1 1 1\n2 1 -3\n2 2 1\n")
    assert main(["solve", "--matrix", mtx, "--rhs", "ones"]) == EXIT_INPUT
    assert "classification" in capsys.readouterr().err
    assert main(["solve", "--matrix", str(tmp_path / "missing"), "--rhs", "ones"]) == EXIT_INPUT
    bad = _write(tmp_path, "bad.txt", "0 1 1\n0 1 x\n")
    assert main(["solve", "--matrix", bad, "--rhs", "ones"]) == EXIT_INPUT
    assert ":2:" in capsys.readouterr().err
    assert main(["solve", "--matrix", FOUR_VERTEX]) == EXIT_INPUT


def test_cli_fiedler(tmp_path, capsys):
    star = _write(tmp_path, "s.txt", "0 1\n0 2\n0 3\n")
    out = str(tmp_path / "v.txt")
    assert main(["fiedler", "--graph", star, "--eps", "0.1", "--out", out]) == EXIT_OK
    v = _vector(out)
    assert abs(np.linalg.norm(v) - 1) < 1e-9 and abs(v.sum()) < 1e-9
    ray = float(capsys.readouterr().out.split()[1])
    assert ray <= 1.1
    edge = _write(tmp_path, "e.txt", "0 1 2.5\n")
    assert main(["fiedler", "--graph", edge, "--out", out]) == EXIT_OK
    assert np.allclose(np.abs(_vector(out)), 1 / math.sqrt(2))
    assert float(capsys.readouterr().out.split()[1]) == pytest.approx(5.0)


def test_cli_fiedler_disconnected(tmp_path, capsys):
    g = _write(tmp_path, "g.txt", "0 1\n2 3\n")
    assert main(["fiedler", "--graph", g]) == EXIT_INPUT
    assert "disconnected" in capsys.readouterr().err


def test_cli_precondition_tree(tmp_path):
    g = _write(tmp_path, "t.txt", "0 1\n1 2\n1 3\n3 4\n")
    out = str(tmp_path / "u.txt")
    assert main(["precondition", "--graph", g, "--k", "4", "--out", out]) == EXIT_OK
    assert io.read_edge_list(out).m == 4


def test_cli_precondition_cycle_kappa(tmp_path):
    g = _write(tmp_path, "c.txt", "0 1\n1 2\n2 3\n3 4\n4 0\n")
    out = str(tmp_path / "u.txt")
    assert main(["precondition", "--graph", g, "--method", "ultra-simple", "--t", "2",
                 "--kappa", "--out", out]) == EXIT_OK
    text = open(out).read()
    kappa = float(text.split("# kappa ")[1].split()[0])
    bound = float(text.split("# bound ")[1].split()[0])
    assert kappa <= bound


def test_cli_precondition_grid_kappa(tmp_path):
    g = str(tmp_path / "g.txt")
    io.write_edge_list(g, grid(8))
    out = str(tmp_path / "u.txt")
    assert main(["precondition", "--graph", g, "--k", "16", "--kappa", "--out", out]) == EXIT_OK
    text = open(out).read()
    kappa = float(text.split("# kappa ")[1].split()[0])
    assert kappa <= 16
    u = io.read_edge_list(out)
    assert u.m <= grid(8).m


def test_cli_precondition_needs_parameter(tmp_path):
    out = str(tmp_path / "u.txt")
    assert main(["precondition", "--graph", FOUR_VERTEX, "--method", "ultra-simple", "--k", "3",
                 "--out", out]) == EXIT_INPUT


def test_cli_bench(tmp_path, capsys):
    rep = str(tmp_path / "b.json")
    assert main(["bench", "--family", "grid2d", "--sizes", "6,10", "--modes", "recursive,pcg-tree",
                 "--report", rep]) == EXIT_OK
    d = json.load(open(rep))
    assert d["schema"] == "sddsolve.bench/1" and len(d["rows"]) == 4
    assert all(r["status"] == "ok" for r in d["rows"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 5


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "sddsolve.cli", "solve", "--matrix", FOUR_VERTEX,
                        "--rhs", "ones"], capture_output=True, text=True)
    assert r.returncode == EXIT_OK
