"""Solvers for symmetric diagonally dominant linear systems.

Combinatorial preconditioners (low-stretch spanning trees augmented with a
few extra edges) are combined with partial Cholesky elimination into a
recursive Chebyshev solver.  The same machinery yields approximate Fiedler
vectors by inverse power iteration.
"""

from .decompose import TreeDecomposition, decompose
from .factor import (BaseFactor, PartialCholFactor, apply_base_pinv, apply_factored_pinv,
                     ldl_base, partial_cholesky)
from .fiedler import FiedlerResult, approx_fiedler, rayleigh_quotient
from .graph import (Kind, MatrixClass, NotSDDError, ReducibleError, SparseSymMatrix,
                    WeightedGraph, classify, gremban_recover, gremban_reduce, laplacian_of)
from .io import read_matrix, read_vector, write_edge_list, write_matrix_market, write_vector
from .precondition import (UltraSparsifier, augment_tree, register_sparsifier, ultra_simple,
                           ultra_sparsify)
from .report import SolveReport
from .solvers import (ChainConfig, ChebyParams, SolverChain, build_preconditioners,
                      finite_condition_number, one_level_solve, pcg, precond_cheby, solve,
                      solve_level)
from .tree import SpanningTree, StretchTable, TreeStrategy, build_tree, compute_stretch

__version__ = "0.1.0"
