"""Signed graph learning from smooth signals."""
from .admm import AdmmConfig, SolveResult, compute_k, objective, safe_rho, solve, solve_M
from .datagen import GraphModelSpec, SignalGenSpec, gen_signals, generate_graph, is_balanced
from .errors import *  # noqa: F401,F403
from .evaluation import GridSpec, auprc_ratio, classify_edges, evaluate, frob_error, grid_search, macro_f1
from .fast import CandidateEdgeSet, build_candidates, choose_k, solve_fast
from .graph import LaplacianPairVec, SignedGraph, net_laplacian, signed_laplacian, upper, from_upper
from .gsp import FilterSpec, build_filter, spectrum
from .kernels import BACKEND

__version__ = "0.1.0"
