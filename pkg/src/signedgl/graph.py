"""Signed graphs, Laplacians and the half-vectorisation machinery.

Node pairs ``(i, j)`` with ``i < j`` are laid out row-major, i.e.
``(0,1), (0,2), ..., (0,n-1), (1,2), ...``. :func:`edge_index` is the one
place this ordering is defined; everything else goes through
:func:`pair_indices`.

The matrix ``Q`` maps an edge vector ``v = upper(X)`` to ``X 1 - diag(X)``.
It is never formed; :func:`apply_Q` and :func:`apply_Qt` act on index
arrays instead, which also lets the candidate-set solver reuse them with a
column subset.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import DimensionError, EdgeIndexError, ParameterError, SymmetryError


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(i: int, j: int, n: int) -> int:
    """Position of pair ``(i, j)`` in a row-major edge vector."""
    if not (0 <= i < j < n):
        raise EdgeIndexError(f"need 0 <= i < j < n, got i={i}, j={j}, n={n}")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


@lru_cache(maxsize=32)
def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column arrays of all pairs in edge-vector order (read-only, cached)."""
    rows, cols = np.triu_indices(n, 1)
    rows = np.ascontiguousarray(rows, dtype=np.intp)
    cols = np.ascontiguousarray(cols, dtype=np.intp)
    rows.flags.writeable = False
    cols.flags.writeable = False
    return rows, cols


def n_from_length(d: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * d)) / 2))
    if num_pairs(n) != d:
        raise DimensionError(f"length {d} is not n(n-1)/2 for any n")
    return n


def _check_edge_vector(v, n):
    v = np.ascontiguousarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != num_pairs(n):
        raise DimensionError(f"edge vector must have length {num_pairs(n)} for n={n}, got {v.shape}")
    return v


def upper(M, rtol: float = 1e-10) -> np.ndarray:
    """Strictly upper-triangular part of a symmetric matrix, row-major."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n < 2:
        raise DimensionError("need at least 2 nodes")
    dev = np.max(np.abs(M - M.T))
    scale = max(np.max(np.abs(M)), 1.0)
    if dev > rtol * scale:
        raise SymmetryError(dev)
    rows, cols = pair_indices(n)
    return M[rows, cols].copy()


def from_upper(v, n: int, diag=None) -> np.ndarray:
    """Symmetric matrix with ``upper(X) = v`` and the given diagonal (default 0)."""
    v = _check_edge_vector(v, n)
    rows, cols = pair_indices(n)
    X = np.zeros((n, n))
    X[rows, cols] = v
    X[cols, rows] = v
    if diag is not None:
        X[np.diag_indices(n)] = diag
    return X


def apply_Q(v, n: int) -> np.ndarray:
    """``Q v``: node-wise sums of incident edge values."""
    v = _check_edge_vector(v, n)
    rows, cols = pair_indices(n)
    return kernels.q_apply(v, rows, cols, n)


def apply_Qt(u) -> np.ndarray:
    """``Q^T u``: entry ``(i, j)`` is ``u_i + u_j``."""
    u = np.ascontiguousarray(u, dtype=float)
    if u.ndim != 1:
        raise DimensionError("node vector must be 1-D")
    rows, cols = pair_indices(u.shape[0])
    return kernels.qt_apply(u, rows, cols)


def laplacian(W) -> np.ndarray:
    """Combinatorial Laplacian ``diag(W 1) - W`` of a symmetric weight matrix."""
    W = np.asarray(W, dtype=float)
    return np.diag(W.sum(axis=1)) - W


@dataclass(frozen=True, eq=False)
class SignedGraph:
    """Undirected signed graph stored as an edge list.

    ``weights`` are strictly positive; the sign lives in ``signs`` so that
    ``A_ij = signs * weights``.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        if int(self.n) < 2:
            raise ParameterError("a signed graph needs n >= 2")
        rows = np.asarray(self.rows, dtype=np.intp).ravel()
        cols = np.asarray(self.cols, dtype=np.intp).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        s = np.asarray(self.signs, dtype=np.int8).ravel()
        if not (rows.shape == cols.shape == w.shape == s.shape):
            raise DimensionError("edge arrays must have equal length")
        if rows.size:
            if rows.min() < 0 or cols.max() >= self.n:
                raise EdgeIndexError("edge endpoint out of range")
            if np.any(rows >= cols):
                raise EdgeIndexError("edges must satisfy i < j")
            if np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise ParameterError("edge weights must be finite and > 0")
            if np.any((s != 1) & (s != -1)):
                raise ParameterError("edge signs must be +1 or -1")
        keys = rows * self.n + cols
        order = np.argsort(keys, kind="stable")
        if np.any(np.diff(keys[order]) == 0):
            raise ParameterError("duplicate edges")
        for name, arr in (("rows", rows[order]), ("cols", cols[order]), ("weights", w[order]), ("signs", s[order])):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_edges(cls, n, edges):
        """Build from an iterable of ``(i, j, weight, sign)`` with ``i < j``."""
        edges = list(edges)
        if not edges:
            return cls(n, [], [], [], [])
        i, j, w, s = zip(*edges)
        return cls(n, i, j, w, s)

    @classmethod
    def from_adjacency(cls, A, tol: float = 0.0):
        """Graph from a symmetric signed adjacency; entries with ``|A_ij| <= tol`` are dropped."""
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        a = upper(A)
        rows, cols = pair_indices(n)
        keep = np.abs(a) > tol
        return cls(n, rows[keep], cols[keep], np.abs(a[keep]), np.sign(a[keep]))

    @property
    def num_edges(self) -> int:
        return int(self.rows.size)

    @property
    def num_positive(self) -> int:
        return int(np.count_nonzero(self.signs > 0))

    @property
    def num_negative(self) -> int:
        return int(np.count_nonzero(self.signs < 0))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        a = self.signs * self.weights
        A[self.rows, self.cols] = a
        A[self.cols, self.rows] = a
        return A

    def signed_edge_vector(self) -> np.ndarray:
        """``upper(A)`` without building the dense matrix."""
        v = np.zeros(num_pairs(self.n))
        idx = self.rows * self.n - self.rows * (self.rows + 1) // 2 + (self.cols - self.rows - 1)
        v[idx] = self.signs * self.weights
        return v

    def edges(self):
        for i, j, w, s in zip(self.rows, self.cols, self.weights, self.signs):
            yield int(i), int(j), float(w), int(s)


def decompose_adjacency(G: SignedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Split ``A = A+ - A-`` into nonnegative parts with disjoint support."""
    A = G.adjacency()
    return np.maximum(A, 0.0), np.maximum(-A, 0.0)


def net_laplacian(G: SignedGraph) -> np.ndarray:
    """``L_n = diag(A 1) - A``; indefinite when negative edges are present."""
    return laplacian(G.adjacency())


def signed_laplacian(G: SignedGraph) -> np.ndarray:
    """``L_s = diag(|A| 1) - A`` (positive semi-definite)."""
    A = G.adjacency()
    return np.diag(np.abs(A).sum(axis=1)) - A


@dataclass(frozen=True, eq=False)
class LaplacianPairVec:
    """Half-vectorised positive and negative Laplacians ``(l+, l-)``."""

    lpos: np.ndarray
    lneg: np.ndarray
    n: int

    def __post_init__(self):
        lpos = _check_edge_vector(self.lpos, self.n).copy()
        lneg = _check_edge_vector(self.lneg, self.n).copy()
        lpos.flags.writeable = False
        lneg.flags.writeable = False
        object.__setattr__(self, "lpos", lpos)
        object.__setattr__(self, "lneg", lneg)

    def feasibility(self) -> dict:
        """Constraint violations: trace, sign and complementarity."""
        n = self.n
        return {
            "trace_pos": abs(self.lpos.sum() + n),
            "trace_neg": abs(self.lneg.sum() + n),
            "max_pos": float(max(self.lpos.max(), 0.0)),
            "max_neg": float(max(self.lneg.max(), 0.0)),
            "overlap": int(np.count_nonzero((self.lpos != 0) & (self.lneg != 0))),
        }

    def is_feasible(self, trace_tol: float = 1e-8, sign_tol: float = 1e-12) -> bool:
        f = self.feasibility()
        return (
            f["trace_pos"] <= trace_tol
            and f["trace_neg"] <= trace_tol
            and f["max_pos"] <= sign_tol
            and f["max_neg"] <= sign_tol
            and f["overlap"] == 0
        )


def laplacian_from_vec(l, n: int) -> np.ndarray:
    """Laplacian with off-diagonals ``l`` and diagonal ``-Q l`` (so ``L 1 = 0``)."""
    return from_upper(l, n, diag=-apply_Q(l, n))


def laplacians_from_vec(p: LaplacianPairVec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Assemble ``L+``, ``L-`` and the signed adjacency ``A = -offdiag(L+) + offdiag(L-)``."""
    Lpos = laplacian_from_vec(p.lpos, p.n)
    Lneg = laplacian_from_vec(p.lneg, p.n)
    A = from_upper(-p.lpos + p.lneg, p.n)
    return Lpos, Lneg, A
