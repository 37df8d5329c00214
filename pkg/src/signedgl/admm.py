"""ADMM for signed graph learning over the full set of node pairs.

The problem, in half-vectorised form, is::

    min  k'l+ - k'l- + a1 ||l+||_P^2 + a2 ||l-||_P^2
    s.t. 1'l+ = 1'l- = -n,  l+, l- <= 0,  l+ * l- = 0 (elementwise)

with ``P = Q'Q + 2I`` so that ``||l||_P^2 = ||L||_F^2``. Splitting
``z = l`` puts the sign and complementarity constraints on ``z`` (an exact
elementwise projection) and the trace constraints on ``l`` (a linear KKT
solve with ``M = (4a + rho) I + 2a Q'Q``).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import DivergenceError, EmptyDataError, InfeasibleProblemError, ParameterError
from .graph import LaplacianPairVec, apply_Qt, num_pairs, pair_indices

MIN_NODES = 3
NORMALIZE_MODES = ("power", "samples", "none")


@dataclass(frozen=True)
class AdmmConfig:
    """Solver settings.

    ``normalize`` rescales the smoothness term ``k`` before solving:
    ``"power"`` divides by the mean squared row norm ``||X||_F^2 / n`` (so the
    useful range of ``alpha`` depends on neither ``m`` nor the signal
    amplitude), ``"samples"`` divides by ``m`` and ``"none"`` leaves it as is.
    """

    alpha1: float = 0.01
    alpha2: float = 0.01
    rho: float = 1.0
    max_iter: int = 10000
    eps: float = 1e-6
    residual_tol: float = 1e-6
    normalize: str = "power"

    def __post_init__(self):
        if self.normalize not in NORMALIZE_MODES:
            raise ParameterError(f"normalize must be one of {NORMALIZE_MODES}, got {self.normalize!r}")
        if not (self.alpha1 >= 0 and self.alpha2 >= 0):
            raise ParameterError("alpha1 and alpha2 must be >= 0")
        if not self.rho > 0:
            raise ParameterError("rho must be > 0")
        if not (self.eps > 0 and self.residual_tol > 0):
            raise ParameterError("tolerances must be > 0")
        if int(self.max_iter) < 1:
            raise ParameterError("max_iter must be >= 1")


@dataclass
class AdmmState:
    lpos: np.ndarray
    lneg: np.ndarray
    zpos: np.ndarray
    zneg: np.ndarray
    ypos: np.ndarray
    yneg: np.ndarray
    iter: int = 0
    objective_history: list = field(default_factory=list)
    primal_residuals: list = field(default_factory=list)


@dataclass
class SolveResult:
    pair: LaplacianPairVec
    converged: bool
    iterations: int
    final_objective: float
    residuals: tuple
    objective_history: list = field(repr=False, default_factory=list)
    residual_history: list = field(repr=False, default_factory=list)
    runtime_s: float = 0.0
    reason: str = ""
    state: Optional[AdmmState] = field(repr=False, default=None)
    info: dict = field(repr=False, default_factory=dict)

    @property
    def n(self):
        return self.pair.n


def _check_data(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise EmptyDataError(f"signal matrix must be 2-D, got shape {X.shape}")
    if X.shape[1] == 0 or X.size == 0:
        raise EmptyDataError("signal matrix has no signals")
    if not np.all(np.isfinite(X)):
        raise EmptyDataError("signal matrix contains non-finite entries")
    return X


def compute_k(X, check_nodes: bool = True) -> np.ndarray:
    """Edge vector ``k = 2 upper(XX') - Q' diag(XX')`` with ``k'l = tr(X' L X)``.

    Entry ``(i, j)`` equals ``-||X_i - X_j||^2``. ``check_nodes=False`` allows
    ``n = 2`` for testing the identity; the learning problem itself needs
    ``n >= 3``.
    """
    X = _check_data(X)
    n = X.shape[0]
    if check_nodes and n < MIN_NODES:
        raise InfeasibleProblemError(
            f"n={n}: trace constraints force l+ = l- on a single pair, violating complementarity"
        )
    S = X @ X.T
    rows, cols = pair_indices(n)
    return 2.0 * S[rows, cols] - apply_Qt(np.diag(S).copy())


def data_scale(X, mode: str) -> float:
    """Divisor applied to ``k`` under a normalisation mode."""
    if mode == "power":
        s = float(np.sum(X * X)) / X.shape[0]
        if s == 0.0:
            raise EmptyDataError("signal matrix is identically zero")
        return s
    if mode == "samples":
        return float(X.shape[1])
    if mode == "none":
        return 1.0
    raise ParameterError(f"normalize must be one of {NORMALIZE_MODES}, got {mode!r}")


def z_update(lpos, lneg, ypos, yneg, rho):
    """Projection of ``(l+ - y+/rho, l- - y-/rho)`` onto nonpositive complementary pairs."""
    return kernels.z_project(
        np.ascontiguousarray(lpos, dtype=float),
        np.ascontiguousarray(lneg, dtype=float),
        np.ascontiguousarray(ypos, dtype=float),
        np.ascontiguousarray(yneg, dtype=float),
        float(rho),
    )


class FullMInverse:
    """Applies ``(c I + d Q'Q)^{-1}`` over all pairs in O(n^2).

    Uses ``Q Q' = (n-2) I + 1 1'`` so the inner n x n inverse is a rank-one
    update of a scaled identity.
    """

    def __init__(self, n, c, d):
        if not c > 0:
            raise ParameterError(f"c must be > 0, got {c}")
        if d < 0:
            raise ParameterError(f"d must be >= 0, got {d}")
        self.n, self.c, self.d = n, float(c), float(d)
        self.rows, self.cols = pair_indices(n)
        self._m1 = None

    def apply(self, v):
        """Return ``(M^{-1} v, sum(M^{-1} v))``."""
        n, c, d = self.n, self.c, self.d
        u = kernels.q_apply(v, self.rows, self.cols, n)
        a = c + d * (n - 2)
        w = (u - (d * u.sum() / (a + d * n))) / a
        return kernels.woodbury_combine(v, w, self.rows, self.cols, c, d)

    def ones(self):
        """Cached ``M^{-1} 1`` and its sum."""
        if self._m1 is None:
            self._m1 = self.apply(np.ones(num_pairs(self.n)))
        return self._m1


def safe_rho(alpha1: float, alpha2: float, n: int) -> float:
    """``2 max(alpha) ||P||_2`` with ``||P||_2 = 2n``.

    A heuristic floor for the penalty: small ``rho`` with large ``alpha`` can
    make the iterates cycle. Not a guarantee.
    """
    return 4.0 * max(alpha1, alpha2) * n


def solve_M(v, c: float, d: float, n: Optional[int] = None) -> np.ndarray:
    """``(c I + d Q'Q)^{-1} v`` for an edge vector ``v``."""
    v = np.ascontiguousarray(v, dtype=float)
    if n is None:
        from .graph import n_from_length
        n = n_from_length(v.shape[0])
    return FullMInverse(n, c, d).apply(v)[0]


def l_update(z, y, k_signed, alpha, rho, n=None, op=None):
    """Minimiser of the l-subproblem on ``{1'l = -n}``.

    ``l0 = M^{-1}(rho z + y - k_signed)`` followed by the multiplier
    correction ``l = l0 - mu M^{-1} 1`` with ``mu`` chosen to hit the trace.
    """
    if alpha < 0:
        raise ParameterError("alpha must be >= 0")
    if not rho > 0:
        raise ParameterError("rho must be > 0")
    if op is None:
        from .graph import n_from_length
        if n is None:
            n = n_from_length(len(z))
        op = FullMInverse(n, 4 * alpha + rho, 2 * alpha)
    r = rho * np.asarray(z, dtype=float) + np.asarray(y, dtype=float) - np.asarray(k_signed, dtype=float)
    l0, s0 = op.apply(np.ascontiguousarray(r))
    m1, m1_sum = op.ones()
    mu = (s0 + op.n) / m1_sum
    return l0 - mu * m1


def objective(lpos, lneg, k, alpha1, alpha2, rows=None, cols=None, n=None) -> float:
    """``k'l+ - k'l- + a1 ||l+||_P^2 + a2 ||l-||_P^2``."""
    lpos = np.ascontiguousarray(lpos, dtype=float)
    lneg = np.ascontiguousarray(lneg, dtype=float)
    k = np.asarray(k, dtype=float)
    if rows is None:
        from .graph import n_from_length
        n = n_from_length(lpos.shape[0])
        rows, cols = pair_indices(n)
    val = k @ lpos - k @ lneg
    if alpha1:
        val += alpha1 * kernels.p_norm_sq(lpos, rows, cols, n)
    if alpha2:
        val += alpha2 * kernels.p_norm_sq(lneg, rows, cols, n)
    return float(val)


def _assemble(z, n, tol=1e-3):
    """Rescale a sign-feasible ``z`` onto the trace constraint.

    Scaling keeps signs and the support, so the output is feasible whenever
    ``z`` is nonzero. The flag is False if ``z`` was more than ``tol * n`` off.
    """
    s = z.sum()
    if s < 0:
        return z * (-n / s), abs(s + n) <= tol * n
    return z.copy(), False


def run_admm(k, n, rows, cols, op_pos, op_neg, cfg: AdmmConfig, callback=None):
    """ADMM iterations on edge vectors indexed by ``(rows, cols)``.

    Shared by the full and candidate-set solvers. Returns the final state and
    a ``converged`` flag (objective change and both primal residuals within
    tolerance).
    """
    d = k.shape[0]
    rho, a1, a2 = float(cfg.rho), float(cfg.alpha1), float(cfg.alpha2)
    st = AdmmState(
        lpos=np.zeros(d), lneg=np.zeros(d), zpos=np.zeros(d), zneg=np.zeros(d),
        ypos=np.zeros(d), yneg=np.zeros(d),
    )
    kneg = -k
    prev = None
    converged = False
    for it in range(1, int(cfg.max_iter) + 1):
        st.zpos, st.zneg = kernels.z_project(st.lpos, st.lneg, st.ypos, st.yneg, rho)
        st.lpos = l_update(st.zpos, st.ypos, k, a1, rho, op=op_pos)
        st.lneg = l_update(st.zneg, st.yneg, kneg, a2, rho, op=op_neg)
        rp = kernels.dual_step(st.ypos, st.zpos, st.lpos, rho)
        rn = kernels.dual_step(st.yneg, st.zneg, st.lneg, rho)
        obj = objective(st.lpos, st.lneg, k, a1, a2, rows, cols, n)
        st.iter = it
        if not (np.isfinite(obj) and np.isfinite(rp) and np.isfinite(rn)):
            raise DivergenceError(it)
        st.objective_history.append(obj)
        st.primal_residuals.append((rp, rn))
        if callback is not None:
            callback(it, obj, rp, rn)
        if prev is not None and abs(obj - prev) <= cfg.eps and max(rp, rn) <= cfg.residual_tol:
            converged = True
            break
        prev = obj
    return st, converged


def solve(X, cfg: AdmmConfig = AdmmConfig(), callback: Optional[Callable] = None) -> SolveResult:
    """Learn ``(l+, l-)`` from an ``n x m`` signal matrix.

    ``callback(iteration, objective, residual_pos, residual_neg)`` is invoked
    once per iteration. The returned pair is the final ``z`` iterate (exactly
    sign-complementary) rescaled onto the trace constraint.
    """
    t0 = time.perf_counter()
    X = _check_data(X)
    n = X.shape[0]
    k = compute_k(X) / data_scale(X, cfg.normalize)
    rows, cols = pair_indices(n)
    op_pos = FullMInverse(n, 4 * cfg.alpha1 + cfg.rho, 2 * cfg.alpha1)
    op_neg = FullMInverse(n, 4 * cfg.alpha2 + cfg.rho, 2 * cfg.alpha2)
    st, converged = run_admm(k, n, rows, cols, op_pos, op_neg, cfg, callback)
    return _finish(st, converged, k, n, rows, cols, cfg, t0)


def _finish(st, converged, k, n, rows, cols, cfg, t0, expand=None):
    lpos, ok_pos = _assemble(st.zpos, n)
    lneg, ok_neg = _assemble(st.zneg, n)
    final = objective(lpos, lneg, k, cfg.alpha1, cfg.alpha2, rows, cols, n)
    if expand is not None:
        lpos, lneg = expand(lpos), expand(lneg)
    reason = "converged"
    if not converged:
        reason = "max_iter reached"
    elif not (ok_pos and ok_neg):
        converged = False
        reason = "trace of z iterate too far from -n"
    res = st.primal_residuals[-1] if st.primal_residuals else (np.inf, np.inf)
    return SolveResult(
        pair=LaplacianPairVec(lpos, lneg, n),
        converged=converged,
        iterations=st.iter,
        final_objective=final,
        residuals=tuple(float(r) for r in res),
        objective_history=st.objective_history,
        residual_history=st.primal_residuals,
        runtime_s=time.perf_counter() - t0,
        reason=reason,
        state=st,
    )
