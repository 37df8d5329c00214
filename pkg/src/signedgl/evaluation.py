"""Edge-recovery metrics and hyperparameter grid search."""
from __future__ import annotations

import csv
import math
import os
import time
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .admm import AdmmConfig, SolveResult, solve
from .errors import DimensionError, ParameterError, SignedGLError, UndefinedMetricError
from .graph import (
    SignedGraph,
    decompose_adjacency,
    from_upper,
    laplacian,
    laplacians_from_vec,
    num_pairs,
    pair_indices,
)

TABLE_COLUMNS = (
    "alpha1", "alpha2", "macro_f1", "f1_pos", "f1_neg", "auprc_ratio",
    "frob_error", "iterations", "runtime_ms", "converged",
)
METRICS = ("macro_f1", "auprc_ratio")


@dataclass(frozen=True, eq=False)
class SignPrediction:
    """Predicted edge classes in ``{-1, 0, +1}`` and optional signed scores, as edge vectors."""

    n: int
    labels: np.ndarray
    scores: Optional[np.ndarray] = None

    def adjacency(self) -> np.ndarray:
        return from_upper(self.labels.astype(float), self.n)

    def score_matrix(self) -> Optional[np.ndarray]:
        return None if self.scores is None else from_upper(self.scores, self.n)

    @classmethod
    def from_matrices(cls, A_hat, scores=None):
        A_hat = np.asarray(A_hat, dtype=float)
        n = A_hat.shape[0]
        r, c = pair_indices(n)
        if np.any(np.abs(A_hat - A_hat.T) > 0):
            raise ParameterError("prediction must be symmetric")
        labels = np.sign(A_hat[r, c]).astype(np.int8)
        s = None if scores is None else np.asarray(scores, dtype=float)[r, c]
        return cls(n, labels, s)


def default_threshold(n: int) -> float:
    # 1e-6 of the mean entry magnitude implied by the trace constraint
    return 1e-6 * n / num_pairs(n)


def classify_edges(result, tol: Optional[float] = None) -> SignPrediction:
    """Threshold a solved pair into +1 / -1 / 0 edge labels.

    ``result`` is a :class:`SolveResult` or :class:`LaplacianPairVec`.
    Scores are ``(-l+) - (-l-)``.
    """
    pair = result.pair if isinstance(result, SolveResult) else result
    if tol is None:
        tol = default_threshold(pair.n)
    wpos, wneg = -pair.lpos, -pair.lneg
    labels = np.zeros(wpos.shape[0], dtype=np.int8)
    labels[wpos > tol] = 1
    labels[wneg > tol] = -1
    return SignPrediction(pair.n, labels, wpos - wneg)


def _truth_labels(truth: SignedGraph, n):
    if truth.n != n:
        raise DimensionError(f"prediction has n={n}, truth has n={truth.n}")
    return np.sign(truth.signed_edge_vector()).astype(np.int8)


def _f1_exact(pred, true) -> Fraction:
    tp = int(np.count_nonzero(pred & true))
    denom = int(np.count_nonzero(pred)) + int(np.count_nonzero(true))
    return Fraction(1) if denom == 0 else Fraction(2 * tp, denom)


def binary_f1(pred: np.ndarray, true: np.ndarray) -> float:
    """F1 of boolean masks; 1 when both are empty, 0 when only one is."""
    return float(_f1_exact(pred, true))


def macro_f1(pred: SignPrediction, truth: SignedGraph):
    """``(F1(A+^, A+) + F1(A-^, A-)) / 2`` over unordered pairs, correctly rounded."""
    t = _truth_labels(truth, pred.n)
    f_pos = _f1_exact(pred.labels > 0, t > 0)
    f_neg = _f1_exact(pred.labels < 0, t < 0)
    return float((f_pos + f_neg) / 2), float(f_pos), float(f_neg)


def _average_precision_exact(scores, relevant) -> Fraction:
    """``sum_k (R_k - R_{k-1}) P_k`` as an exact rational.

    Thresholds run over the distinct scores in descending order, so tied
    scores enter as one block. Only blocks holding relevant items contribute,
    which keeps the rational sum short.
    """
    scores = np.asarray(scores, dtype=float)
    relevant = np.asarray(relevant, dtype=bool)
    total = int(np.count_nonzero(relevant))
    if total == 0:
        raise UndefinedMetricError("no relevant items")
    order = np.argsort(-scores, kind="stable")
    s, rel = scores[order], relevant[order]
    tp = np.cumsum(rel)
    last = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp_at, seen = tp[last], last + 1
    gained = np.diff(np.r_[0, tp_at])
    hit = np.nonzero(gained)[0]
    acc = sum(Fraction(int(g) * int(t), int(k)) for g, t, k in zip(gained[hit], tp_at[hit], seen[hit]))
    return Fraction(acc, total)


def average_precision(scores, relevant) -> float:
    """Step-wise area under the precision-recall curve (correctly rounded)."""
    return float(_average_precision_exact(scores, relevant))


def auprc_ratio(pred: SignPrediction, truth: SignedGraph):
    """Mean over signs of ``AUPRC / density``; signs absent from the truth are skipped.

    Returns ``(ratio, auprc_pos, auprc_neg)`` with ``nan`` for skipped signs.
    """
    if pred.scores is None:
        raise UndefinedMetricError("prediction carries no scores")
    t = _truth_labels(truth, pred.n)
    d = t.shape[0]
    parts, out = [], {}
    for sign, scores in ((1, pred.scores), (-1, -pred.scores)):
        rel = t == sign
        cnt = int(np.count_nonzero(rel))
        if cnt == 0:
            out[sign] = math.nan
            continue
        ap = _average_precision_exact(scores, rel)
        out[sign] = float(ap)
        parts.append(ap * Fraction(d, cnt))
    if not parts:
        raise UndefinedMetricError("truth has no edges of either sign")
    return float(sum(parts) / len(parts)), out[1], out[-1]


def truth_laplacians(truth: SignedGraph):
    """``L0+`` and ``L0-`` each rescaled to trace ``2n`` (left as zero if empty)."""
    Apos, Aneg = decompose_adjacency(truth)
    out = []
    for A in (Apos, Aneg):
        L = laplacian(A)
        tr = np.trace(L)
        out.append(L * (2 * truth.n / tr) if tr > 0 else L)
    return tuple(out)


def frob_error(result, truth: SignedGraph) -> float:
    """``||blockdiag(L^+, L^-) - blockdiag(L0+, L0-)||_F``."""
    pair = result.pair if isinstance(result, SolveResult) else result
    if pair.n != truth.n:
        raise DimensionError(f"result has n={pair.n}, truth has n={truth.n}")
    Lp, Ln, _ = laplacians_from_vec(pair)
    L0p, L0n = truth_laplacians(truth)
    return float(np.sqrt(np.sum((Lp - L0p) ** 2) + np.sum((Ln - L0n) ** 2)))


@dataclass
class EvalReport:
    macro_f1: float
    f1_pos: float
    f1_neg: float
    auprc_ratio: float
    frob_error: float
    runtime_ms: float
    iterations: int
    converged: bool
    final_residuals: tuple = (math.nan, math.nan)

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def evaluate(result: SolveResult, truth: SignedGraph, tol=None) -> EvalReport:
    pred = classify_edges(result, tol)
    mf, fp, fn = macro_f1(pred, truth)
    try:
        ar = auprc_ratio(pred, truth)[0]
    except UndefinedMetricError:
        ar = math.nan
    return EvalReport(
        macro_f1=mf, f1_pos=fp, f1_neg=fn, auprc_ratio=ar,
        frob_error=frob_error(result, truth),
        runtime_ms=1000.0 * result.runtime_s,
        iterations=result.iterations,
        converged=bool(result.converged),
        final_residuals=result.residuals,
    )


def log_grid(start: float, step: float, count: int, base: float = 10.0):
    """``[base**(start + r*step) for r in range(count)]``."""
    return [float(base ** (start + r * step)) for r in range(count)]


@dataclass(frozen=True)
class GridSpec:
    alpha1_values: Sequence[float]
    alpha2_values: Sequence[float]
    metric: str = "macro_f1"

    def __post_init__(self):
        if not self.alpha1_values or not self.alpha2_values:
            raise ParameterError("grid value lists must be non-empty")
        if any(a <= 0 for a in list(self.alpha1_values) + list(self.alpha2_values)):
            raise ParameterError("grid values must be positive")
        if self.metric not in METRICS:
            raise ParameterError(f"metric must be one of {METRICS}")
        object.__setattr__(self, "alpha1_values", tuple(float(a) for a in self.alpha1_values))
        object.__setattr__(self, "alpha2_values", tuple(float(a) for a in self.alpha2_values))

    def cells(self):
        return [(a1, a2) for a1 in self.alpha1_values for a2 in self.alpha2_values]


@dataclass
class GridResult:
    best: Optional[dict]
    table: list = field(default_factory=list)

    def write_csv(self, path):
        write_table(path, self.table)


def write_table(path, table, columns=TABLE_COLUMNS):
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in table:
            w.writerow([_fmt(row.get(c)) for c in columns])
    os.replace(tmp, path)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def default_workers():
    try:
        return max(1, int(os.environ.get("SIGNEDGL_THREADS", "1")))
    except ValueError:
        return 1


def grid_search(X, grid: GridSpec, truth: SignedGraph, solver: str = "exact",
                base: AdmmConfig = AdmmConfig(), candidates=None, workers: Optional[int] = None,
                tol=None) -> GridResult:
    """Solve every ``(alpha1, alpha2)`` cell and pick the best by ``grid.metric``.

    Cell failures are recorded in the row's ``error`` field and never abort
    the sweep. Ties go to the lexicographically smaller ``(alpha1, alpha2)``.
    ``solver="fast"`` needs a :class:`~signedgl.fast.CandidateEdgeSet`.
    """
    if solver not in ("exact", "fast"):
        raise ParameterError(f"solver must be 'exact' or 'fast', got {solver!r}")
    if solver == "fast":
        from .fast import solve_fast
        if candidates is None:
            raise ParameterError("fast solver needs a candidate edge set")
    X = np.asarray(X, dtype=float)

    def run(cell):
        a1, a2 = cell
        row = {"alpha1": a1, "alpha2": a2}
        t0 = time.perf_counter()
        try:
            cfg = AdmmConfig(a1, a2, base.rho, base.max_iter, base.eps, base.residual_tol, base.normalize)
            res = solve(X, cfg) if solver == "exact" else solve_fast(X, candidates, cfg)
            rep = evaluate(res, truth, tol)
            row.update(rep.as_dict())
            row.pop("final_residuals")
        except SignedGLError as exc:
            row.update({c: math.nan for c in TABLE_COLUMNS[2:7]})
            row.update(iterations=0, converged=False, error=f"{type(exc).__name__}: {exc}")
            row["runtime_ms"] = 1000.0 * (time.perf_counter() - t0)
        return row

    cells = grid.cells()
    workers = default_workers() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table = list(pool.map(run, cells))
    else:
        table = [run(c) for c in cells]
    table.sort(key=lambda r: (r["alpha1"], r["alpha2"]))
    best = None
    for row in table:
        v = row.get(grid.metric, math.nan)
        if v is None or math.isnan(v):
            continue
        if best is None or v > best[grid.metric]:
            best = row
    return GridResult(best, table)
