import csv
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import average_precision_score

from oracles import brute_average_precision
from signedgl import evaluation
from signedgl.admm import solve
from signedgl.datagen import GraphModelSpec, SignalGenSpec, gen_signals, generate_graph
from signedgl.errors import NumericalError, ParameterError, UndefinedMetricError
from signedgl.evaluation import (
    TABLE_COLUMNS, GridSpec, SignPrediction, auprc_ratio, average_precision, classify_edges, evaluate,
    frob_error, grid_search, log_grid, macro_f1, truth_laplacians,
)
from signedgl.fast import build_candidates
from signedgl.graph import LaplacianPairVec, SignedGraph, laplacian_from_vec, upper
from signedgl.gsp import FilterSpec

# n = 3 pairs in order: (0,1), (0,2), (1,2)
TRUTH3 = SignedGraph.from_edges(3, [(0, 1, 1.0, 1), (0, 2, 1.0, -1)])


def pred(labels, scores=None):
    return SignPrediction(3, np.array(labels, dtype=np.int8), None if scores is None else np.array(scores, float))


class TestClassify:
    def test_examples(self):
        p = classify_edges(LaplacianPairVec(np.array([-0.5, 0, 0]), np.array([0, 0, -2.0]), 3), tol=1e-6)
        assert p.labels.tolist() == [1, 0, -1]
        np.testing.assert_array_equal(p.scores, [0.5, 0, -2.0])

    def test_threshold_above_everything(self):
        p = classify_edges(LaplacianPairVec(np.array([-0.5, 0, 0]), np.array([0, 0, -2.0]), 3), tol=5.0)
        assert not p.labels.any()

    def test_default_threshold_scale(self):
        pair = LaplacianPairVec(np.array([-1e-9, -3.0, 0]), np.zeros(3), 3)
        assert classify_edges(pair).labels.tolist() == [0, 1, 0]

    def test_from_matrices(self):
        A = np.array([[0, 2, -1], [2, 0, 0], [-1, 0, 0.0]])
        p = SignPrediction.from_matrices(A, A)
        assert p.labels.tolist() == [1, -1, 0]
        np.testing.assert_array_equal(p.adjacency(), np.sign(A))


class TestMacroF1:
    def test_perfect(self):
        assert macro_f1(pred([1, -1, 0]), TRUTH3) == (1.0, 1.0, 1.0)

    def test_all_zero(self):
        assert macro_f1(pred([0, 0, 0]), TRUTH3)[0] == 0.0

    def test_hand_confusion_table(self):
        mf, fp, fn = macro_f1(pred([1, 1, 0]), TRUTH3)
        assert fp == 2 / 3 and fn == 0.0 and mf == 1 / 3

    def test_empty_sign_on_both_sides(self):
        truth = SignedGraph.from_edges(3, [(0, 1, 1.0, 1)])
        assert macro_f1(pred([1, 0, 0]), truth) == (1.0, 1.0, 1.0)


class TestAveragePrecision:
    def test_perfect_ranking(self):
        rel = np.zeros(10, bool)
        rel[3] = True
        scores = -np.arange(10.0)
        scores[3] = 99
        assert average_precision(scores, rel) == 1.0

    def test_constant_scores_equal_density(self):
        rel = np.array([1, 0, 0, 1, 0, 0, 0, 0], bool)
        assert average_precision(np.zeros(8), rel) == 0.25

    def test_one_inversion_hand_enumeration(self):
        # relevant: pairs 0 and 2; ranking 0 > 1 > 2 puts one irrelevant pair in between
        # thresholds: (R=1/2, P=1), (R=1/2, P=1/2), (R=1, P=2/3) -> 1/2 + 0 + 1/3
        assert average_precision([3.0, 2.0, 1.0], [True, False, True]) == 5 / 6

    def test_no_relevant(self):
        with pytest.raises(UndefinedMetricError):
            average_precision([1.0, 2.0], [False, False])

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**31), size=st.integers(2, 40), levels=st.integers(2, 6))
    def test_against_oracles(self, seed, size, levels):
        rng = np.random.default_rng(seed)
        rel = rng.random(size) < 0.3
        if not rel.any():
            rel[0] = True
        scores = rng.integers(0, levels, size).astype(float)  # plenty of ties
        ap = average_precision(scores, rel)
        assert ap == pytest.approx(brute_average_precision(scores, rel), abs=1e-12)
        assert ap == pytest.approx(average_precision_score(rel, scores), abs=1e-12)


class TestAuprcRatio:
    def test_perfect_scorer(self):
        G = generate_graph(GraphModelSpec("er", 12, p=0.3, zeta=0.2, seed=0))
        a = G.signed_edge_vector()
        p = SignPrediction(12, np.sign(a).astype(np.int8), a.copy())
        d = a.size
        dpos, dneg = Fraction(np.count_nonzero(a > 0), d), Fraction(np.count_nonzero(a < 0), d)
        ratio, ap_pos, ap_neg = auprc_ratio(p, G)
        assert ap_pos == 1.0 and ap_neg == 1.0
        assert ratio == float((1 / dpos + 1 / dneg) / 2)

    def test_single_sign_truth_skips_other(self):
        truth = SignedGraph.from_edges(5, [(0, 1, 1.0, 1)])
        scores = np.zeros(10)
        scores[0] = 1.0
        ratio, ap_pos, ap_neg = auprc_ratio(SignPrediction(5, np.sign(scores).astype(np.int8), scores), truth)
        assert ratio == 10.0 and ap_pos == 1.0 and math.isnan(ap_neg)

    def test_needs_scores(self):
        with pytest.raises(UndefinedMetricError):
            auprc_ratio(pred([1, 0, 0]), TRUTH3)


class TestFrobenius:
    def truth_pair(self, G):
        L0p, L0n = truth_laplacians(G)
        return LaplacianPairVec(upper(L0p), upper(L0n), G.n)

    def test_zero_at_truth(self):
        G = generate_graph(GraphModelSpec("ba", 15, m_ba=2, zeta=0.2, seed=1))
        assert frob_error(self.truth_pair(G), G) == pytest.approx(0.0, abs=1e-12)

    def test_truth_trace(self):
        G = generate_graph(GraphModelSpec("ba", 15, m_ba=2, zeta=0.2, seed=1))
        for L in truth_laplacians(G):
            assert np.trace(L) == pytest.approx(30)

    def test_one_pair_perturbation(self):
        G = generate_graph(GraphModelSpec("ba", 10, m_ba=2, zeta=0.2, seed=2))
        p = self.truth_pair(G)
        lpos = p.lpos.copy()
        lpos[7] -= 1.0
        q = LaplacianPairVec(lpos, p.lneg, G.n)
        # off-diagonal change -1 twice, diagonal change +1 twice
        assert frob_error(q, G) == pytest.approx(2.0, rel=1e-12)
        D = laplacian_from_vec(lpos, G.n) - laplacian_from_vec(p.lpos, G.n)
        assert np.sqrt(np.sum(D**2)) == pytest.approx(2.0, rel=1e-12)


@pytest.fixture(scope="module")
def problem():
    G = generate_graph(GraphModelSpec("ba", 25, m_ba=3, zeta=0.1, seed=3))
    X = gen_signals(G, SignalGenSpec(FilterSpec("heat", 2.0), 500, 10, seed=4))
    return G, X


class TestEvaluate:
    def test_report(self, problem):
        G, X = problem
        res = solve(X)
        rep = evaluate(res, G)
        assert 0 <= rep.macro_f1 <= 1 and rep.auprc_ratio > 1
        assert rep.iterations == res.iterations and rep.converged
        assert set(TABLE_COLUMNS[2:]) <= set(rep.as_dict())


class TestGrid:
    def test_log_grid(self):
        g = log_grid(-3, 0.1, 21)
        assert len(g) == 21 and g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(1e-1)
        assert len(GridSpec(g, g).cells()) == 441

    def test_singleton(self, problem):
        G, X = problem
        out = grid_search(X, GridSpec([0.02], [0.03]), G)
        assert len(out.table) == 1 and out.best["alpha1"] == 0.02 and out.best["alpha2"] == 0.03

    def test_best_is_table_max(self, problem):
        G, X = problem
        out = grid_search(X, GridSpec([0.003, 0.03], [0.003, 0.03]), G)
        assert out.best["macro_f1"] == max(r["macro_f1"] for r in out.table)
        top = [r for r in out.table if r["macro_f1"] == out.best["macro_f1"]]
        assert out.best is top[0]  # ties resolve to the smallest (alpha1, alpha2)

    def test_auprc_metric_and_fast(self, problem):
        G, X = problem
        out = grid_search(X, GridSpec([0.01], [0.01, 0.1], "auprc_ratio"), G, solver="fast",
                          candidates=build_candidates(X, 6))
        assert out.best["auprc_ratio"] == max(r["auprc_ratio"] for r in out.table)

    def test_threads_same_result(self, problem):
        G, X = problem
        grid = GridSpec([0.005, 0.05], [0.01, 0.1])
        a = grid_search(X, grid, G, workers=1)
        b = grid_search(X, grid, G, workers=3)
        assert [r["macro_f1"] for r in a.table] == [r["macro_f1"] for r in b.table]

    def test_failed_cell_recorded(self, problem, monkeypatch):
        G, X = problem
        real = evaluation.solve

        def flaky(X, cfg):
            if cfg.alpha1 == 0.5:
                raise NumericalError("boom")
            return real(X, cfg)
        monkeypatch.setattr(evaluation, "solve", flaky)
        out = grid_search(X, GridSpec([0.01, 0.5], [0.01]), G)
        bad = [r for r in out.table if r["alpha1"] == 0.5][0]
        assert "NumericalError" in bad["error"] and math.isnan(bad["macro_f1"])
        assert out.best["alpha1"] == 0.01

    def test_write_csv(self, problem, tmp_path):
        G, X = problem
        out = grid_search(X, GridSpec([0.01], [0.01, 0.02]), G)
        path = tmp_path / "grid.csv"
        out.write_csv(path)
        rows = list(csv.reader(open(path)))
        assert tuple(rows[0]) == TABLE_COLUMNS and len(rows) == 3

    @pytest.mark.parametrize("kw", [dict(alpha1_values=[]), dict(alpha1_values=[-1.0]), dict(metric="acc")])
    def test_invalid_grid(self, kw):
        args = dict(alpha1_values=[0.1], alpha2_values=[0.1], metric="macro_f1")
        args.update(kw)
        with pytest.raises(ParameterError):
            GridSpec(**args)

    def test_fast_needs_candidates(self, problem):
        G, X = problem
        with pytest.raises(ParameterError):
            grid_search(X, GridSpec([0.1], [0.1]), G, solver="fast")
