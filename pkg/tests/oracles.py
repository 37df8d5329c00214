"""Independent dense reference implementations used only by the tests."""
import itertools

import numpy as np


def dense_Q(n):
    """Explicit n x d matrix with Q upper(W) = W 1 - diag(W) for symmetric W."""
    pairs = list(itertools.combinations(range(n), 2))
    Q = np.zeros((n, len(pairs)))
    for e, (i, j) in enumerate(pairs):
        Q[i, e] = Q[j, e] = 1.0
    return Q


def dense_Q_sub(n, rows, cols):
    Q = np.zeros((n, len(rows)))
    for e, (i, j) in enumerate(zip(rows, cols)):
        Q[i, e] = Q[j, e] = 1.0
    return Q


def dense_P(n):
    Q = dense_Q(n)
    return Q.T @ Q + 2 * np.eye(Q.shape[1])


def lap_from_edge_vec(l, n):
    """Laplacian-like matrix with off-diagonals l and zero row sums, built by loops."""
    L = np.zeros((n, n))
    e = 0
    for i in range(n):
        for j in range(i + 1, n):
            L[i, j] = L[j, i] = l[e]
            e += 1
    for i in range(n):
        L[i, i] = -(L[i].sum() - L[i, i])
    return L


def matrix_objective(X, lpos, lneg, a1, a2):
    """tr(X'L+X) - tr(X'L-X) + a1 ||L+||_F^2 + a2 ||L-||_F^2 from explicit matrices."""
    n = X.shape[0]
    Lp, Ln = lap_from_edge_vec(lpos, n), lap_from_edge_vec(lneg, n)
    return (np.trace(X.T @ Lp @ X) - np.trace(X.T @ Ln @ X)
            + a1 * np.sum(Lp ** 2) + a2 * np.sum(Ln ** 2))


def kkt_l_update(z, y, k_signed, alpha, rho, n):
    """Dense KKT solve of ``min k_s'l + alpha l'Pl + (rho/2)||l - z - y/rho||^2`` s.t. ``1'l = -n``."""
    P = dense_P(n)
    d = P.shape[0]
    H = 2 * alpha * P + rho * np.eye(d)
    K = np.zeros((d + 1, d + 1))
    K[:d, :d] = H
    K[:d, d] = 1.0
    K[d, :d] = 1.0
    rhs = np.r_[rho * z + y - k_signed, -n]
    return np.linalg.solve(K, rhs)[:d]


def _face_values(g, P, alpha, n):
    """For every support T (bitmask), the equality-constrained minimum of
    ``g'l + alpha l'Pl`` over ``{l_T free, l_rest = 0, 1'l = -n}`` when that
    minimiser is sign-feasible (l <= 0), else +inf."""
    d = g.shape[0]
    vals = np.full(1 << d, np.inf)
    for mask in range(1, 1 << d):
        S = [e for e in range(d) if mask >> e & 1]
        s = len(S)
        K = np.zeros((s + 1, s + 1))
        K[:s, :s] = 2 * alpha * P[np.ix_(S, S)]
        K[:s, s] = 1.0
        K[s, :s] = 1.0
        try:
            sol = np.linalg.solve(K, np.r_[-g[S], -n])
        except np.linalg.LinAlgError:
            continue
        l = sol[:s]
        if np.all(l <= 1e-12):
            vals[mask] = g[S] @ l + alpha * l @ P[np.ix_(S, S)] @ l
    return vals


def support_qp_values(g, P, alpha, n):
    """Optimal value of the nonnegativity QP ``min g'l + alpha l'Pl`` s.t.
    ``1'l = -n``, ``l <= 0``, ``l = 0`` off support S, for every S.

    Solved exactly by active-set enumeration: the optimum of a strictly convex
    QP on support S is the equality-constrained minimiser of one face T of S,
    so value(S) = min over sign-feasible faces T subset of S (subset-min transform).
    """
    d = g.shape[0]
    v = _face_values(g, P, alpha, n)
    for e in range(d):
        bit = 1 << e
        for mask in range(1 << d):
            if mask & bit and v[mask ^ bit] < v[mask]:
                v[mask] = v[mask ^ bit]
    return v


def enumeration_oracle(k, n, alpha1, alpha2):
    """Global optimum over all 3^d sign patterns (each pair +, - or absent).

    Each pattern's value is the sum of two independent nonnegativity QPs (the
    objective and constraints separate between l+ and l-).
    """
    P = dense_P(n)
    d = k.shape[0]
    fpos = support_qp_values(k, P, alpha1, n)
    fneg = support_qp_values(-k, P, alpha2, n)
    best = np.inf
    for pattern in itertools.product((0, 1, 2), repeat=d):
        sp = sum(1 << e for e, t in enumerate(pattern) if t == 1)
        sn = sum(1 << e for e, t in enumerate(pattern) if t == 2)
        val = fpos[sp] + fneg[sn]
        if val < best:
            best = val
    return best


def brute_average_precision(scores, relevant):
    """Average precision by enumerating every distinct threshold explicitly."""
    scores = np.asarray(scores, float)
    relevant = np.asarray(relevant, bool)
    total = relevant.sum()
    ap, prev_recall = 0.0, 0.0
    for t in sorted(set(scores.tolist()), reverse=True):
        sel = scores >= t
        tp = np.sum(sel & relevant)
        recall = tp / total
        precision = tp / sel.sum()
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap
