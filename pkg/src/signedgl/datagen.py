"""Synthetic signed graphs and smooth signals.

ER and BA graphs get signs from node polarities (same polarity -> positive),
which yields a balanced graph; a fraction ``zeta`` of the signs is then
flipped. RGG graphs connect each point to its ``k_rgg`` nearest points with
positive edges and its ``k_rgg`` farthest with negative edges. All weights
are 1.

Each generator splits its seed into independent streams (topology, signs,
flips) so that changing ``zeta`` only changes which signs get flipped.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError
from .graph import SignedGraph, net_laplacian, pair_indices
from .gsp import FilterSpec, build_filter, spectrum

GRAPH_KINDS = ("er", "ba", "rgg")


@dataclass(frozen=True)
class GraphModelSpec:
    kind: str
    n: int
    p: Optional[float] = None
    m_ba: Optional[int] = None
    k_rgg: Optional[int] = None
    zeta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind not in GRAPH_KINDS:
            raise ParameterError(f"graph kind must be one of {GRAPH_KINDS}, got {self.kind!r}")
        if int(self.n) < 2:
            raise ParameterError("n must be >= 2")
        if not (0.0 <= self.zeta <= 1.0):
            raise ParameterError(f"zeta must be in [0, 1], got {self.zeta}")
        if kind == "er" and not (self.p is not None and 0 < self.p <= 1):
            raise ParameterError(f"ER needs p in (0, 1], got {self.p}")
        if kind == "ba" and not (self.m_ba is not None and 1 <= self.m_ba < self.n):
            raise ParameterError(f"BA needs 1 <= m_ba < n, got {self.m_ba}")
        if kind == "rgg":
            if not (self.k_rgg is not None and 1 <= self.k_rgg <= self.n - 1):
                raise ParameterError(f"RGG needs 1 <= k_rgg <= n-1, got {self.k_rgg}")
            if self.zeta:
                raise ParameterError("zeta applies to ER/BA graphs only")


@dataclass(frozen=True)
class SignalGenSpec:
    filter: FilterSpec
    m: int
    noise_pct: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.m) < 1:
            raise ParameterError("m must be >= 1")
        if not self.noise_pct >= 0:
            raise ParameterError("noise_pct must be >= 0")


def _streams(seed, count):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _er_edges(n, p, rng):
    rows, cols = pair_indices(n)
    keep = rng.random(rows.size) < p
    return rows[keep], cols[keep]


def _ba_edges(n, m_ba, rng):
    """Preferential attachment grown from an ``m_ba``-clique."""
    deg = np.zeros(n)
    edges = []
    for i in range(m_ba):
        for j in range(i + 1, m_ba):
            edges.append((i, j))
    if m_ba > 1:
        deg[:m_ba] = m_ba - 1
    for new in range(m_ba, n):
        weights = deg[:new]
        total = weights.sum()
        probs = weights / total if total > 0 else None
        targets = rng.choice(new, size=m_ba, replace=False, p=probs)
        for t in targets:
            edges.append((int(t), new))
            deg[t] += 1
        deg[new] += m_ba
    if not edges:
        return np.empty(0, np.intp), np.empty(0, np.intp)
    e = np.array(edges, dtype=np.intp)
    return e[:, 0], e[:, 1]


def flip_count(zeta, num_edges):
    """Number of signs flipped; ``round`` is half-to-even."""
    return int(round(zeta * num_edges))


def gen_signed_er_ba(spec: GraphModelSpec) -> SignedGraph:
    if spec.kind not in ("er", "ba"):
        raise ParameterError("gen_signed_er_ba needs an ER or BA spec")
    topo, pol_rng, flip_rng = _streams(spec.seed, 3)
    if spec.kind == "er":
        rows, cols = _er_edges(spec.n, spec.p, topo)
    else:
        rows, cols = _ba_edges(spec.n, spec.m_ba, topo)
    polarity = np.where(pol_rng.random(spec.n) < 0.5, 1, -1)
    signs = np.where(polarity[rows] == polarity[cols], 1, -1)
    # sorted edge order first so the flip permutation is independent of construction order
    order = np.lexsort((cols, rows))
    rows, cols, signs = rows[order], cols[order], signs[order]
    perm = flip_rng.permutation(rows.size)
    signs[perm[: flip_count(spec.zeta, rows.size)]] *= -1
    return SignedGraph(spec.n, rows, cols, np.ones(rows.size), signs)


def gen_signed_rgg(spec: GraphModelSpec) -> SignedGraph:
    """Points in the unit square; near neighbours positive, far ones negative.

    A pair proposed both ways (only possible when ``k_rgg >= (n-1)/2``) keeps
    the positive sign.
    """
    if spec.kind != "rgg":
        raise ParameterError("gen_signed_rgg needs an RGG spec")
    (rng,) = _streams(spec.seed, 1)
    n, k = spec.n, spec.k_rgg
    pts = rng.random((n, 2))
    D = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    pos, neg = set(), set()
    for i in range(n):
        d = D[i].copy()
        d[i] = np.inf
        for j in np.argsort(d, kind="stable")[:k]:
            pos.add((min(i, j), max(i, j)))
        d[i] = -np.inf
        for j in np.argsort(-d, kind="stable")[:k]:
            neg.add((min(i, j), max(i, j)))
    neg -= pos
    edges = [(i, j, 1.0, 1) for i, j in pos] + [(i, j, 1.0, -1) for i, j in neg]
    return SignedGraph.from_edges(n, edges)


def generate_graph(spec: GraphModelSpec) -> SignedGraph:
    if spec.kind == "rgg":
        return gen_signed_rgg(spec)
    return gen_signed_er_ba(spec)


def column_rng(seed, j):
    """Independent stream for signal column ``j``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,)))


def gen_signals(G: SignedGraph, spec: SignalGenSpec, H=None) -> np.ndarray:
    """``X[:, j] = H x0_j`` plus noise of exactly ``noise_pct`` % of the column's l2 norm."""
    n, m = G.n, int(spec.m)
    if H is None:
        H = build_filter(spectrum(net_laplacian(G)), spec.filter)
    X0 = np.empty((n, m))
    U = np.empty((n, m))
    for j in range(m):
        rng = column_rng(spec.seed, j)
        X0[:, j] = rng.standard_normal(n)
        U[:, j] = rng.standard_normal(n)
    X = H @ X0
    if spec.noise_pct:
        xn = np.linalg.norm(X, axis=0)
        un = np.linalg.norm(U, axis=0)
        X = X + (spec.noise_pct / 100.0) * U * (xn / un)
    return X


def is_balanced(G: SignedGraph) -> bool:
    """True iff nodes 2-colour so positive edges join equal colours and negative edges differ.

    Equivalent to every cycle having an even number of negative edges.
    """
    adj = [[] for _ in range(G.n)]
    for i, j, _, s in G.edges():
        adj[i].append((j, s))
        adj[j].append((i, s))
    colour = [0] * G.n
    for start in range(G.n):
        if colour[start]:
            continue
        colour[start] = 1
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v, s in adj[u]:
                want = colour[u] * s
                if colour[v] == 0:
                    colour[v] = want
                    queue.append(v)
                elif colour[v] != want:
                    return False
    return True
