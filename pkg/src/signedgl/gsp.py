"""Spectral tools built on the net Laplacian.

The net Laplacian has an indefinite spectrum, so total variation is taken
with the shifted operator ``L_n + gamma I`` where ``gamma >= |lambda_min|``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError, ParameterError, ShiftTooSmallError
from .graph import SignedGraph, signed_laplacian

FILTER_KINDS = ("gaussian", "heat", "tikhonov")


@dataclass(frozen=True, eq=False)
class NetSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gamma: float

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    def shifted(self) -> np.ndarray:
        """Reconstruct ``L_n + gamma I``."""
        V = self.eigenvectors
        return (V * (self.eigenvalues + self.gamma)) @ V.T


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    eta: float

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in FILTER_KINDS:
            raise ParameterError(f"filter kind must be one of {FILTER_KINDS}, got {self.kind!r}")
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ParameterError(f"filter parameter eta must be > 0, got {self.eta}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "eta", float(self.eta))


def spectrum(L, gamma="auto") -> NetSpectrum:
    """Full eigendecomposition of a symmetric net Laplacian.

    ``gamma="auto"`` picks the smallest shift making ``L + gamma I`` PSD.
    A numeric ``gamma`` must satisfy ``gamma >= |lambda_min|``.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionError(f"expected square matrix, got {L.shape}")
    try:
        lam, V = np.linalg.eigh((L + L.T) / 2)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    lam_min = lam[0]
    if gamma == "auto":
        g = max(0.0, -lam_min)
    else:
        g = float(gamma)
        # eigh round-off on a zero eigenvalue can give a tiny negative lambda_min
        tol = 1e-12 * max(1.0, np.abs(lam).max())
        if g < abs(lam_min) - tol:
            raise ShiftTooSmallError(f"gamma={g} is below |lambda_min|={abs(lam_min)}")
    lam.flags.writeable = False
    V.flags.writeable = False
    return NetSpectrum(lam, V, g)


def _check_signal(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != n:
        raise DimensionError(f"signal has {x.shape[0]} entries, graph has {n} nodes")
    return x


def total_variation_net(x, G: SignedGraph, gamma: float) -> float:
    """``sum_edges s w (x_i - x_j)^2 + gamma ||x||^2`` (equals ``x^T (L_n + gamma I) x``)."""
    x = _check_signal(x, G.n)
    diff = x[G.rows] - x[G.cols]
    return float(np.sum(G.signs * G.weights * diff**2) + gamma * (x @ x))


def total_variation_signed_laplacian(x, G: SignedGraph) -> float:
    """``sum_edges w (x_i - s x_j)^2``, the quadratic form of ``L_s``."""
    x = _check_signal(x, G.n)
    diff = x[G.rows] - G.signs * x[G.cols]
    return float(np.sum(G.weights * diff**2))


def signed_laplacian_form(x, G: SignedGraph) -> float:
    x = _check_signal(x, G.n)
    return float(x @ signed_laplacian(G) @ x)


def gft(S: NetSpectrum, x) -> np.ndarray:
    x = _check_signal(x, S.n)
    return S.eigenvectors.T @ x


def igft(S: NetSpectrum, xhat) -> np.ndarray:
    xhat = _check_signal(xhat, S.n)
    return S.eigenvectors @ xhat


def scaled_eigenvalues(S: NetSpectrum) -> np.ndarray:
    """Eigenvalues min-max scaled to [0, 1]; all zeros when the spectrum is flat."""
    lam = S.eigenvalues
    span = lam[-1] - lam[0]
    if span <= 1e-12 * max(1.0, abs(lam[-1])):
        return np.zeros_like(lam)
    return np.clip((lam - lam[0]) / span, 0.0, 1.0)


def frequency_response(f: FilterSpec, lam_hat) -> np.ndarray:
    lam_hat = np.asarray(lam_hat, dtype=float)
    if f.kind == "gaussian":
        return 1.0 / (lam_hat + f.eta)
    if f.kind == "heat":
        return np.exp(-f.eta * lam_hat)
    return 1.0 / (1.0 + f.eta * lam_hat)


def build_filter(S: NetSpectrum, f: FilterSpec) -> np.ndarray:
    """``H = V h(Lambda_hat) V^T``."""
    h = frequency_response(f, scaled_eigenvalues(S))
    V = S.eigenvectors
    H = (V * h) @ V.T
    return (H + H.T) / 2
