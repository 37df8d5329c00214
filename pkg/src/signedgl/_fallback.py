"""Pure numpy implementations of the per-iteration kernels.

Signatures mirror ``_core.pyx`` exactly; ``kernels`` picks one at import.
"""
import numpy as np


def q_apply(v, rows, cols, n):
    return np.bincount(rows, v, n) + np.bincount(cols, v, n)


def qt_apply(u, rows, cols):
    return u[rows] + u[cols]


def woodbury_combine(r, w, rows, cols, c, d):
    out = (r - d * (w[rows] + w[cols])) / c
    return out, float(out.sum())


def z_project(lpos, lneg, ypos, yneg, rho):
    v = lpos - ypos / rho
    w = lneg - yneg / rho
    zpos = np.where((v < w) & (v < 0), v, 0.0)
    zneg = np.where((w <= v) & (w < 0), w, 0.0)
    return zpos, zneg


def dual_step(y, z, l, rho):
    diff = z - l
    y += rho * diff
    return float(np.sqrt(diff @ diff))


def p_norm_sq(l, rows, cols, n):
    u = q_apply(l, rows, cols, n)
    return float(u @ u + 2.0 * (l @ l))
