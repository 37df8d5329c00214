# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-iteration kernels (same contracts as ``_fallback``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def q_apply(const double[::1] v, const cnp.intp_t[::1] rows, const cnp.intp_t[::1] cols, Py_ssize_t n):
    cdef cnp.ndarray[double, ndim=1] out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t e, m = v.shape[0]
    with nogil:
        for e in range(m):
            out[rows[e]] += v[e]
            out[cols[e]] += v[e]
    return out_arr


def qt_apply(const double[::1] u, const cnp.intp_t[::1] rows, const cnp.intp_t[::1] cols):
    cdef Py_ssize_t e, m = rows.shape[0]
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    with nogil:
        for e in range(m):
            out[e] = u[rows[e]] + u[cols[e]]
    return out_arr


def woodbury_combine(const double[::1] r, const double[::1] w, const cnp.intp_t[::1] rows,
                     const cnp.intp_t[::1] cols, double c, double d):
    cdef Py_ssize_t e, m = r.shape[0]
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    cdef double total = 0.0, x
    with nogil:
        for e in range(m):
            x = (r[e] - d * (w[rows[e]] + w[cols[e]])) / c
            out[e] = x
            total += x
    return out_arr, total


def z_project(const double[::1] lpos, const double[::1] lneg, const double[::1] ypos,
              const double[::1] yneg, double rho):
    cdef Py_ssize_t i, m = lpos.shape[0]
    cdef cnp.ndarray[double, ndim=1] zp_arr = np.empty(m)
    cdef cnp.ndarray[double, ndim=1] zn_arr = np.empty(m)
    cdef double[::1] zp = zp_arr
    cdef double[::1] zn = zn_arr
    cdef double v, w
    with nogil:
        for i in range(m):
            v = lpos[i] - ypos[i] / rho
            w = lneg[i] - yneg[i] / rho
            if v < w and v < 0:
                zp[i] = v
            else:
                zp[i] = 0.0
            if w <= v and w < 0:
                zn[i] = w
            else:
                zn[i] = 0.0
    return zp_arr, zn_arr


def dual_step(double[::1] y, const double[::1] z, const double[::1] l, double rho):
    cdef Py_ssize_t i, m = y.shape[0]
    cdef double diff, acc = 0.0
    with nogil:
        for i in range(m):
            diff = z[i] - l[i]
            y[i] += rho * diff
            acc += diff * diff
    return sqrt(acc)


def p_norm_sq(const double[::1] l, const cnp.intp_t[::1] rows, const cnp.intp_t[::1] cols, Py_ssize_t n):
    cdef cnp.ndarray[double, ndim=1] u_arr = np.zeros(n)
    cdef double[::1] u = u_arr
    cdef Py_ssize_t e, m = l.shape[0]
    cdef double acc = 0.0, sq = 0.0
    with nogil:
        for e in range(m):
            u[rows[e]] += l[e]
            u[cols[e]] += l[e]
            sq += l[e] * l[e]
        for e in range(n):
            acc += u[e] * u[e]
    return acc + 2.0 * sq
