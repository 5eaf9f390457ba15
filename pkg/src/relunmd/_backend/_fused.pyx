# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused elementwise kernels for the solver hot path.

Each routine makes a single pass over its operands. Reductions accumulate
plainly within a row (so the inner loop vectorizes) and with Kahan
compensation across row partials, which keeps results within a few ulps of
numpy's pairwise summation at any practical row length.
"""

from libc.math cimport copysign, fabs, fmin, sqrt

import numpy as np

BACKEND_NAME = "compiled"


def slack_update(const double[:, ::1] x, const double[:, ::1] data,
                 pos_mask, double[:, ::1] out):
    """out = data on the positive support, min(0, x) elsewhere; returns ||out||_F."""
    cdef const unsigned char[:, ::1] pos = pos_mask.view(np.uint8)
    cdef Py_ssize_t i, j, m = x.shape[0], n = x.shape[1]
    cdef double acc = 0.0, comp = 0.0, row, w, y, t
    for i in range(m):
        row = 0.0
        for j in range(n):
            w = data[i, j] if pos[i, j] else fmin(x[i, j], 0.0)
            out[i, j] = w
            row += w * w
        y = row - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return sqrt(acc)


def relu_residual_sq(const double[:, ::1] x, const double[:, ::1] data):
    """Sum of (data - max(0, x))**2 over all entries."""
    cdef Py_ssize_t i, j, m = x.shape[0], n = x.shape[1]
    cdef double acc = 0.0, comp = 0.0, row, r, y, t
    for i in range(m):
        row = 0.0
        for j in range(n):
            r = data[i, j] + fmin(-x[i, j], 0.0)
            row += r * r
        y = row - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return acc


def half_sqdiff(const double[:, ::1] w, const double[:, ::1] x):
    """0.5 * ||w - x||_F**2."""
    cdef Py_ssize_t i, j, m = w.shape[0], n = w.shape[1]
    cdef double acc = 0.0, comp = 0.0, row, r, y, t
    for i in range(m):
        row = 0.0
        for j in range(n):
            r = w[i, j] - x[i, j]
            row += r * r
        y = row - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return 0.5 * acc


def soft_threshold_into(const double[:, ::1] x, double tau, double[:, ::1] out):
    """out = sign(x) * max(|x| - tau, 0); returns ||out||_F**2."""
    cdef Py_ssize_t i, j, m = x.shape[0], n = x.shape[1]
    cdef double acc = 0.0, comp = 0.0, row, v, s, y, t
    for i in range(m):
        row = 0.0
        for j in range(n):
            v = x[i, j]
            s = copysign(fmin(tau - fabs(v), 0.0), v)
            out[i, j] = s
            row += s * s
        y = row - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return acc
