# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Givens-updating least-squares kernels.

Rows are folded one at a time into an upper-triangular factor R and the
rotated response z; the part of each new response that the current factor
cannot absorb is that row's recursive residual, and the running sum of their
squares is the least-squares SSE of all rows folded so far.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport hypot, fabs
from libc.string cimport memcpy

cnp.import_array()


cdef inline double _fold_row(double* R, double* z, double* x, double yv,
                             Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t j, k
    cdef double a, b, r, c, s, rjk, xk, zj
    for j in range(p):
        b = x[j]
        if b == 0.0:
            continue
        a = R[j * p + j]
        r = hypot(a, b)
        c = a / r
        s = b / r
        R[j * p + j] = r
        for k in range(j + 1, p):
            rjk = R[j * p + k]
            xk = x[k]
            R[j * p + k] = c * rjk + s * xk
            x[k] = c * xk - s * rjk
        zj = z[j]
        z[j] = c * zj + s * yv
        yv = c * yv - s * zj
    return yv * yv


cdef inline bint _full_rank(double* R, Py_ssize_t p, double rtol) noexcept nogil:
    cdef Py_ssize_t j
    cdef double d, dmax = 0.0, dmin = -1.0
    for j in range(p):
        d = fabs(R[j * p + j])
        if d > dmax:
            dmax = d
        if dmin < 0.0 or d < dmin:
            dmin = d
    return dmax > 0.0 and dmin > rtol * dmax


def prefix_sse(double[:, ::1] X, double[::1] y, double rtol):
    """SSE and full-rank flag of the fit on the first k rows, k = 0..n."""
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i
    cdef cnp.ndarray[double, ndim=1] sse = np.zeros(n + 1)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ok = np.zeros(n + 1, dtype=np.uint8)
    cdef double[::1] R = np.zeros(p * p)
    cdef double[::1] z = np.zeros(p)
    cdef double[::1] x = np.zeros(p)
    cdef double ss = 0.0
    with nogil:
        for i in range(n):
            memcpy(&x[0], &X[i, 0], p * sizeof(double))
            ss += _fold_row(&R[0], &z[0], &x[0], y[i], p)
            sse[i + 1] = ss
            ok[i + 1] = _full_rank(&R[0], p, rtol)
    return sse, ok.astype(bool)


def pair_sse(double[:, ::1] X0, double[::1] y0, double[:, ::1] X1, double[::1] y1,
             double rtol):
    """SSE of the fit on (first k0 rows of group 0) + (first k1 rows of group 1).

    Returns arrays of shape (n0 + 1, n1 + 1).
    """
    cdef Py_ssize_t n0 = X0.shape[0], n1 = X1.shape[0], p = X0.shape[1]
    cdef Py_ssize_t k0, k1
    cdef cnp.ndarray[double, ndim=2] sse = np.zeros((n0 + 1, n1 + 1))
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] ok = np.zeros((n0 + 1, n1 + 1), dtype=np.uint8)
    cdef double[::1] R0 = np.zeros(p * p)
    cdef double[::1] z0 = np.zeros(p)
    cdef double[::1] R = np.zeros(p * p)
    cdef double[::1] z = np.zeros(p)
    cdef double[::1] x = np.zeros(p)
    cdef double ss0 = 0.0, ss
    if X1.shape[1] != p:
        raise ValueError("groups must have the same number of columns")
    with nogil:
        for k0 in range(n0 + 1):
            if k0 > 0:
                memcpy(&x[0], &X0[k0 - 1, 0], p * sizeof(double))
                ss0 += _fold_row(&R0[0], &z0[0], &x[0], y0[k0 - 1], p)
            memcpy(&R[0], &R0[0], p * p * sizeof(double))
            memcpy(&z[0], &z0[0], p * sizeof(double))
            ss = ss0
            sse[k0, 0] = ss
            ok[k0, 0] = _full_rank(&R[0], p, rtol)
            for k1 in range(n1):
                memcpy(&x[0], &X1[k1, 0], p * sizeof(double))
                ss += _fold_row(&R[0], &z[0], &x[0], y1[k1], p)
                sse[k0, k1 + 1] = ss
                ok[k0, k1 + 1] = _full_rank(&R[0], p, rtol)
    return sse, ok.astype(bool)
