"""Compiled hot loops for the mini-batch update engines.

The pure-NumPy equivalents live in ``mgdlab._kernels_py``; ``mgdlab.kernels``
picks whichever is available at import time.  Both backends implement the
same update arithmetic in the same batch order, so they agree to floating
rounding.  Status codes: 0 ok, 1 non-finite parameter, 2 exp overflow.
"""

import numpy as np

from libc.math cimport exp, isfinite


def ls_epoch(double[:, :, ::1] sxx, double[:, ::1] sxy, double[::1] theta,
             double alpha, double[:, ::1] record=None):
    """One least-squares epoch: theta <- theta - alpha*(sxx[m] theta - sxy[m]) over all m."""
    cdef Py_ssize_t M = sxx.shape[0]
    cdef Py_ssize_t p = sxx.shape[1]
    cdef Py_ssize_t m, i, j
    cdef double acc
    cdef int ok
    cdef double[::1] g = np.empty(p, dtype=np.float64)
    for m in range(M):
        for i in range(p):
            acc = 0.0
            for j in range(p):
                acc += sxx[m, i, j] * theta[j]
            g[i] = acc
        ok = 1
        for i in range(p):
            theta[i] += alpha * (sxy[m, i] - g[i])
            if not isfinite(theta[i]):
                ok = 0
        if record is not None:
            for i in range(p):
                record[m, i] = theta[i]
        if not ok:
            return 1
    return 0


def glm_epoch(double[:, ::1] X, double[::1] Y, long long[:, ::1] idx,
              double[::1] theta, double alpha, int kind,
              double[:, ::1] record=None):
    """One epoch of mini-batch gradient steps for logistic (kind=1) or
    Poisson (kind=2) loss, batches given as row-index sets."""
    cdef Py_ssize_t M = idx.shape[0]
    cdef Py_ssize_t n = idx.shape[1]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t m, r, i, j
    cdef long long row
    cdef double u, mu, w, e, inv_n
    cdef int ok
    cdef double[::1] g = np.empty(p, dtype=np.float64)
    inv_n = 1.0 / n
    for m in range(M):
        for j in range(p):
            g[j] = 0.0
        for r in range(n):
            row = idx[m, r]
            u = 0.0
            for j in range(p):
                u += X[row, j] * theta[j]
            if kind == 1:
                if u >= 0.0:
                    mu = 1.0 / (1.0 + exp(-u))
                else:
                    e = exp(u)
                    mu = e / (1.0 + e)
            else:
                if u > 700.0 or u < -700.0:
                    return 2
                mu = exp(u)
            w = mu - Y[row]
            for j in range(p):
                g[j] += X[row, j] * w
        ok = 1
        for j in range(p):
            theta[j] -= alpha * g[j] * inv_n
            if not isfinite(theta[j]):
                ok = 0
        if record is not None:
            for j in range(p):
                record[m, j] = theta[j]
        if not ok:
            return 1
    return 0
