# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Cython implementations of the hot kernels.

Mirrors `_kernels_py`; see there for the contract of each function.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, lgamma, fmax, fmin

cnp.import_array()

BACKEND_NAME = "cython"


def bernstein_he_ccdf(node_vals, p, lam, xs):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g = \
        np.ascontiguousarray(node_vals, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pw = \
        np.ascontiguousarray(p, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lm = \
        np.ascontiguousarray(lam, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = \
        np.ascontiguousarray(xs, dtype=np.float64).ravel()
    cdef Py_ssize_t n = g.shape[0], k = pw.shape[0], m = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] log_binom = np.empty(max(n, 1),
                                                                 dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double xv, l1p, acc, e, nf = <double> n

    for i in range(n):
        log_binom[i] = lgamma(nf + 1.0) - lgamma(i + 2.0) - lgamma(nf - i)

    for j in range(m):
        xv = x[j]
        acc = 0.0
        if n > 0:
            if xv > 0.0:
                l1p = log1p(-exp(-xv))
                for i in range(n):
                    e = log_binom[i] - (i + 1.0) * xv + (nf - i - 1.0) * l1p
                    if e > -745.0:
                        acc += g[i] * exp(e)
            else:
                acc = g[n - 1]
        for i in range(k):
            acc += pw[i] * exp(-lm[i] * xv)
        out[j] = acc
    return out.reshape(np.shape(xs))


def lindley_waits(increments):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] inc = \
        np.ascontiguousarray(increments, dtype=np.float64)
    cdef Py_ssize_t n = inc.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.empty(n + 1, dtype=np.float64)
    cdef Py_ssize_t j
    cdef double cur = 0.0
    w[0] = 0.0
    for j in range(n):
        cur = fmax(0.0, cur + inc[j])
        w[j + 1] = cur
    return w
