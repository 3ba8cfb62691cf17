# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pairwise Gaussian log-sum-exp kernels.

All routines take two point sets ``P`` (n, d) and ``Q`` (m, d) and work with the
logits ``-|P_i - Q_j|^2 * inv2var + offset_j`` without materialising the
(n, m) matrix. Reductions run sequentially per output entry, so results are
bitwise reproducible.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()


cdef inline double _sqdist(const double[:, ::1] P, Py_ssize_t i,
                           const double[:, ::1] Q, Py_ssize_t j,
                           Py_ssize_t d) noexcept nogil:
    cdef double s = 0.0, t
    cdef Py_ssize_t k
    for k in range(d):
        t = P[i, k] - Q[j, k]
        s += t * t
    return s


def lse_rows(const double[:, ::1] P, const double[:, ::1] Q,
             const double[::1] offset, double inv2var):
    """out[i] = log sum_j exp(-|P_i - Q_j|^2 * inv2var + offset[j])."""
    cdef Py_ssize_t n = P.shape[0], m = Q.shape[0], d = P.shape[1]
    cdef Py_ssize_t i, j
    cdef double mx, s, v
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            mx = -INFINITY
            s = 0.0
            for j in range(m):
                v = offset[j] - _sqdist(P, i, Q, j, d) * inv2var
                if v == -INFINITY:
                    continue
                if v <= mx:
                    s += exp(v - mx)
                else:
                    s = s * exp(mx - v) + 1.0
                    mx = v
            if mx == -INFINITY:
                o[i] = -INFINITY
            else:
                o[i] = mx + log(s)
    return out


def softmax_apply_t(const double[:, ::1] P, const double[:, ::1] Q,
                    const double[::1] offset, const double[::1] lse,
                    const double[::1] coef, double inv2var):
    """out[j] = sum_i coef[i] * exp(-|P_i - Q_j|^2 * inv2var + offset[j] - lse[i]).

    With ``lse`` from :func:`lse_rows` this applies the transpose of the
    row-softmax matrix to ``coef``.
    """
    cdef Py_ssize_t n = P.shape[0], m = Q.shape[0], d = P.shape[1]
    cdef Py_ssize_t i, j
    cdef double s, c
    out = np.zeros(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(m):
            s = 0.0
            c = offset[j]
            for i in range(n):
                if coef[i] != 0.0:
                    s += coef[i] * exp(c - lse[i] - _sqdist(P, i, Q, j, d) * inv2var)
            o[j] = s
    return out


def softmax_mean(const double[:, ::1] P, const double[:, ::1] Q,
                 const double[::1] offset, double inv2var):
    """Row log-sum-exp and the softmax-weighted mean of ``Q`` for every row of ``P``.

    Returns ``(lse, mean)`` with ``mean[i] = sum_j w_ij Q_j`` and
    ``w_ij = exp(logit_ij - lse[i])``.
    """
    cdef Py_ssize_t n = P.shape[0], m = Q.shape[0], d = P.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double mx, s, v, r, e
    lse_out = np.empty(n, dtype=np.float64)
    mean_out = np.zeros((n, d), dtype=np.float64)
    cdef double[::1] lo = lse_out
    cdef double[:, ::1] mo = mean_out
    with nogil:
        for i in range(n):
            mx = -INFINITY
            s = 0.0
            for j in range(m):
                v = offset[j] - _sqdist(P, i, Q, j, d) * inv2var
                if v == -INFINITY:
                    continue
                if v <= mx:
                    e = exp(v - mx)
                    s += e
                    for k in range(d):
                        mo[i, k] += e * Q[j, k]
                else:
                    r = exp(mx - v)
                    s = s * r + 1.0
                    for k in range(d):
                        mo[i, k] = mo[i, k] * r + Q[j, k]
                    mx = v
            if mx == -INFINITY:
                lo[i] = -INFINITY
            else:
                lo[i] = mx + log(s)
                for k in range(d):
                    mo[i, k] /= s
    return lse_out, mean_out
