# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: EM iteration and likelihood-biased permutation sampling.

Semantics match :mod:`npeb._kernels.fallback`; the fallback is the
reference implementation and the two are cross-checked in the test suite.
"""

from libc.math cimport exp, fabs, log

import numpy as np

cimport numpy as cnp

cnp.import_array()


def em_loop(double[:, ::1] like, double[::1] shift, double[::1] w_init,
            int max_iters, double rel_tol):
    """Run EM weight updates on a precomputed likelihood matrix.

    ``like[i, j] = exp(logpdf[i, j] - shift[i])`` with ``shift[i]`` the
    per-row max, so every row contains at least one entry equal to 1 and
    nothing underflows.  Returns ``(weights, loglik_trace, iters)`` where
    ``loglik_trace[t]`` is the log-likelihood of the iterate *entering*
    update ``t``.
    """
    cdef Py_ssize_t n = like.shape[0]
    cdef Py_ssize_t m = like.shape[1]
    cdef cnp.ndarray w_arr = np.ascontiguousarray(w_init, dtype=np.float64).copy()
    cdef double[::1] w = w_arr
    cdef cnp.ndarray acc_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] acc = acc_arr
    cdef cnp.ndarray trace_arr = np.empty(max_iters, dtype=np.float64)
    cdef double[::1] trace = trace_arr
    cdef double shift_sum = 0.0
    cdef double ll, prev, fi, s
    cdef Py_ssize_t i, j
    cdef int it, iters = 0

    for i in range(n):
        shift_sum += shift[i]
    prev = 0.0
    for it in range(max_iters):
        ll = shift_sum
        for j in range(m):
            acc[j] = 0.0
        for i in range(n):
            fi = 0.0
            for j in range(m):
                fi += like[i, j] * w[j]
            ll += log(fi)
            fi = 1.0 / fi
            for j in range(m):
                acc[j] += like[i, j] * fi
        s = 0.0
        for j in range(m):
            acc[j] = w[j] * acc[j] / n
            s += acc[j]
        for j in range(m):
            w[j] = acc[j] / s
        trace[it] = ll
        iters = it + 1
        if it > 0 and fabs(ll - prev) <= rel_tol * fabs(prev):
            break
        prev = ll
    return w_arr, trace_arr[:iters].copy(), iters


def perm_sample(double[:, ::1] logpdf, double[::1] rowmax, double[:, ::1] prob,
                double[:, ::1] u, cnp.int64_t[:, ::1] perms, double[::1] logw):
    """Sample permutations coordinate-by-coordinate, each assignment drawn
    proportional to its likelihood among still-available atoms.

    ``prob[k, j] = exp(logpdf[k, j] - rowmax[k])``; ``u`` holds one uniform
    per (permutation, coordinate).  Fills ``perms`` and the log importance
    weight ``logw[b] = log target(perm_b) - log proposal(perm_b)
    = sum_k (rowmax[k] + log S_bk)`` with ``S_bk`` the available-atom
    normalizer at step k.  If every available atom has underflowed
    probability, the most likely available atom is taken deterministically
    and its log-density enters the weight directly.
    """
    cdef Py_ssize_t nb = perms.shape[0]
    cdef Py_ssize_t n = perms.shape[1]
    # compact list of still-available atom indices, shrunk by swap-remove;
    # scan order does not change the per-atom selection probability
    cdef cnp.ndarray idx_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef Py_ssize_t b, k, t, tsel, cnt
    cdef double s, target, c, best

    for b in range(nb):
        for t in range(n):
            idx[t] = t
        cnt = n
        logw[b] = 0.0
        for k in range(n):
            s = 0.0
            for t in range(cnt):
                s += prob[k, idx[t]]
            if s > 0.0:
                target = u[b, k] * s
                c = 0.0
                tsel = cnt - 1
                for t in range(cnt):
                    c += prob[k, idx[t]]
                    if c > target:
                        tsel = t
                        break
                logw[b] += rowmax[k] + log(s)
            else:
                # all available atoms underflowed: take the likeliest one
                tsel = 0
                best = logpdf[k, idx[0]]
                for t in range(1, cnt):
                    if logpdf[k, idx[t]] > best:
                        tsel = t
                        best = logpdf[k, idx[t]]
                logw[b] += logpdf[k, idx[tsel]]
            perms[b, k] = idx[tsel]
            cnt -= 1
            idx[tsel] = idx[cnt]
