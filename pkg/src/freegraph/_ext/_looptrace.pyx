# cython: language_level=3
"""Compiled interval DP for traces of loop words (float64 only)."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


def loop_trace(const cnp.int64_t[::1] word, const cnp.int64_t[::1] src, const cnp.int64_t[::1] tgt,
               const cnp.int64_t[::1] opp, const double[::1] mu, const double[::1] inv_sqrt_st):
    """Trace of X_{w0} ... X_{w(n-1)}; ``word`` must be a composable path, n >= 1."""
    cdef Py_ssize_t n = word.shape[0]
    cdef Py_ssize_t i, j, k, L, stride = n + 1
    cdef cnp.int64_t e, partner
    cdef double acc, result
    cdef double *T
    if n == 0 or n % 2 == 1:
        return 0.0
    if src[word[0]] != tgt[word[n - 1]]:
        return 0.0
    T = <double *> malloc(stride * stride * sizeof(double))
    if T == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            T[i * stride + i] = mu[src[word[i]]]
        for L in range(2, n + 1, 2):
            for i in range(0, n - L + 1):
                j = i + L
                e = word[j - 1]
                if src[word[i]] != tgt[e]:
                    T[i * stride + j] = 0.0
                    continue
                partner = opp[e]
                acc = 0.0
                for k in range(i, j - 1, 2):
                    if word[k] == partner:
                        acc += T[i * stride + k] * T[(k + 1) * stride + (j - 1)]
                T[i * stride + j] = acc * inv_sqrt_st[e]
        result = T[n]
    finally:
        free(T)
    return result


def loop_trace_batch(words, const cnp.int64_t[::1] src, const cnp.int64_t[::1] tgt,
                     const cnp.int64_t[::1] opp, const double[::1] mu, const double[::1] inv_sqrt_st):
    cdef Py_ssize_t m = len(words)
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t r
    for r in range(m):
        o[r] = loop_trace(np.ascontiguousarray(words[r], dtype=np.int64), src, tgt, opp, mu, inv_sqrt_st)
    return out
