# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RB sequence kernels.

Same signatures and results as :mod:`gdrb._pykernels`.  Maps are stacked
``(n_gates, n, n)`` C-contiguous float64; tables are int64.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()


cdef inline void _matvec(const double[:, :, ::1] maps, Py_ssize_t g, const double* v,
                         double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(n):
        acc = 0.0
        for k in range(n):
            acc = acc + maps[g, i, k] * v[k]
        out[i] = acc


def survival_batch(const double[:, :, ::1] maps, const cnp.int64_t[:, ::1] mult,
                   const cnp.int64_t[::1] inv, cnp.int64_t identity,
                   const cnp.int64_t[:, ::1] seqs, const double[::1] rho, const double[::1] Q):
    """``<<Q| M_inv M_{g_m} ... M_{g_1} |rho>>`` for every row of ``seqs``."""
    cdef Py_ssize_t n = maps.shape[1]
    cdef Py_ssize_t n_seq = seqs.shape[0]
    cdef Py_ssize_t m = seqs.shape[1]
    cdef Py_ssize_t s, j, i
    cdef cnp.int64_t g, cum
    cdef double acc
    out = np.empty(n_seq, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef double* a = <double*> malloc(n * sizeof(double))
    cdef double* b = <double*> malloc(n * sizeof(double))
    cdef double* tmp
    if a == NULL or b == NULL:
        free(a)
        free(b)
        raise MemoryError()
    try:
        with nogil:
            for s in range(n_seq):
                for i in range(n):
                    a[i] = rho[i]
                cum = identity
                for j in range(m):
                    g = seqs[s, j]
                    _matvec(maps, g, a, b, n)
                    tmp = a
                    a = b
                    b = tmp
                    cum = mult[g, cum]
                _matvec(maps, inv[cum], a, b, n)
                acc = 0.0
                for i in range(n):
                    acc = acc + Q[i] * b[i]
                out_v[s] = acc
    finally:
        free(a)
        free(b)
    return out


cdef double _dfs(const double[:, :, ::1] maps, const cnp.int64_t[:, ::1] mult,
                 const cnp.int64_t[::1] inv, const double[::1] Q, double* stack,
                 cnp.int64_t cum, Py_ssize_t depth, Py_ssize_t m, Py_ssize_t n,
                 Py_ssize_t n_gates) noexcept nogil:
    cdef double* cur = stack + depth * n
    cdef double* nxt = stack + (depth + 1) * n
    cdef double total = 0.0
    cdef Py_ssize_t g, i
    if depth == m:
        _matvec(maps, inv[cum], cur, nxt, n)
        for i in range(n):
            total = total + Q[i] * nxt[i]
        return total
    for g in range(n_gates):
        _matvec(maps, g, cur, nxt, n)
        total = total + _dfs(maps, mult, inv, Q, stack, mult[g, cum], depth + 1, m, n, n_gates)
    return total


def enumerate_average(const double[:, :, ::1] maps, const cnp.int64_t[:, ::1] mult,
                      const cnp.int64_t[::1] inv, cnp.int64_t identity, Py_ssize_t m,
                      const double[::1] rho, const double[::1] Q):
    """Uniform average of the survival over all ``n_gates**m`` sequences."""
    cdef Py_ssize_t n = maps.shape[1]
    cdef Py_ssize_t n_gates = maps.shape[0]
    cdef Py_ssize_t i
    cdef double total
    cdef double* stack = <double*> malloc((m + 2) * n * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            stack[i] = rho[i]
        with nogil:
            total = _dfs(maps, mult, inv, Q, stack, identity, 0, m, n, n_gates)
    finally:
        free(stack)
    return total / (<double> n_gates) ** m
