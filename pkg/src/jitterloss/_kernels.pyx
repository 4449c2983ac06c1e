# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Summation order is fixed (row-major, k ascending) so results do not depend on
BLAS threading or blocking.
"""
import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()


def matmul(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = a.shape[1]
    cdef Py_ssize_t p = b.shape[1]
    if b.shape[0] != m:
        raise ValueError(f"shape mismatch: ({n}, {m}) @ ({b.shape[0]}, {p})")
    out = np.zeros((n, p), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef Py_ssize_t i, k, j
    cdef double aik
    cdef double *crow
    cdef const double *brow
    with nogil:
        for i in range(n):
            crow = &c[i, 0]
            for k in range(m):
                aik = a[i, k]
                if aik == 0.0:  # ReLU zeros contribute nothing
                    continue
                brow = &b[k, 0]
                for j in range(p):
                    crow[j] += aik * brow[j]
    return out


def jitter_transform_many(const double[::1] loss, const double[::1] alpha):
    cdef Py_ssize_t n = loss.shape[0]
    if alpha.shape[0] != n:
        raise ValueError("loss and alpha must have equal length")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            # branch form keeps the L >= alpha case bit-exact
            if loss[i] >= alpha[i]:
                o[i] = loss[i]
            else:
                o[i] = 2.0 * alpha[i] - loss[i]
    return out


def positive_part_mean(const double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    if n == 0:
        raise ValueError("empty sample")
    cdef double s = 0.0
    cdef Py_ssize_t i
    cdef double v
    with nogil:
        for i in range(n):
            v = x[i]
            s += v if v > 0.0 else 0.0
    return s / n
