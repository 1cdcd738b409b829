# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels for candidate scans.

Mirrors _pykernels exactly: float64 query, float32 candidate rows, float64
scores, ValueError on zero-norm inputs. Each row is scored in one fused
pass (dot product and norm together) to keep the scan memory-bound rather
than allocation-bound.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef double _ZERO = 1e-12


def dis_cos_many(const double[::1] query, const float[:, ::1] candidates):
    """Normalized cosine distance (1 - cos)/2 of query against each row."""
    cdef Py_ssize_t n = candidates.shape[0]
    cdef Py_ssize_t dim = candidates.shape[1]
    if query.shape[0] != dim:
        raise ValueError(f"dim mismatch: query {query.shape[0]} vs candidates {dim}")

    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef double qn2 = 0.0, qn, dot, cn2, sim, x
    cdef Py_ssize_t i, j

    for j in range(dim):
        qn2 += query[j] * query[j]
    qn = sqrt(qn2)
    if qn < _ZERO:
        raise ValueError("zero-norm query")

    for i in range(n):
        dot = 0.0
        cn2 = 0.0
        for j in range(dim):
            x = <double> candidates[i, j]
            dot += x * query[j]
            cn2 += x * x
        if sqrt(cn2) < _ZERO:
            raise ValueError(f"zero-norm candidate row {i}")
        sim = dot / (sqrt(cn2) * qn)
        if sim > 1.0:
            sim = 1.0
        elif sim < -1.0:
            sim = -1.0
        out_v[i] = (1.0 - sim) / 2.0
    return out


def euclidean_many(const double[::1] query, const float[:, ::1] candidates):
    """L2 distance of query against each row."""
    cdef Py_ssize_t n = candidates.shape[0]
    cdef Py_ssize_t dim = candidates.shape[1]
    if query.shape[0] != dim:
        raise ValueError(f"dim mismatch: query {query.shape[0]} vs candidates {dim}")

    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef double acc, d
    cdef Py_ssize_t i, j

    for i in range(n):
        acc = 0.0
        for j in range(dim):
            d = <double> candidates[i, j] - query[j]
            acc += d * d
        out_v[i] = sqrt(acc)
    return out
