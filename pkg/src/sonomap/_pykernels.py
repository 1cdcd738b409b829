"""Pure-numpy batch kernels (fallback backend).

Same contract as the compiled versions in _ckernels.pyx: query is a 1-D
float64 vector, candidates a (n, dim) float32 row matrix, scores come back
as float64. Zero-norm inputs raise ValueError with the offending row; the
callers translate that into the public error types.
"""

import numpy as np

_ZERO = 1e-12


def _prepare(query, candidates):
    q = np.ascontiguousarray(query, dtype=np.float64)
    c = np.ascontiguousarray(candidates, dtype=np.float32)
    if q.ndim != 1 or c.ndim != 2:
        raise ValueError("query must be 1-D and candidates 2-D")
    if c.shape[1] != q.shape[0]:
        raise ValueError(f"dim mismatch: query {q.shape[0]} vs candidates {c.shape[1]}")
    return q, c


def dis_cos_many(query, candidates):
    """Normalized cosine distance (1 - cos)/2 of query against each row."""
    q, c = _prepare(query, candidates)
    qn = np.linalg.norm(q)
    if qn < _ZERO:
        raise ValueError("zero-norm query")
    c64 = c.astype(np.float64)
    cn = np.linalg.norm(c64, axis=1)
    bad = np.flatnonzero(cn < _ZERO)
    if bad.size:
        raise ValueError(f"zero-norm candidate row {bad[0]}")
    sim = (c64 @ q) / (cn * qn)
    np.clip(sim, -1.0, 1.0, out=sim)
    return (1.0 - sim) / 2.0


def euclidean_many(query, candidates):
    """L2 distance of query against each row."""
    q, c = _prepare(query, candidates)
    diff = c.astype(np.float64) - q
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))
