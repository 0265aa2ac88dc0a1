# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled nearest-vertex kernel: fused |dot| scan with top-k selection.

Avoids materializing the (B, N) score matrix of the numpy fallback.
Semantics match ``oridist._kernels_np.topk_abs_dot`` exactly, including
tie-breaking by smaller vertex index.
"""
import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()


def topk_abs_dot(queries, vertices, int k):
    """For each query quaternion, the k grid vertices with largest ``|dot|``."""
    cdef const double[:, ::1] qv = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, ::1] vv = np.ascontiguousarray(vertices, dtype=np.float64)
    cdef Py_ssize_t B = qv.shape[0]
    cdef Py_ssize_t N = vv.shape[0]
    if k < 1 or k > N:
        raise ValueError(f"k={k} out of range [1, {N}]")
    idx = np.empty((B, k), dtype=np.int64)
    out = np.empty((B, k), dtype=np.float64)

    cdef long long[:, ::1] iv = idx
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i

    for i in prange(B, nogil=True, schedule="static"):
        _topk_row(qv, vv, iv, ov, i, k, N)
    return idx, out


cdef void _topk_row(const double[:, ::1] q, const double[:, ::1] v,
                    long long[:, ::1] idx, double[:, ::1] out,
                    Py_ssize_t i, Py_ssize_t k, Py_ssize_t N) nogil:
    cdef double qw = q[i, 0], qx = q[i, 1], qy = q[i, 2], qz = q[i, 3]
    cdef Py_ssize_t j, m, pos, used = 0
    cdef double d
    for j in range(N):
        d = qw * v[j, 0] + qx * v[j, 1] + qy * v[j, 2] + qz * v[j, 3]
        if d < 0.0:
            d = -d
        if used == k and d < out[i, k - 1]:
            continue
        # insertion position: entries ordered by (dot desc, index asc);
        # the scan order guarantees stored indices are ascending on ties
        pos = used if used < k else k - 1
        while pos > 0 and out[i, pos - 1] < d:
            pos = pos - 1
        if used == k and pos == k - 1 and d <= out[i, k - 1]:
            continue
        m = used if used < k else k - 1
        while m > pos:
            out[i, m] = out[i, m - 1]
            idx[i, m] = idx[i, m - 1]
            m = m - 1
        out[i, pos] = d
        idx[i, pos] = j
        if used < k:
            used = used + 1
