"""Numpy implementation of the nearest-vertex kernel.

Used when the compiled extension is unavailable or disabled via the
``ORIDIST_PURE_PYTHON`` environment variable.
"""
import numpy as np

# chunk rows so the (chunk, N) score matrix stays around ~64 MB
_CHUNK = 2048


def topk_abs_dot(queries, vertices, k):
    """For each query quaternion, the k grid vertices with largest ``|dot|``.

    Parameters
    ----------
    queries : (B, 4) float64
    vertices : (N, 4) float64
    k : int, 1 <= k <= N

    Returns
    -------
    idx : (B, k) int64
        Vertex indices ordered by decreasing ``|dot|``; exact ties are
        broken by smaller index.
    absdot : (B, k) float64
    """
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    B, N = len(queries), len(vertices)
    if not 1 <= k <= N:
        raise ValueError(f"k={k} out of range [1, {N}]")
    idx = np.empty((B, k), dtype=np.int64)
    out = np.empty((B, k), dtype=np.float64)
    # a few extra candidates so boundary ties resolve by index, not by
    # argpartition's arbitrary order
    m = min(N, k + 8)
    for lo in range(0, B, _CHUNK):
        hi = min(lo + _CHUNK, B)
        q = queries[lo:hi]
        # explicit left-to-right sum: bitwise identical to the compiled
        # kernel's accumulation, so tie-breaking agrees across backends
        dots = q[:, 0:1] * vertices[:, 0]
        dots += q[:, 1:2] * vertices[:, 1]
        dots += q[:, 2:3] * vertices[:, 2]
        dots += q[:, 3:4] * vertices[:, 3]
        np.abs(dots, out=dots)
        if m < N:
            cand = np.argpartition(-dots, m - 1, axis=1)[:, :m]
        else:
            cand = np.broadcast_to(np.arange(N), (hi - lo, N))
        cd = np.take_along_axis(dots, cand, axis=1)
        order = np.lexsort((cand, -cd), axis=1)[:, :k]
        idx[lo:hi] = np.take_along_axis(cand, order, axis=1)
        out[lo:hi] = np.take_along_axis(cd, order, axis=1)
        if m < N:
            # if the k-th value ties the pool minimum, tied vertices with
            # smaller indices may sit outside the pool: resolve exactly
            unsafe = np.nonzero(out[lo:hi, k - 1] <= cd.min(axis=1))[0]
            for r in unsafe:
                full = np.lexsort((np.arange(N), -dots[r]))[:k]
                idx[lo + r] = full
                out[lo + r] = dots[r, full]
    return idx, out
