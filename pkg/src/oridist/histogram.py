"""Gridded histogram distributions over unique rotations.

A histogram assigns a nonnegative value ``f_i`` to every grid vertex.
Densities are interpolated over the ``k`` nearest vertices with inverse
rotation-angle weights and normalized by ``eta = (pi^2 / N) sum(f)``, the
surface integral of the piecewise interpolation over the half 3-sphere.
"""
import numpy as np

from . import quaternion as quat

# treat queries this close to a vertex (radians) as exact hits
EXACT_HIT_ANGLE = 1e-8

DEFAULT_K = 4


class GriddedHistogram:
    """Nonnegative per-vertex values over an :class:`~oridist.grid.S3Grid`."""

    def __init__(self, grid, values, k=DEFAULT_K):
        values = np.asarray(values, dtype=float)
        if values.shape != (len(grid),):
            raise ValueError(f"expected {len(grid)} values, got {values.shape}")
        if np.any(values < 0):
            raise ValueError("histogram values must be nonnegative")
        if not np.any(values > 0):
            raise ValueError("histogram values must not all be zero")
        self.grid = grid
        self.values = values
        self.k = int(k)

    @property
    def eta(self):
        """Normalizer: ``(pi^2 / N) sum(f)``."""
        return np.pi**2 / len(self.values) * self.values.sum()

    def pdf_at(self, q):
        """Interpolated density at quaternion ``q``."""
        return float(self.pdf_many(np.asarray(q, dtype=float)[None, :])[0])

    def pdf_many(self, qs):
        """Densities at a batch of quaternions, shape ``(B, 4)``."""
        idx, ang = self.grid.nearest_many(qs, k=self.k)
        return _interpolate(self.values, idx, ang) / self.eta

    def to_dict(self):
        return {"grid_level": self.grid.level, "k": self.k,
                "values": self.values.tolist()}


def _interpolate(values, idx, ang):
    """Inverse-distance convex combination of ``values`` at the selected
    vertices; an exact hit short-circuits to that vertex's value."""
    w = 1.0 / np.maximum(ang, EXACT_HIT_ANGLE)
    sel = values[idx]
    out = (sel * w).sum(axis=1) / w.sum(axis=1)
    hit = ang[:, 0] < EXACT_HIT_ANGLE
    if np.any(hit):
        out[hit] = sel[hit, 0]
    return out


def nll_loss(scores, grid, q_star, k=DEFAULT_K):
    """Interpolated negative log likelihood of unnormalized scores.

    ``L = -log(sum_k p_k / d(q*, q_k)) + log(sum_j p_j)`` over the ``k``
    grid vertices nearest the target rotation ``q_star``.  Scale-invariant
    in the scores.

    Returns
    -------
    loss : float
    grad : (N,) ndarray
        Analytic ``dL/dp_j``.
    """
    scores = np.asarray(scores, dtype=float)
    if np.any(scores < 0):
        raise ValueError("scores must be nonnegative")
    total = scores.sum()
    if total <= 0:
        raise ValueError("scores must have positive total mass")
    idx, w = interp_weights(grid, q_star, k)
    near = float(scores[idx] @ w)
    with np.errstate(divide="ignore"):
        loss = -np.log(near) + np.log(total)
        grad = np.full(len(scores), 1.0 / total)
        grad[idx] -= w / near
    return loss, grad


def interp_weights(grid, q, k=DEFAULT_K):
    """Indices and inverse-distance weights of the ``k`` nearest vertices.

    A query within the exact-hit tolerance of a vertex collapses to weight
    1 on that vertex alone.
    """
    idx, ang = grid.nearest(np.asarray(q, dtype=float), k=k)
    if ang[0] < EXACT_HIT_ANGLE:
        return idx[:1], np.ones(1)
    return idx, 1.0 / ang


class ConfusionMatrix:
    """Row-conditional histograms counting estimate/truth vertex pairs."""

    def __init__(self, grid, counts, k=DEFAULT_K):
        self.grid = grid
        self.counts = counts
        self.k = int(k)

    def row_histogram(self, q_estimate):
        """Histogram over true rotations given an estimated one."""
        row, _ = self.grid.nearest(np.asarray(q_estimate, dtype=float), k=1)
        return GriddedHistogram(self.grid, self.counts[row[0]], k=self.k)


def build_confusion_matrix(pairs, grid, epsilon=1e-3, k=DEFAULT_K):
    """Accumulate (estimate, truth) rotation pairs into a confusion matrix.

    Each pair increments the cell indexed by the vertices nearest the
    estimate (row) and the truth (column); ``epsilon`` is added everywhere
    for Laplace smoothing so empty rows fall back to uniform.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = len(grid)
    counts = np.full((n, n), float(epsilon))
    if len(pairs):
        pairs = np.asarray(pairs, dtype=float)
        rows, _ = grid.nearest_many(pairs[:, 0], k=1)
        cols, _ = grid.nearest_many(pairs[:, 1], k=1)
        np.add.at(counts, (rows[:, 0], cols[:, 0]), 1.0)
    return ConfusionMatrix(grid, counts, k=k)


def resample_uniform(poses, coarse_grid, rng, per_bin=None):
    """Resample pose indices so occupied coarse bins contribute equally.

    Each pose is assigned to its nearest coarse-grid vertex; ``per_bin``
    indices are then drawn with replacement from every occupied bin
    (default: the size of the fullest bin).

    Returns the selected indices into ``poses``.
    """
    poses = np.asarray(poses, dtype=float)
    if len(poses) == 0:
        raise ValueError("no poses to resample")
    bins, _ = coarse_grid.nearest_many(poses, k=1)
    bins = bins[:, 0]
    occupied, counts = np.unique(bins, return_counts=True)
    if per_bin is None:
        per_bin = int(counts.max())
    out = []
    for b in occupied:
        members = np.nonzero(bins == b)[0]
        out.append(rng.choice(members, size=per_bin, replace=True))
    return np.concatenate(out)


def axis_angle_table(grid, densities):
    """Rows of ``(ax, ay, az, density)`` for heat-map export.

    Vertices are mapped to axis-angle points: direction is the rotation
    axis, magnitude the rotation angle.
    """
    pts = quat.to_axis_angle(grid.vertices)
    return np.column_stack([pts, np.asarray(densities, dtype=float)])
