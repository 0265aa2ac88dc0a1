"""Evaluation metrics and likelihood-based confidence filtering."""
import numpy as np
from scipy.spatial import cKDTree

from . import quaternion as quat

CHANCE_DENSITY = 1.0 / np.pi**2      # uniform density over unique rotations
LIKELIHOOD_CLIP = 1e-6


def gt_log_likelihood(density_fn, record):
    """Log density of the ground-truth rotation, clipped below at 1e-6."""
    return float(np.log(max(density_fn(record.q_true), LIKELIHOOD_CLIP)))


def symmetric_angular_error(q_true, q_est, symmetry):
    """Angular error in degrees, minimized over the object's symmetries.

    Discrete symmetries take the minimum rotation angle over all symmetry
    images of the truth; a continuous symmetry compares the rotated
    symmetry axes instead.
    """
    if symmetry.kind == "none":
        ang = quat.rotation_angle(q_true, q_est)
    elif symmetry.kind == "discrete":
        if len(symmetry.rotations) == 0:
            raise ValueError("empty discrete symmetry set")
        images = quat.multiply(np.broadcast_to(q_true, (len(symmetry.rotations), 4)),
                               symmetry.rotations)
        ang = np.min(quat.rotation_angle(images, q_est))
    elif symmetry.kind == "continuous":
        x_true = quat.rotate_vector(q_true, symmetry.axis)
        x_est = quat.rotate_vector(q_est, symmetry.axis)
        ang = np.arccos(np.clip(np.dot(x_true, x_est), -1.0, 1.0))
    else:
        raise ValueError(f"unknown symmetry kind {symmetry.kind!r}")
    return float(np.degrees(ang))


def _transform(points, pose):
    q, t = pose
    pts = points @ quat.to_rotation_matrix(q).T
    return pts if t is None else pts + np.asarray(t, dtype=float)


def add_error(model_points, pose_true, pose_est):
    """Mean distance between corresponding model points under two poses.

    Poses are ``(quaternion, translation)`` with translation optional.
    """
    model_points = np.asarray(model_points, dtype=float)
    if len(model_points) == 0:
        raise ValueError("empty model point set")
    a = _transform(model_points, pose_true)
    b = _transform(model_points, pose_est)
    return float(np.linalg.norm(a - b, axis=1).mean())


def add_s_error(model_points, pose_true, pose_est):
    """Mean nearest-neighbor distance between the two transformed point
    sets (the symmetric variant of :func:`add_error`)."""
    model_points = np.asarray(model_points, dtype=float)
    if len(model_points) == 0:
        raise ValueError("empty model point set")
    a = _transform(model_points, pose_true)
    b = _transform(model_points, pose_est)
    d, _ = cKDTree(b).query(a)
    return float(np.mean(d))


def auc(errors, max_threshold):
    """Area under the accuracy-vs-threshold curve, normalized to [0, 1].

    Accuracy at threshold ``t`` is the fraction of errors ``<= t``;
    integrating the step curve from 0 to ``max_threshold`` gives
    ``mean(max(0, 1 - e / max_threshold))``.
    """
    if max_threshold <= 0:
        raise ValueError("max_threshold must be positive")
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("empty error list")
    return float(np.mean(np.maximum(0.0, 1.0 - errors / max_threshold)))


def filter_by_likelihood(records, densities_at_estimate, symmetries,
                         multipliers, model_points=None):
    """Metrics over records whose estimate density clears each threshold.

    ``densities_at_estimate[i]`` is the estimated density at record i's
    base estimate; thresholds are ``multiplier * chance`` with chance the
    uniform density, and the comparison is inclusive (``>=``).

    Returns one row per multiplier with mean symmetric angular error,
    mean ADD and ADD-S where model points exist (``None`` when undefined),
    and the rejection percentage.
    """
    densities = np.asarray(densities_at_estimate, dtype=float)
    rows = []
    ang = np.array([symmetric_angular_error(r.q_true, r.q_est, symmetries[r.object_id])
                    for r in records])
    for mult in multipliers:
        keep = densities >= mult * CHANCE_DENSITY
        n_keep = int(keep.sum())
        row = {"multiplier": float(mult),
               "n_retained": n_keep,
               "reject_pct": 100.0 * (len(records) - n_keep) / len(records),
               "mean_angular_error_deg": None,
               "mean_add": None, "mean_add_s": None}
        if n_keep:
            row["mean_angular_error_deg"] = float(ang[keep].mean())
            if model_points is not None:
                adds, add_ss = [], []
                for flag, r in zip(keep, records):
                    pts = model_points.get(r.object_id)
                    if not flag or pts is None:
                        continue
                    adds.append(add_error(pts, (r.q_true, r.t_true),
                                          (r.q_est, r.t_est)))
                    add_ss.append(add_s_error(pts, (r.q_true, r.t_true),
                                              (r.q_est, r.t_est)))
                if adds:
                    row["mean_add"] = float(np.mean(adds))
                    row["mean_add_s"] = float(np.mean(add_ss))
        rows.append(row)
    return rows
