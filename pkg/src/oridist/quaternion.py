"""Unit quaternion algebra for rotations.

Quaternions are stored as numpy arrays in ``[w, x, y, z]`` order (scalar
first).  All functions accept either a single quaternion of shape ``(4,)``
or a batch of shape ``(n, 4)`` and are pure; random sampling takes an
explicit ``numpy.random.Generator``.

Conventions
-----------
- ``q`` and ``-q`` describe the same rotation; every distance here is
  invariant under that identification.
- Angular distance between rotations is the full rotation angle
  ``2 * arccos(|q1 . q2|)``, in ``[0, pi]``.
- The canonical representative of a rotation has ``w > 0``, with ties
  broken by the first nonzero of ``(x, y, z)`` being positive.
"""
import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(v):
    """Scale a 4-vector (or batch) to unit norm.

    Raises
    ------
    ValueError
        If any input vector has norm below 1e-12.
    """
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n < 1e-12):
        raise ValueError("cannot normalize near-zero quaternion")
    return v / n


def canonical(q):
    """Map to the canonical antipodal representative.

    ``w > 0``; if ``w == 0`` the first nonzero of ``(x, y, z)`` is made
    positive.  Exact zero tests are intended for grid constructions where
    components are exactly zero by symmetry.
    """
    q = np.array(q, dtype=float, copy=True)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    flip = np.zeros(len(q), dtype=bool)
    decided = np.zeros(len(q), dtype=bool)
    for col in range(4):
        nz = ~decided & (q[:, col] != 0.0)
        flip |= nz & (q[:, col] < 0.0)
        decided |= nz
    q[flip] *= -1.0
    return q[0] if single else q


def dot(q1, q2):
    return np.sum(np.asarray(q1, dtype=float) * np.asarray(q2, dtype=float), axis=-1)


def rotation_angle(q1, q2):
    """Angular distance between two rotations, in radians.

    Returns ``2 * arccos(min(1, |q1 . q2|))``, which is symmetric,
    antipodally invariant and lies in ``[0, pi]``.
    """
    d = np.abs(dot(q1, q2))
    return 2.0 * np.arccos(np.clip(d, 0.0, 1.0))


def multiply(q1, q2):
    """Hamilton product, renormalized to counter drift."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    w1, x1, y1, z1 = np.moveaxis(q1, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(q2, -1, 0)
    out = np.stack([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ], axis=-1)
    return normalize(out)


def conjugate(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def rotate_vector(q, v):
    """Rotate 3-vector(s) ``v`` by quaternion(s) ``q`` via ``q v q^-1``."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., 0:1]
    u = q[..., 1:]
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def to_rotation_matrix(q):
    """3x3 rotation matrix of a single unit quaternion."""
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def from_axis_angle(axis, angle):
    """Quaternion for a rotation of ``angle`` radians about ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def to_axis_angle(q):
    """Axis-angle point of a unit quaternion.

    The returned 3-vector points along the rotation axis with magnitude
    equal to the rotation angle in ``[0, pi]``; the identity maps to the
    origin.
    """
    q = canonical(np.asarray(q, dtype=float))
    w = np.clip(q[..., 0], -1.0, 1.0)
    angle = 2.0 * np.arccos(w)
    s = np.sqrt(np.maximum(1.0 - w * w, 0.0))
    s = np.where(s < 1e-12, 1.0, s)
    return q[..., 1:] / s[..., None] * angle[..., None]


def random_uniform(rng, n=None):
    """Sample rotation(s) uniformly on the 3-sphere.

    A normalized 4D standard Gaussian is uniform on S^3; antipodal pairs
    are equally likely, so this is also uniform over unique rotations.
    """
    v = rng.normal(size=(4,) if n is None else (n, 4))
    return normalize(v)


def is_unit(q, atol=1e-9):
    q = np.asarray(q, dtype=float)
    return bool(np.all(np.abs(np.sum(q * q, axis=-1) - 1.0) <= atol))
