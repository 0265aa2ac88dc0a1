import numpy as np
import pytest
from scipy import stats

from oridist import quaternion as quat


def test_normalize_scaling_identity():
    np.testing.assert_allclose(quat.normalize([2, 0, 0, 0]), [1, 0, 0, 0])
    np.testing.assert_allclose(quat.normalize([0, 0, 0, -3]), [0, 0, 0, -1])
    np.testing.assert_allclose(quat.normalize([1, 1, 1, 1]), [0.5, 0.5, 0.5, 0.5])


def test_normalize_rejects_near_zero():
    with pytest.raises(ValueError):
        quat.normalize([0.0, 0.0, 0.0, 1e-13])


def test_rotation_angle_basic(rng):
    q = quat.random_uniform(rng)
    assert quat.rotation_angle(q, q) == 0.0
    z90 = quat.from_axis_angle([0, 0, 1], np.pi / 2)
    np.testing.assert_allclose(quat.rotation_angle(quat.IDENTITY, z90),
                               np.pi / 2, atol=1e-12)
    assert abs(np.dot(quat.IDENTITY, z90)) == pytest.approx(np.cos(np.pi / 4))
    assert quat.rotation_angle(q, -q) == 0.0


def test_rotation_angle_antipodal_invariance_exact(rng):
    for _ in range(100):
        q1, q2 = quat.random_uniform(rng), quat.random_uniform(rng)
        assert quat.rotation_angle(q1, q2) == quat.rotation_angle(-q1, q2)
        assert quat.rotation_angle(q1, q2) == quat.rotation_angle(q2, q1)


def test_rotation_angle_triangle_inequality(rng):
    for _ in range(200):
        a, b, c = (quat.random_uniform(rng) for _ in range(3))
        assert (quat.rotation_angle(a, c)
                <= quat.rotation_angle(a, b) + quat.rotation_angle(b, c) + 1e-9)


def test_multiply_identity_and_ijk():
    q = quat.normalize([0.3, -0.5, 0.2, 0.7])
    np.testing.assert_allclose(quat.multiply(q, quat.IDENTITY), q, atol=1e-15)
    i, j, k = [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]
    np.testing.assert_allclose(quat.multiply(i, j), k, atol=1e-15)


def test_multiply_matches_rotation_matrices(rng):
    for _ in range(100):
        q1, q2 = quat.random_uniform(rng), quat.random_uniform(rng)
        lhs = quat.to_rotation_matrix(quat.multiply(q1, q2))
        rhs = quat.to_rotation_matrix(q1) @ quat.to_rotation_matrix(q2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_multiply_associative(rng):
    for _ in range(100):
        a, b, c = (quat.random_uniform(rng) for _ in range(3))
        lhs = quat.multiply(quat.multiply(a, b), c)
        rhs = quat.multiply(a, quat.multiply(b, c))
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_rotate_vector():
    np.testing.assert_allclose(
        quat.rotate_vector(quat.IDENTITY, [1.0, 2.0, 3.0]), [1, 2, 3])
    z90 = quat.from_axis_angle([0, 0, 1], np.pi / 2)
    np.testing.assert_allclose(quat.rotate_vector(z90, [1.0, 0.0, 0.0]),
                               [0, 1, 0], atol=1e-12)


def test_rotate_vector_is_isometry(rng):
    for _ in range(100):
        q = quat.random_uniform(rng)
        v = rng.normal(size=3)
        np.testing.assert_allclose(np.linalg.norm(quat.rotate_vector(q, v)),
                                   np.linalg.norm(v), atol=1e-9)


def test_axis_angle_round_trip(rng):
    np.testing.assert_allclose(quat.to_axis_angle(quat.IDENTITY), [0, 0, 0])
    z90 = quat.from_axis_angle([0, 0, 1], np.pi / 2)
    np.testing.assert_allclose(quat.to_axis_angle(z90), [0, 0, np.pi / 2],
                               atol=1e-12)
    for _ in range(100):
        axis = quat.normalize(np.r_[0.0, rng.normal(size=3)])[1:]
        angle = rng.uniform(1e-6, np.pi - 1e-3)
        q = quat.from_axis_angle(axis, angle)
        back = quat.to_axis_angle(q)
        np.testing.assert_allclose(back, axis * angle, atol=1e-9)


def test_random_uniform_scatter(rng):
    qs = quat.random_uniform(rng, 100_000)
    scatter = qs.T @ qs / len(qs)
    np.testing.assert_allclose(scatter, np.eye(4) / 4, atol=0.01)


def test_random_uniform_angle_density(rng):
    # rotation angle to the identity has density proportional to sin^2(t/2)
    qs = quat.random_uniform(rng, 50_000)
    angles = quat.rotation_angle(qs, quat.IDENTITY)
    edges = np.linspace(0, np.pi, 21)
    observed, _ = np.histogram(angles, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    weights = np.sin(centers / 2) ** 2
    expected = weights / weights.sum() * len(qs)
    _, p = stats.chisquare(observed, expected)
    assert p > 1e-4


def test_random_uniform_deterministic():
    a = quat.random_uniform(np.random.default_rng(7), 10)
    b = quat.random_uniform(np.random.default_rng(7), 10)
    np.testing.assert_array_equal(a, b)


def test_canonical_rules():
    np.testing.assert_array_equal(quat.canonical([-1.0, 0, 0, 0]), [1, 0, 0, 0])
    np.testing.assert_array_equal(quat.canonical([0.0, -1.0, 0, 0]), [0, 1, 0, 0])
    np.testing.assert_array_equal(quat.canonical([0.0, 0.0, -0.6, 0.8]),
                                  [0, 0, 0.6, -0.8])
