import numpy as np
import pytest
from scipy import integrate

from oridist import bingham as bg
from oridist import quaternion as quat


def quad_iso_log_norm(lam):
    """Independent quadrature oracle for the isotropic normalizer."""
    val, _ = integrate.quad(
        lambda t: np.exp(-lam * np.sin(t) ** 2) * 4 * np.pi * np.sin(t) ** 2,
        0.0, np.pi, limit=200)
    return np.log(val)


def mc_full_log_norm(concentrations, n, seed):
    rng = np.random.default_rng(seed)
    q = quat.random_uniform(rng, n)
    vals = np.exp(np.sum(q * q * np.asarray(concentrations), axis=1))
    mean = vals.mean()
    stderr = vals.std(ddof=1) / np.sqrt(n)
    return np.log(2 * np.pi**2 * mean), stderr / mean


class TestIsoclinic:
    def test_identity_pair_gives_identity_matrix(self):
        np.testing.assert_allclose(
            bg.cayley_matrix(quat.IDENTITY, quat.IDENTITY), np.eye(4))

    def test_column_zero_is_left_factor(self, rng):
        for _ in range(20):
            ql = quat.random_uniform(rng)
            m = bg.cayley_matrix(ql, quat.IDENTITY)
            np.testing.assert_allclose(m[:, 0], ql, atol=1e-15)

    def test_orthogonality(self, rng):
        for _ in range(100):
            m = bg.cayley_matrix(quat.random_uniform(rng),
                                 quat.random_uniform(rng))
            np.testing.assert_allclose(m @ m.T, np.eye(4), atol=1e-12)

    def test_rotate_about_mode(self, rng):
        m = bg.cayley_matrix(quat.random_uniform(rng), quat.random_uniform(rng))
        np.testing.assert_allclose(bg.rotate_about_mode(m, quat.IDENTITY), m)
        for _ in range(20):
            qp = quat.random_uniform(rng)
            rotated = bg.rotate_about_mode(m, qp)
            np.testing.assert_allclose(rotated[:, 0], m[:, 0])
            np.testing.assert_allclose(rotated @ rotated.T, np.eye(4),
                                       atol=1e-12)

    def test_cayley_factor_round_trip(self, rng):
        for _ in range(50):
            ql, qr = quat.random_uniform(rng), quat.random_uniform(rng)
            m = bg.cayley_matrix(ql, qr)
            l2, r2 = bg.cayley_factor(m)
            np.testing.assert_allclose(bg.cayley_matrix(l2, r2), m, atol=1e-10)


class TestNormalizers:
    def test_iso_at_zero_is_sphere_area(self):
        assert bg.iso_log_norm_const(0.0) == pytest.approx(np.log(2 * np.pi**2))

    def test_iso_matches_quadrature_moderate(self):
        lam = 5.0
        assert bg.iso_log_norm_const(lam) == pytest.approx(
            quad_iso_log_norm(lam), rel=1e-8)

    def test_iso_matches_quadrature_concentrated(self):
        lam = 500.0
        assert np.isfinite(bg.iso_log_norm_const(lam))
        assert bg.iso_log_norm_const(lam) == pytest.approx(
            quad_iso_log_norm(lam), rel=1e-6)

    def test_iso_rejects_negative(self):
        with pytest.raises(ValueError):
            bg.iso_log_norm_const(-1.0)

    def test_iso_derivative_matches_finite_differences(self):
        for lam in (0.05, 0.5, 3.0, 30.0, 300.0, 890.0):
            h = 1e-4 * max(1.0, lam)
            fd = (bg.iso_log_norm_const(lam + h)
                  - bg.iso_log_norm_const(lam - h)) / (2 * h)
            assert bg.iso_log_norm_const_dlam(lam) == pytest.approx(fd, rel=1e-6)

    def test_iso_derivative_at_zero_is_uniform_moment(self):
        # E[(m.q)^2] - 1 under the uniform distribution is 1/4 - 1
        assert bg.iso_log_norm_const_dlam(0.0) == -0.75

    def test_full_at_zero(self):
        assert bg.full_log_norm_const([0, 0, 0, 0]) == pytest.approx(
            np.log(2 * np.pi**2))

    def test_full_consistent_with_iso(self):
        for lam in (0.1, 1.0, 10.0, 100.0, 900.0):
            assert bg.full_log_norm_const([0, -lam, -lam, -lam]) == pytest.approx(
                bg.iso_log_norm_const(lam), abs=1e-8)

    def test_full_matches_monte_carlo(self):
        val = bg.full_log_norm_const([0, -1, -5, -20])
        oracle, stderr = mc_full_log_norm([0, -1, -5, -20], 1_000_000, seed=11)
        assert abs(val - oracle) < 3 * stderr

    def test_full_rejects_positive_entries(self):
        with pytest.raises(ValueError):
            bg.full_log_norm_const([0.5, -1, -1, -1])

    def test_moments_sum_to_one(self):
        for z in ([0, -2, -10, -10], [0, -0.3, -0.7, -1.1], [0, -900, -5, -50]):
            m = bg.full_norm_moments(z)
            assert m.sum() == pytest.approx(1.0, abs=1e-10)
            assert np.all(m > 0)

    def test_moments_match_finite_differences(self):
        # interior point so two-sided differences stay within z <= 0
        z0 = np.array([-0.5, -1.0, -5.0, -20.0])
        m = bg.full_norm_moments(z0)
        for i in range(4):
            zp, zm = z0.copy(), z0.copy()
            zp[i] += 1e-6
            zm[i] -= 1e-6
            fd = (bg.full_log_norm_const(zp) - bg.full_log_norm_const(zm)) / 2e-6
            assert m[i] == pytest.approx(fd, rel=1e-5)


class TestDistribution:
    def test_uniform_log_pdf_is_chance(self, rng):
        d = bg.BinghamDist.uniform()
        for _ in range(10):
            assert d.log_pdf(quat.random_uniform(rng)) == pytest.approx(
                -np.log(np.pi**2), abs=1e-12)

    def test_log_pdf_maximized_at_mode(self, rng):
        d = bg.BinghamDist.isotropic(quat.random_uniform(rng), 25.0)
        at_mode = d.log_pdf(d.mode)
        qs = quat.random_uniform(rng, 500)
        assert np.all(d.log_pdf(qs) <= at_mode + 1e-12)

    def test_log_pdf_antipodal_exact(self, rng):
        d = bg.BinghamDist(quat.random_uniform(rng), quat.random_uniform(rng),
                           concentrations=(0, -3, -8, -15))
        qs = quat.random_uniform(rng, 100)
        np.testing.assert_array_equal(d.log_pdf(qs), d.log_pdf(-qs))

    def test_iso_depends_only_on_angle(self, rng):
        mode = quat.random_uniform(rng)
        d = bg.BinghamDist.isotropic(mode, 12.0)
        angle = 0.7
        vals = []
        for _ in range(20):
            axis = quat.normalize(np.r_[0.0, rng.normal(size=3)])[1:]
            q = quat.multiply(mode, quat.from_axis_angle(axis, angle))
            vals.append(d.log_pdf(q))
        assert np.ptp(vals) < 1e-9

    def test_pdf_integrates_to_one(self, rng):
        d = bg.BinghamDist(quat.random_uniform(rng), quat.random_uniform(rng),
                           concentrations=(0, -2, -7, -12))
        qs = quat.random_uniform(rng, 400_000)
        integral = d.pdf(qs).mean() * np.pi**2
        assert integral == pytest.approx(1.0, abs=0.01)

    def test_mode_is_rotation_column(self, rng):
        ql = quat.random_uniform(rng)
        d = bg.BinghamDist.isotropic(ql, 40.0)
        np.testing.assert_allclose(d.mode, ql, atol=1e-12)

    def test_serialization_round_trip(self, rng):
        d = bg.BinghamDist(quat.random_uniform(rng), quat.random_uniform(rng),
                           quat.random_uniform(rng), (0, -1, -4, -9))
        d2 = bg.BinghamDist.from_dict(d.to_dict())
        np.testing.assert_allclose(d2.matrix, d.matrix, atol=1e-12)
        np.testing.assert_array_equal(d2.concentrations, d.concentrations)

    def test_gauge_enforced(self):
        with pytest.raises(ValueError):
            bg.BinghamDist(quat.IDENTITY, concentrations=(-1, -1, -1, -1))
        with pytest.raises(ValueError):
            bg.BinghamDist(quat.IDENTITY, concentrations=(0, 1, -1, -1))


class TestSampling:
    def test_uniform_scatter(self):
        d = bg.BinghamDist.uniform()
        s = d.sample(100_000, np.random.default_rng(3))
        np.testing.assert_allclose(s.T @ s / len(s), np.eye(4) / 4, atol=0.01)

    def test_scatter_matches_moments(self):
        z = (0.0, -2.0, -10.0, -10.0)
        d = bg.BinghamDist(quat.IDENTITY, concentrations=z)
        s = d.sample(200_000, np.random.default_rng(4))
        u = s @ d.matrix
        emp = (u**2).mean(axis=0)
        se = (u**2).std(axis=0, ddof=1) / np.sqrt(len(s))
        np.testing.assert_array_less(np.abs(emp - bg.full_norm_moments(z)),
                                     3 * se)

    def test_deterministic_given_seed(self, rng):
        d = bg.BinghamDist.isotropic(quat.random_uniform(rng), 30.0)
        a = d.sample(100, np.random.default_rng(9))
        b = d.sample(100, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)


class TestFitting:
    def test_requires_five_samples(self, rng):
        with pytest.raises(ValueError):
            bg.fit_to_samples(quat.random_uniform(rng, 4))

    def test_concentrated_samples(self, rng):
        q0 = quat.random_uniform(rng)
        samples = []
        for i in range(200):
            sign = 1.0 if i % 2 == 0 else -1.0
            noise = quat.from_axis_angle(
                quat.normalize(np.r_[0.0, rng.normal(size=3)])[1:],
                rng.uniform(0, 1e-3))
            samples.append(sign * quat.multiply(q0, noise))
        d = bg.fit_to_samples(np.array(samples))
        assert np.degrees(quat.rotation_angle(d.mode, q0)) < 0.5
        assert d.concentrations[1:].max() < -1000 or \
            d.concentrations[1:].min() <= -100

    def test_uniform_samples_give_near_zero_concentrations(self):
        rng = np.random.default_rng(21)
        d = bg.fit_to_samples(quat.random_uniform(rng, 10_000))
        assert np.abs(d.concentrations).max() < 0.2

    def test_round_trip_recovery(self):
        true = bg.BinghamDist(quat.normalize([0.6, -0.3, 0.2, 0.9]),
                              concentrations=(0.0, -2.0, -10.0, -10.0))
        s = true.sample(10_000, np.random.default_rng(7))
        fit = bg.fit_to_samples(s)
        assert np.degrees(quat.rotation_angle(fit.mode, true.mode)) < 2.0
        np.testing.assert_allclose(fit.concentrations[1:],
                                   true.concentrations[1:], rtol=0.10)

    def test_degenerate_scatter_capped_with_warning(self):
        q0 = np.array([1.0, 0.0, 0.0, 0.0])
        samples = np.tile(q0, (50, 1))
        with pytest.warns(RuntimeWarning):
            d = bg.fit_to_samples(samples)
        assert d.concentrations.min() == -bg.CONCENTRATION_CAP

    def test_fit_sample_contraction(self):
        # median parameter error decreases as the sample count grows
        true = bg.BinghamDist(quat.IDENTITY, concentrations=(0, -2, -10, -10))
        med = []
        for n in (100, 1000, 10_000):
            errs = []
            for trial in range(20):
                s = true.sample(n, np.random.default_rng(100 * n + trial))
                fit = bg.fit_to_samples(s)
                errs.append(np.abs(fit.concentrations[1:]
                                   - true.concentrations[1:]).max())
            med.append(np.median(errs))
        assert med[0] > med[1] > med[2]


class TestMixture:
    def test_single_component_equals_component(self, rng):
        d = bg.BinghamDist.isotropic(quat.random_uniform(rng), 9.0)
        mix = bg.BinghamMixture([d], [1.0])
        q = quat.random_uniform(rng, 50)
        np.testing.assert_allclose(mix.log_pdf(q), d.log_pdf(q), atol=1e-12)

    def test_two_far_components_halve_mode_density(self):
        a = bg.BinghamDist.isotropic(np.array([1.0, 0, 0, 0]), 200.0)
        b = bg.BinghamDist.isotropic(np.array([0.0, 1.0, 0, 0]), 200.0)
        mix = bg.BinghamMixture([a, b], [0.5, 0.5])
        assert mix.pdf(a.mode) == pytest.approx(0.5 * a.pdf(a.mode), rel=1e-6)

    def test_integrates_to_one(self, rng):
        mix = bg.BinghamMixture(
            [bg.BinghamDist.isotropic(quat.random_uniform(rng), 15.0),
             bg.BinghamDist.isotropic(quat.random_uniform(rng), 60.0)],
            [0.3, 0.7])
        qs = quat.random_uniform(rng, 400_000)
        assert mix.pdf(qs).mean() * np.pi**2 == pytest.approx(1.0, abs=0.01)

    def test_weight_validation(self, rng):
        d = bg.BinghamDist.uniform()
        with pytest.raises(ValueError):
            bg.BinghamMixture([d], [-1.0])
        with pytest.raises(ValueError):
            bg.BinghamMixture([], [])
        mix = bg.BinghamMixture([d, d], [1.0, 3.0])
        np.testing.assert_allclose(mix.weights, [0.25, 0.75])
