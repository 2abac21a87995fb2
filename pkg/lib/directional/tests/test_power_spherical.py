from unittest import TestCase

import numpy as np
from scipy import special, stats

from ...tensor import DiffTensor
from ..exceptions import InvalidConcentrationError
from ..montecarlo import mc_integral_defensive, mc_integral_uniform
from ..power_spherical import (
    PowerSphericalParams,
    draw_ps_noise,
    kl_ps_uniform,
    kl_ps_uniform_closed_form,
    kl_ps_uniform_tensor,
    mean_cosine,
    mean_cosine_grad,
    ps_covariance,
    ps_log_density,
    ps_log_density_batch,
    ps_log_normalizer,
    ps_mean,
    ps_rsample,
    ps_sample,
    ps_sample_batch,
    ps_sample_pathwise_grad,
)
from ..special import beta_icdf, beta_icdf_grad_a, betainc_grad_a, betainc_grad_a_quadrature
from ..sphere import UnitDirection, rotation_fixing, sample_uniform_sphere_batch

D_GRID = (2, 3, 8, 16)
KAPPA_GRID = (0.0, 1.0, 5.0, 20.0)


def _random_params(d: int, kappa: float, rng: np.random.Generator) -> PowerSphericalParams:
    return PowerSphericalParams(UnitDirection.from_vector(rng.normal(size=d)), kappa)


class DensityTest(TestCase):
    def test_uniform_limit(self):
        p = PowerSphericalParams(UnitDirection.axis(3), 0.0)
        u = UnitDirection.from_vector([0.3, -1.0, 2.0])
        self.assertEqual(ps_log_density(u, p), -np.log(4.0 * np.pi))

    def test_normalizer_reduces_to_surface_area_at_zero_concentration(self):
        for d in D_GRID:
            alpha = beta = 0.5 * (d - 1)
            explicit = (alpha + beta) * np.log(2) + beta * np.log(np.pi) + special.gammaln(alpha) - special.gammaln(alpha + beta)
            self.assertAlmostEqual(explicit, ps_log_normalizer(d, 0.0), places=12)

    def test_integrates_to_one_on_s2(self):
        rng = np.random.default_rng(0)
        for kappa in (1.0, 5.0, 20.0):
            p = _random_params(3, kappa, rng)
            estimate, _ = mc_integral_uniform(lambda u, p=p: ps_log_density_batch(u, p), 3, 1_000_000, rng)
            self.assertAlmostEqual(estimate, 1.0, delta=0.01)

    def test_integrates_to_one_across_grid(self):
        rng = np.random.default_rng(1)
        for d in D_GRID:
            for kappa in KAPPA_GRID:
                with self.subTest(d=d, kappa=kappa):
                    p = _random_params(d, kappa, rng)
                    estimate, stderr = mc_integral_defensive(
                        lambda u, p=p: ps_log_density_batch(u, p), p.mu, max(kappa, 1.0), 40_000, rng
                    )
                    self.assertLess(abs(estimate - 1.0), 4.0 * stderr + 1e-12)

    def test_antipode_hits_floor(self):
        p = PowerSphericalParams(UnitDirection.axis(3), 2.0)
        antipode = -p.mu.components
        self.assertAlmostEqual(
            ps_log_density(antipode, p), 2.0 * np.log(1e-15) - ps_log_normalizer(3, 2.0), places=8
        )
        self.assertEqual(ps_log_density(antipode, p, floor=0.0), -np.inf)

    def test_negative_concentration_rejected(self):
        with self.assertRaises(InvalidConcentrationError):
            PowerSphericalParams(UnitDirection.axis(3), -0.5)

    def test_axial_symmetry(self):
        rng = np.random.default_rng(5)
        for d in (3, 8, 16):
            p = _random_params(d, 7.0, rng)
            u = sample_uniform_sphere_batch(d, 200, rng)
            q = rotation_fixing(p.mu.components, rng)
            np.testing.assert_allclose(q @ p.mu.components, p.mu.components, atol=1e-12)
            np.testing.assert_allclose(
                ps_log_density_batch(u @ q.T, p), ps_log_density_batch(u, p), atol=1e-10
            )


class SamplerTest(TestCase):
    def test_samples_are_unit(self):
        rng = np.random.default_rng(0)
        for d in D_GRID:
            for kappa in KAPPA_GRID:
                x = ps_sample_batch(_random_params(d, kappa, rng), 1000, rng)
                self.assertLessEqual(np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)), 1e-12)
        self.assertEqual(ps_sample(_random_params(4, 1.0, rng), rng).d, 4)

    def test_uniform_case_has_zero_mean(self):
        rng = np.random.default_rng(2)
        d, n = 5, 100_000
        x = ps_sample_batch(_random_params(d, 0.0, rng), n, rng)
        sigma = np.sqrt(1.0 / d / n)
        self.assertTrue(np.all(np.abs(x.mean(axis=0)) < 4.0 * sigma))

    def test_mean_cosine_d3_kappa2(self):
        rng = np.random.default_rng(3)
        n = 100_000
        p = PowerSphericalParams(UnitDirection.axis(3), 2.0)
        cosines = ps_sample_batch(p, n, rng) @ p.mu.components
        stderr = cosines.std(ddof=1) / np.sqrt(n)
        self.assertLess(abs(cosines.mean() - 0.5), 4.0 * stderr)

        independent = 2.0 * rng.beta(p.alpha, p.beta, size=n) - 1.0
        both = np.sqrt(stderr**2 + independent.var(ddof=1) / n)
        self.assertLess(abs(cosines.mean() - independent.mean()), 4.0 * both)

    def test_axial_coordinates_average_to_zero(self):
        rng = np.random.default_rng(4)
        n = 100_000
        p = PowerSphericalParams(UnitDirection.axis(6), 3.0)
        x = ps_sample_batch(p, n, rng)
        stderr = x[:, 1:].std(axis=0, ddof=1) / np.sqrt(n)
        self.assertTrue(np.all(np.abs(x[:, 1:].mean(axis=0)) < 4.0 * stderr))

    def test_mean_cosine_grid(self):
        rng = np.random.default_rng(6)
        n = 20_000
        for d in D_GRID:
            for kappa in KAPPA_GRID:
                with self.subTest(d=d, kappa=kappa):
                    p = _random_params(d, kappa, rng)
                    cosines = ps_sample_batch(p, n, rng) @ p.mu.components
                    stderr = cosines.std(ddof=1) / np.sqrt(n)
                    self.assertLess(abs(cosines.mean() - mean_cosine(d, kappa)), 4.0 * stderr)

    def test_zero_concentration_matches_uniform_cosine_law(self):
        rng = np.random.default_rng(7)
        for d in (2, 3, 8):
            p = _random_params(d, 0.0, rng)
            cos_marginal = 0.5 * (1.0 + ps_sample_batch(p, 5000, rng) @ p.mu.components)
            reference = rng.beta(0.5 * (d - 1), 0.5 * (d - 1), size=5000)
            self.assertGreater(stats.ks_2samp(cos_marginal, reference).pvalue, 0.01)

    def test_moments(self):
        rng = np.random.default_rng(8)
        n = 100_000
        p = _random_params(4, 3.0, rng)
        x = ps_sample_batch(p, n, rng)
        np.testing.assert_allclose(x.mean(axis=0), ps_mean(p), atol=4.0 / np.sqrt(n))
        np.testing.assert_allclose(np.cov(x.T), ps_covariance(p), atol=0.01)

    def test_identity_branch_when_mean_is_reference_axis(self):
        rng = np.random.default_rng(9)
        noise = draw_ps_noise(3, 4, rng)
        mu = DiffTensor(np.tile([1.0, 0.0, 0.0, 0.0], (3, 1)))
        kappa = DiffTensor(np.full((3, 1), 2.0))
        sample = ps_rsample(mu, kappa, noise).value
        cos = 2.0 * beta_icdf(np.full((3, 1), 3.5), 1.5, noise.uniform) - 1.0
        np.testing.assert_allclose(sample[:, :1], cos, atol=1e-15)


class PathwiseGradientTest(TestCase):
    def test_betainc_derivative_matches_quadrature(self):
        cases = (
            (2.0, 1.0, 0.4),
            (3.5, 1.5, 0.8),
            (11.5, 7.5, 0.6),
            (1.5, 1.5, 0.1),
            (2.0, 0.5, 0.3),
            (40.5, 7.5, 0.85),
            (40.5, 7.5, 0.95),
        )
        for a, b, x in cases:
            self.assertAlmostEqual(
                float(betainc_grad_a(a, b, x)) / betainc_grad_a_quadrature(a, b, x), 1.0, delta=1e-8, msg=(a, b, x)
            )

    def test_betainc_derivative_is_vectorized_and_zero_at_the_ends(self):
        a = np.array([[2.0], [40.5]])
        x = np.array([0.0, 0.3, 0.9, 1.0])
        grad = betainc_grad_a(a, 7.5, x)
        self.assertEqual(grad.shape, (2, 4))
        np.testing.assert_array_equal(grad[:, [0, 3]], 0.0)
        for i, j in ((0, 1), (1, 2)):
            self.assertAlmostEqual(grad[i, j] / betainc_grad_a_quadrature(a[i, 0], 7.5, x[j]), 1.0, delta=1e-8)

    def test_kappa_derivative_matches_finite_differences(self):
        rng = np.random.default_rng(10)
        for d, kappa in ((3, 2.0), (8, 5.0), (16, 1.0)):
            beta = 0.5 * (d - 1)
            u = rng.uniform(size=(20, 1))
            alpha = np.full((20, 1), beta + kappa)
            x = beta_icdf(alpha, beta, u)
            analytic = 2.0 * beta_icdf_grad_a(alpha, beta, x)
            h = 1e-4
            numeric = (beta_icdf(alpha + h, beta, u) - beta_icdf(alpha - h, beta, u)) / h
            np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-10)

    def test_sample_jacobian_matches_finite_differences(self):
        p = PowerSphericalParams(UnitDirection.from_vector([0.2, -0.5, 0.7, 0.1]), 3.0)
        sample, grad = ps_sample_pathwise_grad(p, np.random.default_rng(11))
        h = 1e-4
        plus = ps_sample_pathwise_grad(PowerSphericalParams(p.mu, p.kappa + h), np.random.default_rng(11))[0]
        minus = ps_sample_pathwise_grad(PowerSphericalParams(p.mu, p.kappa - h), np.random.default_rng(11))[0]
        numeric = (plus.components - minus.components) / (2.0 * h)
        np.testing.assert_allclose(grad.d_kappa, numeric, rtol=1e-4, atol=1e-8)
        self.assertEqual(grad.d_mu.shape, (4, 4))
        self.assertAlmostEqual(float(np.linalg.norm(sample.components)), 1.0, places=12)

    def test_sample_moves_continuously_with_mu(self):
        mu = np.array([0.3, 0.4, -0.2, 0.85])
        mu /= np.linalg.norm(mu)
        tangent = np.array([1.0, 0.0, 0.0, 0.0]) - mu[0] * mu
        tangent /= np.linalg.norm(tangent)
        base = ps_sample_pathwise_grad(PowerSphericalParams(UnitDirection(mu), 4.0), np.random.default_rng(12))[0]
        moves = []
        for eps in (1e-2, 1e-4, 1e-6):
            shifted = UnitDirection.from_vector(mu + eps * tangent)
            sample = ps_sample_pathwise_grad(PowerSphericalParams(shifted, 4.0), np.random.default_rng(12))[0]
            moves.append(np.linalg.norm(sample.components - base.components))
        self.assertLess(moves[1], moves[0])
        self.assertLess(moves[2], 1e-4)

    def test_mean_cosine_gradient(self):
        rng = np.random.default_rng(13)
        n = 100_000
        for d, kappa in ((3, 2.0), (16, 5.0)):
            mu = np.zeros(d)
            mu[1] = 1.0
            kappa_t = DiffTensor(np.full((n, 1), kappa), requires_grad=True)
            samples = ps_rsample(DiffTensor(np.tile(mu, (n, 1))), kappa_t, draw_ps_noise(n, d, rng))
            (samples @ DiffTensor(mu.reshape(d, 1))).sum().backward()
            per_sample = kappa_t.grad[:, 0]
            stderr = per_sample.std(ddof=1) / np.sqrt(n)
            self.assertLess(abs(per_sample.mean() - mean_cosine_grad(d, kappa)), 4.0 * stderr)


class KLTest(TestCase):
    def test_zero_concentration_is_exactly_zero(self):
        estimate, stderr = kl_ps_uniform(8, 0.0, 1000, np.random.default_rng(0))
        self.assertEqual(estimate, 0.0)
        self.assertEqual(stderr, 0.0)

    def test_monotone_in_concentration(self):
        rng = np.random.default_rng(1)
        low, low_err = kl_ps_uniform(16, 1.0, 20_000, rng)
        high, high_err = kl_ps_uniform(16, 10.0, 20_000, rng)
        self.assertGreater(high - low, 3.0 * np.hypot(low_err, high_err))

    def test_stable_across_seeds_and_matches_closed_form(self):
        a, a_err = kl_ps_uniform(3, 5.0, 50_000, np.random.default_rng(2))
        b, b_err = kl_ps_uniform(3, 5.0, 50_000, np.random.default_rng(3))
        self.assertGreater(a, 0.0)
        self.assertTrue(np.isfinite(a))
        self.assertLess(abs(a - b), 4.0 * np.hypot(a_err, b_err))
        self.assertLess(abs(a - kl_ps_uniform_closed_form(3, 5.0)), 4.0 * a_err)

    def test_tensor_form_matches_and_differentiates(self):
        kappa = DiffTensor([[0.5], [5.0], [20.0]], requires_grad=True)
        kl = kl_ps_uniform_tensor(8, kappa)
        expected = [kl_ps_uniform_closed_form(8, k) for k in (0.5, 5.0, 20.0)]
        np.testing.assert_allclose(kl.value[:, 0], expected, rtol=1e-12)
        kl.sum().backward()
        h = 1e-5
        numeric = [
            (kl_ps_uniform_closed_form(8, k + h) - kl_ps_uniform_closed_form(8, k - h)) / (2 * h)
            for k in (0.5, 5.0, 20.0)
        ]
        np.testing.assert_allclose(kappa.grad[:, 0], numeric, rtol=1e-5)
