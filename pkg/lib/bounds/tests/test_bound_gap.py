import json
from unittest import TestCase

import numpy as np

from ...directional import log_surface_area, mc_integral_uniform
from ..bound_gap import bound_gap_check
from ..elbo import elbo_svae, gaussian_log_likelihood, objective_gaussian_norm
from ..exceptions import BoundsError
from ..gaussian import DiagGaussianParams, kl_diag_gaussian_std
from ..projected import QUADRATURE_TOL, projected_normal_log_density


def _zero_decoder(latents: np.ndarray) -> np.ndarray:
    return np.zeros((latents.shape[0], 4))


class ElboTest(TestCase):
    def test_plug_in(self):
        self.assertEqual(elbo_svae(-3.0, 10.0, 0.0), -3.0)
        self.assertAlmostEqual(elbo_svae(-10.0, 2.0, 0.004), -10.008, places=12)

    def test_weight_sweep_orders_kl_contributions(self):
        values = [elbo_svae(-10.0, 2.0, w) for w in (0.001, 0.004, 0.008)]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_negative_weight_rejected(self):
        with self.assertRaises(BoundsError):
            elbo_svae(0.0, 1.0, -0.1)

    def test_constant_decoder(self):
        rng = np.random.default_rng(0)
        x = np.array([0.5, -0.5, 1.0, 0.0])
        q = DiagGaussianParams([0.3, -0.2, 0.8], [0.5, 1.2, 0.9])
        value = objective_gaussian_norm(x, q, _zero_decoder, np.sqrt(3), 16, rng)
        constant = gaussian_log_likelihood(x, np.zeros((1, 4)))[0]
        self.assertAlmostEqual(value, constant - kl_diag_gaussian_std(q), places=12)

    def test_prior_posterior_has_no_kl(self):
        rng = np.random.default_rng(1)
        x = np.ones(4)
        value = objective_gaussian_norm(x, DiagGaussianParams.standard(3), _zero_decoder, 1.0, 4, rng)
        self.assertAlmostEqual(value, gaussian_log_likelihood(x, np.zeros((1, 4)))[0], places=12)

    def test_decoder_sees_radius_r(self):
        seen = []

        def decoder(latents):
            seen.append(np.linalg.norm(latents, axis=1))
            return np.zeros((latents.shape[0], 2))

        objective_gaussian_norm(np.zeros(2), DiagGaussianParams([2.0, 0.0, 1.0], [1.0, 1.0, 1.0]), decoder, 4.0, 32, np.random.default_rng(2))
        np.testing.assert_allclose(seen[0], 4.0, atol=1e-9)


class ProjectedNormalTest(TestCase):
    def test_isotropic_is_uniform(self):
        for d in (2, 3, 8):
            u = np.eye(d)[:2]
            np.testing.assert_allclose(
                projected_normal_log_density(u, np.zeros(d), np.eye(d)), -log_surface_area(d), atol=1e-10
            )

    def test_shifted_law_integrates_to_one(self):
        rng = np.random.default_rng(3)
        mean = np.array([1.0, -0.5, 0.3])
        precision = np.diag([1.0, 0.5, 2.0])
        estimate, stderr = mc_integral_uniform(
            lambda u: projected_normal_log_density(u, mean, precision), 3, 5000, rng
        )
        self.assertLess(abs(estimate - 1.0), 4.0 * stderr)


class BoundGapTest(TestCase):
    def test_isotropic_posterior_has_no_gap(self):
        report = bound_gap_check(DiagGaussianParams.standard(3), None, np.sqrt(3), 300, seed=0)
        self.assertLessEqual(abs(report.radial_gap.value), 3.0 * report.radial_gap.stderr + QUADRATURE_TOL)
        self.assertLessEqual(abs(report.directional_kl.value), 1e-8)
        self.assertTrue(report.passed, report.checks)

    def test_shifted_posterior_has_positive_gap(self):
        q = DiagGaussianParams([2.0, 0.0, 0.0], [1.0, 1.0, 1.0])
        report = bound_gap_check(q, None, np.sqrt(3), 400, seed=1)
        self.assertGreater(report.radial_gap.value, 3.0 * report.radial_gap.stderr)
        self.assertTrue(report.passed, report.checks)
        self.assertLess(report.l_g, report.l_svae)

    def test_chain_rule_holds_per_sample(self):
        q = DiagGaussianParams([0.5, -1.0, 0.2, 1.5], [0.7, 1.3, 0.9, 0.5])
        report = bound_gap_check(q, _zero_decoder, 2.0, 300, seed=2, x=np.ones(4))
        self.assertAlmostEqual(
            report.full_kl.value, report.directional_kl.value + report.radial_gap.value, places=10
        )
        self.assertTrue(report.checks["full_kl_matches_closed_form"])
        self.assertTrue(report.checks["gap_matches_quadrature"])
        self.assertAlmostEqual(report.l_svae - report.l_g, report.radial_gap.value, places=10)

    def test_report_is_json(self):
        report = bound_gap_check(DiagGaussianParams([1.0, 0.0], [0.5, 2.0]), None, 1.0, 50, seed=3)
        data = json.loads(json.dumps(report.to_dict()))
        self.assertEqual(data["n_mc"], 50)
        self.assertEqual(data["seed"], 3)
        self.assertIn("stderr", data["radial_gap"])

    def test_same_seed_same_report(self):
        q = DiagGaussianParams([1.0, 0.5], [0.8, 1.1])
        first = bound_gap_check(q, None, 1.0, 40, seed=4).to_dict()
        second = bound_gap_check(q, None, 1.0, 40, seed=4).to_dict()
        self.assertEqual(first, second)
