from unittest import TestCase

import numpy as np

from ...tensor import ShapeMismatchError
from ..projection import project_to_sphere, tangent_projector
from ..stability import (
    MIN_ORDER,
    first_order_stability_check,
    refeed_error_propagation,
    spectral_norm,
)


class FirstOrderStabilityTest(TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)
        self.token = project_to_sphere(self.rng.normal(size=8), np.sqrt(8))

    def test_radial_perturbation_is_annihilated(self):
        report = first_order_stability_check(self.token, self.token.components)
        self.assertTrue(report.passed)
        self.assertTrue(report.radial_only)
        self.assertLess(max(report.residuals), 1e-12)

    def test_tangential_perturbation_is_quadratic(self):
        delta = tangent_projector(self.token).apply(self.rng.normal(size=8))
        report = first_order_stability_check(self.token, delta)
        self.assertAlmostEqual(report.order, 2.0, delta=0.1)
        self.assertTrue(report.passed)

    def test_mixed_perturbations(self):
        for _ in range(20):
            report = first_order_stability_check(self.token, self.rng.normal(size=8))
            self.assertGreaterEqual(report.order, MIN_ORDER)
            self.assertEqual(len(report.residuals), 5)
            self.assertEqual(report.to_dict()["passed"], True)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            first_order_stability_check(self.token, np.ones(3))


class RefeedErrorTest(TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(1)
        self.d = 8
        self.token = project_to_sphere(self.rng.normal(size=self.d), np.sqrt(self.d))

    def test_radial_error_is_annihilated(self):
        jac = np.eye(self.d)
        e = 0.3 * self.token.components
        eta = -1.2 * self.token.components
        step = refeed_error_propagation(jac, self.token, e, eta)
        np.testing.assert_allclose(step.error, 0.0, atol=1e-12)

    def test_zero_inputs(self):
        step = refeed_error_propagation(self.rng.normal(size=(self.d, 4)), self.token, np.zeros(4), np.zeros(self.d))
        np.testing.assert_array_equal(step.error, np.zeros(self.d))
        self.assertEqual(step.error_norm, 0.0)

    def test_norm_bound_holds(self):
        for _ in range(200):
            jac = self.rng.normal(size=(self.d, 3 * self.d))
            e = self.rng.normal(size=3 * self.d)
            eta = self.rng.normal(size=self.d)
            step = refeed_error_propagation(jac, self.token, e, eta)
            self.assertLess(abs(step.radial_component), 1e-10)
            self.assertTrue(step.bound_holds)
            dense = np.linalg.norm(tangent_projector(self.token).matrix() @ jac, 2)
            self.assertAlmostEqual(step.projected_jacobian_norm / dense, 1.0, delta=1e-6)

    def test_spectral_norm_matches_svd(self):
        for _ in range(20):
            m = self.rng.normal(size=(6, 9))
            self.assertAlmostEqual(spectral_norm(m) / np.linalg.norm(m, 2), 1.0, delta=1e-6)
        self.assertEqual(spectral_norm(np.zeros((3, 3))), 0.0)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            refeed_error_propagation(np.eye(self.d), self.token, np.ones(3), np.ones(self.d))
