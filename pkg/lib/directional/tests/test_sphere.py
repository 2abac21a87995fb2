from unittest import TestCase

import numpy as np

from ..exceptions import InvalidDimensionError, NotUnitVectorError
from ..sphere import (
    UnitDirection,
    householder_vector,
    reflect_from_axis,
    rotation_fixing,
    sample_uniform_sphere,
    sample_uniform_sphere_batch,
)


class UnitDirectionTest(TestCase):
    def test_rejects_off_sphere(self):
        with self.assertRaises(NotUnitVectorError) as ctx:
            UnitDirection(np.array([1.0, 1e-5]))
        self.assertGreater(ctx.exception.norm, 1.0)

    def test_from_vector_normalizes(self):
        u = UnitDirection.from_vector([3.0, 4.0])
        np.testing.assert_allclose(u.components, [0.6, 0.8])
        self.assertEqual(u.d, 2)

    def test_zero_vector_rejected(self):
        with self.assertRaises(NotUnitVectorError):
            UnitDirection.from_vector(np.zeros(3))

    def test_components_are_read_only(self):
        u = UnitDirection.axis(3)
        with self.assertRaises(ValueError):
            u.components[0] = 2.0


class UniformSamplerTest(TestCase):
    def test_unit_norm_and_second_moment(self):
        rng = np.random.default_rng(0)
        for d in (2, 3, 16):
            x = sample_uniform_sphere_batch(d, 50_000, rng)
            self.assertLessEqual(np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)), 1e-12)
            # E[u_1^2] = 1/d
            second = x[:, 0] ** 2
            self.assertLess(abs(second.mean() - 1.0 / d), 4.0 * second.std() / np.sqrt(x.shape[0]))

    def test_single_draw(self):
        self.assertEqual(sample_uniform_sphere(5, np.random.default_rng(1)).d, 5)

    def test_rejects_d1(self):
        with self.assertRaises(InvalidDimensionError):
            sample_uniform_sphere_batch(1, 4, np.random.default_rng(2))


class HouseholderTest(TestCase):
    def test_maps_axis_to_mu(self):
        rng = np.random.default_rng(3)
        mu = UnitDirection.from_vector(rng.normal(size=6)).components
        e1 = np.zeros(6)
        e1[0] = 1.0
        np.testing.assert_allclose(reflect_from_axis(mu, e1), mu, atol=1e-14)

    def test_identity_branch(self):
        e1 = UnitDirection.axis(4).components
        self.assertIsNone(householder_vector(e1))
        y = np.random.default_rng(4).normal(size=(3, 4))
        np.testing.assert_array_equal(reflect_from_axis(e1, y), y)

    def test_rotation_fixes_mu_and_is_orthogonal(self):
        rng = np.random.default_rng(5)
        mu = UnitDirection.from_vector(rng.normal(size=5)).components
        q = rotation_fixing(mu, rng)
        np.testing.assert_allclose(q @ mu, mu, atol=1e-12)
        np.testing.assert_allclose(q @ q.T, np.eye(5), atol=1e-12)
        self.assertAlmostEqual(float(np.linalg.det(q)), 1.0, places=10)
