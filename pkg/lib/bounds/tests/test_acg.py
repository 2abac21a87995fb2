from unittest import TestCase

import numpy as np
from scipy import stats

from ...directional import (
    PowerSphericalParams,
    UnitDirection,
    log_surface_area,
    mc_integral_uniform,
    ps_log_density_batch,
    sample_uniform_sphere_batch,
)
from ..acg import AcgParams, acg_log_density, acg_log_density_batch, acg_sample_batch, antipodal_summary
from ..exceptions import NotPositiveDefiniteError
from ..symmetry import axial_symmetry_probe

ANISOTROPIC = np.diag([1.0, 4.0, 9.0])


def _rejection_sample(p: AcgParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Independent ACG sampler: uniform proposals accepted against the density bound"""
    log_max = -log_surface_area(p.d) + 0.5 * p.log_det_sigma_inv - 0.5 * p.d * np.log(np.linalg.eigvalsh(p.sigma_inv)[0])
    kept = []
    total = 0
    while total < n:
        u = sample_uniform_sphere_batch(p.d, 4 * n, rng)
        accept = np.log(rng.uniform(size=u.shape[0])) < acg_log_density_batch(u, p) - log_max
        kept.append(u[accept])
        total += int(accept.sum())
    return np.concatenate(kept)[:n]


class AcgDensityTest(TestCase):
    def setUp(self):
        self.anisotropic = AcgParams.from_covariance(ANISOTROPIC)

    def test_identity_is_uniform(self):
        p = AcgParams(np.eye(4))
        u = sample_uniform_sphere_batch(4, 10, np.random.default_rng(0))
        np.testing.assert_allclose(acg_log_density_batch(u, p), -log_surface_area(4), atol=1e-14)

    def test_integrates_to_one(self):
        estimate, _ = mc_integral_uniform(
            lambda u: acg_log_density_batch(u, self.anisotropic), 3, 1_000_000, np.random.default_rng(1)
        )
        self.assertAlmostEqual(estimate, 1.0, delta=0.01)

    def test_matches_normalized_gaussian_samples(self):
        rng = np.random.default_rng(2)
        sampled = acg_sample_batch(self.anisotropic, 5000, rng)
        reference = _rejection_sample(self.anisotropic, 5000, rng)

        def quadratic(u):
            return np.einsum("ni,ij,nj->n", u, self.anisotropic.sigma_inv, u)

        self.assertGreater(stats.ks_2samp(quadratic(sampled), quadratic(reference)).pvalue, 0.01)

    def test_antipodal_symmetry(self):
        u = sample_uniform_sphere_batch(3, 100, np.random.default_rng(3))
        np.testing.assert_allclose(
            acg_log_density_batch(-u, self.anisotropic), acg_log_density_batch(u, self.anisotropic), atol=1e-12
        )

    def test_rejects_non_spd(self):
        with self.assertRaises(NotPositiveDefiniteError):
            AcgParams(np.diag([1.0, -1.0, 2.0]))
        with self.assertRaises(NotPositiveDefiniteError):
            AcgParams(np.array([[1.0, 0.5], [0.4, 1.0]]))

    def test_nonzero_mean_uses_projected_normal(self):
        p = AcgParams(np.diag([1.0, 0.25, 1.0 / 9.0]), mean=[1.5, 0.0, 0.0])
        self.assertFalse(p.zero_mean)
        estimate, stderr = mc_integral_uniform(
            lambda u: acg_log_density_batch(u, p), 3, 5000, np.random.default_rng(4)
        )
        self.assertLess(abs(estimate - 1.0), 4.0 * stderr)
        self.assertGreater(acg_log_density([1.0, 0.0, 0.0], p), acg_log_density([-1.0, 0.0, 0.0], p))

    def test_antipodal_summary_reports_both_ends(self):
        summary = antipodal_summary(self.anisotropic, 20_000, np.random.default_rng(5))
        self.assertEqual(sum(summary["counts"]), 20_000)
        self.assertGreater(summary["mass_near_plus"], 0.0)
        self.assertGreater(summary["mass_near_minus"], 0.0)


class AxialSymmetryTest(TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(6)

    def test_power_spherical_is_symmetric(self):
        for kappa in (0.5, 5.0, 50.0):
            p = PowerSphericalParams(UnitDirection.from_vector([0.2, 0.9, -0.4]), kappa)
            deviation = axial_symmetry_probe(lambda u, p=p: ps_log_density_batch(u, p), p.mu, 20, self.rng)
            self.assertLessEqual(deviation, 1e-10)

    def test_anisotropic_acg_is_not(self):
        p = AcgParams.from_covariance(ANISOTROPIC)
        deviation = axial_symmetry_probe(lambda u: acg_log_density_batch(u, p), UnitDirection.axis(3), 20, self.rng)
        self.assertGreater(deviation, 0.1)

    def test_uniform_is_symmetric(self):
        deviation = axial_symmetry_probe(
            lambda u: np.full(u.shape[0], -log_surface_area(5)), UnitDirection.axis(5, 3), 10, self.rng
        )
        self.assertLessEqual(deviation, 1e-12)
