from unittest import TestCase

import numpy as np
from scipy import special

from ..exceptions import InvalidDimensionError
from ..special import (
    beta_icdf,
    log_bessel_iv,
    log_bessel_iv_quadrature,
    log_surface_area,
)


class SurfaceAreaTest(TestCase):
    def test_circle_and_sphere(self):
        self.assertAlmostEqual(log_surface_area(2), np.log(2.0 * np.pi), places=14)
        self.assertAlmostEqual(log_surface_area(3), np.log(4.0 * np.pi), places=14)

    def test_d16_matches_factorial_form(self):
        # A_15 = 2 pi^8 / 7!
        self.assertAlmostEqual(
            log_surface_area(16), np.log(2.0) + 8.0 * np.log(np.pi) - np.log(5040.0), places=12
        )

    def test_rejects_degenerate_dimension(self):
        with self.assertRaises(InvalidDimensionError) as ctx:
            log_surface_area(1)
        self.assertEqual(ctx.exception.d, 1)


class BesselTest(TestCase):
    def test_matches_quadrature_oracle(self):
        for nu in (0.0, 0.5, 1.0, 3.5, 7.0):
            for kappa in (0.1, 1.0, 5.0, 20.0, 80.0):
                with self.subTest(nu=nu, kappa=kappa):
                    self.assertAlmostEqual(
                        float(log_bessel_iv(nu, kappa)),
                        log_bessel_iv_quadrature(nu, kappa),
                        delta=1e-9 * max(1.0, abs(log_bessel_iv_quadrature(nu, kappa))),
                    )

    def test_large_argument_does_not_overflow(self):
        value = float(log_bessel_iv(7.0, 5000.0))
        self.assertTrue(np.isfinite(value))
        self.assertAlmostEqual(value, 5000.0 - 0.5 * np.log(2.0 * np.pi * 5000.0), delta=0.01)

    def test_tiny_argument_uses_series(self):
        value = float(log_bessel_iv(60.0, 1e-8))
        expected = 60.0 * np.log(0.5e-8) - special.gammaln(61.0)
        self.assertAlmostEqual(value / expected, 1.0, places=10)


class BetaQuantileTest(TestCase):
    def test_inverts_the_cdf(self):
        rng = np.random.default_rng(0)
        u = rng.uniform(size=200)
        for a, b in ((0.5, 0.5), (1.5, 1.5), (21.5, 7.5)):
            x = beta_icdf(np.full(200, a), b, u)
            self.assertLess(np.max(np.abs(special.betainc(a, b, x) - u)), 1e-10)
            self.assertTrue(np.all((x >= 0.0) & (x <= 1.0)))
