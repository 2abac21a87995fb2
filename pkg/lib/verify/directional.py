"""
Directional statistics properties
"""

import numpy as np
from scipy import stats

from .. import rng as rng_streams
from ..directional import (
    PowerSphericalParams,
    UnitDirection,
    VmfParams,
    mc_integral_defensive,
    mean_cosine,
    ps_log_density_batch,
    ps_sample_batch,
    sample_uniform_sphere_batch,
    vmf_log_density_batch,
)
from ..bounds import axial_symmetry_probe
from .base import CheckResult, PropertyCheck, SuiteDefinition, at_least, at_most

DIMENSIONS = (2, 3, 8, 16)
CONCENTRATIONS = (0.0, 1.0, 5.0, 20.0)
N_INTEGRAL = 40_000
N_MEAN = 100_000
UNIT_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-10
KS_LEVEL = 0.01


def _random_mu(d: int, rng: np.random.Generator) -> UnitDirection:
    return UnitDirection.from_vector(rng.standard_normal(d))


def check_unit_norm(seed: int) -> CheckResult:
    worst = 0.0
    for d in DIMENSIONS:
        rng = rng_streams.stream(seed, "verify", "unit", d)
        uniform = sample_uniform_sphere_batch(d, 1000, rng)
        ps = ps_sample_batch(PowerSphericalParams(_random_mu(d, rng), 5.0), 1000, rng)
        for u in (uniform, ps):
            worst = max(worst, float(np.max(np.abs(np.linalg.norm(u, axis=1) - 1.0))))
    return at_most(worst, UNIT_TOLERANCE, "max | ||u|| - 1 | over uniform and PS draws")


def check_normalization(seed: int) -> CheckResult:
    """Worst |integral - 1| in units of its standard error"""
    worst, worst_case = 0.0, ""
    for d in DIMENSIONS:
        for kappa in CONCENTRATIONS:
            rng = rng_streams.stream(seed, "verify", "normalization", d, int(kappa))
            mu = _random_mu(d, rng)
            densities = {
                "ps": lambda u, p=PowerSphericalParams(mu, kappa): ps_log_density_batch(u, p),
                "vmf": lambda u, p=VmfParams(mu, kappa): vmf_log_density_batch(u, p),
            }
            for name, log_density in densities.items():
                estimate, stderr = mc_integral_defensive(log_density, mu, max(kappa, 1.0), N_INTEGRAL, rng)
                z = abs(estimate - 1.0) / max(stderr, 1e-15)
                if z > worst:
                    worst, worst_case = z, f"{name} d={d} kappa={kappa:g}"
    return at_most(worst, 3.0, f"worst standardized error: {worst_case}")


def check_axial_symmetry(seed: int) -> CheckResult:
    worst = 0.0
    for d in (3, 8, 16):
        rng = rng_streams.stream(seed, "verify", "axial", d)
        mu = _random_mu(d, rng)
        for log_density in (
            lambda u: ps_log_density_batch(u, PowerSphericalParams(mu, 5.0)),
            lambda u: vmf_log_density_batch(u, VmfParams(mu, 5.0)),
        ):
            worst = max(worst, axial_symmetry_probe(log_density, mu, 8, rng))
    return at_most(worst, SYMMETRY_TOLERANCE, "max log-density change under rotations fixing mu")


def check_mean_cosine(seed: int) -> CheckResult:
    worst, worst_case = 0.0, ""
    for d in DIMENSIONS:
        for kappa in CONCENTRATIONS:
            rng = rng_streams.stream(seed, "verify", "mean_cosine", d, int(kappa))
            mu = _random_mu(d, rng)
            cosines = ps_sample_batch(PowerSphericalParams(mu, kappa), N_MEAN, rng) @ mu.components
            stderr = cosines.std(ddof=1) / np.sqrt(N_MEAN)
            z = abs(cosines.mean() - mean_cosine(d, kappa)) / max(stderr, 1e-15)
            if z > worst:
                worst, worst_case = float(z), f"d={d} kappa={kappa:g}"
    return at_most(worst, 4.0, f"worst standardized error: {worst_case}")


def check_uniform_limit(seed: int) -> CheckResult:
    """At kappa = 0 the PS cosine (1 + C) / 2 is Beta((d-1)/2, (d-1)/2), as for the uniform law"""
    worst_p = 1.0
    for d in (3, 8, 16):
        rng = rng_streams.stream(seed, "verify", "uniform_limit", d)
        mu = _random_mu(d, rng)
        cosines = ps_sample_batch(PowerSphericalParams(mu, 0.0), 5000, rng) @ mu.components
        reference = rng.beta((d - 1) / 2.0, (d - 1) / 2.0, size=5000)
        worst_p = min(worst_p, float(stats.ks_2samp(0.5 * (1.0 + cosines), reference).pvalue))
    return at_least(worst_p, KS_LEVEL, "smallest two-sample KS p-value")


DIRECTIONAL_SUITE = SuiteDefinition(
    name="directional",
    description="Samplers, normalizers and symmetry of the sphere distributions",
    checks=[
        PropertyCheck("samples_unit_norm", "Uniform and PS draws lie on the unit sphere", check_unit_norm),
        PropertyCheck(
            "densities_integrate_to_one",
            "PS and vMF densities integrate to 1 within 3 standard errors on a (d, kappa) grid",
            check_normalization,
        ),
        PropertyCheck(
            "axially_symmetric",
            "PS and vMF densities are invariant under rotations that fix mu",
            check_axial_symmetry,
        ),
        PropertyCheck(
            "mean_cosine_matches_closed_form",
            "Empirical E[mu^T u] within 4 standard errors of kappa / (d - 1 + kappa)",
            check_mean_cosine,
        ),
        PropertyCheck(
            "uniform_at_zero_concentration",
            "PS with kappa = 0 matches the uniform cosine law under a KS test",
            check_uniform_limit,
        ),
    ],
)
