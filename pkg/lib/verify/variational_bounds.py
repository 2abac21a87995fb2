"""
Variational bound properties: Gaussian KL, the radial-KL gap, the chi law
and the ACG comparison geometry
"""

import numpy as np
from scipy import integrate

from .. import rng as rng_streams
from ..bounds import (
    AcgParams,
    DiagGaussianParams,
    KLReduction,
    acg_log_density_batch,
    axial_symmetry_probe,
    bound_gap_check,
    chi_log_density,
    kl_diag_gaussian_mc,
    kl_diag_gaussian_std,
)
from ..directional import PowerSphericalParams, UnitDirection, ps_log_density_batch, sample_uniform_sphere_batch
from .base import CheckResult, PropertyCheck, SuiteDefinition, at_least, at_most

DIMENSIONS = (2, 8, 16)
N_KL = 20_000
N_GAP = 200
CHI_DIMENSIONS = (1, 2, 3, 8, 16)
CHI_TOLERANCE = 1e-8
ANTIPODAL_TOLERANCE = 1e-12
AXIAL_TOLERANCE = 1e-10
ACG_ASYMMETRY = 0.1
STANDARD_GAP_TOLERANCE = 1e-6


def _posterior(seed: int, name: str, d: int) -> DiagGaussianParams:
    rng = rng_streams.stream(seed, "verify", name, d)
    return DiagGaussianParams(rng.normal(0.0, 1.0, size=d), np.exp(rng.uniform(-1.0, 0.5, size=d)))


def check_kl_closed_form(seed: int) -> CheckResult:
    worst, worst_case = 0.0, ""
    for d in DIMENSIONS:
        q = _posterior(seed, "kl", d)
        estimate, stderr = kl_diag_gaussian_mc(q, N_KL, rng_streams.stream(seed, "verify", "kl_draws", d))
        z = abs(estimate - kl_diag_gaussian_std(q, KLReduction.SUM)) / stderr
        if z > worst:
            worst, worst_case = z, f"d={d}"
    return at_most(worst, 4.0, f"worst standardized error: {worst_case}")


def check_gap_nonnegative(seed: int) -> CheckResult:
    """Smallest radial gap plus three standard errors; never below zero"""
    worst, worst_case = float("inf"), ""
    for d in DIMENSIONS:
        q = _posterior(seed, "gap", d)
        report = bound_gap_check(q, None, float(np.sqrt(d)), N_GAP, seed=seed)
        margin = report.radial_gap.value + 3.0 * report.radial_gap.stderr
        if margin < worst:
            worst, worst_case = margin, f"d={d}"
    return at_least(worst, 0.0, f"tightest case: {worst_case}")


def check_gap_vanishes_at_prior(seed: int) -> CheckResult:
    worst = 0.0
    for d in DIMENSIONS:
        report = bound_gap_check(DiagGaussianParams.standard(d), None, float(np.sqrt(d)), N_GAP, seed=seed)
        worst = max(worst, abs(report.radial_gap.value))
    return at_most(worst, STANDARD_GAP_TOLERANCE, "|radial gap| at q = N(0, I)")


def check_chi_normalized(seed: int) -> CheckResult:
    worst = 0.0
    for d in CHI_DIMENSIONS:
        mass, _ = integrate.quad(lambda r: np.exp(chi_log_density(r, d)), 0.0, np.inf, epsabs=1e-12, epsrel=1e-12)
        worst = max(worst, abs(mass - 1.0))
    return at_most(worst, CHI_TOLERANCE, "max |integral of chi_d - 1|")


def check_acg_antipodal(seed: int) -> CheckResult:
    worst = 0.0
    for d in DIMENSIONS:
        rng = rng_streams.stream(seed, "verify", "acg", d)
        a = rng.standard_normal((d, d))
        p = AcgParams.from_covariance(a @ a.T + d * np.eye(d))
        u = sample_uniform_sphere_batch(d, 1000, rng)
        worst = max(worst, float(np.max(np.abs(acg_log_density_batch(u, p) - acg_log_density_batch(-u, p)))))
    return at_most(worst, ANTIPODAL_TOLERANCE, "max |log f(u) - log f(-u)|")


def check_axial_contrast(seed: int) -> CheckResult:
    """
    PS is symmetric about its mean direction while an anisotropic ACG is not;
    the value reported is the ACG deviation, the PS deviation must vanish
    """
    rng = rng_streams.stream(seed, "verify", "axial_contrast")
    axis = UnitDirection.axis(3, 0)
    ps = PowerSphericalParams(axis, 5.0)
    acg = AcgParams.from_covariance(np.diag([1.0, 4.0, 9.0]))
    ps_deviation = axial_symmetry_probe(lambda u: ps_log_density_batch(u, ps), axis, 16, rng)
    acg_deviation = axial_symmetry_probe(lambda u: acg_log_density_batch(u, acg), axis, 16, rng)
    if ps_deviation > AXIAL_TOLERANCE:
        return at_most(ps_deviation, AXIAL_TOLERANCE, "PS density changed under a rotation fixing mu")
    return at_least(acg_deviation, ACG_ASYMMETRY, f"ACG diag(1, 4, 9) deviation (PS: {ps_deviation:.2e})")


VARIATIONAL_BOUNDS_SUITE = SuiteDefinition(
    name="variational_bounds",
    description="KL terms, the radial gap between Gaussian and spherical bounds, chi and ACG laws",
    checks=[
        PropertyCheck(
            "gaussian_kl_matches_monte_carlo",
            "Closed-form diagonal Gaussian KL within 4 standard errors of its Monte-Carlo estimate",
            check_kl_closed_form,
        ),
        PropertyCheck(
            "radial_gap_nonnegative",
            "The radial gap between the Gaussian and spherical bounds is >= -3 standard errors",
            check_gap_nonnegative,
        ),
        PropertyCheck(
            "radial_gap_vanishes_at_prior",
            "The radial gap is zero when the posterior equals the prior",
            check_gap_vanishes_at_prior,
        ),
        PropertyCheck("chi_density_normalized", "The chi density integrates to 1", check_chi_normalized),
        PropertyCheck("acg_antipodally_symmetric", "ACG densities satisfy f(u) = f(-u)", check_acg_antipodal),
        PropertyCheck(
            "axial_symmetry_contrast",
            f"PS is axially symmetric; an anisotropic ACG deviates by more than {ACG_ASYMMETRY}",
            check_axial_contrast,
        ),
    ],
)
