"""
Variational Bounds Package

Gaussian and spherical ELBO terms, the chi radial law, the radial-KL bound
gap between them, and the Angular Central Gaussian comparison geometry.
"""

from .acg import AcgParams, acg_log_density, acg_log_density_batch, acg_sample_batch, antipodal_summary
from .bound_gap import BoundGapReport, Estimate, bound_gap_check
from .chi import chi_log_density, chi_mode
from .elbo import (
    Decoder,
    elbo_svae,
    gaussian_log_likelihood,
    normalized_recon_samples,
    objective_gaussian_norm,
)
from .exceptions import BoundsError, InvalidScaleError, NotPositiveDefiniteError
from .gaussian import (
    DiagGaussianParams,
    KLReduction,
    PolarSample,
    kl_diag_gaussian_mc,
    kl_diag_gaussian_std,
    kl_diag_gaussian_tensor,
    standard_normal_log_density,
)
from .projected import (
    QUADRATURE_TOL,
    RayIntegral,
    projected_normal_log_density,
    radial_conditional,
    radial_kl_to_chi,
    ray_integral,
)
from .symmetry import axial_symmetry_probe

__all__ = [
    "DiagGaussianParams",
    "PolarSample",
    "AcgParams",
    "KLReduction",
    "Estimate",
    "BoundGapReport",
    "RayIntegral",
    "Decoder",
    "QUADRATURE_TOL",
    "kl_diag_gaussian_std",
    "kl_diag_gaussian_mc",
    "kl_diag_gaussian_tensor",
    "standard_normal_log_density",
    "chi_log_density",
    "chi_mode",
    "elbo_svae",
    "objective_gaussian_norm",
    "gaussian_log_likelihood",
    "normalized_recon_samples",
    "bound_gap_check",
    "acg_log_density",
    "acg_log_density_batch",
    "acg_sample_batch",
    "antipodal_summary",
    "projected_normal_log_density",
    "radial_conditional",
    "radial_kl_to_chi",
    "ray_integral",
    "axial_symmetry_probe",
    "BoundsError",
    "InvalidScaleError",
    "NotPositiveDefiniteError",
]
