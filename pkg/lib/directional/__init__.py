"""
Directional Statistics Package

Distributions on the unit hypersphere: uniform, von Mises-Fisher (density
only) and Power Spherical (density, exact sampling, pathwise gradients, KL to
the uniform law).
"""

from .exceptions import (
    DirectionalError,
    InvalidConcentrationError,
    InvalidDimensionError,
    NotUnitVectorError,
    SeriesConvergenceError,
)
from .montecarlo import mc_integral_defensive, mc_integral_uniform
from .power_spherical import (
    PathwiseGradient,
    PowerSphericalParams,
    PSNoise,
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
from .special import log_bessel_iv, log_surface_area
from .sphere import (
    UnitDirection,
    householder_vector,
    reflect_from_axis,
    rotation_fixing,
    sample_uniform_sphere,
    sample_uniform_sphere_batch,
)
from .vmf import VmfParams, vmf_log_density, vmf_log_density_batch, vmf_log_normalizer

__all__ = [
    "UnitDirection",
    "VmfParams",
    "PowerSphericalParams",
    "PSNoise",
    "PathwiseGradient",
    "log_surface_area",
    "log_bessel_iv",
    "vmf_log_normalizer",
    "vmf_log_density",
    "vmf_log_density_batch",
    "ps_log_normalizer",
    "ps_log_density",
    "ps_log_density_batch",
    "ps_sample",
    "ps_sample_batch",
    "ps_rsample",
    "ps_sample_pathwise_grad",
    "draw_ps_noise",
    "ps_mean",
    "ps_covariance",
    "mean_cosine",
    "mean_cosine_grad",
    "kl_ps_uniform",
    "kl_ps_uniform_closed_form",
    "kl_ps_uniform_tensor",
    "sample_uniform_sphere",
    "sample_uniform_sphere_batch",
    "householder_vector",
    "reflect_from_axis",
    "rotation_fixing",
    "mc_integral_uniform",
    "mc_integral_defensive",
    "DirectionalError",
    "InvalidDimensionError",
    "InvalidConcentrationError",
    "NotUnitVectorError",
    "SeriesConvergenceError",
]
