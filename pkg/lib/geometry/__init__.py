"""
Sphere Geometry Package

The radius-R projection N_R, its tangent projector, and executable forms of
the first-order stability results for projected AR refeeding.
"""

from .exceptions import GeometryError, InvalidRadiusError, OffSphereError
from .projection import (
    PROJECTION_EPS,
    SphericalToken,
    TangentProjector,
    decompose_radial_tangential,
    project_batch,
    project_tensor,
    project_to_sphere,
    tangent_projector,
)
from .stability import (
    MIN_ORDER,
    RefeedStep,
    StabilityReport,
    convergence_order,
    first_order_stability_check,
    refeed_error_propagation,
    spectral_norm,
)

__all__ = [
    "PROJECTION_EPS",
    "MIN_ORDER",
    "SphericalToken",
    "TangentProjector",
    "StabilityReport",
    "RefeedStep",
    "project_to_sphere",
    "project_batch",
    "project_tensor",
    "tangent_projector",
    "decompose_radial_tangential",
    "first_order_stability_check",
    "refeed_error_propagation",
    "convergence_order",
    "spectral_norm",
    "GeometryError",
    "OffSphereError",
    "InvalidRadiusError",
]
