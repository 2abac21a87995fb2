"""
Constant-norm projection onto the radius-R sphere

    N_R(z) = R z / max(||z||, eps)

and its Jacobian on the sphere, the tangent projector P = I - z z^T / R^2.
The eps guard never raises: when it fires the output is shorter than R and
the token carries guarded=True so decoders can count the event.
"""

from dataclasses import dataclass

import numpy as np

from ..tensor import DiffTensor, ShapeMismatchError
from .exceptions import InvalidRadiusError, OffSphereError

PROJECTION_EPS = 1e-7
BASE_POINT_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class SphericalToken:
    """A d-vector of norm R (or shorter, when the eps guard fired)"""

    components: np.ndarray
    radius: float
    guarded: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidRadiusError(self.radius)
        components = np.array(self.components, dtype=np.float64).reshape(-1)
        components.setflags(write=False)
        object.__setattr__(self, "components", components)

    @property
    def d(self) -> int:
        return self.components.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    @property
    def direction(self) -> np.ndarray:
        return self.components / self.radius

    def __array__(self, dtype=None, copy=None):
        return self.components if dtype is None else self.components.astype(dtype)


def project_batch(
    z: np.ndarray, radius: float, eps: float = PROJECTION_EPS
) -> tuple[np.ndarray, np.ndarray]:
    """
    Project the rows of z onto the radius-R sphere

    Returns:
        (projected rows, boolean mask of rows where the eps guard fired)
    """
    if not radius > 0:
        raise InvalidRadiusError(radius)
    z = np.asarray(z, dtype=np.float64)
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    guarded = norms[..., 0] < eps
    return radius * z / np.maximum(norms, eps), guarded


def project_to_sphere(
    z: np.ndarray, radius: float, eps: float = PROJECTION_EPS
) -> SphericalToken:
    projected, guarded = project_batch(np.asarray(z, dtype=np.float64).reshape(-1), radius, eps)
    return SphericalToken(projected, radius, guarded=bool(guarded))


def project_tensor(z: DiffTensor, radius: float, eps: float = PROJECTION_EPS) -> DiffTensor:
    """N_R on the tape, row-wise over the last axis"""
    return z * radius / z.norm(axis=-1, keepdims=True).clamp_min(eps)


@dataclass(frozen=True, eq=False)
class TangentProjector:
    """
    P = I - z z^T / R^2 for a base point z on the radius-R sphere

    Stored as the base point only; apply() costs O(d) per vector.
    """

    base: np.ndarray
    radius: float

    @property
    def d(self) -> int:
        return self.base.size

    def apply(self, v: np.ndarray) -> np.ndarray:
        """P v for a vector or for each row of a matrix"""
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.d:
            raise ShapeMismatchError("tangent_projector.apply", (v.shape, self.base.shape))
        return v - np.multiply.outer(v @ self.base, self.base) / self.radius**2

    def matrix(self) -> np.ndarray:
        return np.eye(self.d) - np.outer(self.base, self.base) / self.radius**2


def _check_base_point(z_bar: SphericalToken) -> np.ndarray:
    base = np.asarray(z_bar.components, dtype=np.float64)
    norm = float(np.linalg.norm(base))
    if abs(norm - z_bar.radius) > BASE_POINT_TOLERANCE:
        raise OffSphereError(norm, z_bar.radius)
    return base


def tangent_projector(z_bar: SphericalToken) -> TangentProjector:
    return TangentProjector(base=_check_base_point(z_bar), radius=z_bar.radius)


def decompose_radial_tangential(
    v: np.ndarray, z_bar: SphericalToken
) -> tuple[float, np.ndarray]:
    """v = alpha z_bar + t with z_bar^T t = 0"""
    base = _check_base_point(z_bar)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != base.shape:
        raise ShapeMismatchError("decompose_radial_tangential", (v.shape, base.shape))
    alpha = float(base @ v) / z_bar.radius**2
    return alpha, v - alpha * base
