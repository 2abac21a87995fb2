"""
First-order stability of the projected AR refeeding loop

Near a base point z on the sphere, N_R(z + D) = z + P D + O(||D||^2): radial
perturbations are annihilated to first order. For one refeeding step with
prefix sensitivity J, prefix error e and fresh prediction error eta, the
linearized next-token error is P (J e + eta), whose norm is bounded by
||PJ||_2 ||e|| + ||P eta||.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..tensor import ShapeMismatchError
from .projection import SphericalToken, project_batch, tangent_projector

logger = logging.getLogger(__name__)

STEP_LADDER = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
MIN_ORDER = 1.9
# residuals below this (relative to R) are roundoff, not signal
_ROUNDOFF = 1e-13


@dataclass
class StabilityReport:
    steps: list[float]
    residuals: list[float]
    order: float
    passed: bool
    radial_only: bool = False

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "residuals": self.residuals,
            "order": self.order if np.isfinite(self.order) else None,
            "passed": self.passed,
            "radial_only": self.radial_only,
        }


@dataclass
class RefeedStep:
    error: np.ndarray
    radial_component: float
    error_norm: float
    bound: float
    projected_jacobian_norm: float
    bound_holds: bool


def convergence_order(steps: np.ndarray, residuals: np.ndarray) -> float:
    """Slope of log residual against log step by least squares"""
    slope, _ = np.polyfit(np.log(steps), np.log(residuals), 1)
    return float(slope)


def first_order_stability_check(
    z_bar: SphericalToken,
    delta: np.ndarray,
    steps: tuple[float, ...] = STEP_LADDER,
) -> StabilityReport:
    """
    Residual ladder r(s) = ||N_R(z + s D) - z - s P D|| and its fitted order

    A purely radial D leaves nothing but roundoff; the report then marks
    radial_only and passes without a fit.
    """
    projector = tangent_projector(z_bar)
    base = projector.base
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != base.shape:
        raise ShapeMismatchError("first_order_stability_check", (delta.shape, base.shape))
    tangent = projector.apply(delta)

    s = np.asarray(steps, dtype=np.float64)
    perturbed, _ = project_batch(base + s[:, None] * delta, z_bar.radius)
    residuals = np.linalg.norm(perturbed - base - s[:, None] * tangent, axis=1)

    signal = residuals > _ROUNDOFF * max(z_bar.radius, 1.0)
    if not np.any(signal):
        return StabilityReport(s.tolist(), residuals.tolist(), float("inf"), True, radial_only=True)
    if signal.sum() < 2:
        logger.warning("Residual ladder has a single usable point; order undetermined")
        return StabilityReport(s.tolist(), residuals.tolist(), float("nan"), False)

    order = convergence_order(s[signal], residuals[signal])
    logger.debug("Stability ladder order %.3f over %d steps", order, int(signal.sum()))
    return StabilityReport(s.tolist(), residuals.tolist(), order, order >= MIN_ORDER)


def spectral_norm(
    matrix: np.ndarray, max_iter: int = 1000, tol: float = 1e-13, seed: int = 0
) -> float:
    """Largest singular value by power iteration on M^T M"""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.size == 0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(matrix.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = matrix.T @ (matrix @ v)
        w_norm = np.linalg.norm(w)
        if w_norm == 0:
            return 0.0
        v = w / w_norm
        updated = float(np.linalg.norm(matrix @ v))
        if abs(updated - sigma) <= tol * max(updated, 1.0):
            return updated
        sigma = updated
    return sigma


def refeed_error_propagation(
    jacobian: np.ndarray,
    z_bar: SphericalToken,
    prefix_error: np.ndarray,
    eta: np.ndarray,
) -> RefeedStep:
    """
    Linearized one-step refeeding error e_next = P (J e + eta)

    Args:
        jacobian: (d, m) sensitivity of the pre-projection prediction to the prefix
        z_bar: on-sphere linearization point of the next token
        prefix_error: (m,) error in the refed prefix
        eta: (d,) fresh prediction error
    """
    projector = tangent_projector(z_bar)
    jacobian = np.asarray(jacobian, dtype=np.float64)
    prefix_error = np.asarray(prefix_error, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    d = projector.d
    if jacobian.ndim != 2 or jacobian.shape[0] != d or jacobian.shape[1] != prefix_error.size or eta.shape != (d,):
        raise ShapeMismatchError(
            "refeed_error_propagation", (jacobian.shape, prefix_error.shape, eta.shape)
        )

    error = projector.apply(jacobian @ prefix_error + eta)
    pj_norm = spectral_norm(projector.apply(jacobian.T).T)
    bound = pj_norm * float(np.linalg.norm(prefix_error)) + float(np.linalg.norm(projector.apply(eta)))
    error_norm = float(np.linalg.norm(error))
    radial = float(projector.base @ error) / z_bar.radius
    return RefeedStep(
        error=error,
        radial_component=radial,
        error_norm=error_norm,
        bound=bound,
        projected_jacobian_norm=pj_norm,
        bound_holds=error_norm <= bound * (1.0 + 1e-9) + 1e-15,
    )
