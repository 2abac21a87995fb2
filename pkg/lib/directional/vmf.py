"""
von Mises-Fisher density on S^{d-1}

Density and normalizer only; sampling is done with the Power Spherical law.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidConcentrationError, InvalidDimensionError
from .special import log_bessel_iv, log_surface_area
from .sphere import UnitDirection


@dataclass(frozen=True, eq=False)
class VmfParams:
    mu: UnitDirection
    kappa: float

    def __post_init__(self):
        if not self.kappa >= 0:
            raise InvalidConcentrationError(self.kappa)

    @property
    def d(self) -> int:
        return self.mu.d


def vmf_log_normalizer(d: int, kappa: float) -> float:
    """log C_d(kappa) = (d/2 - 1) log k - (d/2) log 2pi - log I_{d/2-1}(k)"""
    if kappa < 0:
        raise InvalidConcentrationError(kappa)
    if kappa == 0:
        return -log_surface_area(d)
    nu = 0.5 * d - 1.0
    return float(
        nu * np.log(kappa) - 0.5 * d * np.log(2.0 * np.pi) - log_bessel_iv(nu, kappa)
    )


def vmf_log_density_batch(u: np.ndarray, p: VmfParams) -> np.ndarray:
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    if u.shape[-1] != p.d:
        raise InvalidDimensionError(u.shape[-1], f"Point dimension does not match mu (d={p.d})")
    if p.kappa == 0:
        return np.full(u.shape[0], -log_surface_area(p.d))
    return vmf_log_normalizer(p.d, p.kappa) + p.kappa * (u @ p.mu.components)


def vmf_log_density(u: UnitDirection | np.ndarray, p: VmfParams) -> float:
    return float(vmf_log_density_batch(np.asarray(u), p)[0])
