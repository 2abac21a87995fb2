"""
Diagonal Gaussian posteriors against the standard Normal prior
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..directional import UnitDirection
from ..tensor import DiffTensor
from .exceptions import BoundsError, InvalidScaleError


class KLReduction(str, Enum):
    """How per-element KL terms are reduced; weights are only comparable under one"""

    SUM = "sum"
    MEAN_ALL = "mean-all"


@dataclass(frozen=True, eq=False)
class DiagGaussianParams:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        scale = np.array(self.scale, dtype=np.float64).reshape(-1)
        if mean.shape != scale.shape:
            raise BoundsError(f"mean and scale shapes differ: {mean.shape} vs {scale.shape}")
        bad = np.flatnonzero(~(scale > 0))
        if bad.size:
            raise InvalidScaleError(float(scale[bad[0]]), int(bad[0]))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    @property
    def d(self) -> int:
        return self.mean.size

    @classmethod
    def standard(cls, d: int) -> "DiagGaussianParams":
        return cls(np.zeros(d), np.ones(d))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.mean + self.scale * rng.standard_normal((n, self.d))

    def log_density(self, z: np.ndarray) -> np.ndarray:
        """log N(z; mean, diag(scale^2)) for the rows of z"""
        standardized = (np.atleast_2d(z) - self.mean) / self.scale
        return (
            -0.5 * np.sum(standardized**2, axis=-1)
            - np.sum(np.log(self.scale))
            - 0.5 * self.d * np.log(2.0 * np.pi)
        )


@dataclass(frozen=True, eq=False)
class PolarSample:
    r: float
    u: UnitDirection

    @classmethod
    def from_vector(cls, z: np.ndarray) -> "PolarSample":
        z = np.asarray(z, dtype=np.float64)
        return cls(float(np.linalg.norm(z)), UnitDirection.from_vector(z))

    def to_vector(self) -> np.ndarray:
        return self.r * self.u.components


def _reduce(elementwise: np.ndarray, reduction: KLReduction) -> float:
    if KLReduction(reduction) is KLReduction.SUM:
        return float(np.sum(elementwise))
    return float(np.mean(elementwise))


def standard_normal_log_density(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(z)
    return -0.5 * np.sum(z**2, axis=-1) - 0.5 * z.shape[-1] * np.log(2.0 * np.pi)


def kl_diag_gaussian_std(
    p: DiagGaussianParams, reduction: KLReduction = KLReduction.SUM
) -> float:
    """KL(N(mu, diag sigma^2) || N(0, I)) = 1/2 sum(mu^2 + sigma^2 - 1 - log sigma^2)"""
    elementwise = 0.5 * (p.mean**2 + p.scale**2 - 1.0 - 2.0 * np.log(p.scale))
    return _reduce(elementwise, reduction)


def kl_diag_gaussian_mc(
    p: DiagGaussianParams, n: int, rng: np.random.Generator
) -> tuple[float, float]:
    """E_q[log q - log p] (sum reduction) with its standard error"""
    z = p.sample(n, rng)
    values = p.log_density(z) - standard_normal_log_density(z)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n))


def kl_diag_gaussian_tensor(
    mean: DiffTensor, log_scale: DiffTensor, reduction: KLReduction = KLReduction.MEAN_ALL
) -> DiffTensor:
    """
    Training form of kl_diag_gaussian_std over a batch of rows

    SUM totals each row and averages over the batch; MEAN_ALL averages every element.
    """
    elementwise = (mean * mean + (log_scale * 2.0).exp() - 1.0 - log_scale * 2.0) * 0.5
    if KLReduction(reduction) is KLReduction.SUM:
        return elementwise.sum() / mean.shape[0]
    return elementwise.mean()
