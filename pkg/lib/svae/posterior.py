"""
Posterior families of the ablation

    G-x  diagonal Gaussian with an up-weighted KL term
    F-x  sigma-VAE: mean head only, sigma is a fixed non-learned scalar
    N-x  diagonal Gaussian whose samples are projected onto the radius-R sphere
    S-x  Power Spherical
"""

from dataclasses import dataclass
from enum import Enum

from .exceptions import SvaeError


class PosteriorKind(str, Enum):
    DIAG_GAUSSIAN = "diag_gaussian"
    SIGMA_VAE = "sigma_vae"
    GAUSSIAN_NORM = "gaussian_norm"
    POWER_SPHERICAL = "power_spherical"


_LABEL_PREFIX = {
    PosteriorKind.DIAG_GAUSSIAN: "G",
    PosteriorKind.SIGMA_VAE: "F",
    PosteriorKind.GAUSSIAN_NORM: "N",
    PosteriorKind.POWER_SPHERICAL: "S",
}


@dataclass(frozen=True)
class PosteriorFamily:
    kind: PosteriorKind
    kl_weight: float = 0.004
    c_sigma: float = 0.2
    # sigma-VAE only: draw sigma once per model instead of once per step
    sigma_per_model: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", PosteriorKind(self.kind))
        if not self.kl_weight >= 0:
            raise SvaeError(f"kl_weight must be >= 0, got {self.kl_weight}")
        if self.kind is PosteriorKind.SIGMA_VAE and not self.c_sigma > 0:
            raise SvaeError(f"c_sigma must be > 0, got {self.c_sigma}")

    @property
    def normalized(self) -> bool:
        """True when every decoder input lies on the radius-R sphere"""
        return self.kind in (PosteriorKind.GAUSSIAN_NORM, PosteriorKind.POWER_SPHERICAL)

    @property
    def label(self) -> str:
        """Short ablation label, e.g. S-04 for kl_weight 0.004 or F-02 for C_sigma 0.2"""
        value = self.c_sigma if self.kind is PosteriorKind.SIGMA_VAE else self.kl_weight
        digits = round(value * 10) if self.kind is PosteriorKind.SIGMA_VAE else round(value * 1000)
        return f"{_LABEL_PREFIX[self.kind]}-{digits:02d}"
