"""
Ground-truth token process: a class-conditional Markov chain on the sphere

Per class c there is a start direction mu_c and a rotation Q_c acting in a
random 2-plane. A sequence draws

    u_1 ~ PS(mu_c, kappa_start),   u_{k+1} ~ PS(Q_c u_k, kappa_step)

and emits tokens R u_k. The "gaussian" source layers a fixed per-dimension
scale and per-token log-normal radial noise on top, emulating unnormalized
diagonal-Gaussian latents with the same directional structure.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .. import rng as rng_streams
from ..directional import PowerSphericalParams, UnitDirection, mean_cosine, ps_sample_batch, sample_uniform_sphere_batch
from .exceptions import ArError, UnknownClassError
from .tokens import TokenSequence


class TokenSource(str, Enum):
    SPHERICAL = "spherical"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class MarkovProcessConfig:
    d: int = 16
    n_classes: int = 2
    grid: tuple[int, int] = (2, 2)
    kappa_start: float = 20.0
    kappa_step: float = 50.0
    angle: float = 0.6
    radius: float | None = None
    source: TokenSource = TokenSource.SPHERICAL
    scale_sigma: float = 0.3
    radial_sigma: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        object.__setattr__(self, "source", TokenSource(self.source))
        if self.d < 2:
            raise ArError(f"token dimension must be >= 2, got {self.d}")

    @property
    def length(self) -> int:
        return self.grid[0] * self.grid[1]

    @property
    def resolved_radius(self) -> float:
        return float(np.sqrt(self.d)) if self.radius is None else float(self.radius)


def plane_rotation(a: np.ndarray, b: np.ndarray, angle: float) -> np.ndarray:
    """Rotation by angle in span(a, b) for orthonormal a, b; identity on the complement"""
    d = a.size
    return (
        np.eye(d)
        + (np.cos(angle) - 1.0) * (np.outer(a, a) + np.outer(b, b))
        + np.sin(angle) * (np.outer(b, a) - np.outer(a, b))
    )


class MarkovSphereProcess:
    def __init__(self, config: MarkovProcessConfig, seed: int):
        self.config = config
        self.seed = seed
        rng = rng_streams.stream(seed, "process", "structure")
        d = config.d
        self.start = sample_uniform_sphere_batch(d, config.n_classes, rng)
        self.rotations = []
        for _ in range(config.n_classes):
            basis, _ = np.linalg.qr(rng.standard_normal((d, 2)))
            self.rotations.append(plane_rotation(basis[:, 0], basis[:, 1], config.angle))
        self.dim_scale = np.exp(config.scale_sigma * rng.standard_normal(d))

    @property
    def radius(self) -> float:
        return self.config.resolved_radius

    def _check(self, class_id: int) -> None:
        if not 0 <= class_id < self.config.n_classes:
            raise UnknownClassError(class_id, self.config.n_classes)

    def sample_directions(self, class_id: int, n: int, rng: np.random.Generator) -> np.ndarray:
        """(n, l, d) unit directions of n sequences of one class"""
        self._check(class_id)
        cfg = self.config
        out = np.empty((n, cfg.length, cfg.d))
        first = PowerSphericalParams(UnitDirection(self.start[class_id]), cfg.kappa_start)
        out[:, 0] = ps_sample_batch(first, n, rng)
        rotation = self.rotations[class_id]
        for k in range(1, cfg.length):
            for i in range(n):
                mean = UnitDirection.from_vector(rotation @ out[i, k - 1])
                out[i, k] = ps_sample_batch(PowerSphericalParams(mean, cfg.kappa_step), 1, rng)[0]
        return out

    def sample(
        self, n: int, rng: np.random.Generator, class_ids: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """(n, l, d) token sequences and their (n,) labels; labels are drawn when not given"""
        cfg = self.config
        if class_ids is None:
            class_ids = rng.integers(0, cfg.n_classes, size=n)
        class_ids = np.asarray(class_ids, dtype=np.int64)
        tokens = np.empty((n, cfg.length, cfg.d))
        for c in np.unique(class_ids):
            rows = np.flatnonzero(class_ids == c)
            tokens[rows] = self.radius * self.sample_directions(int(c), rows.size, rng)
        if cfg.source is TokenSource.GAUSSIAN:
            radial = np.exp(cfg.radial_sigma * rng.standard_normal((n, cfg.length, 1)))
            tokens = tokens * self.dim_scale * radial
        return tokens, class_ids

    def sequences(self, n: int, rng: np.random.Generator) -> tuple[list[TokenSequence], np.ndarray]:
        tokens, labels = self.sample(n, rng)
        radius = self.radius if self.config.source is TokenSource.SPHERICAL else 0.0
        return [TokenSequence(t, self.config.grid, radius) for t in tokens], labels

    def first_token_mean_cosine(self) -> float:
        """E[mu_c^T u_1], the same for every class"""
        return mean_cosine(self.config.d, self.config.kappa_start)
