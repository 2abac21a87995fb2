"""
Unit directions, uniform sampling on S^{d-1}, and Householder frames
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidDimensionError, NotUnitVectorError

UNIT_TOLERANCE = 1e-12
_DEGENERATE = 1e-12


@dataclass(frozen=True, eq=False)
class UnitDirection:
    """A d-vector on S^{d-1}; construction rejects anything off the sphere by > 1e-12"""

    components: np.ndarray

    def __post_init__(self):
        components = np.array(self.components, dtype=np.float64).reshape(-1)
        norm = float(np.linalg.norm(components))
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            raise NotUnitVectorError(norm)
        components.setflags(write=False)
        object.__setattr__(self, "components", components)

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "UnitDirection":
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        norm = float(np.linalg.norm(v))
        if norm < _DEGENERATE:
            raise NotUnitVectorError(norm, "Cannot normalize a (near) zero vector")
        return cls(v / norm)

    @classmethod
    def axis(cls, d: int, index: int = 0) -> "UnitDirection":
        e = np.zeros(d)
        e[index] = 1.0
        return cls(e)

    @property
    def d(self) -> int:
        return self.components.size

    def __array__(self, dtype=None, copy=None):
        return self.components if dtype is None else self.components.astype(dtype)


def sample_uniform_sphere_batch(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n rows uniform on S^{d-1}; Gaussian draws with norm < 1e-12 are redrawn"""
    if d < 2:
        raise InvalidDimensionError(d, "Sphere dimension needs d >= 2")
    x = rng.standard_normal((n, d))
    norms = np.linalg.norm(x, axis=1)
    bad = norms < _DEGENERATE
    while np.any(bad):
        x[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(x, axis=1)
        bad = norms < _DEGENERATE
    return x / norms[:, None]


def sample_uniform_sphere(d: int, rng: np.random.Generator) -> UnitDirection:
    return UnitDirection(sample_uniform_sphere_batch(d, 1, rng)[0])


def householder_vector(mu: np.ndarray) -> np.ndarray | None:
    """
    Unit w with (I - 2ww^T) e1 = mu, or None when mu == e1 (identity branch)
    """
    w = -np.asarray(mu, dtype=np.float64).copy()
    w[0] += 1.0
    norm = np.linalg.norm(w)
    if norm < _DEGENERATE:
        return None
    return w / norm


def reflect_from_axis(mu: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Map rows of y from the e1 reference frame to mu's frame"""
    w = householder_vector(mu)
    if w is None:
        return np.array(y, dtype=np.float64)
    return y - 2.0 * (y @ w)[..., None] * w


def rotation_fixing(mu: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    A random rotation Q with Q mu = mu, built as the product of two
    Householder reflections whose normals are tangent at mu
    """
    mu = np.asarray(mu, dtype=np.float64)
    d = mu.size
    q = np.eye(d)
    for _ in range(2):
        v = rng.standard_normal(d)
        v -= (v @ mu) * mu
        v /= np.linalg.norm(v)
        q = (np.eye(d) - 2.0 * np.outer(v, v)) @ q
    return q
