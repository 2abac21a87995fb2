"""
Probe for rotational symmetry of a directional density about an axis
"""

from collections.abc import Callable

import numpy as np

from ..directional import UnitDirection, rotation_fixing, sample_uniform_sphere_batch

LogDensity = Callable[[np.ndarray], np.ndarray]


def axial_symmetry_probe(
    log_density: LogDensity,
    mu: UnitDirection,
    n_rot: int,
    rng: np.random.Generator,
    n_points: int = 256,
) -> float:
    """max |log f(Q u) - log f(u)| over random rotations Q fixing mu and uniform points u"""
    u = sample_uniform_sphere_batch(mu.d, n_points, rng)
    reference = log_density(u)
    deviation = 0.0
    for _ in range(n_rot):
        q = rotation_fixing(mu.components, rng)
        deviation = max(deviation, float(np.max(np.abs(log_density(u @ q.T) - reference))))
    return deviation
