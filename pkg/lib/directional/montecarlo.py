"""
Monte-Carlo integration of directional densities over S^{d-1}

Both estimators return (estimate, stderr) of the integral of exp(log_density).
The uniform estimator is exact in expectation but heavy-tailed for sharp
densities; the defensive estimator draws from the mixture
0.5 Unif + 0.5 PS(mu, kappa_proposal), which bounds the weight of any
density no sharper than the PS component.
"""

from collections.abc import Callable

import numpy as np
from scipy.special import logsumexp

from .power_spherical import PowerSphericalParams, ps_log_density_batch, ps_sample_batch
from .special import log_surface_area
from .sphere import UnitDirection, sample_uniform_sphere_batch

LogDensity = Callable[[np.ndarray], np.ndarray]


def _summary(weights: np.ndarray) -> tuple[float, float]:
    return float(np.mean(weights)), float(np.std(weights, ddof=1) / np.sqrt(weights.size))


def mc_integral_uniform(
    log_density: LogDensity, d: int, n: int, rng: np.random.Generator
) -> tuple[float, float]:
    u = sample_uniform_sphere_batch(d, n, rng)
    return _summary(np.exp(log_density(u) + log_surface_area(d)))


def mc_integral_defensive(
    log_density: LogDensity,
    mu: UnitDirection,
    kappa_proposal: float,
    n: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    d = mu.d
    proposal = PowerSphericalParams(mu, kappa_proposal)
    n_uniform = n // 2
    u = np.concatenate(
        [
            sample_uniform_sphere_batch(d, n_uniform, rng),
            ps_sample_batch(proposal, n - n_uniform, rng),
        ]
    )
    log_mix = logsumexp(
        np.stack(
            [
                np.full(n, -log_surface_area(d)),
                ps_log_density_batch(u, proposal, floor=0.0),
            ]
        ),
        axis=0,
    ) + np.log(0.5)
    weights = np.exp(log_density(u) - log_mix)
    # equal strata; the pooled stderr slightly overstates the stratified one
    return _summary(weights)
