"""
Evidence lower bounds for the spherical and normalized-Gaussian families
"""

from collections.abc import Callable

import numpy as np

from ..geometry import project_batch
from .exceptions import BoundsError
from .gaussian import DiagGaussianParams, KLReduction, kl_diag_gaussian_std

# maps (n, d) latents to (n, ...) reconstructions
Decoder = Callable[[np.ndarray], np.ndarray]


def gaussian_log_likelihood(x: np.ndarray, x_hat: np.ndarray) -> np.ndarray:
    """log N(x; x_hat, I) per row; the unit-scale likelihood behind an MSE loss"""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    x_hat = np.asarray(x_hat, dtype=np.float64).reshape(x_hat.shape[0], -1)
    return -0.5 * np.sum((x_hat - x) ** 2, axis=1) - 0.5 * x.size * np.log(2.0 * np.pi)


def elbo_svae(recon_loglik: float, kl_directional: float, kl_weight: float) -> float:
    if kl_weight < 0:
        raise BoundsError(f"KL weight must be nonnegative, got {kl_weight}")
    return float(recon_loglik - kl_weight * kl_directional)


def normalized_recon_samples(
    x: np.ndarray,
    latents: np.ndarray,
    decoder: Decoder,
    radius: float,
) -> np.ndarray:
    """log p(x | N_R(z)) for each latent row"""
    projected, _ = project_batch(latents, radius)
    return gaussian_log_likelihood(x, decoder(projected))


def objective_gaussian_norm(
    x: np.ndarray,
    q: DiagGaussianParams,
    decoder: Decoder,
    radius: float,
    n_mc: int,
    rng: np.random.Generator,
    reduction: KLReduction = KLReduction.SUM,
) -> float:
    """E_q[log p(x | N_R(z))] - KL(q || N(0, I)) with an n_mc-sample reconstruction term"""
    if n_mc < 1:
        raise BoundsError(f"n_mc must be at least 1, got {n_mc}")
    recon = normalized_recon_samples(x, q.sample(n_mc, rng), decoder, radius)
    return float(recon.mean() - kl_diag_gaussian_std(q, reduction))
