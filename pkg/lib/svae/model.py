"""
Patch encoder/decoder with interchangeable posteriors

The encoder maps one flattened patch to the posterior parameters of its
latent token; the decoder maps a latent back to the patch. Spherical and
normalized families feed the decoder latents of norm exactly R.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..bounds import KLReduction, kl_diag_gaussian_tensor
from ..directional import PSNoise, draw_ps_noise, kl_ps_uniform_tensor, ps_rsample
from ..geometry import project_batch, project_tensor
from ..tensor import MLP, DiffTensor, Module, no_grad
from .exceptions import InputShapeError
from .posterior import PosteriorFamily, PosteriorKind

logger = logging.getLogger(__name__)

DIRECTION_FLOOR = 1e-12


@dataclass(frozen=True)
class SvaeModelConfig:
    patch_dim: int = 16
    latent_dim: int = 16
    hidden: int = 256
    # None resolves to sqrt(latent_dim)
    radius: float | None = None

    @property
    def resolved_radius(self) -> float:
        return float(np.sqrt(self.latent_dim)) if self.radius is None else float(self.radius)


def _head_size(kind: PosteriorKind, d: int) -> int:
    if kind is PosteriorKind.SIGMA_VAE:
        return d
    if kind is PosteriorKind.POWER_SPHERICAL:
        return d + 1
    return 2 * d


class SvaeModel(Module):
    def __init__(self, config: SvaeModelConfig, family: PosteriorFamily, rng: np.random.Generator):
        self.config = config
        self.family = family
        self.radius = config.resolved_radius
        self.encoder = MLP(
            [config.patch_dim, config.hidden, config.hidden, _head_size(family.kind, config.latent_dim)],
            rng,
        )
        self.decoder = MLP(
            [config.latent_dim, config.hidden, config.hidden, config.patch_dim],
            rng,
            zero_init_last=True,
        )

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim


@dataclass(eq=False)
class PosteriorParams:
    """Per-row posterior parameters; unused fields stay None"""

    kind: PosteriorKind
    radius: float
    mean: DiffTensor  # (n, d); unit rows for Power Spherical
    log_scale: DiffTensor | None = None
    kappa: DiffTensor | None = None  # (n, 1)

    @property
    def scale(self) -> np.ndarray | None:
        return None if self.log_scale is None else np.exp(self.log_scale.value)


@dataclass(frozen=True, eq=False)
class LatentNoise:
    """Base randomness of one latent draw, injected so losses are deterministic"""

    eps: np.ndarray | None = None  # (n, d)
    ps: PSNoise | None = None
    sigma: float | None = None


@dataclass(eq=False)
class SvaeLoss:
    total: DiffTensor
    recon: DiffTensor
    kl: DiffTensor

    def terms(self) -> dict[str, float]:
        return {"recon": self.recon.item(), "kl": self.kl.item(), "total": self.total.item()}


@dataclass(eq=False)
class Reconstruction:
    x_hat: np.ndarray
    per_item_mse: np.ndarray
    latents: np.ndarray


def _as_rows(model: SvaeModel, x: np.ndarray) -> tuple[np.ndarray, tuple]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != model.config.patch_dim:
        raise InputShapeError(("...", model.config.patch_dim), x.shape)
    return x.reshape(-1, model.config.patch_dim), x.shape[:-1]


def encode(model: SvaeModel, x: np.ndarray) -> PosteriorParams:
    """
    Posterior parameters for the rows of x

    Spherical heads give mu by l2-normalizing the raw head and kappa >= 0 by a
    softplus of the raw scalar; Gaussian heads give sigma = exp(raw log-sigma).
    """
    rows, _ = _as_rows(model, x)
    kind = model.family.kind
    d = model.latent_dim
    head = model.encoder.forward(DiffTensor(rows))
    if kind is PosteriorKind.SIGMA_VAE:
        return PosteriorParams(kind, model.radius, mean=head)
    if kind is PosteriorKind.POWER_SPHERICAL:
        raw = head[:, :d]
        mu = raw / raw.norm(axis=-1, keepdims=True).clamp_min(DIRECTION_FLOOR)
        return PosteriorParams(kind, model.radius, mean=mu, kappa=head[:, d:].softplus())
    return PosteriorParams(kind, model.radius, mean=head[:, :d], log_scale=head[:, d:])


def draw_sigma(family: PosteriorFamily, rng: np.random.Generator) -> float:
    """sigma-VAE scale: |N(0, C_sigma^2)|"""
    return float(abs(rng.normal(0.0, family.c_sigma)))


def draw_latent_noise(
    family: PosteriorFamily, n: int, d: int, rng: np.random.Generator, sigma: float | None = None
) -> LatentNoise:
    if family.kind is PosteriorKind.POWER_SPHERICAL:
        return LatentNoise(ps=draw_ps_noise(n, d, rng))
    eps = rng.standard_normal((n, d))
    if family.kind is PosteriorKind.SIGMA_VAE:
        return LatentNoise(eps=eps, sigma=draw_sigma(family, rng) if sigma is None else sigma)
    return LatentNoise(eps=eps)


def sample_latent(
    params: PosteriorParams,
    family: PosteriorFamily,
    rng: np.random.Generator | None = None,
    noise: LatentNoise | None = None,
) -> DiffTensor:
    """
    Reparameterized latent draw, on the tape

    Either rng or an explicit noise must be given; a noise of zeros returns
    the posterior mean for the Gaussian families.
    """
    n, d = params.mean.shape
    if noise is None:
        noise = draw_latent_noise(family, n, d, rng)
    kind = params.kind
    if kind is PosteriorKind.POWER_SPHERICAL:
        return ps_rsample(params.mean, params.kappa, noise.ps) * params.radius
    if kind is PosteriorKind.SIGMA_VAE:
        return params.mean + noise.eps * noise.sigma
    z = params.mean + params.log_scale.exp() * noise.eps
    if kind is PosteriorKind.GAUSSIAN_NORM:
        return project_tensor(z, params.radius)
    return z


def kl_term(params: PosteriorParams, reduction: KLReduction = KLReduction.MEAN_ALL) -> DiffTensor:
    """
    KL of the posterior to the family's prior

    sigma-VAE keeps only the mean-dependent part 0.5 * mu^2; Power Spherical
    uses the closed form against the uniform law, divided by d under MEAN_ALL.
    """
    reduction = KLReduction(reduction)
    if params.kind is PosteriorKind.POWER_SPHERICAL:
        d = params.mean.shape[-1]
        per_row = kl_ps_uniform_tensor(d, params.kappa)
        return per_row.mean() / float(d) if reduction is KLReduction.MEAN_ALL else per_row.mean()
    if params.kind is PosteriorKind.SIGMA_VAE:
        elementwise = params.mean * params.mean * 0.5
        if reduction is KLReduction.MEAN_ALL:
            return elementwise.mean()
        return elementwise.sum() / params.mean.shape[0]
    return kl_diag_gaussian_tensor(params.mean, params.log_scale, reduction)


def svae_loss(
    model: SvaeModel,
    x: np.ndarray,
    noise: LatentNoise,
    reduction: KLReduction = KLReduction.MEAN_ALL,
) -> SvaeLoss:
    """Negative ELBO: MSE reconstruction plus kl_weight times the KL term"""
    rows, _ = _as_rows(model, x)
    params = encode(model, rows)
    z = sample_latent(params, model.family, noise=noise)
    x_hat = model.decoder.forward(z)
    diff = x_hat - rows
    recon = (diff * diff).mean()
    kl = kl_term(params, reduction)
    return SvaeLoss(total=recon + kl * model.family.kl_weight, recon=recon, kl=kl)


def posterior_latent(model: SvaeModel, x: np.ndarray) -> np.ndarray:
    """
    Deterministic latent of each row: R mu for Power Spherical, N_R(mu) for the
    normalized Gaussian and mu otherwise
    """
    rows, lead = _as_rows(model, x)
    with no_grad():
        params = encode(model, rows)
    mean = params.mean.value
    if params.kind is PosteriorKind.POWER_SPHERICAL:
        latents = model.radius * mean
    elif params.kind is PosteriorKind.GAUSSIAN_NORM:
        latents, _ = project_batch(mean, model.radius)
    else:
        latents = mean
    return latents.reshape(*lead, model.latent_dim)


def decode_latents(model: SvaeModel, z: np.ndarray) -> np.ndarray:
    """Decoder output for latents; normalized families project first"""
    z = np.asarray(z, dtype=np.float64)
    rows = z.reshape(-1, model.latent_dim)
    if model.family.normalized:
        rows, _ = project_batch(rows, model.radius)
    with no_grad():
        out = model.decoder.forward(DiffTensor(rows)).value
    return out.reshape(*z.shape[:-1], model.config.patch_dim)


def reconstruct(model: SvaeModel, x: np.ndarray) -> Reconstruction:
    """Decode the posterior latent of x; per-item MSE averages every axis but the first"""
    x = np.asarray(x, dtype=np.float64)
    latents = posterior_latent(model, x)
    x_hat = decode_latents(model, latents)
    err = (x_hat - x) ** 2
    per_item = err.reshape(err.shape[0], -1).mean(axis=1) if err.ndim > 1 else err.mean(keepdims=True)
    return Reconstruction(x_hat=x_hat, per_item_mse=per_item, latents=latents)


def latent_norm_stats(model: SvaeModel, x: np.ndarray, rng: np.random.Generator) -> dict[str, float]:
    """Mean and variance of ||z|| over one posterior draw per row"""
    rows, _ = _as_rows(model, x)
    with no_grad():
        z = sample_latent(encode(model, rows), model.family, rng=rng).value
    norms = np.linalg.norm(z, axis=1)
    return {
        "mean": float(norms.mean()),
        "var": float(norms.var()),
        "min": float(norms.min()),
        "max": float(norms.max()),
    }
