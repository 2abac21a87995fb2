"""
Toy S-VAE properties across the four posterior families
"""

import logging

import numpy as np

from .. import rng as rng_streams
from ..svae import (
    DatasetSpec,
    PosteriorFamily,
    PosteriorKind,
    SvaeModel,
    SvaeModelConfig,
    SvaeTrainConfig,
    TrainingDivergedError,
    draw_latent_noise,
    encode,
    generate_dataset,
    latent_norm_stats,
    sample_latent,
    svae_loss,
    train_svae,
)
from ..tensor import gradcheck, no_grad
from .base import CheckResult, PropertyCheck, SuiteDefinition, at_least, at_most

logger = logging.getLogger(__name__)

MODEL = SvaeModelConfig(patch_dim=16, latent_dim=8, hidden=32)
FAMILIES = [PosteriorFamily(kind) for kind in PosteriorKind]
N_TRAINING_SEEDS = 10
NORM_TOLERANCE = 1e-9
GRADIENT_TOLERANCE = 1e-4


def _patches(seed: int, n_items: int = 32) -> np.ndarray:
    data = generate_dataset(DatasetSpec(n_items=n_items), rng_streams.derive_seed(seed, "verify", "svae_data"))
    return data.patches().reshape(-1, MODEL.patch_dim)


def _model(family: PosteriorFamily, seed: int) -> SvaeModel:
    rng = rng_streams.stream(seed, "verify", "svae_model", family.label)
    model = SvaeModel(MODEL, family, rng)
    # the zero-initialized output layer would hide every encoder gradient
    last = model.decoder.layers[-1]
    last.weight.value = rng.normal(scale=0.5, size=last.weight.shape)
    return model


def check_decoder_inputs_on_sphere(seed: int) -> CheckResult:
    x = _patches(seed)
    worst = 0.0
    for family in FAMILIES:
        if not family.normalized:
            continue
        model = _model(family, seed)
        with no_grad():
            z = sample_latent(encode(model, x), family, rng=rng_streams.stream(seed, "verify", "svae_draw")).value
        worst = max(worst, float(np.max(np.abs(np.linalg.norm(z, axis=1) - model.radius))))
    return at_most(worst, NORM_TOLERANCE, "max | ||z|| - R | over normalized families")


def check_norm_variance_contrast(seed: int) -> CheckResult:
    """
    Normalized families have zero latent-norm variance; the value reported is
    the smallest variance among the unnormalized ones
    """
    x = _patches(seed)
    smallest, normalized_worst = float("inf"), 0.0
    for family in FAMILIES:
        stats = latent_norm_stats(_model(family, seed), x, rng_streams.stream(seed, "verify", "svae_norms"))
        if family.normalized:
            normalized_worst = max(normalized_worst, stats["var"])
        else:
            smallest = min(smallest, stats["var"])
    if normalized_worst > NORM_TOLERANCE**2:
        return at_most(normalized_worst, NORM_TOLERANCE**2, "latent norm variance of a normalized family")
    return at_least(smallest, np.finfo(float).tiny, f"normalized families: {normalized_worst:.2e}")


def check_training_finite(seed: int) -> CheckResult:
    data = generate_dataset(DatasetSpec(n_items=64), rng_streams.derive_seed(seed, "verify", "svae_train_data"))
    train_config = SvaeTrainConfig(epochs=2, batch_size=64, warmup_steps=2)
    diverged = []
    for family in FAMILIES:
        for i in range(N_TRAINING_SEEDS):
            try:
                train_svae(MODEL, family, data, train_config, seed=rng_streams.derive_seed(seed, "verify", "svae_train", i))
            except TrainingDivergedError as e:
                logger.warning("%s seed %d: %s", family.label, i, e)
                diverged.append(f"{family.label}/{i}")
    return at_most(len(diverged), 0, f"diverged runs: {', '.join(diverged) or 'none'}")


def check_gradients(seed: int) -> CheckResult:
    x = _patches(seed, n_items=2)[:5]
    worst, worst_case = 0.0, ""
    for family in FAMILIES:
        model = _model(family, seed)
        noise = draw_latent_noise(family, x.shape[0], MODEL.latent_dim, rng_streams.stream(seed, "verify", "svae_noise"))
        params = [model.encoder.layers[0].weight, model.decoder.layers[-1].weight]
        error = gradcheck(lambda model=model, noise=noise: svae_loss(model, x, noise).total, params, floor=1e-4)
        if error > worst:
            worst, worst_case = error, family.label
    return at_most(worst, GRADIENT_TOLERANCE, f"worst family: {worst_case}")


SVAE_TOY_SUITE = SuiteDefinition(
    name="svae_toy",
    description="Posterior families of the toy S-VAE: decoder inputs, norm statistics and training health",
    checks=[
        PropertyCheck(
            "normalized_decoder_inputs_have_norm_r",
            "Spherical and normalized-Gaussian latents reach the decoder with norm R",
            check_decoder_inputs_on_sphere,
        ),
        PropertyCheck(
            "latent_norm_variance_contrast",
            "Normalized families have zero latent-norm variance, unnormalized ones do not",
            check_norm_variance_contrast,
        ),
        PropertyCheck(
            "training_loss_finite",
            f"Every family trains without a non-finite loss for {N_TRAINING_SEEDS} seeds",
            check_training_finite,
        ),
        PropertyCheck(
            "loss_gradients_match_finite_differences",
            "Encoder and decoder gradients of the loss agree with central differences per family",
            check_gradients,
        ),
    ],
)
