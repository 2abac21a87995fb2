"""
Toy S-VAE Package

Synthetic image data, a patch encoder/decoder and the four posterior
families of the ablation (G-x, F-x, N-x, S-x).
"""

from .data import (
    DatasetSpec,
    ToyDataset,
    generate_dataset,
    load_dataset,
    patchify,
    save_dataset,
    unpatchify,
)
from .exceptions import InputShapeError, SvaeError, TrainingDivergedError
from .model import (
    LatentNoise,
    PosteriorParams,
    Reconstruction,
    SvaeLoss,
    SvaeModel,
    SvaeModelConfig,
    decode_latents,
    draw_latent_noise,
    encode,
    kl_term,
    latent_norm_stats,
    posterior_latent,
    reconstruct,
    sample_latent,
    svae_loss,
)
from .posterior import PosteriorFamily, PosteriorKind
from .train import EpochRecord, SvaeTrainConfig, SvaeTrainingResult, load_svae, train_svae

__all__ = [
    "DatasetSpec",
    "ToyDataset",
    "generate_dataset",
    "save_dataset",
    "load_dataset",
    "patchify",
    "unpatchify",
    "PosteriorKind",
    "PosteriorFamily",
    "SvaeModel",
    "SvaeModelConfig",
    "PosteriorParams",
    "LatentNoise",
    "SvaeLoss",
    "Reconstruction",
    "encode",
    "draw_latent_noise",
    "sample_latent",
    "kl_term",
    "svae_loss",
    "posterior_latent",
    "decode_latents",
    "reconstruct",
    "latent_norm_stats",
    "SvaeTrainConfig",
    "SvaeTrainingResult",
    "EpochRecord",
    "train_svae",
    "load_svae",
    "SvaeError",
    "TrainingDivergedError",
    "InputShapeError",
]
