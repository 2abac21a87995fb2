"""
Posterior ablation: family x decoder-side normalization x AR-side normalization

Each variant trains an S-VAE on the shared dataset, encodes every patch into
a latent token, trains an AR model on the token sequences, generates images
by decoding tokens through the S-VAE decoder and compares them with the data.
Variants share every seed, so they see the same data order and the same
generation randomness; they run in worker threads with disjoint output
directories, and a failing variant is reported as a failed row.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .. import rng as rng_streams
from ..ar import CfgSchedule, RefeedMode, decode_sequence, train_ar
from ..geometry import project_batch
from ..svae import (
    PosteriorKind,
    SvaeModel,
    ToyDataset,
    decode_latents,
    draw_latent_noise,
    encode,
    generate_dataset,
    latent_norm_stats,
    load_dataset,
    posterior_latent,
    reconstruct,
    sample_latent,
    save_dataset,
    train_svae,
    unpatchify,
)
from ..tensor import no_grad
from .commands import data_dir, ensure_resolved
from .config import AblationVariant, ExperimentConfig, write_resolved_config
from .metrics import sliced_wasserstein
from .reports import SW_NOTE, write_csv, write_report

logger = logging.getLogger(__name__)

TABLE_COLUMNS = (
    "name",
    "family",
    "kl_weight",
    "decoder_norm",
    "ar_norm",
    "status",
    "recon_mse",
    "posterior_norm_var",
    "decoder_input_norm_var",
    "ar_token_norm_var",
    "generated_pre_norm_std",
    "guard_count",
    "sliced_wasserstein",
    "error",
)


@dataclass
class AblationRow:
    name: str
    family: str
    kl_weight: float
    decoder_norm: bool
    ar_norm: bool
    status: str = "ok"
    recon_mse: float | None = None
    # norms of the unnormalized posterior draw (R u for spherical families)
    posterior_norm_var: float | None = None
    decoder_input_norm_var: float | None = None
    ar_token_norm_var: float | None = None
    generated_pre_norm_std: float | None = None
    guard_count: int | None = None
    sliced_wasserstein: float | None = None
    error: str | None = None

    def row(self) -> list:
        return [getattr(self, c) for c in TABLE_COLUMNS]


def posterior_norm_stats(model: SvaeModel, rows: np.ndarray, rng: np.random.Generator) -> dict[str, float]:
    """Norm statistics of one posterior draw per row, before any normalization"""
    with no_grad():
        params = encode(model, rows)
        if params.kind is PosteriorKind.GAUSSIAN_NORM:
            params = replace(params, kind=PosteriorKind.DIAG_GAUSSIAN)
        noise = draw_latent_noise(model.family, len(rows), model.latent_dim, rng)
        z = sample_latent(params, model.family, noise=noise).value
    norms = np.linalg.norm(z, axis=1)
    return {"mean": float(norms.mean()), "var": float(norms.var())}


def ar_tokens(model: SvaeModel, patches: np.ndarray, ar_norm: bool) -> np.ndarray:
    """
    Latent token sequences the AR model is trained on

    Spherical latents are R mu. Gaussian latents are the encoder mean, put on
    the radius-R sphere only when the AR side is normalized.
    """
    if model.family.kind is PosteriorKind.POWER_SPHERICAL:
        return posterior_latent(model, patches)
    with no_grad():
        mean = encode(model, patches.reshape(-1, model.config.patch_dim)).mean.value
    if ar_norm:
        mean, _ = project_batch(mean, model.radius)
    return mean.reshape(*patches.shape[:-1], model.latent_dim)


def run_variant(config: ExperimentConfig, variant: AblationVariant, dataset: ToyDataset) -> AblationRow:
    out = config.out_path / "ablation" / variant.name
    family = config.posterior.to_family(variant.family, variant.kl_weight)
    row = AblationRow(variant.name, family.label, family.kl_weight, variant.decoder_norm, variant.ar_norm)
    spec = dataset.spec
    seeds = config.seeds

    svae = train_svae(
        config.svae.to_model_config(spec.patch_dim),
        family,
        dataset,
        config.svae.to_train_config(),
        seed=seeds.train,
        out_dir=out / "svae",
    )
    model = svae.model
    patches = dataset.patches()
    flat = patches.reshape(-1, spec.patch_dim)
    row.recon_mse = float(reconstruct(model, patches).per_item_mse.mean())
    row.posterior_norm_var = posterior_norm_stats(model, flat, rng_streams.stream(seeds.decode, "ablation", "norms"))["var"]
    row.decoder_input_norm_var = latent_norm_stats(model, flat, rng_streams.stream(seeds.decode, "ablation", "norms"))["var"]

    tokens = ar_tokens(model, patches, variant.ar_norm)
    row.ar_token_norm_var = float(np.linalg.norm(tokens, axis=-1).var())
    ar_config = config.ar.to_model_config(model.latent_dim, spec.grid, dataset.n_classes)
    ar = train_ar(
        ar_config,
        tokens,
        dataset.labels,
        config.ar.to_train_config(),
        seed=seeds.train,
        out_dir=out / "ar",
        extra_meta={"variant": variant.name, "radius": model.radius},
        radius=model.radius if variant.ar_norm else 0.0,
    )

    refeed = RefeedMode.PROJECTED if variant.ar_norm else RefeedMode.RAW
    cfg = CfgSchedule(scale=config.ablation.cfg_scale)
    rng = rng_streams.stream(seeds.decode, "ablation", "generate")
    n = config.ablation.n_generated
    generated = np.empty((n, ar_config.max_length, model.latent_dim))
    pre_norms = []
    guards = 0
    for i in range(n):
        result = decode_sequence(
            ar.model, i % dataset.n_classes, ar_config.max_length, config.decode.n_steps, cfg, rng, model.radius, refeed
        )
        generated[i] = result.sequence.tokens
        pre_norms.extend(s.pre_norm for s in result.diagnostics)
        guards += result.guard_count
    images = unpatchify(decode_latents(model, generated), spec.grid, spec.patch_size)
    row.generated_pre_norm_std = float(np.std(pre_norms))
    row.guard_count = guards
    row.sliced_wasserstein = sliced_wasserstein(
        images.reshape(n, -1),
        dataset.images.reshape(len(dataset), -1),
        rng_streams.stream(seeds.decode, "ablation", "projections"),
        config.ablation.sw_projections,
    )
    return row


def _run_isolated(config: ExperimentConfig, variant: AblationVariant, dataset: ToyDataset) -> AblationRow:
    try:
        row = run_variant(config, variant, dataset)
        logger.info("Ablation variant %s done: recon %.4g, SW %.4g", variant.name, row.recon_mse, row.sliced_wasserstein)
        return row
    except Exception as e:
        logger.warning("Ablation variant %s failed: %s", variant.name, e)
        family = config.posterior.to_family(variant.family, variant.kl_weight)
        return AblationRow(
            variant.name,
            family.label,
            family.kl_weight,
            variant.decoder_norm,
            variant.ar_norm,
            status="failed",
            error=f"{type(e).__name__}: {e}",
        )


def _dataset(config: ExperimentConfig) -> ToyDataset:
    directory = data_dir(config)
    if (directory / "manifest.json").exists():
        return load_dataset(directory)
    dataset = generate_dataset(config.dataset.to_spec(), config.seeds.data)
    save_dataset(dataset, directory)
    return dataset


def cmd_ablation(config: ExperimentConfig) -> list[AblationRow]:
    """Train and evaluate every ablation variant; rows follow the config order"""
    config = ensure_resolved(config)
    write_resolved_config(config)
    dataset = _dataset(config)
    started = time.perf_counter()
    variants = config.ablation.variants
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = [pool.submit(_run_isolated, config, v, dataset) for v in variants]
        rows = [f.result() for f in futures]

    out = config.out_path / "ablation"
    write_csv(out / "ablation_table.csv", TABLE_COLUMNS, (r.row() for r in rows))
    payload = {
        "command": "ablation",
        "rows": [asdict(r) for r in rows],
        "failed": [r.name for r in rows if r.status != "ok"],
        "notes": [SW_NOTE],
    }
    write_report(out / "ablation_report.json", payload, config, started)
    return rows
