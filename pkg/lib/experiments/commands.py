"""
Dataset, training and decoding commands

Every command takes a resolved ExperimentConfig, writes under config.out_dir
and returns the JSON report it wrote. Output layout:

    <out>/resolved_config.json
    <out>/data/{images,labels}.npy, manifest.json
    <out>/svae/svae.sphl, svae_train_log.csv, svae_summary.json
    <out>/ar/<variant>/ar.sphl, ar_train_log.csv, ar_summary.json
    <out>/decode/<variant>/tokens.npy, decode_steps.csv, decode_summary.json
"""

import logging
import time
from pathlib import Path

import numpy as np

from .. import rng as rng_streams
from ..ar import MarkovSphereProcess, TokenSource, decode_sequence, load_ar, train_ar
from ..ar.schedule import CfgSchedule
from ..ar.train import CHECKPOINT_NAME as AR_CHECKPOINT
from ..svae import generate_dataset, load_dataset, save_dataset, train_svae
from ..svae.train import CHECKPOINT_NAME as SVAE_CHECKPOINT
from .config import DriftVariant, ExperimentConfig, ExperimentKind, resolve_config, write_resolved_config
from .exceptions import ConfigError, MissingCheckpointError, MissingDatasetError, OutputPathError
from .reports import write_csv, write_report

logger = logging.getLogger(__name__)

DECODE_COLUMNS = ("sequence", "class_id", "step", "pre_norm", "post_norm", "guarded", "cfg_scale")


def data_dir(config: ExperimentConfig) -> Path:
    return config.out_path / "data"


def svae_dir(config: ExperimentConfig) -> Path:
    return config.out_path / "svae"


def ar_dir(config: ExperimentConfig, variant: str) -> Path:
    return config.out_path / "ar" / variant


def ar_checkpoint(config: ExperimentConfig, variant: str) -> Path:
    return ar_dir(config, variant) / AR_CHECKPOINT


def ensure_resolved(config: ExperimentConfig) -> ExperimentConfig:
    seeds = config.seeds
    if all(getattr(seeds, name) is not None for name in ("data", "train", "decode", "process")):
        return config
    return resolve_config(config, env={})


def _prepare_out(config: ExperimentConfig) -> None:
    try:
        write_resolved_config(config)
    except OSError as e:
        raise OutputPathError(config.out_path, str(e)) from e


def cmd_gen_data(config: ExperimentConfig) -> dict:
    """Generate the toy dataset and its manifest"""
    config = ensure_resolved(config)
    _prepare_out(config)
    dataset = generate_dataset(config.dataset.to_spec(), config.seeds.data)
    try:
        manifest = save_dataset(dataset, data_dir(config))
    except OSError as e:
        raise OutputPathError(data_dir(config), str(e)) from e
    logger.info("Dataset of %d items written to %s", len(dataset), data_dir(config))
    return manifest


def load_or_fail(config: ExperimentConfig):
    directory = data_dir(config)
    if not (directory / "manifest.json").exists():
        raise MissingDatasetError(directory)
    return load_dataset(directory)


def cmd_train_svae(config: ExperimentConfig, resume: Path | None = None) -> dict:
    """Train the S-VAE of config.posterior on the generated dataset"""
    config = ensure_resolved(config)
    _prepare_out(config)
    dataset = load_or_fail(config)
    family = config.posterior.to_family()
    started = time.perf_counter()
    result = train_svae(
        config.svae.to_model_config(dataset.spec.patch_dim),
        family,
        dataset,
        config.svae.to_train_config(),
        seed=config.seeds.train,
        out_dir=svae_dir(config),
        resume=resume,
    )
    final = result.final
    payload = {
        "command": "train-svae",
        "family": family.label,
        "kl_weight": family.kl_weight,
        "epochs": len(result.log),
        "final": None if final is None else {"recon": final.recon, "kl": final.kl, "total": final.total},
        "fixed_sigma": result.fixed_sigma,
        "checkpoint": SVAE_CHECKPOINT,
    }
    return write_report(svae_dir(config) / "svae_summary.json", payload, config, started)


def sample_process_tokens(config: ExperimentConfig, variant: DriftVariant, n: int, purpose: str):
    """(n, l, d) ground-truth tokens and labels of a variant's token source"""
    process = MarkovSphereProcess(config.process.to_markov(variant.source), config.seeds.process)
    rng = rng_streams.stream(config.seeds.data, "process", variant.source.value, purpose)
    tokens, labels = process.sample(n, rng)
    return process, tokens, labels


def _train_ar_variant(config: ExperimentConfig, variant: DriftVariant, resume: Path | None) -> dict:
    process, tokens, labels = sample_process_tokens(config, variant, config.ar.n_sequences, "train")
    model_config = config.ar.to_model_config(config.process.d, config.process.grid, config.process.n_classes)
    started = time.perf_counter()
    logger.info("Training AR variant %s on %d sequences", variant.name, len(tokens))
    result = train_ar(
        model_config,
        tokens,
        labels,
        config.ar.to_train_config(),
        seed=config.seeds.train,
        out_dir=ar_dir(config, variant.name),
        resume=resume,
        extra_meta={
            "variant": variant.name,
            "source": variant.source.value,
            "refeed": variant.refeed.value,
            "radius": process.radius,
        },
        radius=process.radius if variant.source is TokenSource.SPHERICAL else 0.0,
    )
    payload = {
        "command": "train-ar",
        "variant": variant.name,
        "source": variant.source.value,
        "refeed": variant.refeed.value,
        "epochs": len(result.log),
        "final_loss": result.log[-1][1] if result.log else None,
        "checkpoint": AR_CHECKPOINT,
    }
    return write_report(ar_dir(config, variant.name) / "ar_summary.json", payload, config, started)


def cmd_train_ar(
    config: ExperimentConfig, variants: list[str] | None = None, resume: Path | None = None
) -> dict:
    """Train one AR model per drift variant (all of them unless names are given)"""
    config = ensure_resolved(config)
    selected = [config.drift_variant(name) for name in variants] if variants else list(config.drift.variants)
    if resume is not None and len(selected) != 1:
        raise ConfigError("resume needs exactly one variant")
    _prepare_out(config)
    return {v.name: _train_ar_variant(config, v, resume) for v in selected}


def cmd_train(config: ExperimentConfig, resume: Path | None = None) -> dict:
    """Dispatch on config.kind: svae trains the S-VAE, anything else the AR variants"""
    if config.kind is ExperimentKind.SVAE:
        return cmd_train_svae(config, resume)
    return cmd_train_ar(config, resume=resume)


def load_variant_models(config: ExperimentConfig, names: list[str]) -> dict:
    """Load AR checkpoints; all missing variants are reported together"""
    missing = [name for name in names if not ar_checkpoint(config, name).exists()]
    if missing:
        raise MissingCheckpointError(missing)
    loaded = {}
    for name in names:
        model, _, meta = load_ar(ar_checkpoint(config, name))
        loaded[name] = (model, meta)
    return loaded


def cmd_decode(config: ExperimentConfig) -> dict:
    """Decode config.decode.n_sequences sequences from one trained variant"""
    config = ensure_resolved(config)
    settings = config.decode
    variant = config.drift_variant(settings.variant)
    model, meta = load_variant_models(config, [variant.name])[variant.name]
    _prepare_out(config)
    refeed = settings.refeed or variant.refeed
    cfg = CfgSchedule(settings.cfg_kind, settings.cfg_scale)
    rng = rng_streams.stream(config.seeds.decode, "decode", variant.name)
    length = model.config.max_length
    started = time.perf_counter()

    tokens = np.empty((settings.n_sequences, length, model.config.token_dim))
    rows = []
    guards = 0
    for i in range(settings.n_sequences):
        class_id = i % model.config.n_classes
        result = decode_sequence(
            model, class_id, length, settings.n_steps, cfg, rng, meta["radius"], refeed, settings.use_cache
        )
        tokens[i] = result.sequence.tokens
        guards += result.guard_count
        rows.extend([i, class_id, *s.row()] for s in result.diagnostics)

    out = config.out_path / "decode" / variant.name
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "tokens.npy", tokens, allow_pickle=False)
    write_csv(out / "decode_steps.csv", DECODE_COLUMNS, rows)
    norms = np.linalg.norm(tokens, axis=-1)
    payload = {
        "command": "decode",
        "variant": variant.name,
        "refeed": refeed.value,
        "cfg": {"kind": cfg.kind.value, "scale": cfg.scale},
        "n_steps": settings.n_steps,
        "n_sequences": settings.n_sequences,
        "guard_count": guards,
        "token_norm_std": float(norms.std()),
    }
    return write_report(out / "decode_summary.json", payload, config, started)
