"""
Experiment configuration

A strict pydantic schema with explicit defaults. The resolved config (every
default filled in, every seed concrete) is written next to the outputs and
its canonical-JSON hash identifies the run in every report.
"""

import hashlib
import json
import logging
import os
from collections.abc import Mapping
from enum import Enum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..ar import ArModelConfig, ArTrainConfig, CfgKind, MarkovProcessConfig, RefeedMode, TokenSource
from ..svae import DatasetSpec, PosteriorFamily, PosteriorKind, SvaeModelConfig, SvaeTrainConfig
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

ENV_OUT_DIR = "SPHEREAR_OUT_DIR"
ENV_THREADS = "SPHEREAR_THREADS"
ENV_LOG_LEVEL = "SPHEREAR_LOG_LEVEL"
RESOLVED_CONFIG_NAME = "resolved_config.json"
SEED_STREAMS = ("data", "train", "decode", "process")


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ExperimentKind(str, Enum):
    SVAE = "svae"
    AR = "ar"
    DRIFT = "drift"
    ABLATION = "ablation"


class SeedConfig(StrictModel):
    """Master seed plus per-component streams; unset streams derive from the master"""

    master: int = Field(default=0, ge=0)
    data: int | None = Field(default=None, ge=0)
    train: int | None = Field(default=None, ge=0)
    decode: int | None = Field(default=None, ge=0)
    process: int | None = Field(default=None, ge=0)

    def resolved(self) -> "SeedConfig":
        children = np.random.SeedSequence(self.master).spawn(len(SEED_STREAMS))
        values = {}
        for name, child in zip(SEED_STREAMS, children, strict=True):
            explicit = getattr(self, name)
            values[name] = explicit if explicit is not None else int(child.generate_state(1, dtype=np.uint64)[0] >> 1)
        return SeedConfig(master=self.master, **values)


class DatasetConfig(StrictModel):
    n_items: int = Field(default=512, ge=0)
    image_size: int = Field(default=8, gt=0)
    patch_size: int = Field(default=4, gt=0)
    shapes: list[str] = Field(default_factory=lambda: ["ellipse", "bar"])
    noise: float = Field(default=0.05, ge=0)
    supersample: int = Field(default=4, gt=0)

    def to_spec(self) -> DatasetSpec:
        return DatasetSpec(
            n_items=self.n_items,
            image_size=self.image_size,
            patch_size=self.patch_size,
            shapes=tuple(self.shapes),
            noise=self.noise,
            supersample=self.supersample,
        )


class PosteriorConfig(StrictModel):
    kind: PosteriorKind = PosteriorKind.POWER_SPHERICAL
    kl_weight: float = Field(default=0.004, ge=0)
    c_sigma: float = Field(default=0.2, gt=0)
    sigma_per_model: bool = False

    def to_family(self, kind: PosteriorKind | None = None, kl_weight: float | None = None) -> PosteriorFamily:
        return PosteriorFamily(
            kind=kind or self.kind,
            kl_weight=self.kl_weight if kl_weight is None else kl_weight,
            c_sigma=self.c_sigma,
            sigma_per_model=self.sigma_per_model,
        )


class SvaeConfig(StrictModel):
    latent_dim: int = Field(default=16, ge=2)
    hidden: int = Field(default=256, gt=0)
    radius: float | None = Field(default=None, gt=0)
    epochs: int = Field(default=20, ge=0)
    batch_size: int = Field(default=64, gt=0)
    peak_lr: float = Field(default=1e-3, gt=0)
    warmup_steps: int = Field(default=20, ge=0)
    final_lr_fraction: float = Field(default=0.1, ge=0, le=1)
    weight_decay: float = Field(default=0.05, ge=0)

    def to_model_config(self, patch_dim: int) -> SvaeModelConfig:
        return SvaeModelConfig(patch_dim=patch_dim, latent_dim=self.latent_dim, hidden=self.hidden, radius=self.radius)

    def to_train_config(self) -> SvaeTrainConfig:
        return SvaeTrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            peak_lr=self.peak_lr,
            warmup_steps=self.warmup_steps,
            final_lr_fraction=self.final_lr_fraction,
            weight_decay=self.weight_decay,
        )


class ArConfig(StrictModel):
    width: int = Field(default=128, gt=0)
    depth: int = Field(default=4, gt=0)
    heads: int = Field(default=4, gt=0)
    ffn_mult: int = Field(default=4, gt=0)
    head_hidden: int = Field(default=128, gt=0)
    head_depth: int = Field(default=3, ge=1)
    n_time_features: int = Field(default=16, ge=2)
    n_cond: int = Field(default=16, ge=1)
    n_sequences: int = Field(default=512, gt=0)
    epochs: int = Field(default=30, ge=0)
    batch_size: int = Field(default=32, gt=0)
    peak_lr: float = Field(default=1e-3, gt=0)
    warmup_steps: int = Field(default=20, ge=0)
    final_lr_fraction: float = Field(default=0.1, ge=0, le=1)
    weight_decay: float = Field(default=0.05, ge=0)
    cfg_dropout: float = Field(default=0.1, ge=0, le=1)
    ema_decay: float | None = Field(default=None, gt=0, lt=1)

    def to_model_config(self, token_dim: int, grid: tuple[int, int], n_classes: int) -> ArModelConfig:
        return ArModelConfig(
            token_dim=token_dim,
            grid=grid,
            n_classes=n_classes,
            n_cond=self.n_cond,
            width=self.width,
            depth=self.depth,
            heads=self.heads,
            ffn_mult=self.ffn_mult,
            head_hidden=self.head_hidden,
            head_depth=self.head_depth,
            n_time_features=self.n_time_features,
        )

    def to_train_config(self) -> ArTrainConfig:
        return ArTrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            peak_lr=self.peak_lr,
            warmup_steps=self.warmup_steps,
            final_lr_fraction=self.final_lr_fraction,
            weight_decay=self.weight_decay,
            cfg_dropout=self.cfg_dropout,
            ema_decay=self.ema_decay,
        )


class ProcessConfig(StrictModel):
    """Markov-on-sphere ground-truth token process"""

    d: int = Field(default=16, ge=2)
    n_classes: int = Field(default=2, ge=1)
    grid: tuple[int, int] = (2, 2)
    kappa_start: float = Field(default=20.0, ge=0)
    kappa_step: float = Field(default=50.0, ge=0)
    angle: float = 0.6
    radius: float | None = Field(default=None, gt=0)
    scale_sigma: float = Field(default=0.3, ge=0)
    radial_sigma: float = Field(default=0.1, ge=0)

    def to_markov(self, source: TokenSource) -> MarkovProcessConfig:
        return MarkovProcessConfig(
            d=self.d,
            n_classes=self.n_classes,
            grid=self.grid,
            kappa_start=self.kappa_start,
            kappa_step=self.kappa_step,
            angle=self.angle,
            radius=self.radius,
            source=source,
            scale_sigma=self.scale_sigma,
            radial_sigma=self.radial_sigma,
        )


class DriftVariant(StrictModel):
    name: str
    source: TokenSource
    refeed: RefeedMode


def _default_drift_variants() -> list[DriftVariant]:
    return [
        DriftVariant(name="spherical-projected", source=TokenSource.SPHERICAL, refeed=RefeedMode.PROJECTED),
        DriftVariant(name="gaussian-raw", source=TokenSource.GAUSSIAN, refeed=RefeedMode.RAW),
        DriftVariant(name="gaussian-projected", source=TokenSource.GAUSSIAN, refeed=RefeedMode.PROJECTED),
    ]


class DecodeConfig(StrictModel):
    variant: str = "spherical-projected"
    n_steps: int = Field(default=100, ge=1)
    cfg_kind: CfgKind = CfgKind.LINEAR
    cfg_scale: float = Field(default=1.0, ge=1)
    # None keeps the variant's own refeed mode
    refeed: RefeedMode | None = None
    n_sequences: int = Field(default=64, ge=1)
    use_cache: bool = True


class DriftConfig(StrictModel):
    variants: list[DriftVariant] = Field(default_factory=_default_drift_variants)
    scale_max: float = Field(default=3.0, ge=1)
    scale_step: float = Field(default=0.5, gt=0)
    n_sequences: int = Field(default=32, ge=1)
    n_reference: int = Field(default=1024, ge=1)
    sw_projections: int = Field(default=512, ge=1)

    @field_validator("variants")
    @classmethod
    def _unique_names(cls, variants: list[DriftVariant]) -> list[DriftVariant]:
        names = [v.name for v in variants]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variant names: {names}")
        return variants

    def scales(self) -> list[float]:
        count = int(np.floor((self.scale_max - 1.0) / self.scale_step + 1e-9)) + 1
        return [round(1.0 + i * self.scale_step, 6) for i in range(count)]


class AblationVariant(StrictModel):
    """One factor combination: posterior family, decoder-side and AR-side normalization"""

    name: str
    family: PosteriorKind
    decoder_norm: bool
    ar_norm: bool
    kl_weight: float | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _decoder_norm_matches_family(self) -> "AblationVariant":
        normalized = self.family in (PosteriorKind.GAUSSIAN_NORM, PosteriorKind.POWER_SPHERICAL)
        if self.decoder_norm != normalized:
            raise ValueError(f"{self.name}: decoder_norm={self.decoder_norm} contradicts family {self.family.value}")
        if self.family is PosteriorKind.POWER_SPHERICAL and not self.ar_norm:
            raise ValueError(f"{self.name}: spherical latents are normalized on the AR side by construction")
        return self


def _default_ablation_variants() -> list[AblationVariant]:
    return [
        AblationVariant(name="no-norm", family=PosteriorKind.DIAG_GAUSSIAN, decoder_norm=False, ar_norm=False),
        AblationVariant(name="decoder-norm", family=PosteriorKind.GAUSSIAN_NORM, decoder_norm=True, ar_norm=False),
        AblationVariant(name="decoder-ar-norm", family=PosteriorKind.GAUSSIAN_NORM, decoder_norm=True, ar_norm=True),
        AblationVariant(name="spherical", family=PosteriorKind.POWER_SPHERICAL, decoder_norm=True, ar_norm=True),
        AblationVariant(name="sigma-vae", family=PosteriorKind.SIGMA_VAE, decoder_norm=False, ar_norm=False),
    ]


class AblationConfig(StrictModel):
    variants: list[AblationVariant] = Field(default_factory=_default_ablation_variants)
    n_generated: int = Field(default=64, ge=1)
    cfg_scale: float = Field(default=1.0, ge=1)
    sw_projections: int = Field(default=512, ge=1)

    @field_validator("variants")
    @classmethod
    def _unique_names(cls, variants: list[AblationVariant]) -> list[AblationVariant]:
        names = [v.name for v in variants]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variant names: {names}")
        return variants


class ExperimentConfig(StrictModel):
    kind: ExperimentKind = ExperimentKind.DRIFT
    seeds: SeedConfig = Field(default_factory=SeedConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    posterior: PosteriorConfig = Field(default_factory=PosteriorConfig)
    svae: SvaeConfig = Field(default_factory=SvaeConfig)
    ar: ArConfig = Field(default_factory=ArConfig)
    process: ProcessConfig = Field(default_factory=ProcessConfig)
    decode: DecodeConfig = Field(default_factory=DecodeConfig)
    drift: DriftConfig = Field(default_factory=DriftConfig)
    ablation: AblationConfig = Field(default_factory=AblationConfig)
    out_dir: str = "runs/default"
    threads: int = Field(default=1, ge=1)

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)

    def drift_variant(self, name: str) -> DriftVariant:
        for variant in self.drift.variants:
            if variant.name == name:
                return variant
        raise ConfigError(f"unknown drift variant {name!r}")


def load_config(path: Path | str | None) -> ExperimentConfig:
    """Parse a JSON config; None gives the defaults"""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"config file {path} does not exist") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    return parse_config(raw)


def parse_config(raw: Mapping) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def _env_threads(env: Mapping[str, str]) -> int | None:
    value = env.get(ENV_THREADS)
    if value is None or value == "":
        return None
    try:
        threads = int(value)
    except ValueError as e:
        raise ConfigError(f"{ENV_THREADS}={value!r} is not an integer") from e
    if threads < 1:
        raise ConfigError(f"{ENV_THREADS} must be >= 1, got {threads}")
    return threads


def resolve_config(
    config: ExperimentConfig,
    seed: int | None = None,
    out_dir: Path | str | None = None,
    threads: int | None = None,
    env: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """
    Apply overrides and make every seed concrete

    Precedence for out_dir and threads: explicit argument, then environment,
    then the config file. A seed argument replaces the master seed; per-stream
    seeds set in the file are kept.
    """
    env = os.environ if env is None else env
    update: dict = {}
    env_out = env.get(ENV_OUT_DIR)
    if out_dir is not None:
        update["out_dir"] = str(out_dir)
    elif env_out:
        update["out_dir"] = env_out
    env_threads = _env_threads(env)
    if threads is not None:
        if threads < 1:
            raise ConfigError(f"threads must be >= 1, got {threads}")
        update["threads"] = threads
    elif env_threads is not None:
        update["threads"] = env_threads
    seeds = config.seeds
    if seed is not None:
        if seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {seed}")
        seeds = seeds.model_copy(update={"master": seed})
    update["seeds"] = seeds.resolved()
    resolved = config.model_copy(update=update)
    # model_copy skips validation; round-trip to catch bad overrides
    return parse_config(resolved.model_dump(mode="json"))


def canonical_config(config: ExperimentConfig) -> dict:
    """The config as plain JSON data, without the fields that never change results"""
    return config.model_dump(mode="json", exclude={"out_dir", "threads"})


def config_hash(config: ExperimentConfig) -> str:
    payload = json.dumps(canonical_config(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def write_resolved_config(config: ExperimentConfig, out_dir: Path | None = None) -> Path:
    out_dir = Path(out_dir) if out_dir is not None else config.out_path
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RESOLVED_CONFIG_NAME
    path.write_text(json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2) + "\n")
    logger.debug("Resolved config written to %s (hash %s)", path, config_hash(config))
    return path
