"""
S-VAE training loop

Rows are the patch tokens of every dataset item. Each epoch draws its batch
order and latent noise from its own named stream. With an output directory a
checkpoint is written after every epoch, carrying the optimizer moments and
the LR schedule of the run that started training, so resuming an interrupted
run ends on the same bytes as an uninterrupted one.
"""

import csv
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import rng as rng_streams
from ..bounds import KLReduction
from ..tensor import (
    AdamWConfig,
    CosineSchedule,
    OptimizerState,
    adamw_step,
    load_checkpoint,
    restore_schedule,
    save_checkpoint,
)
from .data import ToyDataset
from .exceptions import SvaeError, TrainingDivergedError
from .model import SvaeModel, SvaeModelConfig, draw_latent_noise, draw_sigma, svae_loss
from .posterior import PosteriorFamily, PosteriorKind

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "svae.sphl"
LOG_NAME = "svae_train_log.csv"
LOG_COLUMNS = ("epoch", "recon", "kl", "total", "wall_time")


@dataclass
class SvaeTrainConfig:
    epochs: int = 20
    batch_size: int = 64
    peak_lr: float = 1e-3
    warmup_steps: int = 20
    final_lr_fraction: float = 0.1
    weight_decay: float = 0.05
    kl_reduction: KLReduction = KLReduction.MEAN_ALL


@dataclass
class EpochRecord:
    epoch: int
    recon: float
    kl: float
    total: float
    wall_time: float

    def row(self) -> list:
        return [self.epoch, self.recon, self.kl, self.total, self.wall_time]


@dataclass
class SvaeTrainingResult:
    model: SvaeModel
    log: list[EpochRecord] = field(default_factory=list)
    checkpoint: Path | None = None
    fixed_sigma: float | None = None

    @property
    def final(self) -> EpochRecord | None:
        return self.log[-1] if self.log else None


def _family_meta(family: PosteriorFamily) -> dict:
    return {**asdict(family), "kind": family.kind.value}


def save_svae(
    path: Path,
    model: SvaeModel,
    state: OptimizerState,
    epoch: int,
    seed: int,
    schedule: CosineSchedule,
    fixed_sigma: float | None = None,
) -> Path:
    arrays = {**model.state_dict(), **state.to_arrays()}
    meta = {
        "kind": "svae",
        "model": asdict(model.config),
        "family": _family_meta(model.family),
        "optimizer": asdict(state.hyper),
        "step": state.step,
        "epoch": epoch,
        "seed": seed,
        "schedule": asdict(schedule),
        "fixed_sigma": fixed_sigma,
    }
    return save_checkpoint(path, arrays, meta)


def load_svae(path: Path) -> tuple[SvaeModel, OptimizerState, dict]:
    """Model, optimizer state and checkpoint metadata"""
    arrays, meta = load_checkpoint(path)
    if meta.get("kind") != "svae":
        raise SvaeError(f"{path} is not an S-VAE checkpoint")
    config = SvaeModelConfig(**meta["model"])
    family = PosteriorFamily(**meta["family"])
    model = SvaeModel(config, family, np.random.default_rng(0))
    model.load_state_dict({k: v for k, v in arrays.items() if not k.startswith("optim.")})
    state = OptimizerState.from_arrays(AdamWConfig(**meta["optimizer"]), meta["step"], arrays)
    return model, state, meta


def read_log(path: Path, before_epoch: int) -> list[EpochRecord]:
    """Rows of an earlier log for the epochs a resumed run does not repeat"""
    if not path.exists():
        return []
    with path.open(newline="") as f:
        rows = list(csv.DictReader(f))
    return [
        EpochRecord(int(r["epoch"]), float(r["recon"]), float(r["kl"]), float(r["total"]), float(r["wall_time"]))
        for r in rows
        if int(r["epoch"]) < before_epoch
    ]


def write_log(path: Path, log: list[EpochRecord]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(LOG_COLUMNS)
        for record in log:
            writer.writerow(record.row())
    return path


def train_svae(
    model_config: SvaeModelConfig,
    family: PosteriorFamily,
    data: ToyDataset,
    train_config: SvaeTrainConfig,
    seed: int,
    out_dir: Path | None = None,
    resume: Path | None = None,
) -> SvaeTrainingResult:
    """
    Train an encoder/decoder pair under one posterior family

    Args:
        model_config: sizes and radius
        family: posterior family with its KL weight
        data: toy dataset; every patch is one training row
        train_config: optimizer and schedule settings
        seed: master seed of the run
        out_dir: where the checkpoint and CSV log go; None keeps everything in memory
        resume: checkpoint to continue from (must come from the same config);
            its LR schedule replaces the one train_config implies

    Raises:
        TrainingDivergedError: on a non-finite loss, with the offending step and terms
    """
    rows = data.patches().reshape(-1, model_config.patch_dim) if len(data) else np.empty((0,))
    if rows.shape[0] == 0:
        raise SvaeError("Cannot train on an empty dataset")
    if rows.shape[-1] != model_config.patch_dim:
        raise SvaeError(f"Patch size {rows.shape[-1]} does not match the model ({model_config.patch_dim})")

    hyper = AdamWConfig(lr=train_config.peak_lr, weight_decay=train_config.weight_decay)
    n_batches = int(np.ceil(rows.shape[0] / train_config.batch_size))
    schedule = CosineSchedule(
        peak_lr=train_config.peak_lr,
        total_steps=n_batches * train_config.epochs,
        warmup_steps=train_config.warmup_steps,
        final_fraction=train_config.final_lr_fraction,
    )

    fixed_sigma = None
    if family.kind is PosteriorKind.SIGMA_VAE and family.sigma_per_model:
        fixed_sigma = draw_sigma(family, rng_streams.stream(seed, "svae", "sigma"))

    start_epoch = 0
    if resume is not None:
        model, state, meta = load_svae(resume)
        start_epoch = meta["epoch"]
        schedule = restore_schedule(meta.get("schedule"), schedule)
        logger.info("Resuming S-VAE training at epoch %d (step %d)", start_epoch, state.step)
    else:
        model = SvaeModel(model_config, family, rng_streams.stream(seed, "svae", "init"))
        state = OptimizerState(hyper=hyper)

    params = list(model.named_parameters())
    result = SvaeTrainingResult(model=model, fixed_sigma=fixed_sigma)
    if out_dir is not None:
        out_dir = Path(out_dir)
        result.log = read_log(out_dir / LOG_NAME, start_epoch) if resume is not None else []
    started = time.perf_counter()
    for epoch in range(start_epoch, train_config.epochs):
        rng = rng_streams.stream(seed, "svae", "train", epoch)
        order = rng.permutation(rows.shape[0])
        sums = np.zeros(3)
        for b in range(n_batches):
            batch = rows[order[b * train_config.batch_size : (b + 1) * train_config.batch_size]]
            noise = draw_latent_noise(family, batch.shape[0], model.latent_dim, rng, sigma=fixed_sigma)
            model.zero_grad()
            loss = svae_loss(model, batch, noise, train_config.kl_reduction)
            terms = loss.terms()
            if noise.sigma is not None:
                terms["sigma"] = noise.sigma
            if not all(np.isfinite(v) for v in terms.values()):
                raise TrainingDivergedError(state.step, terms)
            loss.total.backward()
            adamw_step(params, state, lr=schedule(state.step))
            sums += (terms["recon"], terms["kl"], terms["total"])
        recon, kl, total = (sums / n_batches).tolist()
        record = EpochRecord(epoch, recon, kl, total, time.perf_counter() - started)
        result.log.append(record)
        logger.info(
            "%s epoch %d: recon=%.5f kl=%.5f total=%.5f", family.label, epoch, recon, kl, total
        )
        if out_dir is not None:
            result.checkpoint = save_svae(
                out_dir / CHECKPOINT_NAME, model, state, epoch + 1, seed, schedule, fixed_sigma
            )
            write_log(out_dir / LOG_NAME, result.log)

    if out_dir is not None and result.checkpoint is None:
        # resumed at or past the last epoch
        result.checkpoint = save_svae(
            out_dir / CHECKPOINT_NAME, model, state, start_epoch, seed, schedule, fixed_sigma
        )
        write_log(out_dir / LOG_NAME, result.log)
    return result
