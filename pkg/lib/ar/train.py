"""
Rectified-flow training of the transformer and its head

Per token: z_0 ~ N(0, I), t ~ U(0, 1), z_t = (1 - t) z_0 + t z_1 and the head
regresses the straight-path velocity z_1 - z_0 given (z_t, t, h_{k-1}).
The class is replaced by the null class with probability cfg_dropout per
sequence, which trains the unconditional branch used by guidance.

As for the S-VAE, each epoch has its own random stream and a checkpoint
(weights, optimizer moments, EMA shadow, LR schedule) is written after every
epoch, so an interrupted run resumed from it ends on the same bytes.
"""

import csv
import logging
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import rng as rng_streams
from ..tensor import (
    AdamWConfig,
    CosineSchedule,
    DiffTensor,
    OptimizerState,
    WeightEMA,
    adamw_step,
    load_checkpoint,
    restore_schedule,
    save_checkpoint,
)
from .exceptions import ArError, InvalidSequenceError, TrainingDivergedError, UnknownClassError
from .tokens import TokenSequence, check_norms, stack_sequences
from .transformer import ArModel, ArModelConfig, forward_hidden

logger = logging.getLogger(__name__)

CFG_DROPOUT = 0.1
CHECKPOINT_NAME = "ar.sphl"
LOG_NAME = "ar_train_log.csv"
LOG_COLUMNS = ("epoch", "loss", "wall_time")

HeadFn = Callable[[np.ndarray, np.ndarray, DiffTensor], DiffTensor | np.ndarray]


@dataclass(frozen=True, eq=False)
class RfNoise:
    z0: np.ndarray  # (b, l, d)
    t: np.ndarray  # (b, l, 1)
    drop: np.ndarray  # (b,) bool, class replaced by the null class


def draw_rf_noise(
    batch: int, length: int, d: int, rng: np.random.Generator, cfg_dropout: float = CFG_DROPOUT
) -> RfNoise:
    return RfNoise(
        z0=rng.standard_normal((batch, length, d)),
        t=rng.uniform(size=(batch, length, 1)),
        drop=rng.uniform(size=batch) < cfg_dropout,
    )


def rf_loss(
    model: ArModel,
    tokens: np.ndarray,
    class_ids: np.ndarray,
    noise: RfNoise,
    head: HeadFn | None = None,
) -> DiffTensor:
    """
    Mean over tokens of ||(z_1 - z_0) - v(z_t, t, h)||^2

    Args:
        model: transformer and head
        tokens: (b, l, d) target tokens z_1
        class_ids: (b,) labels
        noise: base randomness of the step
        head: replaces model.head.velocity when given (test hook)
    """
    tokens = np.asarray(tokens, dtype=np.float64)
    b, length, d = tokens.shape
    class_ids = np.asarray(class_ids, dtype=np.int64)
    for cid in np.unique(class_ids):
        model.check_class(int(cid))
    ids = np.where(noise.drop, model.null_class, class_ids)

    hidden = forward_hidden(model, tokens, ids).reshape(b * length, model.config.width)
    z_t = (1.0 - noise.t) * noise.z0 + noise.t * tokens
    target = (tokens - noise.z0).reshape(b * length, d)
    t = noise.t.reshape(b * length, 1)
    z_t = z_t.reshape(b * length, d)
    v = model.head.velocity(z_t, t, hidden) if head is None else head(z_t, t, hidden)
    if not isinstance(v, DiffTensor):
        v = DiffTensor(v)
    diff = v - target
    return (diff * diff).sum(axis=-1).mean()


def rf_train_step(
    model: ArModel,
    tokens: np.ndarray | list[TokenSequence],
    class_ids: np.ndarray,
    state: OptimizerState,
    rng: np.random.Generator,
    lr: float | None = None,
    cfg_dropout: float = CFG_DROPOUT,
    ema: WeightEMA | None = None,
    radius: float = 0.0,
) -> float:
    """
    One AdamW step on a batch; returns the loss before the update

    tokens is either a list of TokenSequence or a raw (b, l, d) array whose
    rows must have norm radius (0 leaves them unconstrained). A sequence list
    brings its own radius.

    Raises:
        InvalidSequenceError: on mixed shapes or a token off the radius
    """
    if isinstance(tokens, list):
        tokens, radius = stack_sequences(tokens)
    tokens = np.asarray(tokens, dtype=np.float64)
    if tokens.ndim != 3:
        raise InvalidSequenceError(f"expected a (b, l, d) batch, got shape {tokens.shape}")
    check_norms(tokens, radius)
    b, length, d = tokens.shape
    noise = draw_rf_noise(b, length, d, rng, cfg_dropout)
    params = list(model.named_parameters())
    model.zero_grad()
    loss = rf_loss(model, tokens, class_ids, noise)
    value = loss.item()
    if not np.isfinite(value):
        raise TrainingDivergedError(state.step, {"loss": value, "lr": lr})
    loss.backward()
    adamw_step(params, state, lr=lr)
    if ema is not None:
        ema.update(params)
    return value


@dataclass
class ArTrainConfig:
    epochs: int = 30
    batch_size: int = 32
    peak_lr: float = 1e-3
    warmup_steps: int = 20
    final_lr_fraction: float = 0.1
    weight_decay: float = 0.05
    cfg_dropout: float = CFG_DROPOUT
    # None disables the weight EMA
    ema_decay: float | None = None


@dataclass
class ArTrainingResult:
    model: ArModel
    log: list[tuple[int, float, float]] = field(default_factory=list)
    checkpoint: Path | None = None
    ema: WeightEMA | None = None


def save_ar(
    path: Path,
    model: ArModel,
    state: OptimizerState,
    epoch: int,
    seed: int,
    schedule: CosineSchedule,
    ema: WeightEMA | None = None,
    extra: dict | None = None,
) -> Path:
    arrays = {**model.state_dict(), **state.to_arrays()}
    if ema is not None:
        arrays.update({f"ema.{name}": value for name, value in ema.shadow.items()})
    meta = {
        "kind": "ar",
        "model": asdict(model.config),
        "optimizer": asdict(state.hyper),
        "step": state.step,
        "epoch": epoch,
        "seed": seed,
        "schedule": asdict(schedule),
        "ema_decay": ema.decay if ema is not None else None,
        **(extra or {}),
    }
    return save_checkpoint(path, arrays, meta)


def load_ar(path: Path, use_ema: bool = True) -> tuple[ArModel, OptimizerState, dict]:
    """
    Model, optimizer state and metadata; EMA weights replace the live ones
    when present and use_ema is set
    """
    arrays, meta = load_checkpoint(path)
    if meta.get("kind") != "ar":
        raise ArError(f"{path} is not an AR checkpoint")
    model = ArModel(ArModelConfig(**meta["model"]), np.random.default_rng(0))
    live = {k: v for k, v in arrays.items() if not k.startswith(("optim.", "ema."))}
    shadow = {k[len("ema.") :]: v for k, v in arrays.items() if k.startswith("ema.")}
    model.load_state_dict(shadow if (use_ema and shadow) else live)
    state = OptimizerState.from_arrays(AdamWConfig(**meta["optimizer"]), meta["step"], arrays)
    return model, state, meta


def read_log(path: Path, before_epoch: int) -> list[tuple[int, float, float]]:
    """Rows of an earlier log for the epochs a resumed run does not repeat"""
    if not path.exists():
        return []
    with path.open(newline="") as f:
        rows = list(csv.DictReader(f))
    return [
        (int(r["epoch"]), float(r["loss"]), float(r["wall_time"])) for r in rows if int(r["epoch"]) < before_epoch
    ]


def write_log(path: Path, log: list[tuple[int, float, float]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(LOG_COLUMNS)
        writer.writerows(log)
    return path


def train_ar(
    model_config: ArModelConfig,
    sequences: np.ndarray,
    class_ids: np.ndarray,
    train_config: ArTrainConfig,
    seed: int,
    out_dir: Path | None = None,
    resume: Path | None = None,
    extra_meta: dict | None = None,
    radius: float = 0.0,
) -> ArTrainingResult:
    """
    Teacher-forced rectified-flow training on (n, l, d) token sequences

    A resumed run keeps the LR schedule stored in its checkpoint. With a
    positive radius every training token must lie on the radius sphere.

    Raises:
        TrainingDivergedError: on a non-finite loss
        UnknownClassError: when a label is outside the model's classes
        InvalidSequenceError: when a token is off the radius
    """
    sequences = np.asarray(sequences, dtype=np.float64)
    class_ids = np.asarray(class_ids, dtype=np.int64)
    if sequences.ndim != 3 or sequences.shape[0] == 0:
        raise ArError(f"expected a non-empty (n, l, d) batch, got shape {sequences.shape}")
    if sequences.shape[2] != model_config.token_dim:
        raise ArError(f"token dim {sequences.shape[2]} does not match the model ({model_config.token_dim})")
    bad = class_ids[(class_ids < 0) | (class_ids >= model_config.n_classes)]
    if bad.size:
        raise UnknownClassError(int(bad[0]), model_config.n_classes)
    check_norms(sequences, radius)

    n = sequences.shape[0]
    n_batches = int(np.ceil(n / train_config.batch_size))
    schedule = CosineSchedule(
        peak_lr=train_config.peak_lr,
        total_steps=n_batches * train_config.epochs,
        warmup_steps=train_config.warmup_steps,
        final_fraction=train_config.final_lr_fraction,
    )

    start_epoch = 0
    ema = None
    if resume is not None:
        model, state, meta = load_ar(resume, use_ema=False)
        start_epoch = meta["epoch"]
        schedule = restore_schedule(meta.get("schedule"), schedule)
        if train_config.ema_decay is not None:
            arrays, _ = load_checkpoint(resume)
            ema = WeightEMA(list(model.named_parameters()), train_config.ema_decay)
            ema.shadow.update({k[len("ema.") :]: v for k, v in arrays.items() if k.startswith("ema.")})
        logger.info("Resuming AR training at epoch %d (step %d)", start_epoch, state.step)
    else:
        model = ArModel(model_config, rng_streams.stream(seed, "ar", "init"))
        state = OptimizerState(hyper=AdamWConfig(lr=train_config.peak_lr, weight_decay=train_config.weight_decay))
        if train_config.ema_decay is not None:
            ema = WeightEMA(list(model.named_parameters()), train_config.ema_decay)

    result = ArTrainingResult(model=model, ema=ema)
    if out_dir is not None:
        out_dir = Path(out_dir)
        result.log = read_log(out_dir / LOG_NAME, start_epoch) if resume is not None else []
    started = time.perf_counter()
    for epoch in range(start_epoch, train_config.epochs):
        rng = rng_streams.stream(seed, "ar", "train", epoch)
        order = rng.permutation(n)
        total = 0.0
        for b in range(n_batches):
            idx = order[b * train_config.batch_size : (b + 1) * train_config.batch_size]
            total += rf_train_step(
                model,
                sequences[idx],
                class_ids[idx],
                state,
                rng,
                lr=schedule(state.step),
                cfg_dropout=train_config.cfg_dropout,
                ema=ema,
            )
        result.log.append((epoch, total / n_batches, time.perf_counter() - started))
        logger.info("AR epoch %d: loss=%.5f", epoch, total / n_batches)
        if out_dir is not None:
            result.checkpoint = save_ar(
                out_dir / CHECKPOINT_NAME, model, state, epoch + 1, seed, schedule, ema, extra_meta
            )
            write_log(out_dir / LOG_NAME, result.log)

    if out_dir is not None and result.checkpoint is None:
        # resumed at or past the last epoch
        result.checkpoint = save_ar(
            out_dir / CHECKPOINT_NAME, model, state, start_epoch, seed, schedule, ema, extra_meta
        )
        write_log(out_dir / LOG_NAME, result.log)
    return result
