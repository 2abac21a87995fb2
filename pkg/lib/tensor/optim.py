"""
AdamW optimizer, warmup + cosine learning-rate schedule and weight EMA
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import MissingGradientError, ShapeMismatchError
from .tensor import DiffTensor

logger = logging.getLogger(__name__)


@dataclass
class AdamWConfig:
    """AdamW hyperparameters (toy-scale defaults)"""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.95
    weight_decay: float = 0.05
    eps: float = 1e-8


@dataclass
class OptimizerState:
    """Per-parameter moment buffers plus the shared step counter"""

    hyper: AdamWConfig
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    def to_arrays(self) -> dict[str, np.ndarray]:
        arrays = {}
        for name, m in self.first_moment.items():
            arrays[f"optim.m.{name}"] = m
            arrays[f"optim.v.{name}"] = self.second_moment[name]
        return arrays

    @classmethod
    def from_arrays(cls, hyper: AdamWConfig, step: int, arrays: dict[str, np.ndarray]):
        state = cls(hyper=hyper, step=step)
        for key, value in arrays.items():
            if key.startswith("optim.m."):
                state.first_moment[key[len("optim.m.") :]] = value.copy()
            elif key.startswith("optim.v."):
                state.second_moment[key[len("optim.v.") :]] = value.copy()
        return state


def adamw_step(
    params: list[tuple[str, DiffTensor]],
    state: OptimizerState,
    lr: float | None = None,
) -> None:
    """
    Apply one decoupled-weight-decay AdamW update in place

    Args:
        params: (name, parameter) pairs with populated gradients
        state: optimizer state; its step counter is incremented
        lr: learning rate override for this step (schedules pass it here)

    Raises:
        MissingGradientError: if any parameter has no gradient
    """
    for name, p in params:
        if p.grad is None:
            raise MissingGradientError(name)

    hyper = state.hyper
    lr = hyper.lr if lr is None else lr
    state.step += 1
    t = state.step
    bias1 = 1.0 - hyper.beta1**t
    bias2 = 1.0 - hyper.beta2**t

    for name, p in params:
        g = p.grad
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(p.value)
            v = np.zeros_like(p.value)
        elif m.shape != p.shape:
            raise ShapeMismatchError(f"adamw[{name}]", (m.shape, p.shape))

        m = hyper.beta1 * m + (1.0 - hyper.beta1) * g
        v = hyper.beta2 * v + (1.0 - hyper.beta2) * (g * g)
        state.first_moment[name] = m
        state.second_moment[name] = v

        value = p.value * (1.0 - lr * hyper.weight_decay)
        p.value = value - lr * (m / bias1) / (np.sqrt(v / bias2) + hyper.eps)


@dataclass
class CosineSchedule:
    """Linear warmup to the peak rate, then cosine decay to final_fraction * peak"""

    peak_lr: float
    total_steps: int
    warmup_steps: int = 0
    final_fraction: float = 0.1

    def __call__(self, step: int) -> float:
        if self.warmup_steps > 0 and step < self.warmup_steps:
            return self.peak_lr * (step + 1) / self.warmup_steps
        span = max(self.total_steps - self.warmup_steps, 1)
        progress = min(max(step - self.warmup_steps, 0) / span, 1.0)
        floor = self.peak_lr * self.final_fraction
        return floor + 0.5 * (self.peak_lr - floor) * (1.0 + math.cos(math.pi * progress))


def restore_schedule(saved: dict | None, current: CosineSchedule) -> CosineSchedule:
    """
    The schedule stored in a checkpoint, so a resumed run keeps the LR curve
    it started with; checkpoints without one fall back to current
    """
    if saved is None:
        return current
    restored = CosineSchedule(**saved)
    if restored != current:
        logger.warning("Keeping the checkpoint's LR schedule %s over %s", restored, current)
    return restored


class WeightEMA:
    """Exponential moving average of parameter values"""

    def __init__(self, params: list[tuple[str, DiffTensor]], decay: float):
        self.decay = decay
        self.shadow = {name: p.value.copy() for name, p in params}

    def update(self, params: list[tuple[str, DiffTensor]]) -> None:
        for name, p in params:
            self.shadow[name] = self.decay * self.shadow[name] + (1.0 - self.decay) * p.value
