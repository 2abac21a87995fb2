"""
Autodiff core properties: gradients against finite differences and
bit-exact determinism of forward passes and training
"""

import numpy as np

from .. import rng as rng_streams
from ..tensor import MLP, AdamWConfig, DiffTensor, OptimizerState, adamw_step, concat, gradcheck, stack
from .base import CheckResult, PropertyCheck, SuiteDefinition, at_most

GRADIENT_SEEDS = 100
GRADIENT_TOLERANCE = 1e-5
# relative errors are taken against max(|analytic|, |numeric|, floor)
GRADIENT_FLOOR = 1e-3


def _op_cases(rng: np.random.Generator) -> dict:
    a = DiffTensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = DiffTensor(rng.normal(size=(4, 2)), requires_grad=True)
    c = DiffTensor(rng.uniform(0.5, 3.0, size=(3, 4)), requires_grad=True)
    w = rng.normal(size=(3, 4))
    w6 = rng.normal(size=(6, 4))
    w2 = rng.normal(size=(2, 3, 4))
    return {
        "arithmetic": (lambda: ((a * c + a - c) ** 2 / (c + 1.0)).sum(), [a, c]),
        "matmul": (lambda: ((a @ b) * (a @ b)).sum(), [a, b]),
        "exp_log_sqrt": (lambda: (a.exp() * w + c.log() + c.sqrt()).sum(), [a, c]),
        "activations": (lambda: ((a.sigmoid() + a.tanh() + a.silu() + a.softplus()) * w).sum(), [a]),
        "softmax": (lambda: (a.softmax(axis=-1) * w).sum(), [a]),
        "norm": (lambda: (a.norm(axis=-1) * w[:, 0]).sum(), [a]),
        "gamma_functions": (lambda: ((c.lgamma() + c.digamma()) * w).sum(), [c]),
        "clamp_min": (lambda: (c.clamp_min(0.1) * w).sum(), [c]),
        "reductions": (lambda: (a.mean(axis=0, keepdims=True) * a * w).sum() + a.sum(axis=1).sum(), [a]),
        "shapes": (lambda: (a[1:, :2].reshape(4) * a.transpose(1, 0)[0]).sum() + (a.swapaxes(0, 1) ** 2).sum(), [a]),
        "concat_stack": (
            lambda: (concat([a, c], axis=0) * w6).sum() + (stack([a, c], axis=0) * w2).sum(),
            [a, c],
        ),
    }


def check_gradients(seed: int) -> CheckResult:
    worst, worst_case = 0.0, ""
    for i in range(GRADIENT_SEEDS):
        for name, (fn, params) in _op_cases(rng_streams.stream(seed, "verify", "gradients", i)).items():
            error = gradcheck(fn, params, floor=GRADIENT_FLOOR)
            if error > worst:
                worst, worst_case = error, name
    return at_most(worst, GRADIENT_TOLERANCE, f"worst op: {worst_case}")


def check_forward_determinism(seed: int) -> CheckResult:
    mlp = MLP([6, 16, 16, 3], rng_streams.stream(seed, "verify", "forward"))
    x = rng_streams.stream(seed, "verify", "input").normal(size=(32, 6))
    first = mlp.forward(DiffTensor(x)).value
    second = mlp.forward(DiffTensor(x)).value
    mismatches = int(np.sum(first != second))
    return at_most(mismatches, 0, "entries differing between two identical forward passes")


def _train(seed: int) -> dict[str, np.ndarray]:
    mlp = MLP([4, 8, 1], rng_streams.stream(seed, "verify", "train", "init"))
    data = rng_streams.stream(seed, "verify", "train", "data")
    x = data.normal(size=(16, 4))
    y = np.sin(x.sum(axis=1, keepdims=True))
    state = OptimizerState(hyper=AdamWConfig(lr=1e-2))
    params = list(mlp.named_parameters())
    for _ in range(20):
        mlp.zero_grad()
        diff = mlp.forward(DiffTensor(x)) - y
        (diff * diff).mean().backward()
        adamw_step(params, state)
    return mlp.state_dict()


def check_training_determinism(seed: int) -> CheckResult:
    a, b = _train(seed), _train(seed)
    mismatches = sum(int(np.sum(a[k] != b[k])) for k in a)
    return at_most(mismatches, 0, "parameter entries differing after two identical runs")


TENSOR_CORE_SUITE = SuiteDefinition(
    name="tensor_core",
    description="Reverse-mode gradients and determinism of the numpy autodiff core",
    checks=[
        PropertyCheck(
            name="gradients_match_finite_differences",
            description=f"Every op's gradient within {GRADIENT_TOLERANCE} relative of central differences over {GRADIENT_SEEDS} draws",
            function=check_gradients,
        ),
        PropertyCheck(
            name="forward_bit_identical",
            description="Repeated forward evaluation gives identical bits",
            function=check_forward_determinism,
        ),
        PropertyCheck(
            name="training_bit_identical",
            description="Identical seeds give identical post-training parameters",
            function=check_training_determinism,
        ),
    ],
)
