"""
Layers built on DiffTensor

Each layer owns named DiffTensor parameters and offers two evaluation paths:
forward() records on the tape; apply() runs the identical numpy arithmetic on
plain arrays for decoding loops that never need gradients.
"""

from collections.abc import Iterator

import numpy as np

from .exceptions import ShapeMismatchError, TensorError
from .tensor import DiffTensor, silu_array

ACTIVATIONS = ("silu", "tanh", "identity")


class Module:
    """Container that discovers parameters and sub-modules by attribute name"""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, DiffTensor]]:
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, DiffTensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, list | tuple):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> list[DiffTensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        if missing:
            raise TensorError(f"State is missing parameters: {', '.join(missing)}")
        for name, p in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise ShapeMismatchError(f"load_state_dict[{name}]", (p.shape, value.shape))
            p.value = value.copy()


class Linear(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        init: str = "xavier",
        bias: bool = True,
    ):
        if init == "xavier":
            limit = np.sqrt(6.0 / (in_features + out_features))
            w = rng.uniform(-limit, limit, size=(in_features, out_features))
        elif init == "zeros":
            w = np.zeros((in_features, out_features))
        elif init == "identity":
            w = np.eye(in_features, out_features)
        else:
            raise TensorError(f"Unknown init scheme: {init}")
        self.weight = DiffTensor(w, requires_grad=True)
        self.bias = DiffTensor(np.zeros(out_features), requires_grad=True) if bias else None
        self.in_features = in_features
        self.out_features = out_features

    def _check(self, shape: tuple) -> None:
        if not shape or shape[-1] != self.in_features:
            raise ShapeMismatchError("linear", (shape, self.weight.shape))

    def forward(self, x: DiffTensor) -> DiffTensor:
        self._check(x.shape)
        if x.ndim == 1:
            x = x.reshape(1, -1)
            out = x @ self.weight
            out = out.reshape(-1)
        else:
            out = x @ self.weight
        return out + self.bias if self.bias is not None else out

    def apply(self, x: np.ndarray) -> np.ndarray:
        self._check(x.shape)
        out = x @ self.weight.value
        return out + self.bias.value if self.bias is not None else out


def _activate(x: DiffTensor, activation: str) -> DiffTensor:
    if activation == "silu":
        return x.silu()
    if activation == "tanh":
        return x.tanh()
    return x


def _activate_array(x: np.ndarray, activation: str) -> np.ndarray:
    if activation == "silu":
        return silu_array(x)
    if activation == "tanh":
        return np.tanh(x)
    return x


class MLP(Module):
    """Stack of affine + nonlinearity blocks; the last block is affine only"""

    def __init__(
        self,
        sizes: list[int],
        rng: np.random.Generator,
        activation: str = "silu",
        zero_init_last: bool = False,
    ):
        if len(sizes) < 2:
            raise TensorError("MLP needs at least an input and an output size")
        if activation not in ACTIVATIONS:
            raise TensorError(f"Unknown activation: {activation}")
        self.activation = activation
        self.layers = [
            Linear(
                n_in,
                n_out,
                rng,
                init="zeros" if zero_init_last and i == len(sizes) - 2 else "xavier",
            )
            for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:], strict=True))
        ]

    def forward(self, x: DiffTensor) -> DiffTensor:
        return mlp_forward(x, self)

    def apply(self, x: np.ndarray) -> np.ndarray:
        for i, layer in enumerate(self.layers):
            x = layer.apply(x)
            if i < len(self.layers) - 1:
                x = _activate_array(x, self.activation)
        return x


def mlp_forward(x: DiffTensor, mlp: MLP) -> DiffTensor:
    """Run a tracked forward pass through an MLP parameter bundle"""
    for i, layer in enumerate(mlp.layers):
        x = layer.forward(x)
        if i < len(mlp.layers) - 1:
            x = _activate(x, mlp.activation)
    return x


class RMSNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-6):
        self.gain = DiffTensor(np.ones(dim), requires_grad=True)
        self.eps = eps

    def forward(self, x: DiffTensor) -> DiffTensor:
        rms = ((x * x).mean(axis=-1, keepdims=True) + self.eps).sqrt()
        return x / rms * self.gain

    def apply(self, x: np.ndarray) -> np.ndarray:
        rms = np.sqrt((x * x).sum(axis=-1, keepdims=True) / float(x.shape[-1]) + self.eps)
        return x / rms * self.gain.value


class Embedding(Module):
    def __init__(self, count: int, dim: int, rng: np.random.Generator, scale: float = 0.02):
        self.table = DiffTensor(rng.normal(0.0, scale, size=(count, dim)), requires_grad=True)
        self.count = count

    def forward(self, ids: np.ndarray) -> DiffTensor:
        return self.table[np.asarray(ids, dtype=np.int64)]

    def apply(self, ids: np.ndarray) -> np.ndarray:
        return self.table.value[np.asarray(ids, dtype=np.int64)]
