"""
DiffTensor - dense float64 tensors with reverse-mode automatic differentiation

Every op evaluates its forward value with plain numpy and, when any operand is
tracked, records its parents plus a backward closure on the result node. The
recorded parent links form the tape; backward() replays it in reverse
topological order and accumulates gradients into the tracked leaves.

Broadcasting is restricted to what the models need: missing leading (batch)
axes and unit-extent axes produced by keepdims reductions.
"""

import itertools
import threading
from collections.abc import Callable, Sequence
from contextlib import contextmanager
from typing import Any

import numpy as np
from scipy import special

from .exceptions import DomainError, NonScalarBackwardError, ShapeMismatchError, TensorError

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_node_ids = itertools.count()
_grad_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad():
    """Evaluate ops without recording them on the tape (thread-local)"""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


def broadcast_shape(op: str, a: tuple, b: tuple) -> tuple:
    """Result shape of a binary elementwise op, or ShapeMismatchError"""
    result = []
    for i in range(1, max(len(a), len(b)) + 1):
        da = a[-i] if i <= len(a) else None
        db = b[-i] if i <= len(b) else None
        if da is None:
            result.append(db)
        elif db is None or da == db or db == 1:
            result.append(da)
        elif da == 1:
            result.append(db)
        else:
            raise ShapeMismatchError(op, (a, b))
    return tuple(reversed(result))


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _lift(x: Any) -> "DiffTensor":
    return x if isinstance(x, DiffTensor) else DiffTensor(x)


class DiffTensor:
    """Dense float64 array taking part in reverse-mode differentiation"""

    # numpy defers binary ops to the reflected DiffTensor methods
    __array_ufunc__ = None

    def __init__(self, value: Any, requires_grad: bool = False, name: str | None = None):
        self.value = np.array(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self.op = "leaf"
        self.node_id = next(_node_ids)
        self._parents: tuple[DiffTensor, ...] = ()
        self._backward: BackwardFn | None = None

    # construction -----------------------------------------------------------

    @classmethod
    def record(
        cls,
        value: np.ndarray,
        parents: Sequence["DiffTensor"],
        backward: BackwardFn,
        op: str,
    ) -> "DiffTensor":
        """
        Create a result node for an op

        Args:
            value: forward value (already computed)
            parents: operand tensors, in the order backward returns grads
            backward: maps the output gradient to one gradient per parent
            op: op name, used in diagnostics

        Returns:
            The result tensor; it is tracked only when grad mode is on and
            at least one parent is tracked
        """
        out = cls.__new__(cls)
        out.value = value
        out.grad = None
        out.name = None
        out.op = op
        out.node_id = next(_node_ids)
        tracked = is_grad_enabled() and any(p.requires_grad for p in parents)
        out.requires_grad = tracked
        out._parents = tuple(parents) if tracked else ()
        out._backward = backward if tracked else None
        return out

    # array protocol ---------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    def item(self) -> float:
        if self.value.size != 1:
            raise NonScalarBackwardError(self.shape, msg="item() requires a single element")
        return float(self.value.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.value

    def detach(self) -> "DiffTensor":
        return DiffTensor(self.value)

    def zero_grad(self) -> None:
        self.grad = None

    def __len__(self) -> int:
        return len(self.value)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"DiffTensor(shape={self.shape}, op={self.op!r}{label})"

    # backward ---------------------------------------------------------------

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every tracked leaf's .grad"""
        if self.value.size != 1:
            raise NonScalarBackwardError(self.shape)
        if not self.requires_grad:
            raise TensorError("backward() on a tensor that depends on no tracked input")

        grads: dict[int, np.ndarray] = {self.node_id: np.ones_like(self.value)}
        for node in reversed(self._topological_order()):
            grad = grads.pop(node.node_id, None)
            if grad is None:
                continue
            if node._backward is None:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            for parent, parent_grad in zip(node._parents, node._backward(grad), strict=True):
                if parent_grad is None or not parent.requires_grad:
                    continue
                parent_grad = _unbroadcast(np.asarray(parent_grad, dtype=np.float64), parent.shape)
                if parent.node_id in grads:
                    grads[parent.node_id] = grads[parent.node_id] + parent_grad
                else:
                    grads[parent.node_id] = parent_grad

    def _topological_order(self) -> list["DiffTensor"]:
        order: list[DiffTensor] = []
        visited: set[int] = set()
        stack: list[tuple[DiffTensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if node.node_id in visited:
                continue
            visited.add(node.node_id)
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and parent.node_id not in visited:
                    stack.append((parent, False))
        return order

    # elementwise binary -----------------------------------------------------

    def _binary(self, other: Any, op: str, forward, backward) -> "DiffTensor":
        other = _lift(other)
        broadcast_shape(op, self.shape, other.shape)
        a, b = self.value, other.value
        return DiffTensor.record(forward(a, b), (self, other), lambda g: backward(g, a, b), op)

    def __add__(self, other):
        return self._binary(other, "add", np.add, lambda g, a, b: (g, g))

    def __radd__(self, other):
        return _lift(other) + self

    def __sub__(self, other):
        return self._binary(other, "sub", np.subtract, lambda g, a, b: (g, -g))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        return self._binary(other, "mul", np.multiply, lambda g, a, b: (g * b, g * a))

    def __rmul__(self, other):
        return _lift(other) * self

    def __truediv__(self, other):
        return self._binary(
            other, "div", np.divide, lambda g, a, b: (g / b, -g * a / (b * b))
        )

    def __rtruediv__(self, other):
        return _lift(other) / self

    def __neg__(self):
        return DiffTensor.record(-self.value, (self,), lambda g: (-g,), "neg")

    def __pow__(self, exponent: float):
        if isinstance(exponent, DiffTensor):
            raise TensorError("pow supports scalar exponents only")
        exponent = float(exponent)
        a = self.value
        if not exponent.is_integer() and np.any(a < 0):
            raise DomainError("pow", f"non-integer exponent {exponent} of a negative base")
        return DiffTensor.record(
            a**exponent, (self,), lambda g: (g * exponent * a ** (exponent - 1),), "pow"
        )

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(_lift(other), self)

    def __getitem__(self, index):
        a = self.value

        def backward(g):
            full = np.zeros_like(a)
            np.add.at(full, index, g)
            return (full,)

        return DiffTensor.record(a[index], (self,), backward, "slice")

    # unary ------------------------------------------------------------------

    def exp(self) -> "DiffTensor":
        out = np.exp(self.value)
        return DiffTensor.record(out, (self,), lambda g: (g * out,), "exp")

    def log(self) -> "DiffTensor":
        a = self.value
        if np.any(a < 0):
            raise DomainError("log", f"min input {a.min():.3e} < 0")
        with np.errstate(divide="ignore"):
            out = np.log(a)
        return DiffTensor.record(out, (self,), lambda g: (g / a,), "log")

    def sqrt(self) -> "DiffTensor":
        a = self.value
        if np.any(a < 0):
            raise DomainError("sqrt", f"min input {a.min():.3e} < 0")
        out = np.sqrt(a)
        return DiffTensor.record(out, (self,), lambda g: (g * 0.5 / out,), "sqrt")

    def sigmoid(self) -> "DiffTensor":
        out = special.expit(self.value)
        return DiffTensor.record(out, (self,), lambda g: (g * out * (1.0 - out),), "sigmoid")

    def silu(self) -> "DiffTensor":
        a = self.value
        s = special.expit(a)
        return DiffTensor.record(
            silu_array(a), (self,), lambda g: (g * (s + a * s * (1.0 - s)),), "silu"
        )

    def softplus(self) -> "DiffTensor":
        a = self.value
        return DiffTensor.record(
            softplus_array(a), (self,), lambda g: (g * special.expit(a),), "softplus"
        )

    def tanh(self) -> "DiffTensor":
        out = np.tanh(self.value)
        return DiffTensor.record(out, (self,), lambda g: (g * (1.0 - out * out),), "tanh")

    def clamp_min(self, floor: float) -> "DiffTensor":
        a = self.value
        return DiffTensor.record(
            np.maximum(a, floor), (self,), lambda g: (g * (a > floor),), "clamp_min"
        )

    def lgamma(self) -> "DiffTensor":
        a = self.value
        return DiffTensor.record(
            special.gammaln(a), (self,), lambda g: (g * special.digamma(a),), "lgamma"
        )

    def digamma(self) -> "DiffTensor":
        a = self.value
        return DiffTensor.record(
            special.digamma(a), (self,), lambda g: (g * special.polygamma(1, a),), "digamma"
        )

    # reductions and shape ---------------------------------------------------

    def sum(self, axis: int | None = None, keepdims: bool = False) -> "DiffTensor":
        shape = self.shape

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape),)

        return DiffTensor.record(
            self.value.sum(axis=axis, keepdims=keepdims), (self,), backward, "sum"
        )

    def mean(self, axis: int | None = None, keepdims: bool = False) -> "DiffTensor":
        count = self.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) / float(count)

    def norm(self, axis: int = -1, keepdims: bool = False) -> "DiffTensor":
        """l2 norm along an axis; the gradient at the origin is taken as 0"""
        a = self.value
        n = np.sqrt(np.sum(a * a, axis=axis, keepdims=True))

        def backward(g):
            if not keepdims:
                g = np.expand_dims(g, axis)
            safe = np.where(n > 0, n, 1.0)
            return (g * np.where(n > 0, a / safe, 0.0),)

        out = n if keepdims else np.squeeze(n, axis=axis)
        return DiffTensor.record(out, (self,), backward, "norm")

    def softmax(self, axis: int = -1) -> "DiffTensor":
        out = softmax_array(self.value, axis)

        def backward(g):
            return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

        return DiffTensor.record(out, (self,), backward, "softmax")

    def reshape(self, *shape) -> "DiffTensor":
        original = self.shape
        return DiffTensor.record(
            self.value.reshape(*shape), (self,), lambda g: (g.reshape(original),), "reshape"
        )

    def transpose(self, *axes) -> "DiffTensor":
        inverse = np.argsort(axes)
        return DiffTensor.record(
            self.value.transpose(*axes),
            (self,),
            lambda g: (g.transpose(*inverse),),
            "transpose",
        )

    def swapaxes(self, a: int, b: int) -> "DiffTensor":
        return DiffTensor.record(
            np.swapaxes(self.value, a, b), (self,), lambda g: (np.swapaxes(g, a, b),), "swapaxes"
        )


# plain-array kernels shared by the tracked ops and the no-tape inference paths


def silu_array(a: np.ndarray) -> np.ndarray:
    return a * special.expit(a)


def softplus_array(a: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, a)


def softmax_array(a: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = a - np.max(a, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


# module-level ops


def tensor(value: Any, requires_grad: bool = False, name: str | None = None) -> DiffTensor:
    return DiffTensor(value, requires_grad=requires_grad, name=name)


def matmul(a: DiffTensor, b: DiffTensor) -> DiffTensor:
    """Batched matrix product; operands need at least two axes"""
    a, b = _lift(a), _lift(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError("matmul", (a.shape, b.shape))
    broadcast_shape("matmul", a.shape[:-2], b.shape[:-2])
    av, bv = a.value, b.value

    def backward(g):
        return g @ np.swapaxes(bv, -1, -2), np.swapaxes(av, -1, -2) @ g

    return DiffTensor.record(av @ bv, (a, b), backward, "matmul")


def concat(tensors: Sequence[DiffTensor], axis: int = -1) -> DiffTensor:
    tensors = [_lift(t) for t in tensors]
    ndim = tensors[0].ndim
    ax = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            s != r for i, (s, r) in enumerate(zip(t.shape, tensors[0].shape, strict=True)) if i != ax
        ):
            raise ShapeMismatchError("concat", tuple(x.shape for x in tensors))
    sizes = [t.shape[ax] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=ax))

    return DiffTensor.record(
        np.concatenate([t.value for t in tensors], axis=ax), tensors, backward, "concat"
    )


def stack(tensors: Sequence[DiffTensor], axis: int = 0) -> DiffTensor:
    tensors = [_lift(t) for t in tensors]
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise ShapeMismatchError("stack", tuple(t.shape for t in tensors))

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return DiffTensor.record(
        np.stack([t.value for t in tensors], axis=axis), tensors, backward, "stack"
    )
