"""
Central finite-difference oracle for analytic gradients
"""

from collections.abc import Callable, Sequence

import numpy as np

from .tensor import DiffTensor, no_grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


def numeric_gradient(
    fn: Callable[[], DiffTensor], param: DiffTensor, h: float = 1e-5
) -> np.ndarray:
    """Central differences of the scalar fn() with respect to every entry of param"""
    grad = np.zeros_like(param.value)
    flat = param.value.reshape(-1)
    out = grad.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus = fn().item()
            flat[i] = original - h
            minus = fn().item()
            flat[i] = original
            out[i] = (plus - minus) / (2.0 * h)
    return grad


def gradcheck(
    fn: Callable[[], DiffTensor],
    params: Sequence[DiffTensor],
    h: float = 1e-5,
    floor: float = 1e-6,
) -> float:
    """
    Compare backward() against central differences

    Args:
        fn: closure rebuilding the scalar loss from the current param values
        params: tracked leaves to check
        h: finite-difference step
        floor: denominator floor of the relative error

    Returns:
        Worst relative error over all entries of all params
    """
    for p in params:
        p.zero_grad()
    fn().backward()
    worst = 0.0
    for p in params:
        numeric = numeric_gradient(fn, p, h)
        worst = max(worst, relative_error(p.grad, numeric, floor))
    return worst
