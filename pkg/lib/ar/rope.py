"""
2D rotary position embedding

The head dimension is split in two halves: the first is rotated by the row
index, the second by the column index. Each half uses the rotate-half
convention [x1, x2] -> [-x2, x1] with frequencies base^(-2i/m).
"""

import numpy as np

from ..tensor import DiffTensor, matmul
from .exceptions import ArError

ROPE_BASE = 10000.0


def _check_head_dim(head_dim: int) -> None:
    if head_dim % 4:
        raise ArError(f"2D RoPE needs a head dimension divisible by 4, got {head_dim}")


def rope_tables(positions: np.ndarray, head_dim: int, base: float = ROPE_BASE) -> tuple[np.ndarray, np.ndarray]:
    """
    cos and sin tables for (n, 2) integer (row, col) positions

    Returns:
        two (n, head_dim) arrays
    """
    _check_head_dim(head_dim)
    half = head_dim // 2
    inv_freq = base ** (-np.arange(0, half, 2) / half)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    angles = []
    for axis in (0, 1):
        freqs = np.outer(positions[:, axis], inv_freq)
        angles.append(np.concatenate([freqs, freqs], axis=1))
    emb = np.concatenate(angles, axis=1)
    return np.cos(emb), np.sin(emb)


def rotate_half_matrix(head_dim: int) -> np.ndarray:
    """Signed permutation S with x @ S = rotate_half applied to each half of x"""
    _check_head_dim(head_dim)
    half = head_dim // 2
    quarter = half // 2
    s = np.zeros((head_dim, head_dim))
    for offset in (0, half):
        for i in range(quarter):
            # out[i] = -x[i + quarter], out[i + quarter] = x[i]
            s[offset + i + quarter, offset + i] = -1.0
            s[offset + i, offset + i + quarter] = 1.0
    return s


def apply_rope(x: np.ndarray, cos: np.ndarray, sin: np.ndarray) -> np.ndarray:
    return x * cos + (x @ rotate_half_matrix(x.shape[-1])) * sin


def apply_rope_tensor(x: DiffTensor, cos: np.ndarray, sin: np.ndarray) -> DiffTensor:
    return x * cos + matmul(x, DiffTensor(rotate_half_matrix(x.shape[-1]))) * sin
