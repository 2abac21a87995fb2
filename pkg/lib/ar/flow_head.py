"""
Token-level rectified-flow head

v_omega(z_t, t, h) is an MLP over the concatenation of the noisy token, the
transformer hidden state and sinusoidal features of t.
"""

import numpy as np

from ..tensor import MLP, DiffTensor, Module, concat


def time_features(t: np.ndarray, count: int) -> np.ndarray:
    """sin/cos of pi * 2^k * t for k < count / 2; t has shape (n, 1)"""
    t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    angles = t * (np.pi * 2.0 ** np.arange(count // 2))
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


class FlowHead(Module):
    def __init__(
        self,
        token_dim: int,
        width: int,
        rng: np.random.Generator,
        hidden: int = 128,
        depth: int = 3,
        n_time_features: int = 16,
    ):
        self.token_dim = token_dim
        self.n_time_features = n_time_features
        sizes = [token_dim + width + n_time_features] + [hidden] * (depth - 1) + [token_dim]
        self.mlp = MLP(sizes, rng)

    def velocity(self, z_t: np.ndarray | DiffTensor, t: np.ndarray, hidden: DiffTensor) -> DiffTensor:
        """Tracked velocity for (n, d) noisy tokens, (n, 1) times and (n, width) hidden states"""
        features = time_features(t, self.n_time_features)
        return self.mlp.forward(concat([z_t, hidden, DiffTensor(features)], axis=-1))

    def velocity_array(self, z_t: np.ndarray, t: np.ndarray, hidden: np.ndarray) -> np.ndarray:
        features = time_features(t, self.n_time_features)
        return self.mlp.apply(np.concatenate([z_t, hidden, features], axis=-1))
