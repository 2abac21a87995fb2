"""
Distribution distances and norm statistics for the experiments
"""

import numpy as np
from scipy.stats import wasserstein_distance

from ..directional import sample_uniform_sphere_batch

SW_PROJECTIONS = 512


def sliced_wasserstein(
    a: np.ndarray,
    b: np.ndarray,
    rng: np.random.Generator,
    n_projections: int = SW_PROJECTIONS,
) -> float:
    """
    Mean 1D Wasserstein-1 distance of the two sample sets over random unit directions

    Args:
        a: (n, d) samples
        b: (m, d) samples, m may differ from n
        rng: source of the projection directions; pass equal streams to
            compare several sample sets on the same directions
        n_projections: number of directions
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"sample sets must be (n, d) with equal d, got {a.shape} and {b.shape}")
    if len(a) == 0 or len(b) == 0:
        return float("nan")
    directions = sample_uniform_sphere_batch(a.shape[1], n_projections, rng)
    pa = a @ directions.T
    pb = b @ directions.T
    return float(np.mean([wasserstein_distance(pa[:, k], pb[:, k]) for k in range(n_projections)]))


def norm_statistics(norms: np.ndarray) -> dict[str, float]:
    norms = np.asarray(norms, dtype=np.float64).reshape(-1)
    if norms.size == 0:
        return {"mean": float("nan"), "std": float("nan"), "min": float("nan"), "max": float("nan")}
    return {
        "mean": float(norms.mean()),
        "std": float(norms.std()),
        "min": float(norms.min()),
        "max": float(norms.max()),
    }
