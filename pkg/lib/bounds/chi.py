"""
The chi law: radius of a standard Gaussian vector in R^d
"""

import numpy as np
from scipy import stats


def chi_log_density(r: np.ndarray | float, d: int) -> np.ndarray | float:
    """log chi_d(r); -inf for r <= 0"""
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(divide="ignore"):
        out = np.where(r > 0, stats.chi.logpdf(np.where(r > 0, r, 1.0), d), -np.inf)
    return float(out) if out.ndim == 0 else out


def chi_mode(d: int) -> float:
    return float(np.sqrt(max(d - 1, 0)))
