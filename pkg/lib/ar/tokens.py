"""
Token sequences in raster order
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidSequenceError

NORM_TOLERANCE = 1e-9


def raster_positions(grid: tuple[int, int], length: int | None = None) -> np.ndarray:
    """(row, col) of the first `length` cells of an h x w grid in row-major order"""
    h, w = grid
    k = np.arange(h * w if length is None else length)
    return np.stack([k // w, k % w], axis=1)


@dataclass(frozen=True, eq=False)
class TokenSequence:
    """
    tokens: (l, d) with l = h * w
    radius: common token norm; 0 marks an unconstrained sequence
    """

    tokens: np.ndarray
    grid: tuple[int, int]
    radius: float = 0.0

    def __post_init__(self):
        tokens = np.array(self.tokens, dtype=np.float64)
        grid = tuple(int(g) for g in self.grid)
        if tokens.ndim != 2:
            raise InvalidSequenceError(f"tokens must be (l, d), got shape {tokens.shape}")
        if len(grid) != 2 or grid[0] * grid[1] != tokens.shape[0]:
            raise InvalidSequenceError(f"{tokens.shape[0]} tokens do not fill a {grid} grid")
        if self.radius < 0:
            raise InvalidSequenceError(f"negative radius {self.radius}")
        check_norms(tokens, self.radius)
        tokens.setflags(write=False)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def length(self) -> int:
        return self.tokens.shape[0]

    @property
    def d(self) -> int:
        return self.tokens.shape[1]

    @property
    def constrained(self) -> bool:
        return self.radius > 0

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.tokens, axis=1)

    def positions(self) -> np.ndarray:
        return raster_positions(self.grid)


def check_norms(tokens: np.ndarray, radius: float) -> None:
    """Every row of a (..., d) array has norm radius; radius 0 skips the check"""
    if radius <= 0:
        return
    deviation = np.max(np.abs(np.linalg.norm(tokens, axis=-1) - radius), initial=0.0)
    if not deviation <= NORM_TOLERANCE:
        raise InvalidSequenceError(f"token norm deviates from R={radius} by {deviation:.3e}")


def stack_sequences(sequences: list[TokenSequence]) -> tuple[np.ndarray, float]:
    """(n, l, d) array of equally shaped sequences and their common radius"""
    if not sequences:
        raise InvalidSequenceError("empty batch")
    shapes = {s.tokens.shape for s in sequences}
    if len(shapes) != 1:
        raise InvalidSequenceError(f"mixed sequence shapes {sorted(shapes)}")
    radii = {s.radius for s in sequences}
    if len(radii) != 1:
        raise InvalidSequenceError(f"mixed radii {sorted(radii)}")
    stacked = np.stack([s.tokens for s in sequences])
    radius = radii.pop()
    check_norms(stacked, radius)
    return stacked, radius
