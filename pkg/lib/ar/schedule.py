"""
Classifier-free guidance schedules

linear ramps the scale over the raster scan, s(k) = 1 + (s - 1) k / (l - 1),
so the first token is unguided and the last gets the full scale.
"""

from dataclasses import dataclass
from enum import Enum

from .exceptions import ArError


class CfgKind(str, Enum):
    CONSTANT = "constant"
    LINEAR = "linear"


@dataclass(frozen=True)
class CfgSchedule:
    kind: CfgKind = CfgKind.CONSTANT
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CfgKind(self.kind))
        if not self.scale >= 1.0:
            raise ArError(f"CFG scale must be >= 1, got {self.scale}")

    @property
    def guided(self) -> bool:
        return self.scale != 1.0

    def scale_at(self, position: int, length: int) -> float:
        if self.kind is CfgKind.CONSTANT or length <= 1:
            return float(self.scale)
        return 1.0 + (self.scale - 1.0) * position / (length - 1)


def guided_velocity(v_cond, v_uncond, scale: float):
    """v_u + s (v_c - v_u); at s = 1 the conditional velocity is returned as is"""
    if scale == 1.0:
        return v_cond
    return v_uncond + scale * (v_cond - v_uncond)
