"""
Named, splittable random streams

Every component draws from its own numpy Generator derived from the master
seed and a path of names, e.g. stream(seed, "ablation", "S-04", "train").
The same (seed, path) always yields the same stream, and different paths are
statistically independent.
"""

import zlib

import numpy as np


def _key(part: str | int) -> int:
    if isinstance(part, int):
        return part
    return zlib.crc32(part.encode("utf-8"))


def seed_sequence(seed: int, *path: str | int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), *(_key(p) for p in path)])


def stream(seed: int, *path: str | int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))


def derive_seed(seed: int, *path: str | int) -> int:
    """A 63-bit integer seed for a child component (written into configs)"""
    return int(seed_sequence(seed, *path).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
