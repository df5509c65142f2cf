"""Named, splittable random streams.

Every run derives its randomness from one user-supplied integer seed.
Components pull named sub-streams (``simulate``, ``fit``, ``bootstrap``, ...)
so each stage is independently reproducible and replicates can be generated
in parallel without ordering effects.
"""

import zlib

import numpy as np


def _key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def named_stream(seed: int, name: str, index: int | None = None) -> np.random.Generator:
    """Generator for sub-stream `name` (optionally indexed) under `seed`."""
    spawn_key = (_key(name),) if index is None else (_key(name), int(index))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn_key))


def replicate_seeds(seed: int, name: str, count: int) -> list[np.random.SeedSequence]:
    """Independent child seeds for `count` replicates of stage `name`."""
    return np.random.SeedSequence(seed, spawn_key=(_key(name),)).spawn(count)
