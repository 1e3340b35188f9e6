import hashlib
from pathlib import Path
from typing import List, Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence]


def seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    """Wrap a master seed in a SeedSequence (pass-through if it already is one)"""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def spawn_seeds(seed: SeedLike, count: int) -> List[np.random.SeedSequence]:
    """
    Derive `count` independent child streams from a master seed.

    Child i depends only on (seed, i), never on scheduling order. The parent is
    rebuilt from its entropy so repeated calls hand out the same children.
    """
    parent = seed_sequence(seed)
    base = np.random.SeedSequence(parent.entropy, spawn_key=parent.spawn_key)
    return base.spawn(count)


def as_float_matrix(values) -> np.ndarray:
    """Coerce a vector or matrix of covariates to a 2-D float64 array"""
    array = np.asarray(values, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    return array


def sha256_file(path: Union[str, Path]) -> str:
    """Hex digest of a file, streamed in chunks"""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
