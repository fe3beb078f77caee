from __future__ import annotations

from typing import TypeAlias

import numpy as np

SeedLike: TypeAlias = int | np.random.Generator


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *keys).

    Replicate b of a run draws from substream(seed, b), so the draws of one
    replicate never depend on how many others ran before it or on which worker.
    """
    if seed < 0 or any(key < 0 for key in keys):
        raise ValueError(f"seed and keys must be non-negative: {(seed, *keys)}")
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed < 0:
        raise ValueError(f"seed must be non-negative: {seed}")
    return np.random.default_rng(seed)
