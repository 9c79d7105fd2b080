"""Counter-based random streams.

Every stream is numpy's Philox-4x64 keyed by ``seed`` in the low 64 bits and a
stream number in the high 64 bits, so shard ``k`` of a run always sees the same
numbers regardless of how many threads execute the shards.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for substream ``index`` of ``seed``."""
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    key = seed | (int(index) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def streams(seed: int, count: int, offset: int = 0) -> list[np.random.Generator]:
    return [stream(seed, offset + k) for k in range(count)]


def shard_sizes(total: int, shards: int) -> list[int]:
    """Split ``total`` trials into ``shards`` near-equal contiguous shards."""
    if shards < 1:
        raise ValueError("need at least one shard")
    base, extra = divmod(total, shards)
    return [base + (1 if k < extra else 0) for k in range(shards)]
