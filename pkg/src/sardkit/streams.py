"""Named random sub-streams derived from one 64-bit seed."""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream key integers must be non-negative")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def stream(seed: int, *key) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``, e.g. ``stream(0, "kinf", 2, 0)``.

    The same key always yields the same stream, whatever order streams are
    requested in.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=tuple(_key(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
