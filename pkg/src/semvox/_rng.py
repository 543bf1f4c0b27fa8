"""Counter-based random streams.

All randomness in the package flows through keyed Philox generators, so any
value is a pure function of (seed, stream tag, stream index, position) and
never depends on evaluation order, thread count, or platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Stream tags (must stay < 2**32).
NOISE_STREAM = 0x6E6F6973   # lidar endpoint noise, indexed by sensor id
RIG_STREAM = 0x72696773     # auxiliary mount sampling
WORLD_STREAM = 0x776F726C   # procedural world generation


def stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Generator for the (seed, tag, index) stream."""
    if not 0 <= index < (1 << 32):
        raise ValueError("stream index must fit in 32 bits")
    key = np.array([seed & _MASK64, ((tag & 0xFFFFFFFF) << 32) | index],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
