"""Counter-based random streams.

Every stochastic operation draws from its own Philox stream, addressed by
``(master seed, tag, lane, generation, index)``. Streams never overlap, so the
result of an operation does not depend on the order in which other operations
consumed randomness.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

ALGORITHM = "philox4x64-v1"

_MASK64 = (1 << 64) - 1


def _tag_id(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def check_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= _MASK64:
        from .errors import ConfigurationError

        raise ConfigurationError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return seed


def stream(seed: int, tag: str, generation: int = 0, index: int = 0, lane: int = 0) -> np.random.Generator:
    """Return the generator for one addressed stream.

    The key holds the master seed and the (tag, lane) pair; the counter's upper
    words hold (index, generation). Draws advance only the lowest counter word.
    """
    key = [seed & _MASK64, (_tag_id(tag) << 32) | (lane & 0xFFFFFFFF)]
    counter = [0, index & _MASK64, generation & _MASK64, 0]
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


@dataclass(frozen=True)
class Streams:
    """Stream factory for one generation of one machine lane."""

    seed: int
    generation: int = 0
    lane: int = 0

    def get(self, tag: str, index: int = 0) -> np.random.Generator:
        return stream(self.seed, tag, self.generation, index, self.lane)
