"""Seeded random source shared by every sampler.

Streams are derived from ``(seed, stream)`` through a splitmix64 expansion so
that independent sub-generators can be handed to parallel workers while the
overall output stays reproducible.
"""

from __future__ import annotations

import random

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step. Returns ``(new_state, output_word)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int, stream: int = 0, words: int = 4) -> int:
    """Expand ``seed XOR stream`` into a ``64 * words`` bit integer."""
    state = (seed ^ (stream * GOLDEN_GAMMA)) & MASK64
    out = 0
    for _ in range(words):
        state, word = splitmix64(state)
        out = (out << 64) | word
    return out


class RandomSource:
    """Uniform bits, integers and floats from a seeded stream.

    Integer ranges are sampled by drawing just enough bits and rejecting
    out-of-range words (``random.Random.randrange`` semantics), so there is
    no modulo bias.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & MASK64
        self.stream = int(stream)
        self._rng = random.Random(derive_seed(self.seed, self.stream))
        # bound methods are looked up once; samplers call these in tight loops
        self.randbits = self._rng.getrandbits
        self.random = self._rng.random
        # unchecked getrandbits-rejection draw in [0, n); callers guarantee n >= 1
        self.below = self._rng._randbelow

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        return self._rng._randbelow(n)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]`` (inclusive)."""
        return lo + self.randbelow(hi - lo + 1)

    def bernoulli(self, p: float) -> bool:
        return self._rng.random() < p

    def child(self, stream: int) -> "RandomSource":
        """Independent source for sub-stream ``stream`` of the same seed."""
        return RandomSource(self.seed, stream)

    def numpy(self) -> np.random.Generator:
        """A numpy generator seeded from the next 128 bits of this stream."""
        return np.random.Generator(np.random.PCG64(self._rng.getrandbits(128)))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


def as_generator(rng) -> np.random.Generator:
    """Accept a RandomSource, a numpy Generator or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.numpy()
    return RandomSource(int(rng)).numpy()
