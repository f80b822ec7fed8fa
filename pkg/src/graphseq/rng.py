"""Seeded random source with platform-stable streams.

Backed by numpy's PCG64 bit generator, whose output stream for a given seed
is fixed by the PCG specification and stable across platforms and numpy
releases. Child generators are derived with SplitMix64 over
``seed + GOLDEN * (index + 1)`` so parallel shards and submodules get
independent, reproducible streams from one master seed.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Rng"]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


class Rng:
    """Deterministic RNG: same seed, same stream, anywhere."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, index: int) -> "Rng":
        """Independent generator number ``index`` derived from this seed."""
        return Rng(_splitmix64((self.seed + _GOLDEN * (int(index) + 1)) & _MASK64))

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low: float, high: float, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low: int, high: int) -> int:
        """One integer from [low, high)."""
        return int(self._gen.integers(low, high))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def shuffled(self, seq) -> list:
        return [seq[i] for i in self._gen.permutation(len(seq))]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), in ascending order."""
        picked = self._gen.choice(n, size=k, replace=False)
        return sorted(int(i) for i in picked)

    def __repr__(self):
        return f"Rng(seed={self.seed})"
