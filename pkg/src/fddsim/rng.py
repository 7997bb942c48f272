"""Deterministic, language-portable random streams.

Every random draw in the package (symbols, weight initialization, batch
shuffling) flows through SplitMix64 so that runs are reproducible bit for bit
from a single integer seed, on any platform, and reimplementable in another
language from this docstring alone.

The generator is counter based: draw i of a stream seeded with ``seed`` is

    mix64((seed + (i + 1) * GOLDEN) mod 2**64)

where GOLDEN = 0x9E3779B97F4A7C15 and mix64 is the SplitMix64 finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

(all arithmetic modulo 2**64).  Uniform doubles in [0, 1) take the top 53
bits: (z >> 11) * 2**-53.  Child streams for independent substreams are
seeded with mix64((seed + (tag + 1) * GOLDEN) mod 2**64).
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1

_U_GOLDEN = np.uint64(GOLDEN)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a plain Python integer (mod 2**64)."""
    z = x & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    # uint64 multiplication wraps mod 2**64, matching mix64 exactly
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


class SplitMix64:
    """Sequential view over the counter-based stream for one seed."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self._count = 0

    def u64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit draws as a uint64 array."""
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        return _mix_array(np.uint64(self.seed) + idx * _U_GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """Next n doubles uniform in [0, 1)."""
        return (self.u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform_signed(self, n: int, scale: float) -> np.ndarray:
        """Next n doubles uniform in [-scale, scale)."""
        return (2.0 * self.uniform(n) - 1.0) * scale

    def integers(self, n: int, bound: int) -> np.ndarray:
        """Next n integers uniform in [0, bound); bound must divide 2**64."""
        if bound <= 0 or (1 << 64) % bound != 0:
            raise ValueError("bound must be a positive power of two")
        return (self.u64(n) % np.uint64(bound)).astype(np.int64)

    def shuffled_indices(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) (argsort of uniform keys)."""
        keys = self.u64(n)
        return np.argsort(keys, kind="stable")

    def child(self, tag: int) -> "SplitMix64":
        """Independent substream identified by a small integer tag."""
        return SplitMix64(mix64((self.seed + ((tag + 1) * GOLDEN)) & _MASK))


def child_seed(seed: int, tag: int) -> int:
    """Module-level substream derivation (same formula as SplitMix64.child)."""
    return mix64((seed + ((tag + 1) * GOLDEN)) & _MASK)
