"""Portable seeded randomness.

All randomized operations in this package draw from SplitMix64 (Steele,
Lea & Flood 2014), a 64-bit PRNG simple enough to reimplement bit-exactly
in any language. Trace generation and dataset construction are therefore
pure functions of their integer seeds, and golden files reproduce across
machines and implementations.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")


class SplitMix64:
    """SplitMix64 stream with convenience draws used by the generators."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n), bias-free via rejection sampling."""
        if n <= 0:
            raise ValueError(f"randrange bound must be positive, got {n}")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            z = self.next_u64()
            if z < limit:
                return z % n

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise ValueError("cannot choose from an empty sequence")
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_seed(master: int, *indices: int) -> int:
    """Derive an independent per-task stream seed from a master seed.

    Folds each index into the state via one SplitMix64 step:
    ``x <- SplitMix64(x XOR (index + 1) * GOLDEN).next_u64()``. Workers may
    generate tasks in any order and still reproduce identical streams.
    """
    x = master & _MASK64
    for i in indices:
        x = SplitMix64(x ^ (((i + 1) * _GOLDEN) & _MASK64)).next_u64()
    return x
