"""Seeded randomness shared by sampling and synthesis.

All shuffles draw raw 64-bit words from numpy's PCG64 bit generator
(PCG XSL RR 128/64), whose output stream is fixed across numpy releases
and platforms.  Bounded integers use rejection sampling and the shuffle is
a textbook Fisher-Yates pass from the last index down, so a seed pins the
permutation independently of numpy's higher-level ``Generator`` methods.
"""

from __future__ import annotations

import hashlib
from typing import MutableSequence, TypeVar

import numpy as np

T = TypeVar("T")

_MASK64 = (1 << 64) - 1


class Rng:
    def __init__(self, seed: int):
        if seed < 0 or seed > _MASK64:
            raise ValueError(f"seed must be in [0, 2**64), got {seed}")
        self.seed = seed
        self._bits = np.random.PCG64(seed)

    def next_u64(self) -> int:
        return int(self._bits.random_raw())

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: MutableSequence[T]) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        order = list(range(n))
        self.shuffle(order)
        return order


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary parts (BLAKE2b of their reprs)."""
    payload = "\x1f".join(repr(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")
