"""Deterministic 64-bit PRNG used everywhere randomness is needed.

SplitMix64 in counter mode: output i is mix(seed + (i+1) * GOLDEN). The same
constants produce the same stream in any language, and because outputs depend
only on (seed, counter) they can be generated scalar or vectorized with
identical results.
"""
from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = 0xFFFFFFFFFFFFFFFF


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, stream: int) -> int:
    """Derive an independent child seed (e.g. one per tree) from a master seed."""
    return mix64((seed + (stream + 1) * GOLDEN) & MASK64)


class Rng:
    """Counter-based SplitMix64 stream."""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.seed + self.counter * GOLDEN) & MASK64)

    def bulk_u64(self, n: int) -> np.ndarray:
        """n outputs as uint64, advancing the stream exactly n steps."""
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + idx * np.uint64(GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            return z ^ (z >> np.uint64(31))

    def bounded(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = (MASK64 + 1) - ((MASK64 + 1) % n)  # 2**64 when n is a power of two
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def bulk_bounded(self, count: int, n: int) -> np.ndarray:
        """count uniform integers in [0, n), same values as repeated bounded()."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = (MASK64 + 1) - ((MASK64 + 1) % n)
        out = np.empty(count, dtype=np.int64)
        filled = 0
        while filled < count:
            draw = self.bulk_u64(count - filled)
            if limit <= MASK64:
                draw = draw[draw < np.uint64(limit)]
            accepted = draw % np.uint64(n)
            out[filled:filled + accepted.size] = accepted.astype(np.int64)
            filled += accepted.size
        return out

    def uniform(self) -> float:
        """Float in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def bulk_uniform(self, n: int) -> np.ndarray:
        return (self.bulk_u64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def gauss_pair(self) -> tuple[float, float]:
        """Box-Muller; uses two stream steps."""
        u1 = self.uniform()
        u2 = self.uniform()
        r = np.sqrt(-2.0 * np.log(1.0 - u1))
        return (float(r * np.cos(2 * np.pi * u2)), float(r * np.sin(2 * np.pi * u2)))

    def bulk_normal(self, n: int, sigma: float = 1.0) -> np.ndarray:
        u1 = self.bulk_uniform((n + 1) // 2)
        u2 = self.bulk_uniform((n + 1) // 2)
        r = np.sqrt(-2.0 * np.log(1.0 - u1))
        out = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return out[:n] * sigma

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.bounded(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), uniform without replacement."""
        if k > n:
            raise ValueError(f"cannot sample {k} from {n}")
        idx = list(range(n))
        for i in range(k):
            j = i + self.bounded(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k]
