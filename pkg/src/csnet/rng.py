"""Counter-based splitmix64 streams with Box-Muller normals.

Each run component (init, batching, latent draws, per-sample generation)
gets its own stream, derived from a base seed and a tuple of integer or
string keys, so adding draws in one component never shifts another.
"""

from __future__ import annotations

import zlib

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def splitmix64(x: int) -> int:
    """One splitmix64 step applied to ``x``: returns mix(x + golden)."""
    with np.errstate(over="ignore"):
        return int(_mix(np.array([(x + int(GOLDEN)) & _MASK], dtype=np.uint64))[0])


def _key_int(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & _MASK


def derive_seed(seed: int, *keys) -> int:
    """Fold ``keys`` into ``seed`` to obtain an independent stream seed."""
    s = splitmix64(int(seed) & _MASK)
    for k in keys:
        s = splitmix64(s ^ _key_int(k))
    return s


class SplitMix64:
    """A splitmix64 generator; ``SplitMix64(seed).next_u64(n)`` equals n sequential steps."""

    def __init__(self, seed: int, *keys):
        self.state = derive_seed(seed, *keys) if keys else int(seed) & _MASK

    @classmethod
    def stream(cls, seed: int, *keys) -> "SplitMix64":
        return cls(seed, *keys)

    def next_u64(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("negative draw count")
        with np.errstate(over="ignore"):
            counters = np.arange(1, n + 1, dtype=np.uint64) * GOLDEN + np.uint64(self.state)
            out = _mix(counters)
        self.state = (self.state + n * int(GOLDEN)) & _MASK
        return out

    def uniform(self, shape=()) -> np.ndarray:
        """Uniform doubles in [0, 1) with 53 random bits."""
        n = int(np.prod(shape, dtype=np.int64))
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(shape)

    def normal(self, shape=()) -> np.ndarray:
        """Standard normals via Box-Muller (both outputs of each pair are used)."""
        n = int(np.prod(shape, dtype=np.int64))
        pairs = (n + 1) // 2
        bits = self.next_u64(2 * pairs) >> np.uint64(11)
        u1 = (bits[0::2].astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
        u2 = bits[1::2].astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n].reshape(shape)

    def integers(self, high: int, shape=()) -> np.ndarray:
        """Integers in [0, high); Lemire-style multiply-shift (bias < 2**-32 for small ``high``)."""
        if high < 1:
            raise ValueError("high must be positive")
        n = int(np.prod(shape, dtype=np.int64))
        hi = self.next_u64(n) >> np.uint64(32)
        return ((hi * np.uint64(high)) >> np.uint64(32)).astype(np.int64).reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.next_u64(n), kind="stable")
