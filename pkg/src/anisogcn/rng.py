"""Deterministic counter-based random number generation.

Every stochastic component (weight init, dropout, split resampling) draws
from this generator so that a run is reproducible from its seed alone,
independent of platform, Python hash randomization, or library versions.

The core is the SplitMix64 output function applied to a 64-bit counter:
output[i] = mix64(key + (i + 1) * GOLDEN). Because each output depends only
on (seed, position), blocks of values can be generated vectorized.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = 0xFFFFFFFFFFFFFFFF

# f64 has a 53-bit mantissa; top 53 bits of the u64 output map to [0, 1).
_INV_2_53 = float(2.0**-53)


def _mix64_int(z: int) -> int:
    """SplitMix64 finalizer on a Python int (wrapping 64-bit arithmetic)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, mutating `z` to limit temporary traffic."""
    c30, c27, c31 = np.uint64(30), np.uint64(27), np.uint64(31)
    m1 = np.uint64(0xBF58476D1CE4E5B9)
    m2 = np.uint64(0x94D049BB133111EB)
    t = z >> c30
    z ^= t
    z *= m1
    np.right_shift(z, c27, out=t)
    z ^= t
    z *= m2
    np.right_shift(z, c31, out=t)
    z ^= t
    return z


def _label_key(label: str) -> int:
    """FNV-1a hash of a stream label; stable across platforms."""
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


class Rng:
    """Seeded stream of uniform random values.

    The same seed always yields the same stream. Independent substreams for
    different purposes are obtained with :meth:`spawn`, which derives a new
    seed from the parent seed and a text label.
    """

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._counter = 0

    @property
    def seed(self) -> int:
        return self._seed

    def raw(self, count: int) -> np.ndarray:
        """Next `count` raw 64-bit outputs as a uint64 array."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        start = self._counter
        self._counter += count
        state = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            state *= np.uint64(_GOLDEN)
            state += np.uint64(self._seed)
            return _mix64_array(state)

    def uniform(self, shape: int | tuple[int, ...], low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """Uniform float64 samples on [low, high)."""
        if isinstance(shape, int):
            shape = (shape,)
        n = 1
        for dim in shape:
            n *= int(dim)
        bits = self.raw(n)
        bits >>= np.uint64(11)
        u = bits.astype(np.float64)
        u *= _INV_2_53
        if low != 0.0 or high != 1.0:
            u *= high - low
            u += low
        return u.reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n).

        The swap index is `raw % (i + 1)`; the modulo bias is below 2^-50
        for any realistic n, which is irrelevant here.
        """
        perm = np.arange(n, dtype=np.int64)
        if n < 2:
            return perm
        raws = self.raw(n - 1).tolist()
        for i in range(n - 1, 0, -1):
            j = raws[n - 1 - i] % (i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def shuffled(self, values: np.ndarray) -> np.ndarray:
        """Copy of a 1-D array in randomly permuted order."""
        return np.asarray(values)[self.permutation(len(values))]

    def spawn(self, label: str) -> "Rng":
        """Independent child stream identified by a label."""
        return Rng(_mix64_int(self._seed ^ _label_key(label)))
