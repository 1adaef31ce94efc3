"""Pinned pseudo-random streams.

splitmix64 seeds a xoshiro256++ generator; floats take the top 53 bits of
each 64-bit output and normals come from Box-Muller on two consecutive
uniforms.  Everything is plain Python integer arithmetic so a given seed
yields the same stream on every platform.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix64_mix(z):
    """Output finaliser of splitmix64 applied to ``z``."""
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next(self):
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return splitmix64_mix(self.state)


def fnv1a64(data):
    """64-bit FNV-1a hash of ``data`` (str or bytes)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


def derive_seed(seed, label):
    """Child seed for the stream named ``label`` under ``seed``."""
    return SplitMix64((int(seed) & MASK64) ^ fnv1a64(label)).next()


class Xoshiro256pp:
    """xoshiro256++ with splitmix64 seeding.

    >>> Xoshiro256pp.from_state([1, 2, 3, 4]).next_u64()
    41943041
    """

    def __init__(self, seed=0):
        sm = SplitMix64(seed)
        self.s = [sm.next() for _ in range(4)]

    @classmethod
    def from_state(cls, state):
        obj = cls.__new__(cls)
        obj.s = [int(v) & MASK64 for v in state]
        if not any(obj.s):
            raise ValueError("xoshiro256++ state must not be all zero")
        return obj

    @classmethod
    def for_stream(cls, seed, label):
        return cls(derive_seed(seed, label))

    def copy(self):
        return Xoshiro256pp.from_state(self.s)

    def next_u64(self):
        s0, s1, s2, s3 = self.s
        result = (_rotl((s0 + s3) & MASK64, 23) + s0) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def random(self):
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, low, high):
        return low + (high - low) * self.random()

    def integer(self, n):
        """Integer in [0, n) by 64x64 multiply-high."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def random_array(self, size):
        n = int(np.prod(size)) if np.ndim(size) else int(size)
        out = np.fromiter((self.random() for _ in range(n)), dtype=np.float64, count=n)
        return out.reshape(size)

    def uniform_array(self, low, high, size):
        low = np.asarray(low, dtype=np.float64)
        high = np.asarray(high, dtype=np.float64)
        return low + (high - low) * self.random_array(size)

    def normal_array(self, size):
        """Standard normals; each pair of uniforms yields two values."""
        n = int(np.prod(size)) if np.ndim(size) else int(size)
        out = np.empty(n + (n & 1), dtype=np.float64)
        for i in range(0, n, 2):
            u1 = self.random()
            u2 = self.random()
            r = math.sqrt(-2.0 * math.log(1.0 - u1))
            theta = 2.0 * math.pi * u2
            out[i] = r * math.cos(theta)
            out[i + 1] = r * math.sin(theta)
        return out[:n].reshape(size)

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``."""
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.integer(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return np.array(idx, dtype=np.intp)
