"""Seedable xoshiro256** generator with splitmix64 seeding.

The generator is implemented directly (rather than using numpy's bit
generators) so that every stream is fixed by this file and reproducible in
any language: the state is four splitmix64 outputs of the seed, uniforms
take the top 53 bits, and normals come from Box-Muller pairs.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
_TWO_POW_M53 = 1.0 / (1 << 53)


def splitmix64(state):
    """Advance a splitmix64 state; return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** stream.

    Box-Muller produces normals in pairs; the second of each pair is cached
    and returned by the next call, so the consumption order is a single
    stream regardless of how requests are batched.
    """

    def __init__(self, seed):
        if not 0 <= int(seed) <= MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        sm = int(seed)
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self._s = s
        self._spare = None

    def next_u64(self):
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self):
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _TWO_POW_M53

    def uniform_open0(self):
        """Uniform in (0, 1]; safe as a log argument."""
        return ((self.next_u64() >> 11) + 1) * _TWO_POW_M53

    def normal(self):
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = self.uniform_open0()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare = r * math.sin(theta)
        return r * math.cos(theta)

    def normals(self, shape):
        """Array of standard normals filled in row-major order."""
        n = int(np.prod(shape)) if shape else 1
        return np.array([self.normal() for _ in range(n)], dtype=np.float64).reshape(shape)

    def below(self, bound):
        """Integer uniform in ``[0, bound)`` (Lemire multiply-shift, no rejection)."""
        return (self.next_u64() * bound) >> 64

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return np.array(perm, dtype=np.int64)
