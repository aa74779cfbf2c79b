"""Dense linear-algebra helpers and the pinned deterministic RNG.

Matrices are plain numpy arrays: float64 for the real-only paths and
complex128 for the complex ones.  Everything here is a pure function of its
inputs; the only stateful object is :class:`Rng`, whose stream is fully
determined by its seed.

The random pipeline is normative so independent implementations can agree on
sampled values: SplitMix64 expands the 64-bit seed into xoshiro256** state,
uniforms are ``(next_uint64() >> 11) * 2**-53`` and normal variates come from
Box-Muller applied to consecutive uniform pairs (the first uniform of a pair
is shifted into (0, 1] so the log never sees zero).
"""

from __future__ import annotations

import math

import numpy as np

Mat = np.ndarray

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 2.0**-53


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Rng:
    """xoshiro256** stream seeded through SplitMix64.

    Identical seeds produce identical streams on every platform; all
    randomness in the package (Householder vectors, permutations, test
    tables, benchmark inputs) flows through instances of this class.
    """

    def __init__(self, seed: int):
        x = int(seed) & _MASK64
        state = []
        for _ in range(4):
            x, z = _splitmix64(x)
            state.append(z)
        self._s = state
        self._spare: float | None = None

    def next_uint64(self) -> int:
        s0, s1, s2, s3 = self._s
        out = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return out

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_uint64() >> 11) * _INV_2_53

    def normal(self) -> float:
        """Standard normal variate (Box-Muller, pairs consumed in order)."""
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = ((self.next_uint64() >> 11) + 1) * _INV_2_53  # (0, 1]
        u2 = (self.next_uint64() >> 11) * _INV_2_53
        r = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare = r * math.sin(angle)
        return r * math.cos(angle)

    def normals(self, count: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(count)], dtype=np.float64)

    def integer(self, n: int) -> int:
        """Unbiased draw from {0, ..., n-1} by rejection on the raw stream."""
        if n < 1:
            raise ValueError("n must be positive")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            x = self.next_uint64()
            if x < limit:
                return x % n

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates shuffle of range(n) driven by :meth:`integer`."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.integer(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm


def matmul(a: Mat, b: Mat) -> Mat:
    """Matrix product with an explicit conformance check (no broadcasting)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul expects 2-D matrices")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def conj_transpose(a: Mat) -> Mat:
    a = np.asarray(a)
    return a.conj().T


def fro_norm(a: Mat) -> float:
    """sqrt of the sum of squared magnitudes (works for vectors too)."""
    return float(np.linalg.norm(np.asarray(a)))


def random_mat(rng: Rng, rows: int, cols: int) -> Mat:
    """Standard-normal matrix filled row-major from the rng's normal stream."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    return rng.normals(rows * cols).reshape(rows, cols)
