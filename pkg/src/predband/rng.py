"""SplitMix64 generator.

Bit-exact with the reference algorithm so that datasets and splits are
reproducible across implementations. Everything random in the package is
drawn from this stream.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO64 = float(2**64)


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def rng_next_uniform(state: int) -> tuple[int, float]:
    """Advance ``state`` once and return ``(new_state, u)`` with u in [0, 1)."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, mix64(state) / _TWO64


class SplitMix64:
    """Stateful wrapper around the splitmix64 stream.

    The scalar and vectorised draws consume the stream identically, so
    ``uniforms(n)`` equals ``n`` successive calls to ``uniform()``.
    """

    def __init__(self, seed: int = 0):
        seed = int(seed)
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        return self.next_u64() / _TWO64

    def u64_array(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
            self.state = (self.state + n * GOLDEN_GAMMA) & MASK64
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        return z

    def uniforms(self, n: int) -> np.ndarray:
        # float conversion of uint64 rounds; clamp the handful of values that
        # would round up to exactly 2**64
        u = self.u64_array(n).astype(np.float64) / _TWO64
        return np.minimum(u, np.nextafter(1.0, 0.0))

    def open_uniforms(self, n: int) -> np.ndarray:
        """Draws in the open interval (0, 1), for log/inverse-CDF transforms."""
        z = self.u64_array(n) >> np.uint64(11)
        return (z.astype(np.float64) + 0.5) / float(2**53)

    def normals(self, n: int) -> np.ndarray:
        """Standard normals by Box-Muller, two uniforms per pair."""
        m = (n + 1) // 2
        u = self.open_uniforms(2 * m)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(2.0 * math.pi * u2)
        z[1::2] = r * np.sin(2.0 * math.pi * u2)
        return z[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n)
        u = self.uniforms(max(n - 1, 0))
        for k, i in enumerate(range(n - 1, 0, -1)):
            j = min(int(u[k] * (i + 1)), i)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def spawn(self) -> "SplitMix64":
        """Independent child stream seeded from the next output."""
        return SplitMix64(self.next_u64())
