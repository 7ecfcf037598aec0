"""Deterministic PRNG used wherever bit-reproducibility across runs matters.

The generator is xorshift64* (Vigna's multiply-scrambled xorshift over a
64-bit state); seeds pass once through splitmix64 so that small integers
map to well-mixed nonzero states.  Gaussians come from Box-Muller over the
top 53 bits.  Pure-integer arithmetic, so the stream is identical on every
platform and Python version.
"""

from __future__ import annotations

import numpy as np

__all__ = ["splitmix64", "Xorshift64Star"]

_MASK64 = (1 << 64) - 1
_XS_MULT = 0x2545F4914F6CDD1D
_SM_GAMMA = 0x9E3779B97F4A7C15
_FALLBACK_STATE = 0x853C49E6748FEA9B  # state must never be zero


def splitmix64(x: int) -> int:
    """One splitmix64 step; a fast 64-bit integer mixer."""
    x = (x + _SM_GAMMA) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Xorshift64Star:
    def __init__(self, seed: int):
        state = splitmix64(seed & _MASK64)
        self._state = state if state != 0 else _FALLBACK_STATE
        self._spare: float | None = None

    def next_u64(self) -> int:
        s = self._state
        s ^= (s >> 12)
        s ^= (s << 25) & _MASK64
        s ^= (s >> 27)
        self._state = s
        return (s * _XS_MULT) & _MASK64

    def uniform(self) -> float:
        """Uniform draw in the half-open interval (0, 1]."""
        return ((self.next_u64() >> 11) + 1) * (2.0 ** -53)

    def gaussian(self) -> float:
        """Standard normal via Box-Muller; draws are consumed in pairs."""
        if self._spare is not None:
            z = self._spare
            self._spare = None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        self._spare = float(r * np.sin(theta))
        return float(r * np.cos(theta))

    def normal_array(self, shape: tuple[int, ...], std: float = 1.0) -> np.ndarray:
        """Row-major array of scaled gaussians, filled in draw order."""
        flat = np.empty(int(np.prod(shape)), dtype=np.float64)
        for i in range(flat.size):
            flat[i] = self.gaussian() * std
        return flat.reshape(shape)
