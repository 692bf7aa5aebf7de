"""
HPDP Dataflow Lab - Re-quantization Arithmetic
==============================================
Version: 1.0.0
Status: PRODUCTION
Role: Fixed-point rescaling of int32 accumulators back to int8.

The real multiplier M in (0, 1) is stored as a normalized mantissa
M0 in [2^30, 2^31) and a right shift n in [0, 31]:

    M = M0 * 2^-(31 + n)
    q = clamp(Z_out + rnd(acc * M0 / 2^(31 + n)), -128, 127)

rnd rounds to nearest with ties away from zero. All products are exact
Python/int64 integers, so the scalar and the vectorized paths agree bit for bit.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple

import numpy as np

from hpdp.errors import DimensionError, ParameterError, UnsupportedMultiplier
from hpdp.quant.tensor import INT8_MAX, INT8_MIN, AccTensor, QuantizedTensor

M0_MIN = 1 << 30
M0_LIMIT = 1 << 31
MAX_SHIFT = 31


@dataclass(frozen=True)
class RequantParams:
    m0: Tuple[int, ...]
    shift: Tuple[int, ...]
    z_out: int = 0

    def __post_init__(self):
        m0 = tuple(int(v) for v in self.m0)
        shift = tuple(int(v) for v in self.shift)
        if len(m0) != len(shift):
            raise DimensionError(f"{len(m0)} multipliers but {len(shift)} shifts")
        for k, (m, n) in enumerate(zip(m0, shift)):
            if not M0_MIN <= m < M0_LIMIT:
                raise ParameterError(f"channel {k}: M0={m} not in [2^30, 2^31)")
            if not 0 <= n <= MAX_SHIFT:
                raise ParameterError(f"channel {k}: shift {n} not in [0, 31]")
        if not INT8_MIN <= self.z_out <= INT8_MAX:
            raise ParameterError(f"z_out {self.z_out} is not int8")
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "shift", shift)

    @property
    def channels(self) -> int:
        return len(self.m0)

    def multiplier(self, k: int) -> Fraction:
        return Fraction(self.m0[k], 1 << (31 + self.shift[k]))

    @classmethod
    def uniform(cls, m0: int, shift: int, channels: int, z_out: int = 0) -> "RequantParams":
        return cls((m0,) * channels, (shift,) * channels, z_out)


def rounding_shift(value: int, shift: int) -> int:
    """value / 2^shift rounded to nearest, ties away from zero."""
    if shift == 0:
        return value
    half = 1 << (shift - 1)
    if value >= 0:
        return (value + half) >> shift
    return -((-value + half) >> shift)


def requantize(acc: int, k: int, p: RequantParams) -> int:
    scaled = rounding_shift(int(acc) * p.m0[k], 31 + p.shift[k])
    return max(INT8_MIN, min(INT8_MAX, p.z_out + scaled))


def requantize_array(acc: np.ndarray, p: RequantParams) -> np.ndarray:
    """Vectorized requantize over the last (channel) axis."""
    acc = np.asarray(acc, dtype=np.int64)
    if acc.shape[-1] != p.channels:
        raise DimensionError(f"accumulator has {acc.shape[-1]} channels, params have {p.channels}")
    m0 = np.asarray(p.m0, dtype=np.int64)
    total = 31 + np.asarray(p.shift, dtype=np.int64)
    # |acc| < 2^31 and M0 < 2^31, so the product fits int64.
    prod = acc * m0
    mag = np.abs(prod)
    half = np.left_shift(np.int64(1), total - 1)
    scaled = np.sign(prod) * np.right_shift(mag + half, total)
    return np.clip(scaled + p.z_out, INT8_MIN, INT8_MAX).astype(np.int8)


def requantize_tensor(acc: AccTensor, p: RequantParams, scale: float = 1.0) -> QuantizedTensor:
    return QuantizedTensor(requantize_array(acc.data, p), scale=scale, zero_point=p.z_out)


def _normalize(m: float) -> Tuple[int, int]:
    if not (m > 0):
        raise UnsupportedMultiplier(f"multiplier {m} must be positive")
    if m >= 1:
        raise UnsupportedMultiplier(f"multiplier {m} must be below 1")
    mant, exp = math.frexp(m)          # m = mant * 2^exp, mant in [0.5, 1)
    n = -exp
    exact = Fraction(m) * (1 << (31 + n))
    m0 = math.floor(exact + Fraction(1, 2))
    if m0 == M0_LIMIT:
        m0 //= 2
        n -= 1
    if n < 0:
        raise UnsupportedMultiplier(f"multiplier {m} rounds up to 1")
    if n > MAX_SHIFT:
        raise UnsupportedMultiplier(f"multiplier {m} needs shift {n} > {MAX_SHIFT}")
    return m0, n


def compute_requant_params(s_in: float, s_w: Sequence[float], s_out: float, z_out: int = 0) -> RequantParams:
    """Derives (M0[k], n[k]) nearest to M[k] = s_in * s_w[k] / s_out."""
    if s_in <= 0 or s_out <= 0 or any(s <= 0 for s in s_w):
        raise UnsupportedMultiplier("all scales must be positive")
    pairs = [_normalize(s_in * s / s_out) for s in s_w]
    return RequantParams(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), z_out)


def multiplier_params(m: float, channels: int = 1, z_out: int = 0) -> RequantParams:
    m0, n = _normalize(m)
    return RequantParams.uniform(m0, n, channels, z_out)
