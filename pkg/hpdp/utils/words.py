"""
32-bit word helpers shared by the simulator, the mapper and the orchestrator.

Activations and weights travel as four signed 8-bit lanes packed into one
little-endian word: lane l holds channel 4*w + l.
"""

import struct
from functools import lru_cache
from typing import Tuple

import numpy as np

INT32_MIN = -(1 << 31)
INT32_MAX = (1 << 31) - 1
LANES = 4

_PACK = struct.Struct("<i")
_LANES = struct.Struct("<4b")


def wrap32(value: int) -> int:
    return ((value + (1 << 31)) & 0xFFFFFFFF) - (1 << 31)


def sat32(value: int) -> int:
    if value > INT32_MAX:
        return INT32_MAX
    if value < INT32_MIN:
        return INT32_MIN
    return value


def in_int32(value: int) -> bool:
    return INT32_MIN <= value <= INT32_MAX


@lru_cache(maxsize=1 << 16)
def unpack_lanes(word: int) -> Tuple[int, int, int, int]:
    return _LANES.unpack(_PACK.pack(word))


def lane_dot(a: int, b: int) -> int:
    a0, a1, a2, a3 = unpack_lanes(a)
    b0, b1, b2, b3 = unpack_lanes(b)
    return a0 * b0 + a1 * b1 + a2 * b2 + a3 * b3


def channel_words(channels: int) -> int:
    return -(-channels // LANES)


def pack_lanes(values: np.ndarray) -> np.ndarray:
    """Packs the last axis (length divisible by 4) of an int8 array into int32 words."""
    arr = np.ascontiguousarray(values, dtype=np.int8)
    if arr.shape[-1] % LANES:
        raise ValueError(f"last axis {arr.shape[-1]} is not a multiple of {LANES}")
    return arr.view("<i4").astype(np.int64)


def pad_channels(values: np.ndarray, fill: int = 0) -> np.ndarray:
    """Pads the channel (last) axis up to a multiple of 4."""
    c = values.shape[-1]
    extra = channel_words(c) * LANES - c
    if not extra:
        return values
    widths = [(0, 0)] * (values.ndim - 1) + [(0, extra)]
    return np.pad(values, widths, constant_values=fill)
