"""
HPDP Dataflow Lab - Quantized Tensors
=====================================
Version: 1.0.0
Status: PRODUCTION
Role: Integer tensor containers with affine quantization metadata.

Layout is channel-last (H, W, C) for activations and (K, R, S, C) for
weights. Values are held in numpy arrays; constructors validate ranges so
every downstream consumer can trust them.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Tuple

import numpy as np

from hpdp.errors import DimensionError, ParameterError
from hpdp.utils.words import INT32_MAX, INT32_MIN

INT8_MIN, INT8_MAX = -128, 127


def _check_int8(name: str, data: np.ndarray) -> None:
    if data.size and (data.min() < INT8_MIN or data.max() > INT8_MAX):
        raise ParameterError(f"{name} holds values outside [-128, 127]")


@dataclass(frozen=True, eq=False)
class QuantizedTensor:
    """Activation tensor: int8 data of shape (H, W, C) with scale/zero point."""

    data: np.ndarray
    scale: float = 1.0
    zero_point: int = 0

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or min(arr.shape) <= 0:
            raise DimensionError(f"activation tensor must be (H, W, C) with positive dims, got {arr.shape}")
        _check_int8("activation tensor", arr)
        if not self.scale > 0:
            raise ParameterError(f"scale must be positive, got {self.scale}")
        if not INT8_MIN <= self.zero_point <= INT8_MAX:
            raise ParameterError(f"zero_point {self.zero_point} is not int8")
        arr = arr.astype(np.int8)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.data.shape)

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, QuantizedTensor):
            return NotImplemented
        return (self.dims == other.dims and self.scale == other.scale
                and self.zero_point == other.zero_point
                and bool(np.array_equal(self.data, other.data)))

    def __hash__(self):
        return hash((self.dims, self.scale, self.zero_point, self.data.tobytes()))


@dataclass(frozen=True, eq=False)
class WeightTensor:
    """Symmetric per-output-channel weights, shape (K, R, S, C), zero point 0."""

    data: np.ndarray
    per_channel_scales: Tuple[float, ...] = ()

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 4 or min(arr.shape) <= 0:
            raise DimensionError(f"weight tensor must be (K, R, S, C) with positive dims, got {arr.shape}")
        _check_int8("weight tensor", arr)
        scales = tuple(float(s) for s in self.per_channel_scales) or (1.0,) * arr.shape[0]
        if len(scales) != arr.shape[0]:
            raise DimensionError(f"{len(scales)} scales for {arr.shape[0]} output channels")
        if any(not s > 0 for s in scales):
            raise ParameterError("weight scales must be positive")
        arr = arr.astype(np.int8)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "per_channel_scales", scales)

    zero_point = 0

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        return tuple(int(d) for d in self.data.shape)

    def __eq__(self, other):
        if not isinstance(other, WeightTensor):
            return NotImplemented
        return (self.dims == other.dims and self.per_channel_scales == other.per_channel_scales
                and bool(np.array_equal(self.data, other.data)))

    def __hash__(self):
        return hash((self.dims, self.data.tobytes()))


@dataclass(frozen=True)
class BiasVector:
    values: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v < INT32_MIN or v > INT32_MAX for v in vals):
            raise ParameterError("bias values must be signed 32-bit")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class AccTensor:
    """Conv accumulators before requantization, shape (H_out, W_out, K), int32 range."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.int64)
        if arr.ndim != 3:
            raise DimensionError(f"accumulator tensor must be 3-D, got {arr.shape}")
        if arr.size and (arr.min() < INT32_MIN or arr.max() > INT32_MAX):
            raise ParameterError("accumulator values exceed int32")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.data.shape)

    def __eq__(self, other):
        if not isinstance(other, AccTensor):
            return NotImplemented
        return self.dims == other.dims and bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.dims, self.data.tobytes()))


def _round_ratio(value: Fraction, step: Fraction) -> int:
    x = value / step
    r = math.floor(abs(x) + Fraction(1, 2))
    return r if x >= 0 else -r


def quantize(values: Sequence, scale: float, zero_point: int) -> QuantizedTensor:
    """q = clamp(round(v / scale) + zero_point, -128, 127), ties away from zero.

    Accepts a (H, W, C) array; lower-rank input is promoted by leading
    singleton axes.
    """
    if not scale > 0:
        raise ParameterError(f"scale must be positive, got {scale}")
    if not INT8_MIN <= zero_point <= INT8_MAX:
        raise ParameterError(f"zero_point {zero_point} is not int8")
    arr = np.asarray(values, dtype=np.float64)
    while arr.ndim < 3:
        arr = arr[np.newaxis, ...]
    if not np.all(np.isfinite(arr)):
        raise ParameterError("values must be finite")
    step = Fraction(scale)
    # ties are decided on the exact ratio, not on the rounded float quotient
    q = np.array([min(max(_round_ratio(Fraction(float(v)), step) + zero_point, INT8_MIN), INT8_MAX)
                  for v in arr.reshape(-1)], dtype=np.int8).reshape(arr.shape)
    return QuantizedTensor(q, scale=scale, zero_point=zero_point)


def dequantize(t: QuantizedTensor) -> np.ndarray:
    return t.scale * (t.data.astype(np.float64) - t.zero_point)
