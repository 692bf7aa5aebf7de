"""
HPDP Dataflow Lab - Golden Reference
====================================
Version: 1.0.0
Status: PRODUCTION
Role: Layer geometry and the integer convolution every mapped kernel is
checked against.

    acc[y, x, k] = bias[k] + sum_{r,s,c} (in[y*st + r - pad_t, x*st + s - pad_l, c] - Z_in) * w[k, r, s, c]

Out-of-image taps read Z_in, so their term vanishes. Accumulation is checked
32-bit: overflow raises instead of wrapping.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from hpdp.errors import AccumulatorOverflow, DimensionError, ParameterError
from hpdp.quant.requant import RequantParams, requantize_tensor
from hpdp.quant.tensor import INT8_MAX, INT8_MIN, AccTensor, BiasVector, QuantizedTensor, WeightTensor
from hpdp.utils.words import INT32_MAX, INT32_MIN

logger = logging.getLogger("quant.golden")

PADDINGS = ("same", "valid")


def output_size(size: int, kernel: int, stride: int, padding: str) -> int:
    if padding == "same":
        return -(-size // stride)
    return (size - kernel) // stride + 1


def pad_amounts(size: int, kernel: int, stride: int, padding: str) -> Tuple[int, int]:
    """(before, after) padding along one axis; the odd pixel goes after."""
    if padding != "same":
        return 0, 0
    out = output_size(size, kernel, stride, padding)
    total = max((out - 1) * stride + kernel - size, 0)
    return total // 2, total - total // 2


@dataclass(frozen=True)
class ConvLayerSpec:
    input_dims: Tuple[int, int, int]
    weights: WeightTensor
    bias: BiasVector
    requant: RequantParams
    stride: int = 1
    padding: str = "same"
    z_in: int = 0
    out_scale: float = 1.0
    name: str = field(default="layer", compare=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.input_dims)
        if len(dims) != 3 or min(dims) <= 0:
            raise ParameterError(f"input dims must be three positive integers, got {self.input_dims}")
        object.__setattr__(self, "input_dims", dims)
        k, r, s, c = self.weights.dims
        if c != dims[2]:
            raise DimensionError(f"weight channels {c} != input channels {dims[2]}")
        if self.stride < 1:
            raise ParameterError(f"stride must be >= 1, got {self.stride}")
        if self.padding not in PADDINGS:
            raise ParameterError(f"padding must be one of {PADDINGS}, got {self.padding!r}")
        if len(self.bias) != k:
            raise DimensionError(f"bias has {len(self.bias)} entries for {k} output channels")
        if self.requant.channels != k:
            raise DimensionError(f"requant params cover {self.requant.channels} channels, layer has {k}")
        if not INT8_MIN <= self.z_in <= INT8_MAX:
            raise ParameterError(f"z_in {self.z_in} is not int8")
        h_out, w_out, _ = self.output_dims
        if h_out <= 0 or w_out <= 0:
            raise ParameterError(f"kernel {r}x{s} does not fit input {dims[0]}x{dims[1]} with {self.padding} padding")

    @property
    def kernel_dims(self) -> Tuple[int, int, int, int]:
        return self.weights.dims

    @property
    def z_out(self) -> int:
        return self.requant.z_out

    @property
    def output_dims(self) -> Tuple[int, int, int]:
        h, w, _ = self.input_dims
        k, r, s, _ = self.weights.dims
        return (output_size(h, r, self.stride, self.padding),
                output_size(w, s, self.stride, self.padding), k)

    @property
    def padding_hw(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        h, w, _ = self.input_dims
        _, r, s, _ = self.weights.dims
        return (pad_amounts(h, r, self.stride, self.padding),
                pad_amounts(w, s, self.stride, self.padding))

    @property
    def padded_dims(self) -> Tuple[int, int]:
        (pt, pb), (pl, pr) = self.padding_hw
        return self.input_dims[0] + pt + pb, self.input_dims[1] + pl + pr

    @property
    def macs(self) -> int:
        h_out, w_out, k = self.output_dims
        _, r, s, c = self.weights.dims
        return h_out * w_out * k * r * s * c


def pad_input(data: np.ndarray, spec: ConvLayerSpec) -> np.ndarray:
    """Pads spatially with Z_in."""
    (pt, pb), (pl, pr) = spec.padding_hw
    return np.pad(np.asarray(data), ((pt, pb), (pl, pr), (0, 0)), constant_values=spec.z_in)


def _check_order(centered: np.ndarray, w: np.ndarray, bias: np.ndarray, spec: ConvLayerSpec) -> None:
    """Walks partial sums in (r, s, c) order; raises on the first overflow."""
    h_out, w_out, k = spec.output_dims
    _, r, s, c = w.shape
    st = spec.stride
    partial = np.broadcast_to(bias, (h_out, w_out, k)).copy()
    for ri in range(r):
        for si in range(s):
            window = centered[ri:ri + st * (h_out - 1) + 1:st, si:si + st * (w_out - 1) + 1:st, :]
            for ci in range(c):
                partial += window[:, :, ci:ci + 1] * w[:, ri, si, ci]
                bad = np.argwhere((partial > INT32_MAX) | (partial < INT32_MIN))
                if bad.size:
                    y, x, kk = (int(v) for v in bad[0])
                    raise AccumulatorOverflow((y, x, kk), int(partial[y, x, kk]))


def conv2d_ref(inp: QuantizedTensor, weights: Optional[WeightTensor], spec: ConvLayerSpec) -> AccTensor:
    weights = spec.weights if weights is None else weights
    if inp.dims != spec.input_dims:
        raise DimensionError(f"input dims {inp.dims} != spec input dims {spec.input_dims}")
    if weights.dims != spec.weights.dims:
        raise DimensionError(f"weight dims {weights.dims} != spec weight dims {spec.weights.dims}")

    h_out, w_out, k = spec.output_dims
    _, r, s, c = weights.dims
    st = spec.stride
    centered = pad_input(inp.data.astype(np.int64), spec) - spec.z_in
    w = weights.data.astype(np.int64)
    bias = spec.bias.as_array()

    acc = np.broadcast_to(bias, (h_out, w_out, k)).copy()
    bound = np.broadcast_to(np.abs(bias), (h_out, w_out, k)).copy()
    for ri in range(r):
        for si in range(s):
            window = centered[ri:ri + st * (h_out - 1) + 1:st, si:si + st * (w_out - 1) + 1:st, :]
            tap = w[:, ri, si, :]                       # (K, C)
            acc += np.tensordot(window, tap, axes=([2], [1]))
            bound += np.tensordot(np.abs(window), np.abs(tap), axes=([2], [1]))

    if bound.max(initial=0) > INT32_MAX:
        # Some ordering could overflow; replay in declared order to find out.
        logger.debug("accumulator bound %d exceeds int32, checking partial sums", int(bound.max()))
        _check_order(centered, w, bias, spec)
    return AccTensor(acc)


def reference_output(inp: QuantizedTensor, spec: ConvLayerSpec) -> QuantizedTensor:
    """requantize_tensor(conv2d_ref(...)) with the spec's own weights."""
    return requantize_tensor(conv2d_ref(inp, spec.weights, spec), spec.requant, scale=spec.out_scale)
