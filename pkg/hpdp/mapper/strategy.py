"""
HPDP Dataflow Lab - Mapping Strategy
====================================
Version: 1.0.0
Status: PRODUCTION
Role: Picks how a conv layer is laid onto the array and how it is tiled.

One mac element accumulates one output channel, so a pass covers T_k
output channels. Around the T_k macs a pass needs T_k - 1 merge muxes and
a four-element requant chain (ALU = 2*T_k + 3), plus one weight RAM per
mac and two requant parameter RAMs (RAM = T_k + 2, +1 for a line buffer).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

from hpdp.core.dims import ArrayDims
from hpdp.errors import MappingError
from hpdp.quant.golden import ConvLayerSpec
from hpdp.utils.words import channel_words

logger = logging.getLogger("mapper.strategy")

MAX_KERNEL = 7
REQUANT_ALUS = 4
PARAM_RAMS = 2


class StrategyKind(str, Enum):
    SPATIAL_1X1 = "spatial_1x1"
    LINE_BUFFER_3X3 = "line_buffer_3x3"
    TILED_GENERIC = "tiled_generic"


@dataclass(frozen=True)
class MappingStrategy:
    kind: StrategyKind
    t_k: int          # output channels per pass
    t_y: int          # output rows per pass (band height)

    @property
    def uses_line_buffer(self) -> bool:
        return self.kind is StrategyKind.LINE_BUFFER_3X3

    def __str__(self):
        return f"{self.kind.value} (T_k={self.t_k}, T_y={self.t_y})"


def words_per_result(spec: ConvLayerSpec) -> int:
    """Packets one mac consumes per output pixel: R * S * ceil(C / 4)."""
    _, r, s, c = spec.kernel_dims
    return r * s * channel_words(c)


def alu_budget(t_k: int) -> int:
    return 2 * t_k - 1 + REQUANT_ALUS


def ram_budget(t_k: int, line_buffer: bool) -> int:
    return t_k + PARAM_RAMS + (1 if line_buffer else 0)


def max_channel_tile(dims: ArrayDims, line_buffer: bool) -> int:
    by_alu = (dims.alu_count - REQUANT_ALUS + 1) // 2
    by_ram = dims.ram_count - PARAM_RAMS - (1 if line_buffer else 0)
    return min(by_alu, by_ram)


def balanced_tile(k: int, t_max: int) -> int:
    """Smallest tile that still needs the minimal number of passes."""
    passes = math.ceil(k / t_max)
    return math.ceil(k / passes)


def band_height(spec: ConvLayerSpec, dims: ArrayDims) -> int:
    """Output rows whose padded input rows fit one line-buffer RAM (0 if none fit)."""
    _, r, _, _ = spec.kernel_dims
    _, wp = spec.padded_dims
    row_words = wp * channel_words(spec.input_dims[2])
    rows = dims.ram_capacity // row_words
    if rows < r:
        return 0
    return min((rows - r) // spec.stride + 1, spec.output_dims[0])


def _kind(spec: ConvLayerSpec) -> StrategyKind:
    _, r, s, _ = spec.kernel_dims
    if r == 1 and s == 1:
        return StrategyKind.SPATIAL_1X1
    if r == 3 and s == 3 and spec.stride == 1:
        return StrategyKind.LINE_BUFFER_3X3
    return StrategyKind.TILED_GENERIC


def choose_strategy(spec: ConvLayerSpec, dims: ArrayDims = ArrayDims()) -> MappingStrategy:
    """Deterministic strategy and tiling for a layer.

    A 3x3 stride-1 layer whose three padded rows do not fit one RAM element
    falls back to tiled_generic.
    """
    _, r, s, _ = spec.kernel_dims
    if r > MAX_KERNEL or s > MAX_KERNEL:
        raise MappingError(f"{spec.name}: kernel {r}x{s} exceeds the supported {MAX_KERNEL}x{MAX_KERNEL}")
    n = words_per_result(spec)
    if n > dims.ram_capacity:
        raise MappingError(f"{spec.name}: {n} weight words per output channel exceed "
                           f"RAM capacity {dims.ram_capacity}")

    kind = _kind(spec)
    t_y = spec.output_dims[0]
    if kind is StrategyKind.LINE_BUFFER_3X3:
        t_y = band_height(spec, dims)
        if t_y == 0:
            logger.info("%s: padded rows do not fit a %d-word RAM, using tiled_generic",
                        spec.name, dims.ram_capacity)
            kind, t_y = StrategyKind.TILED_GENERIC, spec.output_dims[0]

    line_buffer = kind is StrategyKind.LINE_BUFFER_3X3
    t_max = max_channel_tile(dims, line_buffer)
    if t_max < 1:
        raise MappingError(
            f"{spec.name}: one output channel needs {alu_budget(1)} ALU / {ram_budget(1, line_buffer)} RAM, "
            f"array has {dims.alu_count} ALU / {dims.ram_count} RAM")
    k = spec.output_dims[2]
    return MappingStrategy(kind, balanced_tile(k, t_max), t_y)
