"""
HPDP Dataflow Lab - DMA Access Patterns
=======================================
Version: 1.0.0
Status: PRODUCTION
Role: Builds descriptor lists for the conv data movements.

Activation memory is the spatially padded input, four channels per word:

    word(row, col, cw) = (row * Wp + col) * Cw + cw

The mapped kernel consumes it in the order output row -> output col ->
kernel row -> kernel col -> channel word.
"""

from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Sequence, Tuple

from hpdp.dma.descriptor import LEVELS, Dma4dDescriptor
from hpdp.errors import DimensionError
from hpdp.quant.golden import ConvLayerSpec
from hpdp.utils.words import LANES, channel_words


@dataclass(frozen=True)
class ConvTile:
    """Half-open output region [y0, y1) x [x0, x1)."""

    y0: int
    y1: int
    x0: int
    x1: int

    @classmethod
    def full(cls, spec: ConvLayerSpec) -> "ConvTile":
        h_out, w_out, _ = spec.output_dims
        return cls(0, h_out, 0, w_out)

    @property
    def pixels(self) -> int:
        return (self.y1 - self.y0) * (self.x1 - self.x0)


def coalesce_loops(base: int, loops: Sequence[Tuple[int, int]],
                   region: Optional[Tuple[int, int]] = None) -> List[Dma4dDescriptor]:
    """Turns an arbitrary loop nest (outermost first) into 4-level descriptors.

    Unit-count levels are dropped, contiguous neighbours merged, and any
    levels beyond four are unrolled into a descriptor list.
    """
    merged: List[Tuple[int, int]] = []
    for count, stride in reversed([lv for lv in loops if lv[0] != 1]):
        if merged and stride == merged[-1][0] * merged[-1][1]:
            inner_count, inner_stride = merged.pop()
            merged.append((count * inner_count, inner_stride))
        else:
            merged.append((count, stride))
    merged.reverse()
    if any(c == 0 for c, _ in merged):
        return []
    if len(merged) <= LEVELS:
        return [Dma4dDescriptor(base, tuple(merged), region)]
    outer, inner = merged[:-LEVELS], tuple(merged[-LEVELS:])
    out = []
    for idx in product(*[range(c) for c, _ in outer]):
        offset = sum(i * s for i, (_, s) in zip(idx, outer))
        out.append(Dma4dDescriptor(base + offset, inner, region))
    return out


def activation_words(spec: ConvLayerSpec) -> int:
    hp, wp = spec.padded_dims
    return hp * wp * channel_words(spec.input_dims[2])


def check_tile(spec: ConvLayerSpec, tile: ConvTile) -> None:
    h_out, w_out, _ = spec.output_dims
    if not (0 <= tile.y0 < tile.y1 <= h_out and 0 <= tile.x0 < tile.x1 <= w_out):
        raise DimensionError(f"tile {tile} outside output {h_out}x{w_out} of {spec.name}")


def conv_input_descriptor(spec: ConvLayerSpec, tile: ConvTile) -> List[Dma4dDescriptor]:
    check_tile(spec, tile)
    _, wp = spec.padded_dims
    cw = channel_words(spec.input_dims[2])
    _, r, s, _ = spec.kernel_dims
    st = spec.stride
    row = wp * cw
    loops = [
        (tile.y1 - tile.y0, st * row),
        (tile.x1 - tile.x0, st * cw),
        (r, row),
        (s, cw),
        (cw, 1),
    ]
    base = tile.y0 * st * row + tile.x0 * st * cw
    return coalesce_loops(base, loops, (0, activation_words(spec)))


def band_rows(spec: ConvLayerSpec, tile: ConvTile) -> Tuple[int, int]:
    """Padded input rows [first, last) touched by an output-row band."""
    _, r, _, _ = spec.kernel_dims
    return tile.y0 * spec.stride, (tile.y1 - 1) * spec.stride + r


def band_preload_descriptor(spec: ConvLayerSpec, tile: ConvTile) -> Dma4dDescriptor:
    """Linear copy of a band's padded rows (all columns)."""
    _, wp = spec.padded_dims
    row = wp * channel_words(spec.input_dims[2])
    first, last = band_rows(spec, tile)
    return Dma4dDescriptor.linear(first * row, (last - first) * row, (0, activation_words(spec)))


def staging_dims(spec: ConvLayerSpec) -> Tuple[int, int, int]:
    """(Hp, Wp, C padded to lanes) of a layer's element-level input staging image."""
    hp, wp = spec.padded_dims
    return hp, wp, channel_words(spec.input_dims[2]) * LANES


def output_scatter_descriptors(tile: ConvTile, k0: int, k1: int,
                               next_spec: ConvLayerSpec) -> List[Dma4dDescriptor]:
    """Where a pass's output packets (y, x, k order) land in the next layer's staging image."""
    hp, wp, cp = staging_dims(next_spec)
    (pt, _), (pl, _) = next_spec.padding_hw
    loops = [(tile.y1 - tile.y0, wp * cp), (tile.x1 - tile.x0, cp), (k1 - k0, 1)]
    base = ((tile.y0 + pt) * wp + tile.x0 + pl) * cp + k0
    return coalesce_loops(base, loops, (0, hp * wp * cp))
