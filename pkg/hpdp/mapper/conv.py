"""
HPDP Dataflow Lab - Conv Mapper
===============================
Version: 1.0.0
Status: PRODUCTION
Role: Compiles a quantized conv layer into one or more array passes.

Pass layout (T macs, one output channel each):

    act/lb ─> mac0 ─> mac1 ─> ... ─> mac{T-1}       activations ride out1
               │       │               │
               └> mux1 ┴> mux2 ─ ... ──┴> mux{T-1}  results merge in k order
                                           │
            rq_mul ─(hi,lo)─> rq_shr ─> rq_zp ─> rq_clamp ─> ofm

Each mac reads its channel's weights from a looping fifo RAM and starts
every pixel from bias - Z_in * sum(w), so padding and zero points need no
extra elements. The requant chain runs on the merged stream while the
macs accumulate the next pixel.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from hpdp.core.dims import ArrayDims
from hpdp.core.programs import load_program
from hpdp.dma.descriptor import Dma4dDescriptor, gather, stream
from hpdp.dma.patterns import (ConvTile, band_preload_descriptor, band_rows, conv_input_descriptor)
from hpdp.dsl.model import AluPae, ArrayConfig, Channel, RamPae, StreamPort
from hpdp.dsl.validate import validate
from hpdp.errors import MappingError
from hpdp.mapper import estimate
from hpdp.mapper.strategy import MappingStrategy, choose_strategy, words_per_result
from hpdp.quant.golden import ConvLayerSpec
from hpdp.utils.words import channel_words, pack_lanes, pad_channels, wrap32

logger = logging.getLogger("mapper.conv")

OUTPUT_STREAM = "ofm"
ACT_STREAM = "act"
ADDR_STREAM = "addr"
LINE_BUFFER = "lb"


class InputKind(str, Enum):
    ACTIVATIONS = "activations"   # host streams activation words
    ADDRESSES = "addresses"       # host streams line-buffer addresses


@dataclass(frozen=True)
class OutputLayout:
    """Output packets of one pass, in output row -> output col -> channel order."""

    tile: ConvTile
    k0: int
    k1: int

    def __len__(self) -> int:
        return self.tile.pixels * (self.k1 - self.k0)

    def indices(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        ys, xs, ks = np.meshgrid(np.arange(self.tile.y0, self.tile.y1),
                                 np.arange(self.tile.x0, self.tile.x1),
                                 np.arange(self.k0, self.k1), indexing="ij")
        return ys.reshape(-1), xs.reshape(-1), ks.reshape(-1)

    def scatter(self, out: np.ndarray, packets) -> None:
        if len(packets) != len(self):
            raise MappingError(f"layout expects {len(self)} packets, got {len(packets)}")
        ys, xs, ks = self.indices()
        out[ys, xs, ks] = np.asarray(packets, dtype=out.dtype)

    def to_dict(self) -> dict:
        t = self.tile
        return {"tile": [t.y0, t.y1, t.x0, t.x1], "k0": self.k0, "k1": self.k1}

    @classmethod
    def from_dict(cls, data: dict) -> "OutputLayout":
        return cls(ConvTile(*data["tile"]), int(data["k0"]), int(data["k1"]))


@dataclass(frozen=True)
class MappedPass:
    config: ArrayConfig
    input_kind: InputKind
    input_stream: str
    output_stream: str
    packets: int
    initiation_rate: Fraction
    layout: Optional[OutputLayout] = None
    preloads: Tuple[Tuple[str, Dma4dDescriptor], ...] = ()   # (RAM, host region) loaded before the run

    @property
    def input_descriptors(self) -> Tuple[Dma4dDescriptor, ...]:
        return self.config.stream(self.input_stream).dma

    @property
    def preload_words(self) -> int:
        return sum(len(d) for _, d in self.preloads)


@dataclass(frozen=True)
class ResourceSummary:
    alu_used: int
    ram_used: int
    ram_words_used: int
    alu_available: int
    ram_available: int
    ram_words_available: int
    critical_path: int


@dataclass(frozen=True)
class MappedKernel:
    name: str
    dims: ArrayDims
    passes: Tuple[MappedPass, ...]
    strategy: Optional[MappingStrategy] = None
    estimate: int = field(default=0, compare=False)

    @property
    def config(self) -> ArrayConfig:
        return self.passes[0].config

    @property
    def layouts(self) -> List[OutputLayout]:
        return [p.layout for p in self.passes if p.layout is not None]

    @property
    def strategy_name(self) -> str:
        return self.strategy.kind.value if self.strategy else "passthrough"

    @property
    def resources(self) -> ResourceSummary:
        d = self.dims
        return ResourceSummary(
            alu_used=max(p.config.alu_used for p in self.passes),
            ram_used=max(p.config.ram_used for p in self.passes),
            ram_words_used=max(p.config.ram_words_used + p.preload_words for p in self.passes),
            alu_available=d.alu_count,
            ram_available=d.ram_count,
            ram_words_available=d.ram_count * d.ram_capacity,
            critical_path=max(estimate.critical_path(p.config) for p in self.passes),
        )

    @classmethod
    def passthrough(cls, hops: int, packets: int) -> "MappedKernel":
        """A route chain of `hops` elements carrying `packets` host words."""
        config = load_program("route_chain", hops=hops)
        mp = MappedPass(config, InputKind.ACTIVATIONS, "in", "out", packets, Fraction(1))
        kernel = cls(config.name, config.dims, (mp,))
        return _with_estimate(kernel)


def _with_estimate(kernel: MappedKernel) -> MappedKernel:
    return MappedKernel(kernel.name, kernel.dims, kernel.passes, kernel.strategy,
                        estimate.estimate_cycles(kernel))


# --- host-side weight image ----------------------------------------------------

def weight_words(spec: ConvLayerSpec) -> np.ndarray:
    """(K, R*S*Cw) packed weight words, channel lanes padded with zero."""
    w = pad_channels(spec.weights.data.astype(np.int8))
    k = w.shape[0]
    return pack_lanes(w).reshape(k, -1)


def folded_bias(spec: ConvLayerSpec) -> List[int]:
    """bias[k] - Z_in * sum(w[k]), wrapped to int32: the mac's starting value."""
    sums = spec.weights.data.astype(np.int64).reshape(spec.kernel_dims[0], -1).sum(axis=1)
    bias = spec.bias.as_array().astype(np.int64)
    return [wrap32(int(b) - spec.z_in * int(s)) for b, s in zip(bias, sums)]


def config_name(name: str) -> str:
    clean = re.sub(r"\W", "_", name) or "layer"
    return clean if re.match(r"[A-Za-z_]", clean) else f"l_{clean}"


# --- pass construction ---------------------------------------------------------

class _Placer:
    """Hands out grid slots in row-major order."""

    def __init__(self, dims: ArrayDims):
        self.dims = dims
        self.alu = 0
        self.ram = 0

    def alu_slot(self) -> Tuple[int, int]:
        slot = divmod(self.alu, self.dims.alu_cols)
        self.alu += 1
        return slot

    def ram_slot(self) -> Tuple[int, int]:
        slot = divmod(self.ram, self.dims.ram_rows)
        self.ram += 1
        return slot


def _pass_config(spec: ConvLayerSpec, strategy: MappingStrategy, dims: ArrayDims, k0: int, k1: int,
                 tile: ConvTile, weights: np.ndarray, biases: List[int],
                 input_descs: List[Dma4dDescriptor]) -> ArrayConfig:
    n = weights.shape[1]
    t = k1 - k0
    place = _Placer(dims)
    paes: List[AluPae] = []
    rams: List[RamPae] = []
    channels: List[Channel] = []
    streams: List[StreamPort] = []

    for i in range(t):
        outputs = ("out0", "out1") if i < t - 1 else ("out0",)
        paes.append(AluPae(f"mac{i}", *place.alu_slot(), "mac", (n, biases[k0 + i]), ("in0", "in1"), outputs))
        rams.append(RamPae(f"w{i}", *place.ram_slot(), "fifo", True, (), ("out0",),
                           tuple(int(v) for v in weights[k0 + i])))
        channels.append(Channel(f"w{i}", "out0", f"mac{i}", "in1"))
        if i:
            channels.append(Channel(f"mac{i - 1}", "out1", f"mac{i}", "in0"))

    merged = ("mac0", "out0")
    for i in range(1, t):
        paes.append(AluPae(f"mux{i}", *place.alu_slot(), "mux", (i, 1), ("in0", "in1"), ("out0",)))
        channels.append(Channel(merged[0], merged[1], f"mux{i}", "in0"))
        channels.append(Channel(f"mac{i}", "out0", f"mux{i}", "in1"))
        merged = (f"mux{i}", "out0")

    rq = spec.requant
    rams.append(RamPae("m0", *place.ram_slot(), "fifo", True, (), ("out0",), tuple(rq.m0[k0:k1])))
    rams.append(RamPae("sh", *place.ram_slot(), "fifo", True, (), ("out0",),
                       tuple(31 + s for s in rq.shift[k0:k1])))
    paes.append(AluPae("rq_mul", *place.alu_slot(), "mul", (), ("in0", "in1"), ("out0", "out1")))
    paes.append(AluPae("rq_shr", *place.alu_slot(), "shr_round", (), ("in0", "in1", "in2"), ("out0",)))
    paes.append(AluPae("rq_zp", *place.alu_slot(), "add", (rq.z_out,), ("in0",), ("out0",)))
    paes.append(AluPae("rq_clamp", *place.alu_slot(), "clamp", (-128, 127), ("in0",), ("out0",)))
    channels += [
        Channel(merged[0], merged[1], "rq_mul", "in0"),
        Channel("m0", "out0", "rq_mul", "in1"),
        Channel("rq_mul", "out1", "rq_shr", "in0"),
        Channel("rq_mul", "out0", "rq_shr", "in1"),
        Channel("sh", "out0", "rq_shr", "in2"),
        Channel("rq_shr", "out0", "rq_zp", "in0"),
        Channel("rq_zp", "out0", "rq_clamp", "in0"),
    ]
    streams.append(StreamPort(OUTPUT_STREAM, "out", "rq_clamp", "out0"))

    if strategy.uses_line_buffer:
        rams.append(RamPae(LINE_BUFFER, *place.ram_slot(), "ram", False, ("in1",), ("out0",)))
        channels.append(Channel(LINE_BUFFER, "out0", "mac0", "in0"))
        streams.append(StreamPort(ADDR_STREAM, "in", LINE_BUFFER, "in1", tuple(input_descs)))
    else:
        streams.append(StreamPort(ACT_STREAM, "in", "mac0", "in0", tuple(input_descs)))

    name = f"{config_name(spec.name)}_k{k0}_y{tile.y0}"
    return ArrayConfig(dims, tuple(paes), tuple(rams), tuple(channels), tuple(streams), name)


def map_conv(spec: ConvLayerSpec, dims: ArrayDims = ArrayDims()) -> MappedKernel:
    """Maps a conv layer; passes run channel tile (outer) by row band (inner)."""
    strategy = choose_strategy(spec, dims)
    h_out, w_out, k = spec.output_dims
    n = words_per_result(spec)
    weights = weight_words(spec)
    biases = folded_bias(spec)
    rate = min(Fraction(1), Fraction(n, strategy.t_k))

    _, wp = spec.padded_dims
    row_words = wp * channel_words(spec.input_dims[2])
    bands = [ConvTile(y, min(y + strategy.t_y, h_out), 0, w_out) for y in range(0, h_out, strategy.t_y)]

    passes: List[MappedPass] = []
    for k0 in range(0, k, strategy.t_k):
        k1 = min(k0 + strategy.t_k, k)
        for tile in bands:
            descs = conv_input_descriptor(spec, tile)
            preloads: Tuple[Tuple[str, Dma4dDescriptor], ...] = ()
            kind, stream_name = InputKind.ACTIVATIONS, ACT_STREAM
            if strategy.uses_line_buffer:
                first, last = band_rows(spec, tile)
                band_words = (last - first) * row_words
                descs = [d.shifted(-first * row_words, (0, band_words)) for d in descs]
                preloads = ((LINE_BUFFER, band_preload_descriptor(spec, tile)),)
                kind, stream_name = InputKind.ADDRESSES, ADDR_STREAM
            config = _pass_config(spec, strategy, dims, k0, k1, tile, weights, biases, descs)
            passes.append(MappedPass(config, kind, stream_name, OUTPUT_STREAM, tile.pixels * n,
                                     rate, OutputLayout(tile, k0, k1), preloads))

    for mp in passes:
        errors = [d for d in validate(mp.config) if d.is_error]
        if errors:
            raise MappingError(f"{spec.name}: mapped config {mp.config.name} is invalid: {errors[0]}")
    kernel = _with_estimate(MappedKernel(config_name(spec.name), dims, tuple(passes), strategy))
    r = kernel.resources
    logger.info("🧩 %s mapped: %s, %d pass(es), %d/%d ALU, %d/%d RAM, estimate %d cycles",
                spec.name, strategy, len(passes), r.alu_used, r.alu_available,
                r.ram_used, r.ram_available, kernel.estimate)
    return kernel


def input_words(mp: MappedPass, activation_image: np.ndarray) -> List[int]:
    """Host packets for a pass: activation words, or line-buffer addresses."""
    if mp.input_kind is InputKind.ADDRESSES:
        return stream(mp.input_descriptors).tolist()
    return gather(activation_image, mp.input_descriptors)
