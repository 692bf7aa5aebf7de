"""
HPDP Dataflow Lab - Configuration Model
=======================================
Version: 1.0.0
Status: PRODUCTION
Role: Placed-and-routed array configuration plus parse diagnostics.

Element and channel lists are held in a canonical order, so two configs
describing the same array compare equal whatever order they were written
in. Source spans never take part in equality.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple, Union

from hpdp.core.dims import ArrayDims
from hpdp.dma.descriptor import Dma4dDescriptor


@dataclass(frozen=True)
class SourceSpan:
    line: int
    col_start: int
    col_end: int

    def __str__(self):
        return f"{self.line}:{self.col_start}-{self.col_end}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str          # "error" | "warning"
    code: str
    message: str
    span: Optional[SourceSpan] = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self):
        where = f"{self.span} " if self.span else ""
        return f"{where}{self.severity} {self.code}: {self.message}"


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AluPae:
    name: str
    row: int
    col: int
    opcode: str
    imm: Tuple[int, ...] = ()
    inputs: Tuple[str, ...] = ()
    outputs: Tuple[str, ...] = ()
    span: Optional[SourceSpan] = _span()

    def __post_init__(self):
        object.__setattr__(self, "imm", tuple(int(v) for v in self.imm))
        object.__setattr__(self, "inputs", tuple(sorted(self.inputs)))
        object.__setattr__(self, "outputs", tuple(sorted(self.outputs)))

    def immediate(self, index: int, default: int) -> int:
        return self.imm[index] if index < len(self.imm) else default


@dataclass(frozen=True)
class RamPae:
    name: str
    side: int
    row: int
    mode: str = "fifo"
    loop: bool = False
    inputs: Tuple[str, ...] = ()
    outputs: Tuple[str, ...] = ()
    preload: Tuple[int, ...] = ()
    span: Optional[SourceSpan] = _span()

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(sorted(self.inputs)))
        object.__setattr__(self, "outputs", tuple(sorted(self.outputs)))
        object.__setattr__(self, "preload", tuple(int(v) for v in self.preload))


Element = Union[AluPae, RamPae]


@dataclass(frozen=True)
class Channel:
    src: str
    src_port: str
    dst: str
    dst_port: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class StreamPort:
    name: str
    direction: str         # "in": host -> element input, "out": element output -> host
    element: str
    port: str
    dma: Tuple[Dma4dDescriptor, ...] = ()
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class ArrayConfig:
    dims: ArrayDims = field(default_factory=ArrayDims)
    paes: Tuple[AluPae, ...] = ()
    rams: Tuple[RamPae, ...] = ()
    channels: Tuple[Channel, ...] = ()
    streams: Tuple[StreamPort, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "paes", tuple(sorted(self.paes, key=lambda p: (p.row, p.col, p.name))))
        object.__setattr__(self, "rams", tuple(sorted(self.rams, key=lambda r: (r.side, r.row, r.name))))
        object.__setattr__(self, "channels", tuple(sorted(
            self.channels, key=lambda c: (c.src, c.src_port, c.dst, c.dst_port))))
        object.__setattr__(self, "streams", tuple(sorted(self.streams, key=lambda s: (s.direction, s.name))))

    @property
    def alu_used(self) -> int:
        return len(self.paes)

    @property
    def ram_used(self) -> int:
        return len(self.rams)

    @property
    def ram_words_used(self) -> int:
        return sum(len(r.preload) for r in self.rams)

    def elements(self) -> Iterator[Element]:
        yield from self.paes
        yield from self.rams

    def element_map(self) -> Dict[str, Element]:
        return {e.name: e for e in self.elements()}

    def stream(self, name: str) -> Optional[StreamPort]:
        return next((s for s in self.streams if s.name == name), None)

    def input_streams(self) -> List[StreamPort]:
        return [s for s in self.streams if s.direction == "in"]

    def output_streams(self) -> List[StreamPort]:
        return [s for s in self.streams if s.direction == "out"]


@dataclass
class ParseResult:
    config: Optional[ArrayConfig]
    diagnostics: List[Diagnostic] = field(default_factory=list)

    @property
    def errors(self) -> List[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]

    @property
    def ok(self) -> bool:
        return self.config is not None and not self.errors
