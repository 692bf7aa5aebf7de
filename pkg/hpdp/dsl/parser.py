"""
HPDP Dataflow Lab - xcfg Parser
===============================
Version: 1.0.0
Status: PRODUCTION
Role: Text -> ArrayConfig, collecting every diagnostic instead of stopping
at the first one.

Each line is parsed on its own with the LALR grammar in xcfg.lark, so a
syntax error on one line never hides problems on the others. A second
pass resolves names, placements and arity against the opcode table.
"""

import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedInput

from hpdp.core.dims import ArrayDims
from hpdp.core.isa import OPCODES, RAM_MODES, RAM_PORTS, canonical_port, check_immediates, check_ports
from hpdp.dma.descriptor import Dma4dDescriptor
from hpdp.dsl.model import (AluPae, ArrayConfig, Channel, Diagnostic, ParseResult, RamPae,
                            SourceSpan, StreamPort)
from hpdp.errors import ConfigError, ParameterError
from hpdp.utils.words import INT32_MAX, INT32_MIN

logger = logging.getLogger("dsl.parser")

GRAMMAR_PATH = Path(__file__).with_name("xcfg.lark")

_HEX = re.compile(r"-?0[xX]")
_parser: Optional[Lark] = None


def grammar_text() -> str:
    return GRAMMAR_PATH.read_text(encoding="utf-8")


def _lark() -> Lark:
    global _parser
    if _parser is None:
        _parser = Lark(grammar_text(), start="statement", parser="lalr",
                       propagate_positions=True, maybe_placeholders=True)
    return _parser


def _int(tok: Token) -> int:
    text = str(tok)
    if _HEX.match(text):
        return int(text, 16)
    return int(text, 10)


class _Line(Transformer):
    """Turns one statement tree into (kind, fields) with the tokens kept for spans."""

    @v_args(inline=True)
    def array_stmt(self, alu, ram, cap, label):
        return "array", {"alu": alu, "ram": ram, "cap": cap, "name": label}

    @v_args(inline=True)
    def cap(self, value):
        return value

    @v_args(inline=True)
    def label(self, name):
        return name

    @v_args(inline=True)
    def pae_stmt(self, name, coord, opcode, imm, inputs, outputs):
        return "pae", {"name": name, "coord": coord, "opcode": opcode, "imm": imm or [],
                       "inputs": inputs, "outputs": outputs}

    def imm(self, items):
        return [t for t in items if t is not None]

    @v_args(inline=True)
    def ram_stmt(self, name, coord, mode, loop, inputs, outputs):
        return "ram", {"name": name, "coord": coord, "mode": mode, "loop": loop is not None,
                       "inputs": inputs, "outputs": outputs}

    @v_args(inline=True)
    def coord(self, a, b):
        return a, b

    def port_list(self, items):
        return [t for t in items if t is not None]

    def preload_stmt(self, items):
        return "preload", {"name": items[0], "values": list(items[1:])}

    @v_args(inline=True)
    def connect_stmt(self, src, dst):
        return "connect", {"src": src, "dst": dst}

    @v_args(inline=True)
    def endpoint(self, elem, port):
        return elem, port

    @v_args(inline=True)
    def stream_in_stmt(self, name, endpoint):
        return "stream", {"name": name, "direction": "in", "endpoint": endpoint}

    @v_args(inline=True)
    def stream_out_stmt(self, name, endpoint):
        return "stream", {"name": name, "direction": "out", "endpoint": endpoint}

    @v_args(inline=True)
    def dma_stmt(self, name, base, l3, l2, l1, l0, region):
        return "dma", {"name": name, "base": base, "levels": [l3, l2, l1, l0], "region": region}

    @v_args(inline=True)
    def level(self, label, count, stride):
        return label, count, stride

    @v_args(inline=True)
    def region(self, lo, hi):
        return lo, hi


class _Resolver:
    """Second pass: builds the config and reports semantic problems."""

    def __init__(self):
        self.diagnostics: List[Diagnostic] = []
        self.dims: Optional[ArrayDims] = None
        self.name = ""
        self.paes: Dict[str, AluPae] = {}
        self.rams: Dict[str, RamPae] = {}
        self.preloads: Dict[str, List[int]] = {}
        self.channels: List[Channel] = []
        self.streams: Dict[str, StreamPort] = {}
        self.dma: Dict[str, List[Dma4dDescriptor]] = {}
        self.occupied: Dict[Tuple[str, int, int], str] = {}
        self.deferred: List[Tuple[str, dict, int]] = []
        self.line = 0

    # --- diagnostics ------------------------------------------------------

    def span(self, tok) -> SourceSpan:
        if isinstance(tok, Token) and tok.column is not None:
            end = tok.end_column if tok.end_column is not None else tok.column + len(tok)
            return SourceSpan(self.line, tok.column, max(end, tok.column + 1))
        return SourceSpan(self.line, 1, 2)

    def error(self, code: str, message: str, tok=None):
        self.diagnostics.append(Diagnostic("error", code, message, self.span(tok)))

    def value(self, tok: Token) -> Optional[int]:
        v = _int(tok)
        if not INT32_MIN <= v <= INT32_MAX:
            self.error("E002", f"integer {tok} outside signed 32-bit range", tok)
            return None
        return v

    # --- statements -------------------------------------------------------

    def header(self, f: dict):
        if self.dims is not None:
            self.error("E040", "duplicate array header", f["alu"])
            return
        rows, cols = (int(v) for v in str(f["alu"]).split("x"))
        sides, ram_rows = (int(v) for v in str(f["ram"]).split("x"))
        cap = self.value(f["cap"]) if f["cap"] is not None else 4096
        try:
            self.dims = ArrayDims(rows, cols, sides, ram_rows, cap if cap is not None else 4096)
        except ParameterError as e:
            self.error("E012", str(e), f["alu"])
            self.dims = ArrayDims()
        if f["name"] is not None:
            self.name = str(f["name"])

    def _place(self, kind: str, name_tok: Token, coord) -> Optional[Tuple[int, int]]:
        a_tok, b_tok = coord
        a, b = self.value(a_tok), self.value(b_tok)
        if a is None or b is None:
            return None
        dims = self.dims
        if kind == "alu":
            limits = (("row", a, dims.alu_rows, a_tok), ("column", b, dims.alu_cols, b_tok))
        else:
            limits = (("side", a, dims.ram_sides, a_tok), ("row", b, dims.ram_rows, b_tok))
        ok = True
        for label, v, hi, tok in limits:
            if not 0 <= v < hi:
                self.error("E012", f"{label} out of range ({v} not in [0, {hi}))", tok)
                ok = False
        if not ok:
            return None
        key = (kind, a, b)
        if key in self.occupied:
            self.error("E011", f"{name_tok} placed on ({a},{b}) already used by {self.occupied[key]}", a_tok)
            return None
        self.occupied[key] = str(name_tok)
        return a, b

    def _ports(self, toks: List[Token], is_input: bool, ram: bool) -> Optional[Tuple[str, ...]]:
        out = []
        for tok in toks:
            canon = canonical_port(str(tok), is_input, ram)
            if canon is None:
                self.error("E021", f"'{tok}' is not an {'input' if is_input else 'output'} port", tok)
                return None
            if canon in out:
                self.error("E021", f"port {canon} declared twice", tok)
                return None
            out.append(canon)
        return tuple(out)

    def _new_name(self, tok: Token) -> bool:
        name = str(tok)
        if name in self.paes or name in self.rams:
            self.error("E010", f"duplicate element name {name}", tok)
            return False
        return True

    def pae(self, f: dict):
        name_tok, op_tok = f["name"], f["opcode"]
        if not self._new_name(name_tok):
            return
        opcode = str(op_tok)
        if opcode not in OPCODES:
            self.error("E020", f"unknown opcode {opcode}", op_tok)
            return
        where = self._place("alu", name_tok, f["coord"])
        inputs = self._ports(f["inputs"], True, False)
        outputs = self._ports(f["outputs"], False, False)
        imm = [self.value(t) for t in f["imm"]]
        if where is None or inputs is None or outputs is None or None in imm:
            return
        problems = check_ports(OPCODES[opcode], inputs, outputs)
        for p in problems:
            self.error("E021", f"{name_tok} ({opcode}): {p}", op_tok)
        imm_problems = check_immediates(opcode, tuple(imm), inputs)
        for p in imm_problems:
            self.error("E022", f"{name_tok}: {p}", f["imm"][0] if f["imm"] else op_tok)
        if problems or imm_problems:
            return
        self.paes[str(name_tok)] = AluPae(str(name_tok), where[0], where[1], opcode, tuple(imm),
                                          inputs, outputs, span=self.span(name_tok))

    def ram(self, f: dict):
        name_tok, mode_tok = f["name"], f["mode"]
        if not self._new_name(name_tok):
            return
        mode = str(mode_tok)
        if mode not in RAM_MODES:
            self.error("E023", f"unknown RAM mode {mode}", mode_tok)
            return
        where = self._place("ram", name_tok, f["coord"])
        inputs = self._ports(f["inputs"], True, True)
        outputs = self._ports(f["outputs"], False, True)
        if where is None or inputs is None or outputs is None:
            return
        problems = check_ports(RAM_PORTS[mode], inputs, outputs)
        if f["loop"] and mode != "fifo":
            problems.append("loop applies to fifo mode only")
        for p in problems:
            self.error("E021", f"{name_tok} ({mode}): {p}", mode_tok)
        if problems:
            return
        self.rams[str(name_tok)] = RamPae(str(name_tok), where[0], where[1], mode, bool(f["loop"]),
                                          inputs, outputs, span=self.span(name_tok))

    def resolve_deferred(self):
        for kind, f, line in self.deferred:
            self.line = line
            getattr(self, f"_{kind}")(f)

    def _endpoint(self, endpoint, is_input: bool) -> Optional[Tuple[str, str]]:
        elem_tok, port_tok = endpoint
        name = str(elem_tok)
        if name not in self.paes and name not in self.rams:
            self.error("E030", f"unknown element {name}", elem_tok)
            return None
        port = canonical_port(str(port_tok), is_input, name in self.rams)
        if port is None:
            self.error("E021", f"'{port_tok}' is not an {'input' if is_input else 'output'} port of {name}", port_tok)
            return None
        return name, port

    def _connect(self, f: dict):
        src = self._endpoint(f["src"], False)
        dst = self._endpoint(f["dst"], True)
        if src and dst:
            self.channels.append(Channel(src[0], src[1], dst[0], dst[1], span=self.span(f["src"][0])))

    def _stream(self, f: dict):
        name_tok = f["name"]
        if str(name_tok) in self.streams:
            self.error("E010", f"duplicate stream name {name_tok}", name_tok)
            return
        if str(name_tok) in self.paes or str(name_tok) in self.rams:
            self.error("E010", f"stream name {name_tok} is already an element name", name_tok)
            return
        end = self._endpoint(f["endpoint"], f["direction"] == "in")
        if end:
            self.streams[str(name_tok)] = StreamPort(str(name_tok), f["direction"], end[0], end[1],
                                                     span=self.span(name_tok))

    def _preload(self, f: dict):
        name_tok = f["name"]
        if str(name_tok) not in self.rams:
            self.error("E031", f"preload target {name_tok} is not a RAM element", name_tok)
            return
        values = [self.value(t) for t in f["values"]]
        if None not in values:
            self.preloads.setdefault(str(name_tok), []).extend(values)

    def _dma(self, f: dict):
        name_tok = f["name"]
        if str(name_tok) not in self.streams:
            self.error("E031", f"dma target {name_tok} is not a stream", name_tok)
            return
        labels = [str(lv[0]) for lv in f["levels"]]
        if labels != ["l3", "l2", "l1", "l0"]:
            self.error("E001", "dma levels must be written l3 l2 l1 l0", f["levels"][0][0])
            return
        base = self.value(f["base"])
        levels = [(self.value(c), self.value(s)) for _, c, s in f["levels"]]
        region = None
        if f["region"] is not None:
            region = (self.value(f["region"][0]), self.value(f["region"][1]))
        flat = [base, *[v for lv in levels for v in lv], *(region or ())]
        if None in flat:
            return
        try:
            desc = Dma4dDescriptor(base, tuple(levels), region)
        except ParameterError as e:
            self.error("E022", str(e), f["base"])
            return
        self.dma.setdefault(str(name_tok), []).append(desc)

    def build(self) -> ArrayConfig:
        rams = [RamPae(r.name, r.side, r.row, r.mode, r.loop, r.inputs, r.outputs,
                       tuple(self.preloads.get(r.name, ())), span=r.span) for r in self.rams.values()]
        streams = [StreamPort(s.name, s.direction, s.element, s.port, tuple(self.dma.get(s.name, ())),
                              span=s.span) for s in self.streams.values()]
        return ArrayConfig(self.dims, tuple(self.paes.values()), tuple(rams), tuple(self.channels),
                           tuple(streams), self.name)


def _syntax_diagnostic(err: UnexpectedInput, line_no: int, line: str) -> Diagnostic:
    col = getattr(err, "column", None)
    if not isinstance(col, int) or col < 1:
        col = len(line.rstrip()) + 1
    tok = getattr(err, "token", None)
    width = len(str(tok)) if tok is not None and str(tok) else 1
    expected = sorted(getattr(err, "expected", None) or getattr(err, "allowed", None) or [])
    hint = f"; expected one of {', '.join(expected[:6])}" if expected else ""
    return Diagnostic("error", "E001", f"syntax error near column {col}{hint}",
                      SourceSpan(line_no, col, col + width))


def parse(text: str) -> ParseResult:
    """Parses xcfg text. Never raises for malformed input."""
    parser = _lark()
    shaper = _Line()
    resolver = _Resolver()
    syntax: List[Diagnostic] = []
    statements = []
    # only LF ends a line; CR of a CRLF pair is dropped, other separators stay in the line
    for line_no, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        try:
            kind, fields = shaper.transform(parser.parse(line))
        except UnexpectedInput as err:
            syntax.append(_syntax_diagnostic(err, line_no, line))
            continue
        statements.append((line_no, kind, fields))

    headers = [s for s in statements if s[1] == "array"]
    if headers:
        resolver.line = headers[0][0]
    for line_no, kind, fields in statements:
        resolver.line = line_no
        if kind == "array":
            resolver.header(fields)
    if resolver.dims is None:
        resolver.diagnostics.append(Diagnostic("error", "E040", "missing 'array' header line",
                                               SourceSpan(1, 1, 2)))
        resolver.dims = ArrayDims()

    for line_no, kind, fields in statements:
        resolver.line = line_no
        if kind == "pae":
            resolver.pae(fields)
        elif kind == "ram":
            resolver.ram(fields)
        elif kind in ("connect", "stream", "preload"):
            resolver.deferred.append((kind, fields, line_no))
    # streams before dma, so dma lines may reference streams declared later
    resolver.resolve_deferred()
    for line_no, kind, fields in statements:
        if kind == "dma":
            resolver.line = line_no
            resolver._dma(fields)

    diagnostics = sorted(syntax + resolver.diagnostics,
                         key=lambda d: (d.span.line if d.span else 0, d.span.col_start if d.span else 0))
    config = resolver.build() if not any(d.is_error for d in diagnostics) else None
    if diagnostics:
        logger.debug("parse produced %d diagnostic(s)", len(diagnostics))
    return ParseResult(config, diagnostics)


def load_config(path) -> ArrayConfig:
    """Reads and parses an .xcfg file; raises ConfigError on any error diagnostic."""
    text = Path(path).read_text(encoding="utf-8")
    result = parse(text)
    if not result.ok:
        raise ConfigError(f"{path} has {len(result.errors)} error(s)", result.errors)
    return result.config
