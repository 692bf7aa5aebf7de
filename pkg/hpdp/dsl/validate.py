"""
HPDP Dataflow Lab - Configuration Validator
===========================================
Version: 1.0.0
Status: PRODUCTION
Role: Checks a parsed (or programmatically built) config against the array's
resources and the wiring rules. Returns diagnostics, never raises.
"""

from collections import defaultdict, deque
from typing import Dict, List, Set, Tuple

from hpdp.core.isa import OPCODES, RAM_MODES, RAM_PORTS, check_immediates, check_ports
from hpdp.dsl.model import AluPae, ArrayConfig, Diagnostic, RamPae


def _diag(out: List[Diagnostic], severity: str, code: str, message: str, span=None):
    out.append(Diagnostic(severity, code, message, span))


def _check_elements(config: ArrayConfig, out: List[Diagnostic]) -> None:
    dims = config.dims
    names: Set[str] = set()
    cells: Dict[Tuple[str, int, int], str] = {}
    for el in config.elements():
        if el.name in names:
            _diag(out, "error", "E010", f"duplicate element name {el.name}", el.span)
        names.add(el.name)
        if isinstance(el, AluPae):
            key, bounds = ("alu", el.row, el.col), ((el.row, dims.alu_rows, "row"), (el.col, dims.alu_cols, "column"))
            if el.opcode not in OPCODES:
                _diag(out, "error", "E020", f"{el.name}: unknown opcode {el.opcode}", el.span)
                continue
            for p in check_ports(OPCODES[el.opcode], el.inputs, el.outputs):
                _diag(out, "error", "E021", f"{el.name} ({el.opcode}): {p}", el.span)
            for p in check_immediates(el.opcode, el.imm, el.inputs):
                _diag(out, "error", "E022", f"{el.name}: {p}", el.span)
        else:
            key, bounds = ("ram", el.side, el.row), ((el.side, dims.ram_sides, "side"), (el.row, dims.ram_rows, "row"))
            if el.mode not in RAM_MODES:
                _diag(out, "error", "E023", f"{el.name}: unknown RAM mode {el.mode}", el.span)
                continue
            for p in check_ports(RAM_PORTS[el.mode], el.inputs, el.outputs):
                _diag(out, "error", "E021", f"{el.name} ({el.mode}): {p}", el.span)
            if len(el.preload) > dims.ram_capacity:
                _diag(out, "error", "E105",
                      f"{el.name}: preload of {len(el.preload)} words exceeds capacity {dims.ram_capacity}", el.span)
        for value, limit, label in bounds:
            if not 0 <= value < limit:
                _diag(out, "error", "E012", f"{el.name}: {label} out of range ({value} not in [0, {limit}))", el.span)
        if key in cells:
            _diag(out, "error", "E011", f"{el.name} shares {key[1:]} with {cells[key]}", el.span)
        cells[key] = el.name


def validate(config: ArrayConfig) -> List[Diagnostic]:
    out: List[Diagnostic] = []
    dims = config.dims

    if config.alu_used > dims.alu_count:
        _diag(out, "error", "E100", f"{config.alu_used} ALU elements used, array has {dims.alu_count}")
    if config.ram_used > dims.ram_count:
        _diag(out, "error", "E101", f"{config.ram_used} RAM elements used, array has {dims.ram_count}")
    _check_elements(config, out)

    elements = config.element_map()
    drivers: Dict[Tuple[str, str], List[str]] = defaultdict(list)
    consumers: Dict[Tuple[str, str], List[str]] = defaultdict(list)
    edges: Dict[str, Set[str]] = defaultdict(set)

    def endpoint_ok(name: str, port: str, is_input: bool, label: str, span) -> bool:
        el = elements.get(name)
        if el is None:
            _diag(out, "error", "E030", f"{label}: unknown element {name}", span)
            return False
        declared = el.inputs if is_input else el.outputs
        if port not in declared:
            _diag(out, "error", "E104", f"{label}: {name}.{port} is not a declared port", span)
            return False
        return True

    for ch in config.channels:
        label = f"{ch.src}.{ch.src_port} -> {ch.dst}.{ch.dst_port}"
        src_ok = endpoint_ok(ch.src, ch.src_port, False, label, ch.span)
        dst_ok = endpoint_ok(ch.dst, ch.dst_port, True, label, ch.span)
        if src_ok:
            consumers[(ch.src, ch.src_port)].append(f"{ch.dst}.{ch.dst_port}")
        if dst_ok:
            drivers[(ch.dst, ch.dst_port)].append(f"{ch.src}.{ch.src_port}")
        if src_ok and dst_ok:
            edges[ch.src].add(ch.dst)

    roots: Set[str] = set()
    stream_names: Set[str] = set()
    for st in config.streams:
        if st.name in stream_names:
            _diag(out, "error", "E010", f"duplicate stream name {st.name}", st.span)
        elif st.name in elements:
            _diag(out, "error", "E010", f"stream name {st.name} is already an element name", st.span)
        stream_names.add(st.name)
        is_input = st.direction == "in"
        if endpoint_ok(st.element, st.port, is_input, f"stream {st.name}", st.span):
            if is_input:
                drivers[(st.element, st.port)].append(f"{st.name}.stream")
                roots.add(st.element)
            else:
                consumers[(st.element, st.port)].append(f"{st.name}.stream")

    for el in config.elements():
        for port in el.inputs:
            src = drivers.get((el.name, port), [])
            if not src:
                _diag(out, "error", "E102", f"undriven input {el.name}.{port}", el.span)
            elif len(src) > 1:
                _diag(out, "error", "E103", f"{el.name}.{port} has multiple drivers: {', '.join(src)}", el.span)
        for port in el.outputs:
            dst = consumers.get((el.name, port), [])
            if not dst:
                _diag(out, "warning", "W110", f"unused output {el.name}.{port}", el.span)
            elif len(dst) > 1:
                _diag(out, "error", "E106", f"{el.name}.{port} fans out to {', '.join(dst)}; use a dup element",
                      el.span)
        if isinstance(el, AluPae) and el.opcode in ("const", "counter"):
            roots.add(el.name)
        if isinstance(el, RamPae) and el.preload:
            roots.add(el.name)

    seen = set(roots)
    queue = deque(sorted(roots))
    while queue:
        for nxt in sorted(edges[queue.popleft()]):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    for el in config.elements():
        if el.name not in seen:
            _diag(out, "warning", "W111", f"{el.name} is unreachable from any input stream or source", el.span)
    return out


def errors_only(diagnostics: List[Diagnostic]) -> List[Diagnostic]:
    return [d for d in diagnostics if d.is_error]
