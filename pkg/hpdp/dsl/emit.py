"""Canonical xcfg text for an ArrayConfig: parse(emit(c)) == c."""

from typing import List

from hpdp.core.dims import ArrayDims
from hpdp.dsl.model import ArrayConfig

PRELOAD_PER_LINE = 16


def _ports(ports) -> str:
    return "[" + ",".join(ports) + "]"


def emit(config: ArrayConfig) -> str:
    d = config.dims
    header = f"array {d.alu_rows}x{d.alu_cols} alu {d.ram_sides}x{d.ram_rows} ram"
    if d.ram_capacity != ArrayDims().ram_capacity:
        header += f" cap {d.ram_capacity}"
    if config.name:
        header += f" name {config.name}"
    lines: List[str] = [header]

    for r in config.rams:
        loop = " loop" if r.loop else ""
        lines.append(f"ram {r.name} at ({r.side},{r.row}) mode {r.mode}{loop} "
                     f"in{_ports(r.inputs)} out{_ports(r.outputs)}")
    for r in config.rams:
        for i in range(0, len(r.preload), PRELOAD_PER_LINE):
            chunk = " ".join(str(v) for v in r.preload[i:i + PRELOAD_PER_LINE])
            lines.append(f"preload {r.name} {chunk}")
    for p in config.paes:
        imm = f" imm {','.join(str(v) for v in p.imm)}" if p.imm else ""
        lines.append(f"pae {p.name} at ({p.row},{p.col}) op {p.opcode}{imm} "
                     f"in{_ports(p.inputs)} out{_ports(p.outputs)}")
    for c in config.channels:
        lines.append(f"connect {c.src}.{c.src_port} -> {c.dst}.{c.dst_port}")
    for s in config.streams:
        arrow = "->" if s.direction == "in" else "<-"
        lines.append(f"stream {s.direction} {s.name} {arrow} {s.element}.{s.port}")
    for s in config.streams:
        for desc in s.dma:
            lines.append(f"dma {s.name} {desc.to_text()}")
    return "\n".join(lines) + "\n"
