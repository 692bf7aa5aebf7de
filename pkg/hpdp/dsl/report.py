"""
Plain-text configuration report (occupancy grid, elements, wiring).

Layout, one section after another:

    config <name>
    resources: <a>/<A> ALU, <r>/<R> RAM, <w>/<W> RAM words
    alu grid            (one row per ALU row, opcode or '.')
    ram columns         (one row per RAM row, element name or '.')
    elements            (one line per element)
    channels            (one line per channel)
    streams             (one line per stream binding)
"""

import re
from typing import Dict

from hpdp.dsl.model import ArrayConfig

_RESOURCES = re.compile(r"resources: (\d+)/(\d+) ALU, (\d+)/(\d+) RAM, (\d+)/(\d+) RAM words")


def config_report(config: ArrayConfig) -> str:
    d = config.dims
    lines = [f"config {config.name or '(unnamed)'}",
             f"resources: {config.alu_used}/{d.alu_count} ALU, {config.ram_used}/{d.ram_count} RAM, "
             f"{config.ram_words_used}/{d.ram_count * d.ram_capacity} RAM words"]

    cells = {(p.row, p.col): p.opcode for p in config.paes}
    width = max([9] + [len(op) + 1 for op in cells.values()])
    lines.append("alu grid:")
    lines.append("    " + "".join(f"{c:<{width}}" for c in range(d.alu_cols)).rstrip())
    for r in range(d.alu_rows):
        row = "".join(f"{cells.get((r, c), '.'):<{width}}" for c in range(d.alu_cols))
        lines.append(f"{r:>3} {row}".rstrip())

    rams = {(m.side, m.row): m.name for m in config.rams}
    lines.append("ram columns:")
    lines.append("    " + "".join(f"side{s:<8}" for s in range(d.ram_sides)).rstrip())
    for r in range(d.ram_rows):
        row = "".join(f"{rams.get((s, r), '.'):<12}" for s in range(d.ram_sides))
        lines.append(f"{r:>3} {row}".rstrip())

    lines.append("elements:")
    for p in config.paes:
        imm = f" imm={','.join(str(v) for v in p.imm)}" if p.imm else ""
        lines.append(f"  {p.name} ({p.row},{p.col}) {p.opcode}{imm} in={','.join(p.inputs) or '-'} "
                     f"out={','.join(p.outputs) or '-'}")
    for m in config.rams:
        loop = " loop" if m.loop else ""
        lines.append(f"  {m.name} ram({m.side},{m.row}) {m.mode}{loop} words={len(m.preload)}")
    lines.append(f"channels: {len(config.channels)}")
    for c in config.channels:
        lines.append(f"  {c.src}.{c.src_port} -> {c.dst}.{c.dst_port}")
    lines.append(f"streams: {len(config.streams)}")
    for s in config.streams:
        arrow = "->" if s.direction == "in" else "<-"
        dma = f" dma={len(s.dma)}" if s.dma else ""
        lines.append(f"  {s.direction} {s.name} {arrow} {s.element}.{s.port}{dma}")
    return "\n".join(lines) + "\n"


def parse_resource_counts(report: str) -> Dict[str, int]:
    """Reads the resource line of a report back into numbers."""
    m = _RESOURCES.search(report)
    if m is None:
        raise ValueError("no resource line in report")
    a, at, r, rt, w, wt = (int(v) for v in m.groups())
    return {"alu_used": a, "alu_total": at, "ram_used": r, "ram_total": rt,
            "ram_words_used": w, "ram_words_total": wt}
