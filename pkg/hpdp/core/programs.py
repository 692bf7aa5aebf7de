"""
HPDP Dataflow Lab - Bring-up Programs
=====================================
Version: 1.0.0
Status: PRODUCTION
Role: Small hand-written xcfg programs used to exercise one opcode or
pattern at a time (`bench trace --program <name>`).

Every program reads host words from stream `in` (and `in1` where two
operands are needed) and writes results to stream `out`.
"""

import logging
from typing import Callable, Dict, List

from hpdp.dsl.model import ArrayConfig
from hpdp.dsl.parser import parse
from hpdp.errors import ConfigError, ParameterError

logger = logging.getLogger("core.programs")

HEADER = "array 5x8 alu 2x8 ram name {name}\n"


def route_chain(hops: int = 1) -> str:
    if not 1 <= hops <= 40:
        raise ParameterError(f"a route chain needs 1..40 hops, got {hops}")
    lines = [HEADER.format(name=f"route_chain_{hops}")]
    for i in range(hops):
        row, col = divmod(i, 8)
        lines.append(f"pae r{i} at ({row},{col}) op route in[in0] out[out0]\n")
    for i in range(hops - 1):
        lines.append(f"connect r{i}.out0 -> r{i + 1}.in0\n")
    lines.append("stream in in -> r0.in0\n")
    lines.append(f"stream out out <- r{hops - 1}.out0\n")
    return "".join(lines)


def adder() -> str:
    return HEADER.format(name="adder") + """\
pae sum at (0,0) op add in[in0,in1] out[out0]
stream in in -> sum.in0
stream in in1 -> sum.in1
stream out out <- sum.out0
"""


def wide_multiply() -> str:
    """64-bit product split into two streams, low word on `out`, high word on `hi`."""
    return HEADER.format(name="wide_multiply") + """\
pae prod at (0,0) op mul in[in0,in1] out[out0,out1]
stream in in -> prod.in0
stream in in1 -> prod.in1
stream out out <- prod.out0
stream out hi <- prod.out1
"""


def dot_product(words: int = 4) -> str:
    """Packed int8 dot product of `words` host words against stream in1."""
    return HEADER.format(name="dot_product") + f"""\
pae acc at (0,0) op mac imm {words},0 in[in0,in1] out[out0]
stream in in -> acc.in0
stream in in1 -> acc.in1
stream out out <- acc.out0
"""


def requant_chain(m0: int = 1 << 30, shift: int = 0, z_out: int = 0) -> str:
    """acc * M0 >> (31 + shift), rounded, + z_out, clamped to int8."""
    return HEADER.format(name="requant_chain") + f"""\
ram m0 at (0,0) mode fifo loop in[] out[out0]
ram sh at (0,1) mode fifo loop in[] out[out0]
preload m0 {m0}
preload sh {31 + shift}
pae rq_mul at (0,0) op mul in[in0,in1] out[out0,out1]
pae rq_shr at (0,1) op shr_round in[in0,in1,in2] out[out0]
pae rq_zp at (0,2) op add imm {z_out} in[in0] out[out0]
pae rq_clamp at (0,3) op clamp imm -128,127 in[in0] out[out0]
connect m0.out0 -> rq_mul.in1
connect sh.out0 -> rq_shr.in2
connect rq_mul.out1 -> rq_shr.in0
connect rq_mul.out0 -> rq_shr.in1
connect rq_shr.out0 -> rq_zp.in0
connect rq_zp.out0 -> rq_clamp.in0
stream in in -> rq_mul.in0
stream out out <- rq_clamp.out0
"""


def counter_loop(limit: int = 8) -> str:
    """Counter feeding a RAM read port: replays a preloaded table."""
    return HEADER.format(name="table_replay") + f"""\
ram table at (0,0) mode ram in[in1] out[out0]
preload table {" ".join(str(i * i) for i in range(limit))}
pae idx at (0,0) op counter imm {limit},{limit} in[] out[out0]
connect idx.out0 -> table.in1
stream out out <- table.out0
"""


PROGRAMS: Dict[str, Callable[..., str]] = {
    "route": route_chain,
    "route_chain": route_chain,
    "add": adder,
    "mul": wide_multiply,
    "mac": dot_product,
    "requant": requant_chain,
    "table": counter_loop,
}


def program_names() -> List[str]:
    return sorted(PROGRAMS)


def load_program(name: str, **params) -> ArrayConfig:
    """Builds a bring-up program's config; `params` go to its text builder."""
    try:
        builder = PROGRAMS[name]
    except KeyError:
        raise ParameterError(f"unknown program {name!r}; choose from {', '.join(program_names())}") from None
    result = parse(builder(**params))
    if not result.ok:
        raise ConfigError(f"program {name} does not parse", result.errors)
    logger.debug("loaded program %s (%d ALU, %d RAM)", name, result.config.alu_used, result.config.ram_used)
    return result.config
