"""
HPDP Dataflow Lab - ALU Instruction Set
=======================================
Version: 1.0.0
Status: PRODUCTION
Role: Port arity, immediate rules and port aliases for every element kind.

Ports are canonical `in0..in2` / `out0..out1`. Compass names and RAM
mnemonics are accepted as aliases and normalized on parse.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

ALU_INPUTS = ("in0", "in1", "in2")
ALU_OUTPUTS = ("out0", "out1")

INPUT_ALIASES = {"w0": "in0", "n0": "in1", "s0": "in2"}
OUTPUT_ALIASES = {"e0": "out0", "e1": "out1"}
RAM_ALIASES = {"din": "in0", "addr": "in1", "dout": "out0"}

RAM_MODES = ("fifo", "ram")


@dataclass(frozen=True)
class OpSpec:
    required_in: Tuple[str, ...]
    optional_in: Tuple[str, ...]
    required_out: Tuple[str, ...]
    optional_out: Tuple[str, ...]
    max_imm: int

    @property
    def inputs(self) -> Tuple[str, ...]:
        return self.required_in + self.optional_in

    @property
    def outputs(self) -> Tuple[str, ...]:
        return self.required_out + self.optional_out


OPCODES: Dict[str, OpSpec] = {
    "const":     OpSpec((), (), ("out0",), (), 2),
    "counter":   OpSpec((), (), ("out0",), (), 2),
    "route":     OpSpec(("in0",), (), ("out0",), (), 0),
    "add":       OpSpec(("in0",), ("in1",), ("out0",), (), 1),
    "sub":       OpSpec(("in0",), ("in1",), ("out0",), (), 1),
    "mul":       OpSpec(("in0",), ("in1",), ("out0",), ("out1",), 1),
    "mac":       OpSpec(("in0", "in1"), (), ("out0",), ("out1",), 2),
    "shl":       OpSpec(("in0",), ("in1",), ("out0",), (), 1),
    "shr_round": OpSpec(("in0",), ("in1", "in2"), ("out0",), (), 1),
    "clamp":     OpSpec(("in0",), (), ("out0",), (), 2),
    "mux":       OpSpec(("in0", "in1"), ("in2",), ("out0",), (), 2),
    "dup":       OpSpec(("in0",), (), ("out0", "out1"), (), 0),
}

RAM_PORTS: Dict[str, OpSpec] = {
    "fifo": OpSpec((), ("in0",), (), ("out0",), 0),
    "ram":  OpSpec(("in1",), ("in0",), (), ("out0",), 0),
}


def canonical_port(port: str, is_input: bool, ram: bool = False) -> Optional[str]:
    """Maps an alias to its canonical name; None if the name is not a port at all."""
    if ram and port in RAM_ALIASES:
        canon = RAM_ALIASES[port]
        return canon if canon.startswith("in") == is_input else None
    aliases = INPUT_ALIASES if is_input else OUTPUT_ALIASES
    port = aliases.get(port, port)
    legal = ALU_INPUTS if is_input else ALU_OUTPUTS
    return port if port in legal else None


def port_index(port: str) -> int:
    return int(port[-1])


def check_ports(spec: OpSpec, inputs: Tuple[str, ...], outputs: Tuple[str, ...]) -> List[str]:
    """Arity problems for a declared port set (empty list when legal)."""
    problems = []
    for port in inputs:
        if port not in spec.inputs:
            problems.append(f"input {port} not available")
    for port in outputs:
        if port not in spec.outputs:
            problems.append(f"output {port} not available")
    for port in spec.required_in:
        if port not in inputs:
            problems.append(f"requires input {port}")
    for port in spec.required_out:
        if port not in outputs:
            problems.append(f"requires output {port}")
    return problems


def check_immediates(opcode: str, imm: Tuple[int, ...], inputs: Tuple[str, ...]) -> List[str]:
    spec = OPCODES[opcode]
    if len(imm) > spec.max_imm:
        return [f"{opcode} takes at most {spec.max_imm} immediates, got {len(imm)}"]
    problems = []
    if opcode == "clamp":
        if len(imm) != 2:
            problems.append("clamp needs imm lo,hi")
        elif imm[0] > imm[1]:
            problems.append(f"clamp bounds {imm[0]} > {imm[1]}")
    elif opcode == "mac":
        if imm and imm[0] < 1:
            problems.append("mac firings per result must be >= 1")
    elif opcode == "mux" and "in2" not in inputs:
        if len(imm) != 2 or imm[0] < 0 or imm[1] < 0 or imm[0] + imm[1] == 0:
            problems.append("self-sequenced mux needs imm n0,n1 >= 0 with n0+n1 > 0")
    elif opcode in ("const", "counter"):
        if len(imm) > 1 and imm[1] < 0:
            problems.append(f"{opcode} count must be >= 0")
        if opcode == "counter" and imm and imm[0] < 0:
            problems.append("counter wrap must be >= 0")
    elif opcode == "shl" and "in1" not in inputs and imm and imm[0] < 0:
        problems.append("shift must be >= 0")
    elif opcode == "shr_round" and "in2" not in inputs and imm and not 0 <= imm[0] <= 63:
        problems.append("shift must be in [0, 63]")
    return problems
