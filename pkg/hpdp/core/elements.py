"""
HPDP Dataflow Lab - Element Semantics
=====================================
Version: 1.0.0
Status: PRODUCTION
Role: What each ALU/RAM element does in one firing.

Every element answers plan() with the channels it would read and the
(channel, value) pairs it would write, or None when its inputs are not
ready. plan() keeps any state change aside; commit() applies it once the
scheduler has decided the element fires. Nothing here knows about cycles.
"""

from collections import deque
from typing import Dict, List, Optional, Tuple

from hpdp.dsl.model import AluPae, RamPae
from hpdp.errors import SimulationError
from hpdp.quant.requant import rounding_shift
from hpdp.utils.words import lane_dot, sat32, wrap32

Plan = Tuple[Tuple["ChannelRegister", ...], Tuple[Tuple["ChannelRegister", int], ...]]


class ChannelRegister:
    """Capacity-1 handshake register between an output port and an input port."""

    __slots__ = ("src", "src_port", "dst", "dst_port", "valid", "value", "consumed",
                 "sink", "produced", "taken", "src_label", "dst_label")

    def __init__(self, src: str, src_port: str, dst: str, dst_port: str, sink: Optional[list] = None):
        self.src, self.src_port, self.dst, self.dst_port = src, src_port, dst, dst_port
        self.valid = False
        self.value = 0
        self.consumed = False
        self.sink = sink          # output stream queue: writes land there directly
        self.produced = 0
        self.taken = 0
        self.src_label = f"{src}.{src_port}"
        self.dst_label = f"{dst}.{dst_port}"


class Element:
    kind = "alu"

    def __init__(self, name: str, sort_key: tuple):
        self.name = name
        self.sort_key = sort_key
        self.inputs: Dict[str, ChannelRegister] = {}
        self.outputs: Dict[str, ChannelRegister] = {}
        self.firings = 0
        self.stalls = 0
        self._next = None

    def plan(self) -> Optional[Plan]:
        raise NotImplementedError

    def plan_fallback(self) -> Optional[Plan]:
        return None

    def commit(self) -> None:
        pass

    def has_valid_input(self) -> bool:
        for ch in self.inputs.values():
            if ch.valid:
                return True
        return False

    def _out(self, port: str, value: int):
        ch = self.outputs.get(port)
        return () if ch is None else ((ch, value),)

    def snapshot(self) -> dict:
        return {}


# --- ALU elements ----------------------------------------------------------

class AluElement(Element):
    def __init__(self, pae: AluPae):
        super().__init__(pae.name, (0, pae.row, pae.col))
        self.pae = pae
        self.opcode = pae.opcode
        self.imm0 = pae.immediate(0, 0)
        self.imm1 = pae.immediate(1, 0)


class ConstElement(AluElement):
    def __init__(self, pae: AluPae):
        super().__init__(pae)
        self.limit = pae.immediate(1, 1)     # 0 = unbounded
        self.emitted = 0

    def plan(self):
        if self.limit and self.emitted >= self.limit:
            return None
        return (), self._out("out0", self.imm0)

    def commit(self):
        self.emitted += 1


class CounterElement(AluElement):
    def __init__(self, pae: AluPae):
        super().__init__(pae)
        self.limit = pae.immediate(1, 0)
        self.emitted = 0
        self.value = 0

    def plan(self):
        if self.limit and self.emitted >= self.limit:
            return None
        return (), self._out("out0", self.value)

    def commit(self):
        self.emitted += 1
        nxt = self.value + 1
        self.value = nxt % self.imm0 if self.imm0 else wrap32(nxt)


class UnaryElement(AluElement):
    """route / clamp / dup: one input, result on out0 (and out1 for dup)."""

    def plan(self):
        a = self.inputs["in0"]
        if not a.valid:
            return None
        v = a.value
        if self.opcode == "clamp":
            v = min(max(v, self.imm0), self.imm1)
        writes = self._out("out0", v)
        if self.opcode == "dup":
            writes += self._out("out1", v)
        return (a,), writes


class BinaryElement(AluElement):
    """add / sub / shl: in0 op (in1 or imm0)."""

    def plan(self):
        a = self.inputs["in0"]
        b = self.inputs.get("in1")
        if not a.valid or (b is not None and not b.valid):
            return None
        rhs = b.value if b is not None else self.imm0
        if self.opcode == "add":
            v = sat32(a.value + rhs)
        elif self.opcode == "sub":
            v = sat32(a.value - rhs)
        else:
            if rhs < 0:
                raise SimulationError(f"{self.name}: negative shift {rhs}")
            v = wrap32(a.value << rhs)
        reads = (a,) if b is None else (a, b)
        return reads, self._out("out0", v)


class MulElement(AluElement):
    """64-bit product: out0 = low word, out1 = high word."""

    def plan(self):
        a = self.inputs["in0"]
        b = self.inputs.get("in1")
        if not a.valid or (b is not None and not b.valid):
            return None
        product = a.value * (b.value if b is not None else self.imm0)
        reads = (a,) if b is None else (a, b)
        return reads, self._out("out0", wrap32(product)) + self._out("out1", product >> 32)


class MacElement(AluElement):
    """Packed 4x int8 dot product into a wrapping int32 accumulator.

    Emits after imm0 firings and restarts from imm1; out1 forwards in0 so
    mac elements chain systolically.
    """

    def __init__(self, pae: AluPae):
        super().__init__(pae)
        self.per_result = pae.immediate(0, 1)
        self.initial = pae.immediate(1, 0)
        self.acc = self.initial
        self.count = 0

    def plan(self):
        a = self.inputs["in0"]
        b = self.inputs["in1"]
        if not (a.valid and b.valid):
            return None
        acc = wrap32(self.acc + lane_dot(a.value, b.value))
        count = self.count + 1
        forward = self._out("out1", a.value)
        if count == self.per_result:
            self._next = (self.initial, 0)
            return (a, b), self._out("out0", acc) + forward
        self._next = (acc, count)
        return (a, b), forward

    def commit(self):
        self.acc, self.count = self._next

    def snapshot(self):
        return {"acc": self.acc, "count": self.count}


class ShrRoundElement(AluElement):
    """value (in0, or in0:in1 as high:low) shifted right with round-half-away, saturated."""

    def plan(self):
        hi = self.inputs["in0"]
        lo = self.inputs.get("in1")
        sh = self.inputs.get("in2")
        reads = [hi]
        if not hi.valid:
            return None
        if lo is not None:
            if not lo.valid:
                return None
            reads.append(lo)
            value = (hi.value << 32) | (lo.value & 0xFFFFFFFF)
        else:
            value = hi.value
        if sh is not None:
            if not sh.valid:
                return None
            reads.append(sh)
            shift = sh.value
        else:
            shift = self.imm0
        if not 0 <= shift <= 63:
            raise SimulationError(f"{self.name}: shift {shift} outside [0, 63]")
        return tuple(reads), self._out("out0", sat32(rounding_shift(value, shift)))


class MuxElement(AluElement):
    """Select mode (in2 connected) or self-sequenced merge of imm0 from in0 then imm1 from in1."""

    def __init__(self, pae: AluPae):
        super().__init__(pae)
        self.phase = 0

    def plan(self):
        sel = self.inputs.get("in2")
        if sel is not None:
            if not sel.valid:
                return None
            src = self.inputs["in1" if sel.value else "in0"]
            if not src.valid:
                return None
            return (sel, src), self._out("out0", src.value)
        src = self.inputs["in0" if self.phase < self.imm0 else "in1"]
        if not src.valid:
            return None
        return (src,), self._out("out0", src.value)

    def commit(self):
        if "in2" not in self.inputs:
            self.phase = (self.phase + 1) % (self.imm0 + self.imm1)

    def snapshot(self):
        return {"phase": self.phase}


ALU_CLASSES = {
    "const": ConstElement, "counter": CounterElement,
    "route": UnaryElement, "clamp": UnaryElement, "dup": UnaryElement,
    "add": BinaryElement, "sub": BinaryElement, "shl": BinaryElement,
    "mul": MulElement, "mac": MacElement, "shr_round": ShrRoundElement, "mux": MuxElement,
}


def make_alu(pae: AluPae) -> AluElement:
    return ALU_CLASSES[pae.opcode](pae)


# --- RAM elements ----------------------------------------------------------

class RamElement(Element):
    kind = "ram"

    def __init__(self, ram: RamPae, capacity: int):
        super().__init__(ram.name, (1, ram.side, ram.row))
        self.mode = ram.mode
        self.loop = ram.loop
        self.capacity = capacity
        if ram.mode == "fifo":
            self.fifo = deque(ram.preload)
            self.memory: List[int] = []
        else:
            self.fifo = deque()
            self.memory = list(ram.preload) + [0] * (capacity - len(ram.preload))

    def load(self, words, offset: int = 0) -> None:
        words = list(words)
        if self.mode == "fifo":
            if len(self.fifo) + len(words) > self.capacity:
                raise SimulationError(f"{self.name}: fifo preload of {len(words)} words overflows {self.capacity}")
            self.fifo.extend(words)
            return
        if offset < 0 or offset + len(words) > self.capacity:
            raise SimulationError(f"{self.name}: preload [{offset}, {offset + len(words)}) "
                                  f"outside capacity {self.capacity}")
        self.memory[offset:offset + len(words)] = words

    def plan(self):
        if self.mode == "ram":
            return self._plan_ram()
        return self._plan_fifo(read=True)

    def plan_fallback(self):
        if self.mode == "fifo":
            return self._plan_fifo(read=False)
        return None

    def _plan_fifo(self, read: bool):
        din = self.inputs.get("in0")
        dout = self.outputs.get("out0")
        pop = read and dout is not None and len(self.fifo) > 0
        free = self.capacity - len(self.fifo) + (1 if pop and not self.loop else 0)
        push = din is not None and din.valid and free > 0
        if not pop and not push:
            return None
        self._next = (pop, din.value if push else None)
        reads = (din,) if push else ()
        writes = ((dout, self.fifo[0]),) if pop else ()
        return reads, writes

    def _plan_ram(self):
        addr = self.inputs["in1"]
        din = self.inputs.get("in0")
        if not addr.valid or (din is not None and not din.valid):
            return None
        a = addr.value
        if not 0 <= a < self.capacity:
            raise SimulationError(f"{self.name}: address {a} outside [0, {self.capacity})")
        self._next = (a, din.value if din is not None else None)
        reads = (addr,) if din is None else (addr, din)
        return reads, self._out("out0", self.memory[a])

    def commit(self):
        if self.mode == "fifo":
            pop, pushed = self._next
            if pop:
                word = self.fifo.popleft()
                if self.loop:
                    self.fifo.append(word)
            if pushed is not None:
                self.fifo.append(pushed)
        else:
            a, value = self._next
            if value is not None:
                self.memory[a] = value

    def snapshot(self):
        if self.mode == "fifo":
            return {"occupancy": len(self.fifo)}
        return {}


# --- host stream source ----------------------------------------------------

class StreamSource(Element):
    kind = "stream"

    def __init__(self, name: str):
        super().__init__(name, (2, name))
        self.queue: deque = deque()
        self.injected = 0

    def plan(self):
        if not self.queue:
            return None
        return (), self._out("out0", self.queue[0])

    def commit(self):
        self.queue.popleft()
        self.injected += 1
