"""
HPDP Dataflow Lab - Dataflow Simulator
======================================
Version: 1.0.0
Status: PRODUCTION
Role: Cycle-stepped execution of an ArrayConfig.

Firing rule (one global cycle):
  1. Decide. An element fires when the inputs its next firing needs are
     valid and every channel it will write is empty, or is being read by
     its consumer in this same cycle. Elements are visited consumers-first,
     so one pass settles an acyclic array; cyclic wiring repeats the pass
     until nothing changes.
  2. Commit. Every read channel is cleared, then every result is latched.
     Writes into an output stream go straight to the host queue.

Only cycles in which something fired are counted. A packet injected by
the host at cycle t therefore leaves a single route element at t+1.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from hpdp.core.elements import ChannelRegister, Element, RamElement, StreamSource, make_alu
from hpdp.core.report import SimReport
from hpdp.core.isa import port_index
from hpdp.dsl.model import ArrayConfig
from hpdp.dsl.validate import validate
from hpdp.errors import (ConfigError, DeadlockError, HandshakeViolation, ResourceError, SimulationError,
                         SimulationTimeout, TraceDisabledError)
from hpdp.settings import DEFAULT_CLOCK_HZ

logger = logging.getLogger("core.simulator")


@dataclass(frozen=True)
class CycleSummary:
    cycle: int
    fired: Tuple[str, ...]
    transfers: int

    @property
    def idle(self) -> bool:
        return not self.fired


def build_array(config: ArrayConfig, trace: bool = False, clock_hz: int = DEFAULT_CLOCK_HZ) -> "Simulator":
    """Validates the config and returns a simulator at cycle 0."""
    errors = [d for d in validate(config) if d.is_error]
    if errors:
        if any(d.code in ("E100", "E101") for d in errors):
            raise ResourceError("configuration exceeds array resources", errors)
        raise ConfigError("configuration is not valid", errors)
    return Simulator(config, trace=trace, clock_hz=clock_hz)


class Simulator:
    def __init__(self, config: ArrayConfig, trace: bool = False, clock_hz: int = DEFAULT_CLOCK_HZ):
        self.config = config
        self.clock_hz = clock_hz
        self.tracing = trace
        self.cycle = 0
        self._trace: List[Tuple[int, tuple, str]] = []
        self._fired_log: List[Tuple[int, str]] = []
        self._drained: Dict[str, int] = defaultdict(int)

        self.elements: Dict[str, Element] = {}
        for pae in config.paes:
            self.elements[pae.name] = make_alu(pae)
        for ram in config.rams:
            self.elements[ram.name] = RamElement(ram, config.dims.ram_capacity)
        self.active = len(self.elements)

        self.sources: Dict[str, StreamSource] = {}
        self.sinks: Dict[str, list] = {}
        self.channels: List[ChannelRegister] = []

        for ch in config.channels:
            reg = ChannelRegister(ch.src, ch.src_port, ch.dst, ch.dst_port)
            self.elements[ch.src].outputs[ch.src_port] = reg
            self.elements[ch.dst].inputs[ch.dst_port] = reg
            self.channels.append(reg)
        for st in config.streams:
            if st.direction == "in":
                src = StreamSource(st.name)
                reg = ChannelRegister(st.name, "stream", st.element, st.port)
                src.outputs["out0"] = reg
                self.elements[st.element].inputs[st.port] = reg
                self.sources[st.name] = src
            else:
                queue: list = []
                reg = ChannelRegister(st.element, st.port, st.name, "stream", sink=queue)
                self.elements[st.element].outputs[st.port] = reg
                self.sinks[st.name] = queue
            self.channels.append(reg)

        self._order, self._cyclic = self._schedule_order()
        logger.debug("built %s: %d elements, %d channels, cyclic=%s",
                     config.name or "config", self.active, len(self.channels), self._cyclic)

    # --- setup ------------------------------------------------------------

    def _schedule_order(self) -> Tuple[List[Element], bool]:
        """Reverse topological order (consumers first); cycles appended at the end."""
        nodes = list(self.sources.values()) + sorted(
            self.elements.values(), key=lambda e: e.sort_key)
        # keyed by (kind, name): a stream may share its name with an element
        def key(n) -> Tuple[str, str]:
            return ("stream" if isinstance(n, StreamSource) else "element", n.name)

        succ: Dict[Tuple[str, str], set] = defaultdict(set)
        indeg = {key(n): 0 for n in nodes}
        for n in nodes:
            for ch in n.outputs.values():
                dst = ("element", ch.dst)
                if ch.sink is None and dst in indeg and dst not in succ[key(n)]:
                    succ[key(n)].add(dst)
                    indeg[dst] += 1
        by_key = {key(n): n for n in nodes}
        ready = [key(n) for n in nodes if indeg[key(n)] == 0]
        topo: List[Tuple[str, str]] = []
        while ready:
            k = ready.pop(0)
            topo.append(k)
            for nxt in sorted(succ[k], key=lambda m: by_key[m].sort_key):
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    ready.append(nxt)
        cyclic = len(topo) < len(nodes)
        done = set(topo)
        rest = [key(n) for n in nodes if key(n) not in done]
        order = [by_key[k] for k in reversed(topo)] + [by_key[k] for k in rest]
        return order, cyclic

    def feed(self, stream: str, words: Iterable[int]) -> None:
        """Queues host packets on an input stream."""
        if stream not in self.sources:
            raise SimulationError(f"no input stream named {stream}")
        self.sources[stream].queue.extend(int(w) for w in words)

    def preload(self, ram: str, words: Sequence[int], offset: int = 0) -> None:
        """Host write into a RAM element before (or between) runs."""
        el = self.elements.get(ram)
        if not isinstance(el, RamElement):
            raise SimulationError(f"{ram} is not a RAM element")
        el.load(words, offset)

    def drain(self, stream: str) -> List[int]:
        """Returns and clears the packets collected on an output stream."""
        if stream not in self.sinks:
            raise SimulationError(f"no output stream named {stream}")
        packets = list(self.sinks[stream])
        self.sinks[stream].clear()
        self._drained[stream] += len(packets)
        return packets

    def output(self, stream: str) -> List[int]:
        return list(self.sinks[stream])

    # --- stepping ---------------------------------------------------------

    @staticmethod
    def _writable(writes) -> bool:
        for ch, _ in writes:
            if ch.valid and not ch.consumed and ch.sink is None:
                return False
        return True

    def _decide(self):
        fired = []
        decided = set()
        blocked: set = set()
        while True:
            changed = False
            for el in self._order:
                if el in decided:
                    continue
                plan = el.plan()
                if plan is not None and not self._writable(plan[1]):
                    plan = el.plan_fallback()
                    if plan is not None and not self._writable(plan[1]):
                        plan = None
                    if plan is None:
                        blocked.add(el)
                if plan is None:
                    continue
                reads, writes = plan
                for ch in reads:
                    ch.consumed = True
                fired.append((el, reads, writes))
                decided.add(el)
                blocked.discard(el)
                changed = True
            if not self._cyclic or not changed:
                break
        return fired, blocked

    def step(self) -> CycleSummary:
        fired, blocked = self._decide()
        if not fired:
            return CycleSummary(self.cycle, (), 0)
        self.cycle += 1
        cycle = self.cycle

        for _, reads, _ in fired:
            for ch in reads:
                if not ch.valid:
                    raise HandshakeViolation(f"cycle {cycle}: read of empty channel {ch.src_label} -> {ch.dst_label}")
                ch.valid = False
                ch.consumed = False
                ch.taken += 1
        transfers = 0
        names = []
        for el, _, writes in fired:
            el.commit()
            el.firings += 1
            names.append(el.name)
            for ch, value in writes:
                ch.produced += 1
                transfers += 1
                if ch.sink is not None:
                    ch.sink.append(value)
                    ch.taken += 1
                elif ch.valid:
                    raise HandshakeViolation(f"cycle {cycle}: overwrite of full channel {ch.src_label} -> {ch.dst_label}")
                else:
                    ch.valid = True
                    ch.value = value
                if self.tracing:
                    self._trace.append((cycle, (el.sort_key, port_index(ch.src_port) if ch.src_port != "stream" else 0,
                                                ch.dst_label),
                                        f"cycle={cycle} {ch.src_label} -> {ch.dst_label} value={value}"))

        fired_set = {el for el, _, _ in fired}
        for el in self.elements.values():
            if el in fired_set:
                continue
            if el in blocked or el.has_valid_input():
                el.stalls += 1
        if self.tracing:
            order = sorted((el for el, _, _ in fired if el.kind != "stream"), key=lambda e: e.sort_key)
            if order:
                self._fired_log.append((cycle, ",".join(e.name for e in order)))
        return CycleSummary(cycle, tuple(sorted(names)), transfers)

    def _pending_input(self) -> bool:
        return any(src.queue for src in self.sources.values())

    def stalled(self) -> List[str]:
        """Elements holding input (or a blocked result) that cannot fire."""
        _, blocked = self._decide()
        self._reset_consumed()
        names = {el.name for el in blocked if el.kind != "stream"}
        names.update(el.name for el in self.elements.values() if el.has_valid_input())
        return sorted(names, key=lambda n: self.elements[n].sort_key)

    def _reset_consumed(self):
        for ch in self.channels:
            ch.consumed = False

    def run_until_idle(self, max_cycles: int = 1_000_000) -> SimReport:
        if max_cycles <= 0:
            raise SimulationError(f"max_cycles must be positive, got {max_cycles}")
        start = self.cycle
        while True:
            if self.cycle - start >= max_cycles:
                fired, _ = self._decide()
                self._reset_consumed()
                if fired:
                    raise SimulationTimeout(f"no idle state within {max_cycles} cycles",
                                            self.stalled(), self.cycle)
                break
            if self.step().idle:
                break
        if self._pending_input():
            raise DeadlockError("array idle with host input pending", self.stalled(), self.cycle)
        report = self.report()
        logger.debug("run finished: %d cycles, %d firings", report.total_cycles, report.total_firings)
        return report

    # --- observation ------------------------------------------------------

    def report(self) -> SimReport:
        return SimReport(
            total_cycles=self.cycle,
            firings={el.name: el.firings for el in self.elements.values()},
            stalls={el.name: el.stalls for el in self.elements.values()},
            packets_in={name: src.injected for name, src in self.sources.items()},
            packets_out={name: len(q) + self._drained[name] for name, q in self.sinks.items()},
            clock_hz=self.clock_hz,
            active_elements=self.active,
            element_cycles=self.active * self.cycle,
        )

    def dump_trace(self, cycles: Optional[Tuple[int, int]] = None, include_firings: bool = False) -> str:
        """Channel transfers as `cycle=<n> <src>.<port> -> <dst>.<port> value=<v>` lines.

        `cycles` is an inclusive (first, last) range.
        """
        if not self.tracing:
            raise TraceDisabledError("simulator was built without tracing")
        lo, hi = cycles if cycles is not None else (0, self.cycle)
        per_cycle: Dict[int, List[Tuple[tuple, str]]] = defaultdict(list)
        for cycle, key, line in self._trace:
            if lo <= cycle <= hi:
                per_cycle[cycle].append((key, line))
        fired = {c: names for c, names in self._fired_log if lo <= c <= hi}
        lines: List[str] = []
        for cycle in sorted(set(per_cycle) | (set(fired) if include_firings else set())):
            lines.extend(line for _, line in sorted(per_cycle.get(cycle, []), key=lambda kv: kv[0]))
            if include_firings and cycle in fired:
                lines.append(f"cycle={cycle} fired {fired[cycle]}")
        return "".join(line + "\n" for line in lines)

    def channel_stats(self) -> List[Tuple[str, int, int, bool]]:
        """(label, produced, consumed, valid at end) per channel."""
        return [(f"{ch.src_label} -> {ch.dst_label}", ch.produced, ch.taken, ch.valid) for ch in self.channels]

    def snapshot(self) -> dict:
        """Channel contents and element registers at the current cycle."""
        return {
            "cycle": self.cycle,
            "channels": {f"{ch.src_label} -> {ch.dst_label}": ch.value for ch in self.channels if ch.valid},
            "elements": {name: el.snapshot() for name, el in self.elements.items() if el.snapshot()},
            "pending": {name: len(src.queue) for name, src in self.sources.items()},
        }
