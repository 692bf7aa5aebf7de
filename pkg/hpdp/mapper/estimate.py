"""
HPDP Dataflow Lab - Static Cycle Estimate
=========================================
Version: 1.0.0
Status: PRODUCTION
Role: Fill + steady-state cycle model of a mapped kernel and its
resource report.

    pass estimate = critical path + ceil(packets / initiation rate)

The critical path counts elements on the longest route from an input
stream to an output stream; feedback channels are ignored.
"""

import math
from collections import defaultdict
from typing import TYPE_CHECKING, Dict, List, Set

from hpdp.dsl.model import ArrayConfig

if TYPE_CHECKING:
    from hpdp.mapper.conv import MappedKernel, MappedPass


def critical_path(config: ArrayConfig) -> int:
    succ: Dict[str, Set[str]] = defaultdict(set)
    for ch in config.channels:
        succ[ch.src].add(ch.dst)
    sinks = {s.element for s in config.output_streams()}
    memo: Dict[str, int] = {}
    visiting: Set[str] = set()

    def longest(name: str) -> int:
        # elements on the longest path from `name` to an output stream, 0 if none
        if name in memo:
            return memo[name]
        visiting.add(name)
        best = 1 if name in sinks else 0
        for nxt in succ[name]:
            if nxt in visiting:
                continue
            tail = longest(nxt)
            if tail:
                best = max(best, 1 + tail)
        visiting.discard(name)
        memo[name] = best
        return best

    starts = [s.element for s in config.input_streams()]
    return max((longest(e) for e in starts), default=0)


def pass_estimate(mp: "MappedPass") -> int:
    steady = math.ceil(mp.packets / mp.initiation_rate) if mp.packets else 0
    return critical_path(mp.config) + steady if steady else 0


def estimate_cycles(mk: "MappedKernel") -> int:
    return sum(pass_estimate(p) for p in mk.passes)


def resource_report(mk: "MappedKernel") -> str:
    """Human-readable usage; the resources line matches dsl.report's format."""
    r = mk.resources
    lines: List[str] = [
        f"kernel {mk.name}: {mk.strategy if mk.strategy else 'passthrough'}, {len(mk.passes)} pass(es)",
        f"resources: {r.alu_used}/{r.alu_available} ALU, {r.ram_used}/{r.ram_available} RAM, "
        f"{r.ram_words_used}/{r.ram_words_available} RAM words",
        f"critical path: {r.critical_path} elements",
        f"estimate: {mk.estimate} cycles",
    ]
    return "\n".join(lines) + "\n"
