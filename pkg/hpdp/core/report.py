"""
HPDP Dataflow Lab - Simulation Report
=====================================
Version: 1.0.0
Status: PRODUCTION
Role: Cycle counts and per-element statistics of one or more runs, with the
latency they imply at the configured clock.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterable

from hpdp.settings import DEFAULT_CLOCK_HZ


def _add(into: Dict[str, int], other: Dict[str, int]) -> None:
    for k, v in other.items():
        into[k] = into.get(k, 0) + v


@dataclass(frozen=True)
class SimReport:
    total_cycles: int = 0
    firings: Dict[str, int] = field(default_factory=dict)
    stalls: Dict[str, int] = field(default_factory=dict)
    packets_in: Dict[str, int] = field(default_factory=dict)
    packets_out: Dict[str, int] = field(default_factory=dict)
    clock_hz: int = DEFAULT_CLOCK_HZ
    active_elements: int = 0
    element_cycles: int = 0       # sum over runs of active_elements * cycles

    @property
    def latency_exact_ms(self) -> Fraction:
        return Fraction(self.total_cycles * 1000, self.clock_hz)

    @property
    def latency_ms(self) -> float:
        return self.total_cycles / (self.clock_hz / 1000)

    @property
    def total_firings(self) -> int:
        return sum(self.firings.values())

    @property
    def total_stalls(self) -> int:
        return sum(self.stalls.values())

    @property
    def utilization(self) -> float:
        if self.element_cycles == 0:
            return 0.0
        return self.total_firings / self.element_cycles

    def with_extra_cycles(self, cycles: int) -> "SimReport":
        """Adds idle cycles (no firings), e.g. an inter-device hop."""
        return replace(self, total_cycles=self.total_cycles + cycles,
                       element_cycles=self.element_cycles + cycles * self.active_elements)

    @classmethod
    def combine(cls, reports: Iterable["SimReport"]) -> "SimReport":
        """Sequential composition: cycles and counts add up."""
        reports = list(reports)
        if not reports:
            return cls()
        firings, stalls, pin, pout = {}, {}, {}, {}
        for r in reports:
            _add(firings, r.firings)
            _add(stalls, r.stalls)
            _add(pin, r.packets_in)
            _add(pout, r.packets_out)
        return cls(
            total_cycles=sum(r.total_cycles for r in reports),
            firings=firings, stalls=stalls, packets_in=pin, packets_out=pout,
            clock_hz=reports[0].clock_hz,
            active_elements=max(r.active_elements for r in reports),
            element_cycles=sum(r.element_cycles for r in reports),
        )

    def summary(self) -> dict:
        return {
            "cycles": self.total_cycles,
            "latency_ms": round(self.latency_ms, 6),
            "firings": self.total_firings,
            "stalls": self.total_stalls,
            "utilization": round(self.utilization, 4),
            "packets_in": sum(self.packets_in.values()),
            "packets_out": sum(self.packets_out.values()),
        }
