"""
HPDP Dataflow Lab - 4D DMA Descriptor
=====================================
Version: 1.0.0
Status: PRODUCTION
Role: Address-stream generation for HPDP memory transfers.

A descriptor is a base word address plus four (count, stride) loop levels,
outermost first:

    addr = base + i3*s3 + i2*s2 + i1*s1 + i0*s0      (i0 fastest)

Strides are signed word offsets; zero strides broadcast. Longer loop nests
are expressed as descriptor lists (see dma.patterns).
"""

from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from hpdp.errors import DmaBoundsError, ParameterError

LEVELS = 4
Level = Tuple[int, int]


@dataclass(frozen=True)
class Dma4dDescriptor:
    base: int
    levels: Tuple[Level, Level, Level, Level] = ((1, 0), (1, 0), (1, 0), (1, 0))
    region: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        levels = tuple((int(c), int(s)) for c, s in self.levels)
        if len(levels) > LEVELS:
            raise ParameterError(f"a descriptor has at most {LEVELS} loop levels, got {len(levels)}")
        levels = ((1, 0),) * (LEVELS - len(levels)) + levels
        if any(c < 1 for c, _ in levels):
            raise ParameterError(f"loop counts must be >= 1, got {[c for c, _ in levels]}")
        if self.base < 0:
            raise ParameterError(f"base address must be non-negative, got {self.base}")
        object.__setattr__(self, "levels", levels)
        if self.region is not None:
            lo, hi = (int(v) for v in self.region)
            if hi < lo:
                raise ParameterError(f"region end {hi} before start {lo}")
            object.__setattr__(self, "region", (lo, hi))

    @classmethod
    def linear(cls, base: int, count: int, region: Optional[Tuple[int, int]] = None) -> "Dma4dDescriptor":
        return cls(base, ((1, 0), (1, 0), (1, 0), (count, 1)), region)

    @property
    def counts(self) -> Tuple[int, int, int, int]:
        return tuple(c for c, _ in self.levels)

    @property
    def strides(self) -> Tuple[int, int, int, int]:
        return tuple(s for _, s in self.levels)

    def __len__(self) -> int:
        c3, c2, c1, c0 = self.counts
        return c3 * c2 * c1 * c0

    def bounds(self) -> Tuple[int, int]:
        """(min, max) generated address, from the loop corners."""
        lo = hi = self.base
        for count, stride in self.levels:
            span = (count - 1) * stride
            lo += min(span, 0)
            hi += max(span, 0)
        return lo, hi

    def shifted(self, offset: int, region: Optional[Tuple[int, int]] = None) -> "Dma4dDescriptor":
        return Dma4dDescriptor(self.base + offset, self.levels, region)

    def with_region(self, region: Optional[Tuple[int, int]]) -> "Dma4dDescriptor":
        return Dma4dDescriptor(self.base, self.levels, region)

    def to_text(self) -> str:
        parts = [f"base={self.base}"]
        for lvl, (count, stride) in zip((3, 2, 1, 0), self.levels):
            parts.append(f"l{lvl}={count}:{stride}")
        if self.region is not None:
            parts.append(f"region={self.region[0]}:{self.region[1]}")
        return " ".join(parts)

    def to_dict(self) -> dict:
        out = {"base": self.base, "levels": [list(lv) for lv in self.levels]}
        if self.region is not None:
            out["region"] = list(self.region)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Dma4dDescriptor":
        region = tuple(data["region"]) if data.get("region") is not None else None
        return cls(int(data["base"]), tuple(tuple(lv) for lv in data["levels"]), region)


def addresses(d: Dma4dDescriptor) -> Iterator[int]:
    """Lazy address stream; raises DmaBoundsError at the first out-of-region address."""
    (c3, s3), (c2, s2), (c1, s1), (c0, s0) = d.levels
    region = d.region
    for i3 in range(c3):
        a3 = d.base + i3 * s3
        for i2 in range(c2):
            a2 = a3 + i2 * s2
            for i1 in range(c1):
                a1 = a2 + i1 * s1
                for i0 in range(c0):
                    addr = a1 + i0 * s0
                    if region is not None and not region[0] <= addr < region[1]:
                        raise DmaBoundsError(addr, (i3, i2, i1, i0), region)
                    yield addr


def address_array(d: Dma4dDescriptor) -> np.ndarray:
    """All addresses as an int64 array, checked against the region."""
    (c3, s3), (c2, s2), (c1, s1), (c0, s0) = d.levels
    grid = (d.base
            + (np.arange(c3) * s3)[:, None, None, None]
            + (np.arange(c2) * s2)[None, :, None, None]
            + (np.arange(c1) * s1)[None, None, :, None]
            + (np.arange(c0) * s0)[None, None, None, :])
    flat = grid.reshape(-1).astype(np.int64)
    if d.region is not None:
        bad = np.flatnonzero((flat < d.region[0]) | (flat >= d.region[1]))
        if bad.size:
            idx = np.unravel_index(int(bad[0]), (c3, c2, c1, c0))
            raise DmaBoundsError(int(flat[bad[0]]), tuple(int(i) for i in idx), d.region)
    return flat


def validate(d: Dma4dDescriptor, region: Optional[Tuple[int, int]] = None) -> Tuple[int, int]:
    """Checks the descriptor against a region without enumerating it.

    Returns the (min, max) address. The reported loop indices are the corner
    that produces the violating extreme.
    """
    region = region if region is not None else d.region
    lo, hi = d.bounds()
    if region is None:
        return lo, hi
    if lo < region[0]:
        corner = tuple(c - 1 if s < 0 else 0 for c, s in d.levels)
        raise DmaBoundsError(lo, corner, region)
    if hi >= region[1]:
        corner = tuple(c - 1 if s > 0 else 0 for c, s in d.levels)
        raise DmaBoundsError(hi, corner, region)
    return lo, hi


def stream(descriptors: Iterable[Dma4dDescriptor]) -> np.ndarray:
    parts = [address_array(d) for d in descriptors]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def gather(memory: np.ndarray, descriptors: Sequence[Dma4dDescriptor]) -> List[int]:
    """Reads memory words in descriptor order."""
    addr = stream(descriptors)
    return np.asarray(memory)[addr].tolist()


def scatter(memory: np.ndarray, descriptors: Sequence[Dma4dDescriptor], values: Sequence[int]) -> None:
    """Writes a packet stream to memory in descriptor order."""
    addr = stream(descriptors)
    if len(addr) != len(values):
        raise ParameterError(f"{len(values)} packets for {len(addr)} descriptor addresses")
    memory[addr] = np.asarray(values, dtype=memory.dtype)
