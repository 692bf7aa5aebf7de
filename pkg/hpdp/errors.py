"""
HPDP Dataflow Lab - Error Hierarchy
===================================
Version: 1.0.0
Status: PRODUCTION
Role: Every failure the library raises derives from HpdpError so the CLI
can catch one type and map it to an exit code.
"""

from typing import Optional, Sequence, Tuple


class HpdpError(Exception):
    """Root of all library errors."""


# --- qtensor ---------------------------------------------------------------

class ParameterError(HpdpError):
    """Invalid scalar parameter (scale, zero point, stride, ...)."""


class DimensionError(HpdpError):
    """Tensor or spec shapes disagree."""


class AccumulatorOverflow(HpdpError):
    """A partial sum left the signed 32-bit range."""

    def __init__(self, index: Tuple[int, ...], value: int):
        self.index = index
        self.value = value
        super().__init__(f"accumulator overflow at {index}: partial sum {value} exceeds int32")


class UnsupportedMultiplier(HpdpError):
    """Real requantization multiplier outside (0, 1) or below the shift range."""


# --- configuration ---------------------------------------------------------

class ConfigError(HpdpError):
    """A configuration carries error diagnostics."""

    def __init__(self, message: str, diagnostics: Sequence = ()):
        self.diagnostics = list(diagnostics)
        detail = "; ".join(str(d) for d in self.diagnostics[:5])
        super().__init__(f"{message}: {detail}" if detail else message)


class ResourceError(ConfigError):
    """Configuration exceeds the array's ALU or RAM budget."""


# --- simulation ------------------------------------------------------------

class SimulationError(HpdpError):
    """Runtime fault inside the simulated array."""


class HandshakeViolation(SimulationError):
    """A valid channel was overwritten or an empty one consumed."""


class DeadlockError(SimulationError):
    """No element can fire but host input is still pending."""

    def __init__(self, message: str, stalled: Sequence[str] = (), cycle: int = 0):
        self.stalled = list(stalled)
        self.cycle = cycle
        names = ", ".join(self.stalled) if self.stalled else "none"
        super().__init__(f"{message} at cycle {cycle}; stalled: {names}")


class SimulationTimeout(DeadlockError):
    """max_cycles reached with work remaining."""


class TraceDisabledError(SimulationError):
    """dump_trace called on a simulator built without tracing."""


# --- dma / mapping / orchestration -----------------------------------------

class DmaBoundsError(HpdpError):
    """A descriptor generates an address outside its region."""

    def __init__(self, address: int, indices: Tuple[int, int, int, int], region: Tuple[int, int]):
        self.address = address
        self.indices = indices
        self.region = region
        super().__init__(
            f"address {address} outside region [{region[0]}, {region[1]}) "
            f"at loop indices (i3, i2, i1, i0) = {indices}"
        )


class MappingError(HpdpError):
    """The conv mapper cannot place the layer on the array."""


class VerificationError(HpdpError):
    """Simulated output differs from the golden reference."""

    def __init__(self, index: Tuple[int, ...], expected: int, actual: int, count: int = 1,
                 layer: Optional[str] = None):
        self.index = index
        self.expected = expected
        self.actual = actual
        self.count = count
        self.layer = layer
        where = f"{layer}: " if layer else ""
        super().__init__(
            f"{where}{count} mismatching element(s); first at {index}: "
            f"expected {expected}, got {actual}"
        )


class ChainError(HpdpError):
    """Consecutive layers in a chain are incompatible."""


class LayerSpecError(HpdpError):
    """A layer-spec or job file is malformed."""


class SuiteFailure(VerificationError):
    """One or more benchmark cases missed the golden reference."""

    def __init__(self, cases: Sequence[str]):
        self.cases = list(cases)
        HpdpError.__init__(self, f"golden mismatch in {', '.join(self.cases)}")
        self.index, self.expected, self.actual = (), None, None
        self.count = len(self.cases)
        self.layer = self.cases[0] if self.cases else None
