"""
HPDP Dataflow Lab - Layer Jobs & Execution Records
==================================================
Version: 1.0.0
Status: PRODUCTION
Role: What the host is asked to run (LayerJob), what comes back
(ExecutionRecord), job-list files and the JSONL run recorder.
"""

import json
import logging
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import List, Optional

from hpdp.bench.layerspec import layer_from_dict
from hpdp.core.report import SimReport
from hpdp.errors import DimensionError, LayerSpecError
from hpdp.mapper.conv import MappedKernel
from hpdp.quant.golden import ConvLayerSpec
from hpdp.quant.tensor import QuantizedTensor

logger = logging.getLogger("integration.jobs")


class Routing(str, Enum):
    TO_HOST = "to_host"          # output returns to the host as a tensor
    CHAIN_NEXT = "chain_next"    # output streams straight into the next array


@dataclass(frozen=True)
class LayerJob:
    """A layer to run. `kernel=None` maps on demand; `input=None` only inside a chain."""

    spec: ConvLayerSpec
    input: Optional[QuantizedTensor] = None
    kernel: Optional[MappedKernel] = None
    routing: Routing = Routing.TO_HOST

    def __post_init__(self):
        if self.input is not None and self.input.dims != self.spec.input_dims:
            raise DimensionError(f"{self.spec.name}: input {self.input.dims} does not match "
                                 f"spec input {self.spec.input_dims}")
        object.__setattr__(self, "routing", Routing(self.routing))


@dataclass(frozen=True)
class ExecutionRecord:
    layer: str
    output: QuantizedTensor
    report: SimReport
    golden_match: Optional[bool]     # None when verification was off
    alu_used: int
    ram_used: int

    @property
    def latency_ms(self) -> float:
        return self.report.latency_ms

    def to_json(self) -> dict:
        return {
            "layer": self.layer,
            "cycles": self.report.total_cycles,
            "latency_ms": round(self.latency_ms, 2),
            "golden_match": self.golden_match,
            "alu_used": self.alu_used,
            "ram_used": self.ram_used,
        }


def load_jobs(path) -> List[LayerJob]:
    """A job file holds one layer-spec object or a list of them, each with `routing`."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise LayerSpecError(f"cannot read job file {path}: {e}") from e
    entries = doc if isinstance(doc, list) else [doc]
    jobs = []
    for i, entry in enumerate(entries):
        spec, inp = layer_from_dict(entry, default_name=f"{path.stem}_{i}")
        try:
            routing = Routing(entry.get("routing", Routing.TO_HOST.value))
        except ValueError:
            raise LayerSpecError(f"{spec.name}: routing must be 'to_host' or 'chain_next'") from None
        # a chained layer's input comes from its predecessor
        if i > 0 and jobs[-1].routing is Routing.CHAIN_NEXT and "input_data" not in entry:
            inp = None
        jobs.append(LayerJob(spec, inp, None, routing))
    if jobs and jobs[0].input is None:
        raise LayerSpecError(f"{path}: the first job needs 'input_data' or a 'seed'")
    logger.debug("loaded %d job(s) from %s", len(jobs), path)
    return jobs


class RunRecorder:
    """Appends ExecutionRecords as JSON lines."""

    def __init__(self, path=None, enabled: bool = True):
        self.enabled = enabled
        self.path: Optional[Path] = None
        self._handle = None
        if not enabled:
            return
        if path is None:
            stamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            path = Path("logs") / f"run_{stamp}.jsonl"
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "a", encoding="utf-8")
        logger.info("🔴 recording runs to %s", self.path)

    def write(self, entry: dict) -> None:
        if not self._handle:
            return
        self._handle.write(json.dumps(entry, sort_keys=True) + "\n")
        self._handle.flush()

    def log(self, record: ExecutionRecord, **extra) -> None:
        self.write(dict(record.to_json(), **extra))

    def close(self) -> None:
        if self._handle:
            self._handle.close()
            self._handle = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
