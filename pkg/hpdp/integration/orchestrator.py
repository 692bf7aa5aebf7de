"""
HPDP Dataflow Lab - Host Orchestrator
=====================================
Version: 1.0.0
Status: PRODUCTION
Role: Plays the host controller: configures the array for each pass,
preloads RAM elements, streams the input, runs to idle, collects the
output stream and (optionally) checks it against the golden reference.

Chained layers run on a second array instance: the output packets of
layer i are written through a reorder descriptor list straight into layer
i+1's input memory, without going back to the host as a tensor. That hop
costs one cycle on the receiving layer.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from hpdp.core.dims import ArrayDims
from hpdp.core.report import SimReport
from hpdp.core.simulator import Simulator, build_array
from hpdp.dma.descriptor import gather, scatter
from hpdp.dma.patterns import output_scatter_descriptors
from hpdp.errors import ChainError, MappingError, VerificationError
from hpdp.integration.jobs import ExecutionRecord, LayerJob, Routing
from hpdp.integration.memory import activation_image, empty_staging, pack_staging
from hpdp.mapper.conv import MappedKernel, MappedPass, input_words, map_conv
from hpdp.quant.golden import ConvLayerSpec, reference_output
from hpdp.quant.tensor import QuantizedTensor
from hpdp.settings import Settings, load_settings

logger = logging.getLogger("integration.orchestrator")

CHAIN_HOP_CYCLES = 1

PassHook = Callable[[int, MappedPass, Simulator], None]


@dataclass(frozen=True)
class MatchReport:
    count: int
    first_index: Optional[Tuple[int, int, int]] = None
    max_abs_diff: int = 0
    expected: Optional[int] = None
    actual: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.count == 0


def compare_tensors(expected: QuantizedTensor, actual: QuantizedTensor) -> MatchReport:
    if expected.dims != actual.dims:
        raise ChainError(f"cannot compare {expected.dims} with {actual.dims}")
    exp = expected.data.astype(np.int64)
    act = actual.data.astype(np.int64)
    diff = np.argwhere(exp != act)
    if not diff.size:
        return MatchReport(0)
    first = tuple(int(v) for v in diff[0])
    return MatchReport(int(diff.shape[0]), first, int(np.abs(exp - act).max()),
                       int(exp[first]), int(act[first]))


def verify_against_golden(record: ExecutionRecord, spec: ConvLayerSpec, inp: QuantizedTensor) -> MatchReport:
    """Element-wise comparison of a record's output with requantize(conv2d_ref(input))."""
    return compare_tensors(reference_output(inp, spec), record.output)


# --- one array pass ------------------------------------------------------------

def prepare_pass(mp: MappedPass, image: np.ndarray, clock_hz: int, trace: bool = False) -> Simulator:
    """Builds the pass's array, loads its RAM preloads and queues its input stream."""
    sim = build_array(mp.config, trace=trace, clock_hz=clock_hz)
    for ram, desc in mp.preloads:
        sim.preload(ram, gather(image, [desc]))
    sim.feed(mp.input_stream, input_words(mp, image))
    return sim


def run_kernel(kernel: MappedKernel, image: np.ndarray, settings: Settings,
               on_pass: Optional[PassHook] = None) -> Tuple[List[List[int]], SimReport]:
    """Runs every pass in order; returns the output packets of each pass and the combined report."""
    outputs: List[List[int]] = []
    reports: List[SimReport] = []
    for i, mp in enumerate(kernel.passes):
        sim = prepare_pass(mp, image, settings.clock_hz)
        if on_pass is not None:
            on_pass(i, mp, sim)
        report = sim.run_until_idle(settings.max_cycles)
        packets = sim.drain(mp.output_stream)
        if mp.layout is not None and len(packets) != len(mp.layout):
            raise MappingError(f"{mp.config.name}: {len(packets)} output packets, layout expects {len(mp.layout)}")
        logger.debug("pass %d/%d %s: %d cycles, %d packets", i + 1, len(kernel.passes), mp.config.name,
                     report.total_cycles, len(packets))
        outputs.append(packets)
        reports.append(report)
    return outputs, SimReport.combine(reports)


def _assemble(spec: ConvLayerSpec, kernel: MappedKernel, outputs: List[List[int]]) -> QuantizedTensor:
    out = np.zeros(spec.output_dims, dtype=np.int8)
    for mp, packets in zip(kernel.passes, outputs):
        mp.layout.scatter(out, packets)
    return QuantizedTensor(out, scale=spec.out_scale, zero_point=spec.z_out)


def _kernel_for(job: LayerJob, settings: Settings) -> MappedKernel:
    if job.kernel is not None:
        return job.kernel
    return map_conv(job.spec, ArrayDims(ram_capacity=settings.ram_words))


def _finish(job: LayerJob, inp: QuantizedTensor, kernel: MappedKernel, output: QuantizedTensor,
            report: SimReport, verify: bool, raise_on_mismatch: bool) -> ExecutionRecord:
    r = kernel.resources
    record = ExecutionRecord(job.spec.name, output, report, None, r.alu_used, r.ram_used)
    if verify:
        match = verify_against_golden(record, job.spec, inp)
        record = ExecutionRecord(job.spec.name, output, report, match.ok, r.alu_used, r.ram_used)
        if not match.ok:
            logger.error("❌ %s: %d mismatching element(s), first at %s", job.spec.name, match.count,
                         match.first_index)
            if raise_on_mismatch:
                raise VerificationError(match.first_index, match.expected, match.actual, match.count,
                                        job.spec.name)
    logger.info("✅ %s: %d cycles, %.2f ms%s", job.spec.name, report.total_cycles, record.latency_ms,
                "" if record.golden_match is None else f", golden {'match' if record.golden_match else 'MISMATCH'}")
    return record


def _run(job: LayerJob, inp: QuantizedTensor, image: np.ndarray, settings: Settings,
         verify: bool, raise_on_mismatch: bool, on_pass: Optional[PassHook], extra_cycles: int = 0):
    kernel = _kernel_for(job, settings)
    t0 = time.perf_counter()
    outputs, report = run_kernel(kernel, image, settings, on_pass)
    if extra_cycles:
        report = report.with_extra_cycles(extra_cycles)
    output = _assemble(job.spec, kernel, outputs)
    logger.debug("%s simulated in %.1f s wall time", job.spec.name, time.perf_counter() - t0)
    return kernel, outputs, _finish(job, inp, kernel, output, report, verify, raise_on_mismatch)


def execute_layer(job: LayerJob, verify: bool = True, settings: Optional[Settings] = None,
                  raise_on_mismatch: bool = True, on_pass: Optional[PassHook] = None) -> ExecutionRecord:
    """Maps (if needed), simulates and reassembles one layer."""
    settings = settings or load_settings()
    if job.input is None:
        raise ChainError(f"{job.spec.name}: a standalone layer needs an input tensor")
    image = activation_image(job.input, job.spec)
    _, _, record = _run(job, job.input, image, settings, verify, raise_on_mismatch, on_pass)
    return record


# --- chains --------------------------------------------------------------------

def check_chain(jobs: Sequence[LayerJob]) -> None:
    """Raises ChainError for incompatible neighbours before anything runs."""
    if not jobs:
        return
    if jobs[0].input is None:
        raise ChainError(f"{jobs[0].spec.name}: the first layer of a chain needs an input tensor")
    for prev, nxt in zip(jobs, jobs[1:]):
        out_dims = prev.spec.output_dims
        if out_dims != nxt.spec.input_dims:
            raise ChainError(f"{prev.spec.name} produces {out_dims} but {nxt.spec.name} "
                             f"expects {nxt.spec.input_dims}")
        if prev.routing is Routing.CHAIN_NEXT and prev.spec.z_out != nxt.spec.z_in:
            raise ChainError(f"{prev.spec.name} z_out={prev.spec.z_out} differs from "
                             f"{nxt.spec.name} z_in={nxt.spec.z_in}")


def _chained_image(prev: MappedKernel, outputs: List[List[int]], nxt: ConvLayerSpec) -> np.ndarray:
    """Writes the previous layer's packets into the next layer's input memory."""
    staging = empty_staging(nxt)
    flat = staging.reshape(-1)
    for mp, packets in zip(prev.passes, outputs):
        lay = mp.layout
        scatter(flat, output_scatter_descriptors(lay.tile, lay.k0, lay.k1, nxt), packets)
    return pack_staging(staging)


def chain_layers(jobs: Sequence[LayerJob], verify: bool = True, settings: Optional[Settings] = None,
                 raise_on_mismatch: bool = True) -> List[ExecutionRecord]:
    settings = settings or load_settings()
    jobs = list(jobs)
    check_chain(jobs)
    records: List[ExecutionRecord] = []
    inp = jobs[0].input if jobs else None
    image = activation_image(inp, jobs[0].spec) if jobs else None
    extra = 0
    for i, job in enumerate(jobs):
        kernel, outputs, record = _run(job, inp, image, settings, verify, raise_on_mismatch, None, extra)
        records.append(record)
        if i + 1 == len(jobs):
            break
        nxt = jobs[i + 1].spec
        inp = record.output
        if job.routing is Routing.CHAIN_NEXT:
            image = _chained_image(kernel, outputs, nxt)
            extra = CHAIN_HOP_CYCLES
            logger.info("🔗 %s streams into %s", job.spec.name, nxt.name)
        else:
            image = activation_image(inp, nxt)
            extra = 0
    return records
