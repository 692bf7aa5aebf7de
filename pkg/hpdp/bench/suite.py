"""
HPDP Dataflow Lab - Benchmark Suite
===================================
Version: 1.0.0
Status: PRODUCTION
Role: Builds benchmark cases (the reference layers or user layer specs),
runs them through mapper + orchestrator, and assembles the report rows.

Published image sizes are shrunk to desk scale by default (16x16 crops);
`full_size` keeps them. Data is drawn from PCG64 streams seeded with
(seed, case index), so a seed fully determines every row.
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from hpdp import __version__
from hpdp.bench.layerspec import PRNG_NAME, make_rng, random_input, random_layer
from hpdp.core.dims import ArrayDims
from hpdp.errors import LayerSpecError, ParameterError, SuiteFailure
from hpdp.integration.jobs import LayerJob
from hpdp.integration.orchestrator import execute_layer
from hpdp.mapper.conv import map_conv
from hpdp.quant.golden import ConvLayerSpec, output_size
from hpdp.quant.tensor import QuantizedTensor
from hpdp.settings import DEFAULT_CLOCK_HZ, Settings, load_settings

logger = logging.getLogger("bench.suite")

DEFAULT_CROP = 16
CSV_COLUMNS = ("name", "kh", "kw", "kc", "kk", "img_h", "img_w", "img_c", "cycles", "sim_ms", "macs",
               "macs_per_cycle", "baseline_ms", "paper_hpdp_ms", "paper_gr740_ms", "golden_match")


# --- reference data --------------------------------------------------------------

@dataclass(frozen=True)
class SuiteEntry:
    """One published layer: kernel (K, R, S, C), image (H, W, C) and reference latencies."""

    name: str
    kernel: Tuple[int, int, int, int]
    image: Tuple[int, int, int]
    hpdp_ms: Optional[float] = None
    gr740_ms: Optional[float] = None

    @property
    def full_macs(self) -> int:
        """MACs at the published size under same padding, stride 1."""
        k, r, s, c = self.kernel
        h, w, _ = self.image
        return h * w * k * r * s * c


def load_suite(path=None) -> List[SuiteEntry]:
    path = Path(path) if path is not None else load_settings().suite_file
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = []
        for case in doc["cases"]:
            kn, im = case["kernel"], case["image"]
            entries.append(SuiteEntry(case["name"], (kn["k"], kn["r"], kn["s"], kn["c"]),
                                      (im["h"], im["w"], im["c"]), case.get("hpdp_ms"), case.get("gr740_ms")))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise LayerSpecError(f"cannot read suite file {path}: {e}") from e
    return entries


# --- scalar baseline ---------------------------------------------------------------

def calibrate_cpi(gr740_ms: float, macs: int, clock_hz: int = DEFAULT_CLOCK_HZ) -> float:
    """Cycles per MAC a scalar core needs to take gr740_ms for `macs` MACs."""
    if macs <= 0:
        raise ParameterError("MAC count must be positive")
    return gr740_ms * 1e-3 * clock_hz / macs


@lru_cache(maxsize=8)
def _default_cpi(path: str, clock_hz: int) -> float:
    rows = [e for e in load_suite(path) if e.kernel[1:3] == (3, 3) and e.gr740_ms]
    if not rows:
        raise LayerSpecError(f"{path} has no 3x3 rows to calibrate from")
    return sum(calibrate_cpi(e.gr740_ms, e.full_macs, clock_hz) for e in rows) / len(rows)


def default_cpi(path=None, clock_hz: int = DEFAULT_CLOCK_HZ) -> float:
    """Mean per-row CPI of the 3x3 reference rows."""
    path = Path(path) if path is not None else load_settings().suite_file
    return _default_cpi(str(path), clock_hz)


def scalar_baseline(spec: ConvLayerSpec, cpi: Optional[float] = None, clock_hz: int = DEFAULT_CLOCK_HZ) -> float:
    """latency_ms = MACs * CPI / clock."""
    cpi = default_cpi(clock_hz=clock_hz) if cpi is None else cpi
    return spec.macs * cpi / clock_hz * 1e3


# --- cases -------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchOptions:
    seed: int = 42
    crop: int = DEFAULT_CROP
    scale: Optional[int] = None          # shrink spatial dims by this factor instead of cropping
    full_size: bool = False
    size_is_output: bool = False         # published image size is the output size (valid padding)
    cpi: Optional[float] = None
    jobs: int = 1
    clock_hz: int = DEFAULT_CLOCK_HZ
    max_cycles: int = 50_000_000
    ram_words: int = 4096

    @property
    def settings(self) -> Settings:
        base = load_settings()
        return replace(base, clock_hz=self.clock_hz, max_cycles=self.max_cycles, ram_words=self.ram_words)


@dataclass(frozen=True)
class BenchCase:
    name: str
    spec: ConvLayerSpec
    input: QuantizedTensor
    scale: float = 1.0                    # published size / simulated size
    hpdp_ms: Optional[float] = None
    gr740_ms: Optional[float] = None
    reference: Optional[SuiteEntry] = None


def sized(extent: int, kernel: int, options: BenchOptions) -> int:
    if options.full_size:
        size = extent
    elif options.scale is not None:
        if options.scale < 1:
            raise ParameterError(f"scale factor must be >= 1, got {options.scale}")
        size = math.ceil(extent / options.scale)
    else:
        size = min(options.crop, extent)
    if size < kernel:
        raise ParameterError(f"shrunk size {size} is smaller than the {kernel}-wide kernel")
    return size


def case_from_entry(entry: SuiteEntry, index: int, options: BenchOptions) -> BenchCase:
    k, r, s, c = entry.kernel
    h = sized(entry.image[0], r, options)
    w = sized(entry.image[1], s, options)
    padding = "same"
    if options.size_is_output:
        h, w, padding = h + r - 1, w + s - 1, "valid"
    rng = make_rng(options.seed, index)
    spec = random_layer(entry.name, (h, w, c), (k, r, s, c), rng, padding=padding)
    inp = random_input(spec, rng)
    scale = entry.image[0] / output_size(h, r, 1, padding)
    return BenchCase(entry.name, spec, inp, scale, entry.hpdp_ms, entry.gr740_ms, entry)


def suite_cases(options: BenchOptions, path=None) -> List[BenchCase]:
    return [case_from_entry(e, i, options) for i, e in enumerate(load_suite(path))]


def case_from_spec(spec: ConvLayerSpec, inp: Optional[QuantizedTensor], index: int,
                   options: BenchOptions) -> BenchCase:
    """User layer spec; a missing input is drawn from (seed, index)."""
    if inp is None:
        inp = random_input(spec, make_rng(options.seed, index))
    return BenchCase(spec.name, spec, inp)


# --- running -------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    name: str
    kh: int
    kw: int
    kc: int
    kk: int
    img_h: int
    img_w: int
    img_c: int
    cycles: int
    sim_ms: float
    macs: int
    macs_per_cycle: float
    baseline_ms: float
    paper_hpdp_ms: Optional[float]
    paper_gr740_ms: Optional[float]
    golden_match: bool
    strategy: str = ""
    estimate_cycles: int = 0
    paper_macs_per_cycle: Optional[float] = None

    def csv_record(self) -> Dict[str, object]:
        return {col: getattr(self, col) for col in CSV_COLUMNS}


@dataclass(frozen=True)
class BenchReport:
    rows: Tuple[BenchRow, ...] = ()
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.golden_match for r in self.rows)

    @property
    def failed_cases(self) -> List[str]:
        return [r.name for r in self.rows if not r.golden_match]

    def check(self) -> None:
        """Raises VerificationError naming the first case whose output differs from golden."""
        failed = self.failed_cases
        if failed:
            raise SuiteFailure(failed)


def run_case(case: BenchCase, options: BenchOptions) -> BenchRow:
    settings = options.settings
    kernel = map_conv(case.spec, ArrayDims(ram_capacity=options.ram_words))
    record = execute_layer(LayerJob(case.spec, case.input, kernel), verify=True, settings=settings,
                           raise_on_mismatch=False)
    k, r, s, c = case.spec.kernel_dims
    h, w, _ = case.spec.input_dims
    cycles = record.report.total_cycles
    macs = case.spec.macs
    paper_mpc = None
    if case.reference is not None and case.hpdp_ms:
        paper_mpc = round(case.reference.full_macs / (case.hpdp_ms * 1e-3 * options.clock_hz), 3)
    return BenchRow(
        name=case.name, kh=r, kw=s, kc=c, kk=k, img_h=h, img_w=w, img_c=c,
        cycles=cycles,
        sim_ms=round(record.latency_ms, 6),
        macs=macs,
        macs_per_cycle=round(macs / cycles, 3) if cycles else 0.0,
        baseline_ms=round(scalar_baseline(case.spec, options.cpi, options.clock_hz), 6),
        paper_hpdp_ms=case.hpdp_ms,
        paper_gr740_ms=case.gr740_ms,
        golden_match=bool(record.golden_match),
        strategy=kernel.strategy_name,
        estimate_cycles=kernel.estimate,
        paper_macs_per_cycle=paper_mpc,
    )


def _run_packed(args):
    case, options = args
    return run_case(case, options)


def run_suite(cases: Sequence[BenchCase], options: BenchOptions = BenchOptions(),
              strict: bool = True) -> BenchReport:
    """Runs every case (in parallel up to options.jobs); rows keep case order."""
    cases = list(cases)
    logger.info("🚀 running %d case(s), seed %d, %d job(s)", len(cases), options.seed, options.jobs)
    work = [(case, options) for case in cases]
    if options.jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=options.jobs) as pool:
            rows = list(pool.map(_run_packed, work))
    else:
        rows = [_run_packed(item) for item in work]
    metadata = {
        "seed": options.seed,
        "clock_hz": options.clock_hz,
        "tool_version": __version__,
        "prng": PRNG_NAME,
        "numpy_version": np.__version__,
        "cpi": options.cpi if options.cpi is not None else round(default_cpi(clock_hz=options.clock_hz), 4),
        "full_size": options.full_size,
        "size_is_output": options.size_is_output,
    }
    report = BenchReport(tuple(rows), metadata)
    if strict:
        report.check()
    return report
