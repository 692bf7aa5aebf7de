"""
HPDP Dataflow Lab - Bootloader & Command Interface
==================================================
Version: 1.0.0
Status: PRODUCTION
Role: `bench` command line: run the benchmark suite, verify a layer or a
layer chain against the golden reference, dump mapper output, dump a
dataflow trace.

Exit codes: 0 all golden checks pass, 1 golden mismatch, 2 input/usage error.
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from rich.console import Console
from rich.markup import escape
from rich.panel import Panel

from hpdp import __version__
from hpdp.bench.layerspec import load_layer_spec, make_rng, random_input
from hpdp.bench.suite import BenchOptions, case_from_spec, run_suite, suite_cases
from hpdp.core.dims import ArrayDims
from hpdp.core.programs import load_program, program_names
from hpdp.core.simulator import build_array
from hpdp.dsl.report import config_report
from hpdp.errors import HpdpError, ParameterError, VerificationError
from hpdp.integration.jobs import LayerJob, RunRecorder, load_jobs
from hpdp.integration.memory import activation_image
from hpdp.integration.orchestrator import chain_layers, execute_layer, prepare_pass
from hpdp.mapper.conv import map_conv
from hpdp.mapper.estimate import resource_report
from hpdp.mapper.sidecar import write_mapped_kernel
from hpdp.outputs.chart import emit_chart
from hpdp.outputs.console import build_table
from hpdp.outputs.recorder import emit_csv
from hpdp.settings import Settings, load_settings

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 1, 2

console = Console()
logger = logging.getLogger("main")


def parse_cycles(text: str) -> Tuple[int, int]:
    """`a..b` (inclusive) -> (a, b)."""
    try:
        lo, hi = (int(v) for v in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}") from None
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"range {text!r} is empty or negative")
    return lo, hi


def parse_words(text: str) -> List[int]:
    try:
        return [int(v, 0) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _settings(args) -> Settings:
    base = load_settings()
    return dataclasses.replace(
        base,
        clock_hz=args.clock_hz if args.clock_hz is not None else base.clock_hz,
        max_cycles=args.max_cycles if args.max_cycles is not None else base.max_cycles,
        log_level=(args.log_level or base.log_level).upper(),
    )


def _layer(path: str, seed: int):
    """Spec and input of one layer-spec file; a missing input is drawn from `seed`."""
    spec, inp = load_layer_spec(path)
    if inp is None:
        inp = random_input(spec, make_rng(seed, 0))
    return spec, inp


# ------------------------------------------------------
# COMMANDS
# ------------------------------------------------------
def cmd_run(args, settings: Settings) -> int:
    options = BenchOptions(
        seed=args.seed, scale=args.scale, full_size=args.full_size, size_is_output=args.size_is_output,
        cpi=args.cpi, jobs=args.jobs, clock_hz=settings.clock_hz, max_cycles=settings.max_cycles,
        ram_words=settings.ram_words,
    )
    cases = []
    if args.suite or not args.spec:
        suite = args.suite or "table1"
        path = settings.suite_file if suite == "table1" else Path(suite)
        cases.extend(suite_cases(options, path))
    for spec_path in args.spec or []:
        spec, inp = load_layer_spec(spec_path)
        cases.append(case_from_spec(spec, inp, len(cases), options))

    console.print(Panel.fit(f"[bold yellow]🚀 HPDP BENCH v{__version__}[/bold yellow] "
                            f"{len(cases)} case(s) | seed {args.seed} | {settings.clock_hz / 1e6:g} MHz"))
    report = run_suite(cases, options, strict=False)

    if args.csv:
        emit_csv(report, args.csv)
    if args.svg:
        emit_chart(report, args.svg)
    if args.table:
        console.print(build_table(report))
    if args.record is not None:
        with RunRecorder(args.record or None) as recorder:
            for row in report.rows:
                recorder.write(dict(dataclasses.asdict(row), seed=args.seed))

    if report.passed:
        console.print("[bold green]✅ PASS: every case matches the golden reference[/bold green]")
        return EXIT_OK
    console.print(f"[bold red]❌ FAIL: golden mismatch in {', '.join(report.failed_cases)}[/bold red]")
    return EXIT_MISMATCH


def cmd_verify(args, settings: Settings) -> int:
    doc = json.loads(Path(args.spec).read_text(encoding="utf-8")) if Path(args.spec).is_file() else None
    if isinstance(doc, list):
        jobs = load_jobs(args.spec)
        records = chain_layers(jobs, verify=True, settings=settings, raise_on_mismatch=False)
    else:
        spec, inp = _layer(args.spec, args.seed)
        records = [execute_layer(LayerJob(spec, inp), verify=True, settings=settings, raise_on_mismatch=False)]

    if args.record is not None:
        with RunRecorder(args.record or None) as recorder:
            for record in records:
                recorder.log(record, seed=args.seed)

    for record in records:
        status = "[green]PASS[/green]" if record.golden_match else "[red]FAIL[/red]"
        console.print(f"{status} {record.layer}: {record.report.total_cycles} cycles, "
                      f"{record.latency_ms:.4f} ms, {record.alu_used} ALU / {record.ram_used} RAM")
    return EXIT_OK if all(r.golden_match for r in records) else EXIT_MISMATCH


def cmd_map(args, settings: Settings) -> int:
    spec, _ = load_layer_spec(args.spec)
    kernel = map_conv(spec, ArrayDims(ram_capacity=settings.ram_words))
    written = write_mapped_kernel(kernel, args.out)
    console.print(resource_report(kernel), markup=False, highlight=False)
    if args.report:
        for mp in kernel.passes:
            console.print(config_report(mp.config), markup=False, highlight=False)
    for path in written:
        console.print(f"[dim]💾 {path}[/dim]")
    return EXIT_OK


def cmd_trace(args, settings: Settings) -> int:
    if bool(args.spec) == bool(args.program):
        raise ParameterError("trace needs exactly one of --spec or --program")
    if args.program:
        sim = build_array(load_program(args.program), trace=True, clock_hz=settings.clock_hz)
        for stream in sim.config.input_streams():
            sim.feed(stream.name, args.words)
    else:
        spec, inp = _layer(args.spec, args.seed)
        kernel = map_conv(spec, ArrayDims(ram_capacity=settings.ram_words))
        if not 0 <= args.pass_index < len(kernel.passes):
            raise ParameterError(f"--pass must be in 0..{len(kernel.passes) - 1}")
        mp = kernel.passes[args.pass_index]
        sim = prepare_pass(mp, activation_image(inp, spec), settings.clock_hz, trace=True)
    report = sim.run_until_idle(settings.max_cycles)
    text = sim.dump_trace(args.cycles, include_firings=args.firings)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        console.print(f"[dim]💾 trace written: {args.out}[/dim]")
    else:
        sys.stdout.write(text)
    logger.info("trace finished after %d cycles", report.total_cycles)
    return EXIT_OK


# ------------------------------------------------------
# PARSER
# ------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    sim = common.add_argument_group("⏱️  Simulator")
    sim.add_argument("--clock-hz", type=int, default=None, help="Clock for latency figures (Default: 250 MHz)")
    sim.add_argument("--max-cycles", type=int, default=None, help="Cycle budget per array pass")
    sim.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(
        prog="bench",
        description=f"🧩 HPDP DATAFLOW LAB v{__version__} - conv benchmark on a simulated dataflow array",
        formatter_class=argparse.RawTextHelpFormatter,
        epilog="""
COMMANDS:
---------
  run     reference suite and/or layer-spec files -> CSV, table, SVG chart
  verify  one layer (or a job list) against the golden reference
  map     write the mapper's .xcfg pass files and layout sidecar
  trace   per-cycle channel transfers of a mapped layer or bring-up program

EXAMPLES:
---------
  python bench.py run --seed 42 --csv out/table1.csv --svg out/table1.svg
  python bench.py verify --spec layers/conv.json --seed 7
  python bench.py trace --program route_chain --cycles 1..10
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="Run the benchmark suite")
    cases = run.add_argument_group("📋 Cases")
    cases.add_argument("--suite", type=str, default=None, help="'table1' or a suite JSON file")
    cases.add_argument("--spec", type=str, nargs="+", action="extend", metavar="FILE",
                       help="Layer-spec JSON files (repeatable)")
    cases.add_argument("--seed", type=int, default=42, help="Data seed (Default: 42)")
    cases.add_argument("--scale", type=int, default=None, help="Shrink published image sizes by this factor")
    cases.add_argument("--full-size", action="store_true", help="Simulate published image sizes (slow)")
    cases.add_argument("--size-is-output", action="store_true",
                       help="Read published image sizes as output sizes (valid padding)")
    cases.add_argument("--cpi", type=float, default=None, help="Scalar baseline cycles per MAC")
    cases.add_argument("--jobs", type=int, default=1, help="Cases simulated in parallel")
    out = run.add_argument_group("💾 Outputs")
    out.add_argument("--csv", type=str, help="CSV report path")
    out.add_argument("--svg", type=str, help="SVG latency chart path")
    out.add_argument("--table", action=argparse.BooleanOptionalAction, default=True, help="Print the table")
    out.add_argument("--record", nargs="?", const="", default=None, help="Append rows to a JSONL log")

    verify = sub.add_parser("verify", parents=[common], help="Check a layer against the golden reference")
    verify.add_argument("--spec", type=str, required=True, help="Layer-spec or job-list JSON")
    verify.add_argument("--seed", type=int, default=42, help="Seed for a missing input tensor")
    verify.add_argument("--record", nargs="?", const="", default=None, help="Append records to a JSONL log")

    mapper = sub.add_parser("map", parents=[common], help="Dump mapper output")
    mapper.add_argument("--spec", type=str, required=True, help="Layer-spec JSON")
    mapper.add_argument("--out", type=str, required=True, help="Target .xcfg path")
    mapper.add_argument("--report", action="store_true", help="Print the configuration report of every pass")

    trace = sub.add_parser("trace", parents=[common], help="Dump a dataflow trace")
    trace.add_argument("--spec", type=str, help="Layer-spec JSON")
    trace.add_argument("--program", type=str, choices=program_names(), help="Bring-up program")
    trace.add_argument("--words", type=parse_words, default=list(range(1, 9)),
                       help="Words fed to every input stream of a program (Default: 1..8)")
    trace.add_argument("--seed", type=int, default=42, help="Seed for a missing input tensor")
    trace.add_argument("--pass", dest="pass_index", type=int, default=0, help="Pass of a multi-pass layer")
    trace.add_argument("--cycles", type=parse_cycles, default=None, help="Inclusive cycle range a..b")
    trace.add_argument("--firings", action="store_true", help="Add one 'fired' line per cycle")
    trace.add_argument("--out", type=str, help="Write the trace to a file")
    return parser


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "map": cmd_map, "trace": cmd_trace}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT
    try:
        settings = _settings(args)
    except HpdpError as e:
        console.print(f"[bold red]❌ {escape(str(e))}[/bold red]")
        return EXIT_INPUT
    logging.basicConfig(level=getattr(logging, settings.log_level, logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, settings)
    except VerificationError as e:
        console.print(f"[bold red]❌ {escape(str(e))}[/bold red]", highlight=False)
        return EXIT_MISMATCH
    except HpdpError as e:
        console.print(f"[bold red]❌ {type(e).__name__}: {escape(str(e))}[/bold red]", highlight=False)
        return EXIT_INPUT
    except (OSError, ValueError) as e:
        console.print(f"[bold red]❌ INPUT ERROR: {escape(str(e))}[/bold red]", highlight=False)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
