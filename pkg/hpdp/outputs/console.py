"""
HPDP Dataflow Lab - Console Table
=================================
Version: 1.0.0
Status: PRODUCTION
Role: Aligned benchmark table rendered with rich.
"""

from io import StringIO
from typing import Optional

from rich.console import Console
from rich.table import Table

from hpdp.bench.suite import BenchReport


def _ms(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


def build_table(report: BenchReport) -> Table:
    seed = report.metadata.get("seed", "-")
    table = Table(title=f"Conv benchmark (seed {seed})")
    for header, justify in (("case", "left"), ("kernel KxRxSxC", "left"), ("image", "left"),
                            ("strategy", "left"), ("cycles", "right"), ("estimate", "right"),
                            ("sim ms", "right"), ("MACs/cycle", "right"), ("published MACs/cycle", "right"),
                            ("baseline ms", "right"), ("published HPDP ms", "right"),
                            ("published GR740 ms", "right"), ("golden", "center")):
        table.add_column(header, justify=justify)
    for r in report.rows:
        table.add_row(
            r.name, f"{r.kk}x{r.kh}x{r.kw}x{r.kc}", f"{r.img_h}x{r.img_w}x{r.img_c}", r.strategy,
            str(r.cycles), str(r.estimate_cycles), f"{r.sim_ms:.4f}", f"{r.macs_per_cycle:.2f}",
            "-" if r.paper_macs_per_cycle is None else f"{r.paper_macs_per_cycle:.2f}",
            _ms(r.baseline_ms), _ms(r.paper_hpdp_ms), _ms(r.paper_gr740_ms),
            "PASS" if r.golden_match else "FAIL",
        )
    return table


def emit_table(report: BenchReport) -> str:
    """Plain-text rendering (no colour codes), e.g. for logs and tests."""
    buffer = StringIO()
    console = Console(file=buffer, width=180, color_system=None, force_terminal=False)
    console.print(build_table(report))
    return buffer.getvalue()
