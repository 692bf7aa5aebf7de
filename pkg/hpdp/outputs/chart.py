"""
HPDP Dataflow Lab - Latency Chart
=================================
Version: 1.0.0
Status: PRODUCTION
Role: Grouped-bar latency comparison as a self-contained SVG.

One group per case, bars for simulated, scalar baseline, published HPDP
and published GR740 latency on a log axis. The SVG is byte-stable for a
given report: fixed hash salt, no date metadata.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from hpdp.bench.suite import BenchReport  # noqa: E402

logger = logging.getLogger("outputs.chart")

SERIES = (
    ("sim", "simulated", "sim_ms", "#1f77b4"),
    ("baseline", "scalar baseline", "baseline_ms", "#ff7f0e"),
    ("paper_hpdp", "paper HPDP", "paper_hpdp_ms", "#2ca02c"),
    ("paper_gr740", "paper GR740", "paper_gr740_ms", "#d62728"),
)
BAR_WIDTH = 0.2


def emit_chart(report: BenchReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "hpdp-dataflow-lab", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(max(6, 2.5 * len(report.rows)), 5))
        for s, (key, label, attr, colour) in enumerate(SERIES):
            for i, row in enumerate(report.rows):
                value = getattr(row, attr)
                if value is None or value <= 0:
                    continue
                bars = ax.bar(i + (s - 1.5) * BAR_WIDTH, value, BAR_WIDTH, color=colour,
                              label=label if i == 0 else None)
                bars[0].set_gid(f"case-{i}-{key}")
        ax.set_yscale("log")
        ax.set_ylabel("latency (ms)")
        ax.set_xticks(range(len(report.rows)))
        ax.set_xticklabels([r.name for r in report.rows], rotation=15)
        ax.set_title("Latency comparison per layer")
        ax.grid(True, axis="y", which="both", alpha=0.3)
        if report.rows:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info("🖼️  chart written: %s", path)
    return path
