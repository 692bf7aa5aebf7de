"""
HPDP Dataflow Lab - Report Recorder
===================================
Version: 1.0.0
Status: PRODUCTION
Role: Benchmark report as CSV (fixed column order, byte-stable).
"""

import logging
from pathlib import Path

import pandas as pd

from hpdp.bench.suite import CSV_COLUMNS, BenchReport

logger = logging.getLogger("outputs.recorder")


def report_frame(report: BenchReport) -> pd.DataFrame:
    return pd.DataFrame([row.csv_record() for row in report.rows], columns=list(CSV_COLUMNS))


def emit_csv(report: BenchReport, path) -> Path:
    """One header row, then one row per case; an empty report yields the header only."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = report_frame(report)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info("💾 CSV written: %s (%d row(s))", path, len(frame))
    return path
