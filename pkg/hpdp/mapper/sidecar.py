"""
HPDP Dataflow Lab - Mapper Artifacts
====================================
Version: 1.0.0
Status: PRODUCTION
Role: Writes a MappedKernel as .xcfg files plus a `<stem>.layout.json`
sidecar, and reads them back for the orchestrator.

One pass is written to `<stem>.xcfg`; several passes to `<stem>.p<N>.xcfg`.
Input DMA descriptors live in the xcfg `dma` lines; the sidecar carries
the output layout, host preloads and the estimate.
"""

import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import List

from hpdp.core.dims import ArrayDims
from hpdp.dma.descriptor import Dma4dDescriptor
from hpdp.dsl.emit import emit
from hpdp.dsl.parser import load_config
from hpdp.errors import MappingError
from hpdp.mapper.conv import InputKind, MappedKernel, MappedPass, OutputLayout
from hpdp.mapper.strategy import MappingStrategy, StrategyKind

logger = logging.getLogger("mapper.sidecar")

FORMAT_VERSION = 1


def sidecar_path(xcfg_path) -> Path:
    path = Path(xcfg_path)
    return path.with_name(f"{path.stem}.layout.json")


def write_mapped_kernel(mk: MappedKernel, xcfg_path) -> List[Path]:
    """Writes every pass and the sidecar; returns the written paths."""
    path = Path(xcfg_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    entries = []
    for i, mp in enumerate(mk.passes):
        target = path if len(mk.passes) == 1 else path.with_name(f"{path.stem}.p{i}{path.suffix or '.xcfg'}")
        target.write_text(emit(mp.config), encoding="utf-8", newline="\n")
        written.append(target)
        entries.append({
            "file": target.name,
            "input_kind": mp.input_kind.value,
            "input_stream": mp.input_stream,
            "output_stream": mp.output_stream,
            "packets": mp.packets,
            "initiation_rate": str(mp.initiation_rate),
            "layout": mp.layout.to_dict() if mp.layout else None,
            "preloads": [{"ram": ram, "dma": d.to_dict()} for ram, d in mp.preloads],
        })
    strategy = None
    if mk.strategy is not None:
        strategy = {"kind": mk.strategy.kind.value, "t_k": mk.strategy.t_k, "t_y": mk.strategy.t_y}
    doc = {
        "format": FORMAT_VERSION,
        "name": mk.name,
        "strategy": strategy,
        "estimate_cycles": mk.estimate,
        "passes": entries,
    }
    side = sidecar_path(path)
    side.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    written.append(side)
    logger.info("💾 wrote %d pass file(s) and %s", len(mk.passes), side.name)
    return written


def read_mapped_kernel(sidecar) -> MappedKernel:
    side = Path(sidecar)
    try:
        doc = json.loads(side.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise MappingError(f"cannot read layout sidecar {side}: {e}") from e
    if doc.get("format") != FORMAT_VERSION:
        raise MappingError(f"{side}: unsupported sidecar format {doc.get('format')!r}")

    passes = []
    for entry in doc["passes"]:
        config = load_config(side.with_name(entry["file"]))
        layout = OutputLayout.from_dict(entry["layout"]) if entry.get("layout") else None
        preloads = tuple((p["ram"], Dma4dDescriptor.from_dict(p["dma"])) for p in entry.get("preloads", []))
        passes.append(MappedPass(config, InputKind(entry["input_kind"]), entry["input_stream"],
                                 entry["output_stream"], int(entry["packets"]),
                                 Fraction(entry["initiation_rate"]), layout, preloads))
    if not passes:
        raise MappingError(f"{side}: no passes listed")
    strategy = None
    if doc.get("strategy"):
        s = doc["strategy"]
        strategy = MappingStrategy(StrategyKind(s["kind"]), int(s["t_k"]), int(s["t_y"]))
    dims: ArrayDims = passes[0].config.dims
    return MappedKernel(doc["name"], dims, tuple(passes), strategy, int(doc["estimate_cycles"]))
