"""Report rendering (structured text and comma-separated tabular) plus the
append-only run manifest.

Wall-clock time never appears in a rendered report; it lives only in the
manifest, so re-runs with identical flags are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .canonical import AuditReport, CanonicalTables, format_tables
from .ordinals import Truncation, format_ordinal
from .tree import ClosedGridWitness, format_witness
from .verify import ExtractOutcome, LowerBoundStepReport, TriangleReport

__all__ = [
    "RunManifest",
    "append_manifest",
    "render_triangles",
    "render_lowerbound",
    "render_witness_search",
    "render_audit",
    "render_tables",
    "render_extract_upper",
    "result_digest",
]


@dataclass
class RunManifest:
    command: str
    params: dict
    colouring: str
    truncation: Optional[tuple[int, int]]
    version: str
    cache_keys: list[str]
    wall_time: float
    result_digest: str


def result_digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def append_manifest(cache_dir: Path, manifest: RunManifest) -> None:
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    with open(cache_dir / "manifests.jsonl", "a") as fh:
        fh.write(json.dumps(manifest.__dict__, sort_keys=True) + "\n")


def _kv_text(pairs: list[tuple[str, object]], extra: list[str]) -> str:
    lines = [f"{k}: {v}" for k, v in pairs]
    return "\n".join(lines + extra) + "\n"


def _kv_csv(pairs: list[tuple[str, object]], extra_rows: list[str]) -> str:
    header = ",".join(k for k, _ in pairs)
    row = ",".join(str(v) for _, v in pairs)
    return "\n".join([header, row] + extra_rows) + "\n"


def render_triangles(rep: TriangleReport, fmt: str = "text") -> str:
    pairs = [
        ("report", "check-triangles"),
        ("colouring", rep.colouring_name),
        ("max-exp", rep.trunc.max_exp),
        ("max-coeff", rep.trunc.max_coeff),
        ("vertices", rep.vertices),
        ("edges", rep.edges),
        ("triangles", rep.triangle_count),
    ]
    tri_text = [
        "triangle: "
        + " ".join(format_ordinal(x) for x in t)
        for t in rep.triangles
    ]
    if fmt == "csv":
        rows = [
            "triangle," + ",".join(format_ordinal(x) for x in t)
            for t in rep.triangles
        ]
        return _kv_csv(pairs, rows)
    return _kv_text(pairs, tri_text)


def render_lowerbound(rep: LowerBoundStepReport, fmt: str = "text") -> str:
    pairs: list[tuple[str, object]] = [
        ("report", "check-lowerbound"),
        ("colouring", rep.colouring_name),
        ("k", rep.k),
        ("n", rep.n),
        ("max-exp", rep.trunc.max_exp),
        ("max-coeff", rep.trunc.max_coeff),
    ]
    extra = []
    for s in rep.steps:
        status = "pass" if s.passed else "fail"
        if s.vacuous:
            status += " (vacuous)"
        pairs.append((f"step-{s.step}", f"{status} checked={s.checked}"))
        if s.counterexample:
            extra.append(
                f"counterexample-{s.step}: "
                + " ".join(format_ordinal(x) for x in s.counterexample)
            )
    if fmt == "csv":
        return _kv_csv(pairs, extra)
    return _kv_text(pairs, extra)


def render_witness_search(
    colouring: str,
    trunc: Truncation,
    p: int,
    q: int,
    max_limit_rank: int,
    witness: Optional[ClosedGridWitness],
    fmt: str = "text",
) -> str:
    pairs = [
        ("report", "search-witness"),
        ("colouring", colouring),
        ("max-exp", trunc.max_exp),
        ("max-coeff", trunc.max_coeff),
        ("p", p),
        ("q", q),
        ("limit-rank-max", max_limit_rank),
        ("found", "yes" if witness else "no"),
    ]
    extra = format_witness(witness).splitlines() if witness else []
    if fmt == "csv":
        return _kv_csv(pairs, extra)
    return _kv_text(pairs, extra)


def render_audit(rep: AuditReport, colouring: str, trunc: Truncation, fmt="text") -> str:
    pairs = [
        ("report", "audit"),
        ("colouring", colouring),
        ("max-exp", trunc.max_exp),
        ("max-coeff", trunc.max_coeff),
        ("k", rep.k),
        ("deficiency", rep.deficiency),
        ("checks", rep.checks),
        ("violations", len(rep.violations)),
    ]
    extra = []
    for v in rep.violations:
        theta = "root" if v.theta is None else format_ordinal(v.theta)
        alpha = "-" if v.alpha is None else format_ordinal(v.alpha)
        extra.append(
            f"violation: ({v.condition}) theta={theta} alpha={alpha} "
            f"l={v.level} {v.detail}"
        )
    if fmt == "csv":
        return _kv_csv(pairs, extra)
    return _kv_text(pairs, extra)


def render_tables(tables: CanonicalTables, fmt: str = "text") -> str:
    if fmt == "csv":
        lines = ["table,j,l,value", f"k,{tables.k},,"]
        for (j, l) in sorted(tables.descolor):
            lines.append(f"descolor,{j},{l},{tables.descolor[(j, l)]}")
        for (j, l) in sorted(tables.domcolor):
            lines.append(f"domcolor,{j},{l},{tables.domcolor[(j, l)]}")
        return "\n".join(lines) + "\n"
    return format_tables(tables)


def render_extract_upper(
    outcome: ExtractOutcome, colouring: str, trunc: Truncation, fmt="text"
) -> str:
    pairs = [
        ("report", "extract-upper"),
        ("colouring", colouring),
        ("max-exp", trunc.max_exp),
        ("max-coeff", trunc.max_coeff),
        ("stage", outcome.stage),
        ("scarcity-violations", len(outcome.scarcity)),
        ("delegated", "yes" if outcome.delegated else "no"),
        ("found", "yes" if outcome.witness else "no"),
    ]
    extra = [f"log: {line}" for line in outcome.log]
    if outcome.witness:
        extra.extend(format_witness(outcome.witness).splitlines())
    if fmt == "csv":
        return _kv_csv(pairs, extra)
    return _kv_text(pairs, extra)


def timed(fn):
    """Run fn(), returning (result, elapsed_seconds)."""
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start
