"""Command-line driver.

Exit codes: 0 when the checked property holds or the requested object is
found, 1 when it is violated or absent, 2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .adjacency import MemoryBudgetError, adjacency
from .canonical import (
    AmbiguousTableEntry,
    audit_canonical,
    default_deficiency,
    extract_tables,
    parse_tables,
    scarcity_check,
    synthesize_canonical,
)
from .colourings import (
    BUILTIN_NAMES,
    Colouring,
    builtin_colouring,
    parse_edge_file,
)
from .ordinals import (
    OrdinalParseError,
    Truncation,
    format_ordinal,
    parse_ordinal,
)
from .tree import children as tree_children
from .reports import (
    RunManifest,
    append_manifest,
    render_audit,
    render_extract_upper,
    render_lowerbound,
    render_tables,
    render_triangles,
    render_witness_search,
    result_digest,
    timed,
)
from .verify import (
    ExtractParams,
    check_lowerbound_steps,
    extract_upper,
    find_triangles,
    search_closed_witness,
)
from .colourings import edge_family


class CliError(Exception):
    pass


def _cache_dir(args) -> Path:
    if getattr(args, "cache_dir", None):
        return Path(args.cache_dir)
    env = os.environ.get("ORDLAB_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "ordlab"


def _truncation(args) -> Truncation:
    try:
        return Truncation(args.max_exp, args.max_coeff)
    except ValueError as err:
        raise CliError(str(err))


def _colouring(args, trunc: Truncation) -> Colouring:
    name = args.colouring
    if name in BUILTIN_NAMES:
        col = builtin_colouring(name)
    elif name == "file":
        if not getattr(args, "edges", None):
            raise CliError("--colouring file requires --edges")
        try:
            text = Path(args.edges).read_text()
        except OSError as err:
            raise CliError(str(err))
        col = parse_edge_file(text, trunc)
    elif name == "synthesized":
        if not getattr(args, "tables", None):
            raise CliError("--colouring synthesized requires --tables")
        tables = _read_tables(args.tables)
        col = synthesize_canonical(tables, getattr(args, "threshold", 1) or 1)
    else:
        raise CliError(
            f"unknown colouring {name!r}; expected one of "
            f"{', '.join(BUILTIN_NAMES + ('file', 'synthesized'))}"
        )
    if getattr(args, "bound", None):
        col = col.restrict(parse_ordinal(args.bound))
    return col


def _read_tables(path: str):
    try:
        return parse_tables(Path(path).read_text())
    except OSError as err:
        raise CliError(str(err))
    except ValueError as err:
        raise CliError(f"bad tables file: {err}")


def _manifest(args, command, colouring, trunc, wall, text, cache_keys=()):
    params = {
        k: v
        for k, v in vars(args).items()
        if k not in ("func",) and v is not None
    }
    append_manifest(
        _cache_dir(args),
        RunManifest(
            command=command,
            params=params,
            colouring=colouring,
            truncation=(trunc.max_exp, trunc.max_coeff) if trunc else None,
            version=__version__,
            cache_keys=list(cache_keys),
            wall_time=wall,
            result_digest=result_digest(text),
        ),
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check_triangles(args) -> int:
    trunc = _truncation(args)
    col = _colouring(args, trunc)
    cache = _cache_dir(args)

    def run():
        adj = adjacency(col, trunc, cache_dir=cache, threads=args.threads)
        return find_triangles(adj)

    rep, wall = timed(run)
    text = render_triangles(rep, args.format)
    sys.stdout.write(text)
    _manifest(args, "check-triangles", col.name, trunc, wall, text,
              [col.cache_key] if col.cache_key else [])
    return 0 if rep.triangle_free else 1


def cmd_check_lowerbound(args) -> int:
    trunc = _truncation(args)
    col = _colouring(args, trunc)
    try:
        rep, wall = timed(lambda: check_lowerbound_steps(args.k, trunc, col))
    except ValueError as err:
        raise CliError(str(err))
    text = render_lowerbound(rep, args.format)
    sys.stdout.write(text)
    _manifest(args, "check-lowerbound", col.name, trunc, wall, text)
    return 0 if rep.ok else 1


def cmd_search_witness(args) -> int:
    trunc = _truncation(args)
    col = _colouring(args, trunc)
    rank_max = args.limit_rank_max or trunc.max_exp
    w, wall = timed(
        lambda: search_closed_witness(col, trunc, args.p, args.q, rank_max)
    )
    text = render_witness_search(
        col.name, trunc, args.p, args.q, rank_max, w, args.format
    )
    sys.stdout.write(text)
    _manifest(args, "search-witness", col.name, trunc, wall, text)
    return 0 if w is not None else 1


def cmd_audit(args) -> int:
    trunc = _truncation(args)
    col = _colouring(args, trunc)
    k = args.k or trunc.max_exp + 1
    d = args.deficiency if args.deficiency is not None else default_deficiency(
        trunc.max_coeff
    )
    rep, wall = timed(lambda: audit_canonical(col, trunc, k, d))
    text = render_audit(rep, col.name, trunc, args.format)
    sys.stdout.write(text)
    _manifest(args, "audit", col.name, trunc, wall, text)
    return 0 if rep.ok else 1


def cmd_extract_tables(args) -> int:
    trunc = _truncation(args)
    col = _colouring(args, trunc)
    k = args.k or trunc.max_exp + 1
    d = args.deficiency if args.deficiency is not None else default_deficiency(
        trunc.max_coeff
    )
    try:
        tables, wall = timed(lambda: extract_tables(col, trunc, k, d))
    except AmbiguousTableEntry as err:
        sys.stderr.write(f"extract-tables: {err}\n")
        return 1
    text = render_tables(tables, args.format)
    sys.stdout.write(text)
    _manifest(args, "extract-tables", col.name, trunc, wall, text)
    return 0


def cmd_extract_upper(args) -> int:
    trunc = _truncation(args)
    if not args.tables:
        raise CliError("extract-upper requires --tables")
    tables = _read_tables(args.tables)
    col = _colouring(args, trunc)
    params = ExtractParams(p=args.p, q=args.q, seed=args.seed or 0)
    try:
        outcome, wall = timed(lambda: extract_upper(col, tables, trunc, params))
    except ValueError as err:
        raise CliError(str(err))
    text = render_extract_upper(outcome, col.name, trunc, args.format)
    sys.stdout.write(text)
    _manifest(args, "extract-upper", col.name, trunc, wall, text)
    return 0 if outcome.ok else 1


def cmd_edge(args) -> int:
    try:
        a = parse_ordinal(args.a)
        b = parse_ordinal(args.b)
    except OrdinalParseError as err:
        raise CliError(str(err))
    if a == b:
        raise CliError("edge requires distinct ordinals")
    fam = edge_family(a, b)
    col = 1 if fam.fires else 0
    if fam.fires:
        sys.stdout.write(f"{fam.tag} n={fam.n} colour={col}\n")
    else:
        sys.stdout.write(f"none colour={col}\n")
    return 0


def cmd_enumerate(args) -> int:
    trunc = _truncation(args)
    for x in trunc.members(rank=args.rank):
        sys.stdout.write(format_ordinal(x) + "\n")
    return 0


def cmd_export_tree(args) -> int:
    try:
        root = parse_ordinal(args.root)
    except OrdinalParseError as err:
        raise CliError(str(err))
    if args.depth > root.cb_rank:
        raise CliError(
            f"depth {args.depth} exceeds the CB rank {root.cb_rank} of {root}"
        )
    nodes = [root]
    edges: list[tuple[str, str]] = []
    frontier = [root]
    for _ in range(args.depth):
        nxt = []
        for node in frontier:
            for child in tree_children(node, args.fanout):
                nodes.append(child)
                edges.append((format_ordinal(node), format_ordinal(child)))
                nxt.append(child)
        frontier = nxt
    if args.format == "text":
        lines = [format_ordinal(n) for n in nodes]
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        lines = ["digraph tree {"]
        for n in nodes:
            lines.append(f'  "{format_ordinal(n)}";')
        for a, b in edges:
            lines.append(f'  "{a}" -> "{b}";')
        lines.append("}")
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_truncation_flags(p, required=True):
    p.add_argument("--max-exp", type=int, required=required)
    p.add_argument("--max-coeff", type=int, required=required)


def _add_colouring_flags(p, default=None):
    p.add_argument("--colouring", default=default, required=default is None)
    p.add_argument("--bound")
    p.add_argument("--edges")
    p.add_argument("--tables")
    p.add_argument("--threshold", type=int)


def _add_common_flags(p):
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--cache-dir")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ordlab",
        description="Finite-scale checks for ordinal pair-colourings",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-triangles", help="exhaustive triangle scan")
    _add_truncation_flags(p)
    _add_colouring_flags(p, default="gomega")
    _add_common_flags(p)
    p.set_defaults(func=cmd_check_triangles)

    p = sub.add_parser("check-lowerbound", help="the four rank-floor sub-steps")
    p.add_argument("--k", type=int, required=True)
    _add_truncation_flags(p)
    _add_colouring_flags(p, default="gomega")
    _add_common_flags(p)
    p.set_defaults(func=cmd_check_lowerbound)

    p = sub.add_parser("search-witness", help="closed independent grid search")
    _add_truncation_flags(p)
    _add_colouring_flags(p)
    _add_common_flags(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--limit-rank-max", type=int)
    p.set_defaults(func=cmd_search_witness)

    p = sub.add_parser("audit", help="canonicity conditions over a sample")
    _add_truncation_flags(p)
    _add_colouring_flags(p)
    _add_common_flags(p)
    p.add_argument("--k", type=int)
    p.add_argument("--deficiency", type=int)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("extract-tables", help="read the colour tables")
    _add_truncation_flags(p)
    _add_colouring_flags(p)
    _add_common_flags(p)
    p.add_argument("--k", type=int)
    p.add_argument("--deficiency", type=int)
    p.set_defaults(func=cmd_extract_tables)

    p = sub.add_parser("extract-upper", help="staged witness extraction")
    _add_truncation_flags(p)
    _add_colouring_flags(p)
    _add_common_flags(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--q", type=int, default=3)
    p.set_defaults(func=cmd_extract_upper)

    p = sub.add_parser("edge", help="family and colour of one pair")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_edge)

    p = sub.add_parser("enumerate", help="list a truncation universe")
    _add_truncation_flags(p)
    p.add_argument("--rank", type=int)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("export-tree", help="cover-relation tree below a root")
    p.add_argument("--root", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--fanout", type=int, required=True)
    p.add_argument("--format", choices=("dot", "text"), default="dot")
    p.set_defaults(func=cmd_export_tree)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return 0 if code in (0, None) else 2
    try:
        return args.func(args)
    except CliError as err:
        sys.stderr.write(f"ordlab: {err}\n")
        return 2
    except OrdinalParseError as err:
        sys.stderr.write(f"ordlab: {err}\n")
        return 2
    except MemoryBudgetError as err:
        sys.stderr.write(f"ordlab: {err}\n")
        return 2
    except OSError as err:
        sys.stderr.write(f"ordlab: {err}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
