"""Canonicity machinery: finite largeness, audits, colour tables and the
domination checks used by the extraction pipeline.

Largeness replaces the product-of-cofinite filter with a per-level
deficiency bound d on a finite grid: a set is large when, recursively, at
most d first-coordinate fibres fail to be large, and a base-level set is
large when it misses at most d values.

A slice of rank-l vertices is indexed as a grid with one coordinate per
exponent from the ambient rank down to l, most significant first.  Only
full sub-grids are indexed: members whose upper coefficients hit the
truncation ceiling are left out, as is the ordinal 0, whose empty normal
form carries no coordinates.
"""

from __future__ import annotations

import hashlib
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .colourings import Colouring, TruncationContext, colour_row, truncation_context
from .ordinals import CnfOrdinal, Truncation, omega_power, nat
from .tree import subtree_rank, tree_le

__all__ = [
    "LargenessSpec",
    "is_large",
    "CanonicalTables",
    "format_tables",
    "parse_tables",
    "AmbiguousTableEntry",
    "AuditViolation",
    "AuditReport",
    "audit_canonical",
    "extract_tables",
    "SynthesizedColouring",
    "synthesize_canonical",
    "ScarcityViolation",
    "scarcity_check",
    "OppressionCounterexample",
    "oppress_check",
    "harass_check",
    "RefinementError",
    "harassment_refine",
    "default_deficiency",
    "root_slice_grid",
    "subtree_slice_grid",
]


# ---------------------------------------------------------------------------
# Largeness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LargenessSpec:
    levels: int
    side: int
    deficiency: int

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if not 0 <= self.deficiency < self.side:
            raise ValueError("deficiency must satisfy 0 <= d < side")


def is_large(vectors: Iterable[Sequence[int]], spec: LargenessSpec) -> bool:
    """Recursive deficiency-d largeness of a set of index vectors."""
    vs = set()
    for v in vectors:
        t = tuple(v)
        if len(t) != spec.levels:
            raise ValueError(
                f"vector {t} has {len(t)} components, spec has {spec.levels}"
            )
        if any(not 0 <= x < spec.side for x in t):
            raise ValueError(f"vector {t} outside side {spec.side}")
        vs.add(t)

    def rec(points: set[tuple[int, ...]], levels: int) -> bool:
        if levels == 1:
            return spec.side - len(points) <= spec.deficiency
        fibres: dict[int, set[tuple[int, ...]]] = defaultdict(set)
        for v in points:
            fibres[v[0]].add(v[1:])
        good = sum(1 for f in fibres.values() if rec(f, levels - 1))
        return spec.side - good <= spec.deficiency

    return rec(vs, spec.levels)


def default_deficiency(max_coeff: int) -> int:
    return -(-max_coeff // 4)


# ---------------------------------------------------------------------------
# Slice grids
# ---------------------------------------------------------------------------


def root_slice_grid(
    trunc: Truncation, k: int, level: int
) -> dict[CnfOrdinal, tuple[int, ...]]:
    """Rank-`level` vertices below omega^k as grid vectors over exponents
    k-1..level (most significant first); the base coordinate is the rank
    coefficient minus one."""
    if not 0 <= level < k <= trunc.max_exp + 1:
        raise ValueError(f"need 0 <= level < k <= {trunc.max_exp + 1}")
    c = trunc.max_coeff
    out: dict[CnfOrdinal, tuple[int, ...]] = {}
    for x in trunc.members(rank=level):
        if x.is_zero or x.leading_exp >= k:
            continue
        uppers = tuple(x.coefficient(e) for e in range(k - 1, level, -1))
        if any(v > c - 1 for v in uppers):
            continue
        out[x] = uppers + (x.coefficient(level) - 1,)
    return out


def subtree_slice_grid(
    trunc: Truncation, theta: CnfOrdinal, level: int
) -> dict[CnfOrdinal, tuple[int, ...]]:
    """Rank-`level` members of theta's subtree, gridded over the exponents
    below theta's CB rank."""
    c_theta = theta.cb_rank
    if not 0 <= level < c_theta:
        raise ValueError(f"need 0 <= level < CB(theta) = {c_theta}")
    c = trunc.max_coeff
    out: dict[CnfOrdinal, tuple[int, ...]] = {}
    for x in subtree_rank(theta, level, trunc):
        if x.is_zero:
            continue
        uppers = tuple(x.coefficient(e) for e in range(c_theta - 1, level, -1))
        if any(v > c - 1 for v in uppers):
            continue
        out[x] = uppers + (x.coefficient(level) - 1,)
    return out


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


class AmbiguousTableEntry(RuntimeError):
    """Neither side of a slice is large and the cell counts tie; the
    deficiency surrogate is too small to decide the entry."""


@dataclass(frozen=True)
class CanonicalTables:
    """descolor(j, l) for k > j > l: colour from a rank-j vertex into its
    own rank-l subtree slice.  domcolor(j, l) for j, l < k: colour from a
    rank-j vertex towards the large part of the rank-l slice."""

    k: int
    descolor: dict[tuple[int, int], int]
    domcolor: dict[tuple[int, int], int]

    def __post_init__(self) -> None:
        want_desc = {(j, l) for j in range(self.k) for l in range(j)}
        want_dom = {(j, l) for j in range(self.k) for l in range(self.k)}
        if set(self.descolor) != want_desc:
            raise ValueError("descolor domain must be exactly {k > j > l}")
        if set(self.domcolor) != want_dom:
            raise ValueError("domcolor domain must be exactly {j, l < k}")
        for v in list(self.descolor.values()) + list(self.domcolor.values()):
            if v not in (0, 1):
                raise ValueError("table entries must be 0 or 1")

    def digest(self) -> str:
        return hashlib.sha256(format_tables(self).encode()).hexdigest()[:12]


def format_tables(t: CanonicalTables) -> str:
    lines = [f"k {t.k}"]
    for (j, l) in sorted(t.descolor):
        lines.append(f"descolor {j} {l} {t.descolor[(j, l)]}")
    for (j, l) in sorted(t.domcolor):
        lines.append(f"domcolor {j} {l} {t.domcolor[(j, l)]}")
    return "\n".join(lines) + "\n"


def parse_tables(text: str) -> CanonicalTables:
    k = None
    desc: dict[tuple[int, int], int] = {}
    dom: dict[tuple[int, int], int] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "k" and len(toks) == 2:
            k = int(toks[1])
        elif toks[0] in ("descolor", "domcolor") and len(toks) == 4:
            j, l, v = int(toks[1]), int(toks[2]), int(toks[3])
            (desc if toks[0] == "descolor" else dom)[(j, l)] = v
        else:
            raise ValueError(f"bad tables line {line!r}")
    if k is None:
        raise ValueError("missing k line")
    return CanonicalTables(k, desc, dom)


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditViolation:
    condition: str  # "i", "ii" or "iii"
    theta: Optional[CnfOrdinal]  # None for the virtual root
    alpha: Optional[CnfOrdinal]
    level: int
    detail: str


@dataclass
class AuditReport:
    k: int
    deficiency: int
    violations: list[AuditViolation] = field(default_factory=list)
    checks: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def _colour_against(
    col: Colouring, trunc: Truncation, alpha: CnfOrdinal, xs: Sequence[CnfOrdinal]
) -> list[int]:
    row = colour_row(col, trunc, trunc.index(alpha))
    return [int(row[trunc.index(x)]) for x in xs]


def _sample_by_rank(trunc: Truncation, k: int, rank: int, count: int) -> list[CnfOrdinal]:
    out = []
    for x in trunc.members(rank=rank):
        if x.is_zero or x.leading_exp >= k:
            continue
        out.append(x)
        if len(out) >= count:
            break
    return out


def audit_canonical(
    col: Colouring,
    trunc: Truncation,
    k: int,
    d: int,
    alphas_per_rank: int = 2,
    roots_per_rank: int = 2,
) -> AuditReport:
    """Check the three canonicity conditions over a deterministic sample of
    subtree roots and vertices.

    The sample takes the least vertices of each rank; 0 is never sampled
    (its normal form is empty, so its slice coordinates are undefined).
    Condition (iii) compares, per rank, which side of each full-slice split
    came out large.
    """
    report = AuditReport(k=k, deficiency=d)
    side = trunc.max_coeff
    alphas: list[CnfOrdinal] = []
    for j in range(min(k, trunc.max_exp + 1)):
        alphas.extend(_sample_by_rank(trunc, k, j, alphas_per_rank))
    thetas: list[Optional[CnfOrdinal]] = [None]
    for c in range(1, k):
        thetas.extend(_sample_by_rank(trunc, k, c, roots_per_rank))

    verdicts: dict[tuple[int, int], dict[int, CnfOrdinal]] = defaultdict(dict)
    for theta in thetas:
        c_theta = k if theta is None else theta.cb_rank
        for level in range(c_theta):
            if theta is None:
                grid = root_slice_grid(trunc, k, level)
            else:
                grid = subtree_slice_grid(trunc, theta, level)
            if not grid:
                continue
            spec = LargenessSpec(levels=c_theta - level, side=side, deficiency=d)
            xs = list(grid)
            for alpha in alphas:
                cols = _colour_against(col, trunc, alpha, xs)
                one = {grid[x] for x, v in zip(xs, cols) if x != alpha and v == 1}
                zero = {grid[x] for x, v in zip(xs, cols) if x == alpha or v == 0}
                one_large = is_large(one, spec)
                zero_large = is_large(zero, spec)
                report.checks += 1
                if not (one_large or zero_large):
                    report.violations.append(
                        AuditViolation(
                            "i",
                            theta,
                            alpha,
                            level,
                            f"neither side large at d={d} "
                            f"(|N|={len(one)}, |slice\\N|={len(zero)})",
                        )
                    )
                elif theta is None:
                    if one_large != zero_large:
                        j = alpha.cb_rank
                        side_bit = 1 if one_large else 0
                        seen = verdicts[(j, level)]
                        if seen and side_bit not in seen:
                            other = next(iter(seen.values()))
                            report.violations.append(
                                AuditViolation(
                                    "iii",
                                    None,
                                    alpha,
                                    level,
                                    f"rank-{j} large side disagrees with {other}",
                                )
                            )
                        seen[side_bit] = alpha
            if theta is not None:
                cols = _colour_against(col, trunc, theta, xs)
                report.checks += 1
                if len(set(cols)) > 1:
                    bad = next(x for x, v in zip(xs, cols) if v != cols[0])
                    report.violations.append(
                        AuditViolation(
                            "ii",
                            theta,
                            theta,
                            level,
                            f"own-slice colours not constant (first split at {bad})",
                        )
                    )
    return report


# ---------------------------------------------------------------------------
# Extraction and synthesis
# ---------------------------------------------------------------------------


def _least_of_rank(trunc: Truncation, rank: int) -> CnfOrdinal:
    return nat(1) if rank == 0 else omega_power(rank)


def extract_tables(
    col: Colouring, trunc: Truncation, k: int, d: int
) -> CanonicalTables:
    """Read the colour tables off a (presumed canonical) colouring.

    descolor entries are read from the least rank-j vertex against its own
    subtree slice.  domcolor entries split the full rank-l slice around the
    least rank-j vertex, ignoring tree-related pairs; the entry is the side
    that is large at deficiency d, falling back to the side holding the
    majority of grid cells when neither is.
    """
    if k > trunc.max_exp + 1:
        raise ValueError("k exceeds what the truncation realizes")
    side = trunc.max_coeff
    base = side + 1
    ctx = truncation_context(trunc)
    vecs, ranks, idx = ctx.vecs, ctx.ranks, ctx.idx
    rows: dict[int, np.ndarray] = {}

    def row_of(alpha: CnfOrdinal) -> np.ndarray:
        i = trunc.index(alpha)
        if i not in rows:
            rows[i] = colour_row(col, trunc, i)
        return rows[i]

    def rank_mask(level: int) -> np.ndarray:
        m = (ranks == level) & (idx != 0)
        for e in range(k, trunc.max_exp + 1):
            m &= vecs[:, e] == 0
        return m

    desc: dict[tuple[int, int], int] = {}
    for j in range(1, k):
        alpha = omega_power(j)
        row = row_of(alpha)
        for l in range(j):
            # The subtree of a pure power is its whole initial segment, plus
            # the ordinal 0; its rank-l slice is an index range.
            sub = rank_mask(l) & (idx < base**j)
            if l == 0:
                sub[0] = True
            cols = row[sub].astype(int)
            ones = int(cols.sum())
            if ones * 2 == len(cols):
                desc[(j, l)] = int(cols[-1])
            else:
                desc[(j, l)] = 1 if ones * 2 > len(cols) else 0

    dom: dict[tuple[int, int], int] = {}
    grids = {}
    for l in range(k):
        member = rank_mask(l)
        for e in range(l + 1, k):
            member &= vecs[:, e] <= side - 1
        cols_order = list(range(k - 1, l, -1))
        coords = np.column_stack(
            [vecs[:, e] for e in cols_order] + [vecs[:, l] - 1]
        )
        grids[l] = (member, coords)
    for j in range(k):
        alpha = _least_of_rank(trunc, j)
        ia = trunc.index(alpha)
        row = row_of(alpha)
        for l in range(k):
            member, coords = grids[l]
            keep = member.copy()
            # Tree-related pairs are descolor territory: for these least
            # representatives they are an initial index segment plus the
            # pure power of the slice rank.
            if j >= 1:
                keep &= idx > base**j
            else:
                keep[ia] = False
            if l > j:
                keep[base**l] = False
            one = {tuple(c) for c in coords[keep & (row == 1)]}
            zero = {tuple(c) for c in coords[keep & ~(row == 1)]}
            spec = LargenessSpec(levels=k - l, side=side, deficiency=d)
            one_large, zero_large = is_large(one, spec), is_large(zero, spec)
            if one_large and not zero_large:
                dom[(j, l)] = 1
            elif zero_large and not one_large:
                dom[(j, l)] = 0
            elif len(one) != len(zero):
                dom[(j, l)] = 1 if len(one) > len(zero) else 0
            else:
                raise AmbiguousTableEntry(
                    f"domcolor({j},{l}) undecidable at deficiency {d}"
                )
    return CanonicalTables(k, desc, dom)


class SynthesizedColouring(Colouring):
    """Constructive inverse of table extraction.

    For a < b: tree-related pairs take descolor(CB b, CB a); otherwise the
    pair takes domcolor(CB a, CB b) when b's maximal coefficient exceeds
    the coefficient sum of a plus the threshold, and the opposite colour
    when it does not.
    """

    provenance = "synthesized"

    def __init__(self, tables: CanonicalTables, threshold: int):
        if threshold < 0:
            raise ValueError("threshold must be >= 0")
        self.tables = tables
        self.threshold = threshold
        super().__init__(f"synth-{tables.digest()}-t{threshold}")
        k = tables.k
        self._desc = np.zeros((k, k), dtype=np.int64)
        for (j, l), v in tables.descolor.items():
            self._desc[j, l] = v
        self._dom = np.zeros((k, k), dtype=np.int64)
        for (j, l), v in tables.domcolor.items():
            self._dom[j, l] = v

    @property
    def cache_key(self) -> Optional[str]:
        return self.name

    def _rule(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        lo, hi = (a, b) if a < b else (b, a)
        if hi.leading_exp >= self.tables.k:
            raise ValueError(f"{hi} outside omega^{self.tables.k}")
        if tree_le(lo, hi):
            return self.tables.descolor[(hi.cb_rank, lo.cb_rank)]
        dom = self.tables.domcolor[(lo.cb_rank, hi.cb_rank)]
        if hi.max_coeff > lo.coeff_sum + self.threshold:
            return dom
        return 1 - dom

    def row(self, ctx: TruncationContext, u: int) -> np.ndarray:
        if ctx.trunc.max_exp + 1 > self.tables.k:
            raise ValueError("truncation exceeds the tables' ambient rank")
        vecs, ranks, idx = ctx.vecs, ctx.ranks, ctx.idx
        a = vecs[u]
        ra = int(ranks[u])
        eq_from = ctx.eq_from(u)

        # v strictly below u in tree order: u = v + w^ra.
        v_lt_u = (
            eq_from[:, ra + 1] & (vecs[:, ra] == a[ra] - 1) & (ranks < ra)
            if ra >= 1
            else np.zeros(ctx.n, dtype=bool)
        )
        # u strictly below v: v = u + w^(rank v), per-vertex rank gather.
        eq_above_rank = np.take_along_axis(eq_from, ranks[:, None] + 1, axis=1)[:, 0]
        a_at_rank = a[ranks]
        u_lt_v = (ranks > ra) & eq_above_rank & (ctx.coeff_at_rank == a_at_rank + 1)
        treed = v_lt_u | u_lt_v

        j_hi = np.maximum(ranks, ra)
        j_lo = np.minimum(ranks, ra)
        desc_val = self._desc[j_hi, j_lo]

        smaller_is_v = idx < u
        j_small = np.where(smaller_is_v, ranks, ra)
        j_big = np.where(smaller_is_v, ra, ranks)
        dom_val = self._dom[j_small, j_big]
        sum_small = np.where(smaller_is_v, ctx.sumco, ctx.sumco[u])
        max_big = np.where(smaller_is_v, ctx.maxco[u], ctx.maxco)
        dominant = max_big > sum_small + self.threshold
        plain = np.where(dominant, dom_val, 1 - dom_val)

        out = np.where(treed, desc_val, plain) == 1
        out[u] = False
        return out


def synthesize_canonical(tables: CanonicalTables, threshold: int) -> Colouring:
    return SynthesizedColouring(tables, threshold)


# ---------------------------------------------------------------------------
# Scarcity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScarcityViolation:
    condition: int  # 1, 2 or 3
    fixed: int  # the l (1, 3) or j (2) that is over-populated
    entries: tuple[tuple[int, int], ...]

    def __str__(self) -> str:
        where = {1: "descolor column", 2: "domcolor row", 3: "domcolor column"}
        return f"({self.condition}) {where[self.condition]} {self.fixed}: {self.entries}"


def scarcity_check(tables: CanonicalTables) -> list[ScarcityViolation]:
    """The three at-most-one conditions a triangle-free colouring with no
    independent closed grid must satisfy."""
    out = []
    for l in range(tables.k):
        js = [j for j in range(l + 1, tables.k) if tables.descolor[(j, l)] == 1]
        # descolor(j, l) is read with j above l; condition (1) fixes the
        # subtree root's rank and bounds the member ranks connected by 1.
        if len(js) > 1:
            out.append(ScarcityViolation(1, l, tuple((j, l) for j in js)))
    for j in range(tables.k):
        ls = [l for l in range(tables.k) if tables.domcolor[(j, l)] == 1]
        if len(ls) > 1:
            out.append(ScarcityViolation(2, j, tuple((j, l) for l in ls)))
    for l in range(tables.k):
        js = [j for j in range(tables.k) if tables.domcolor[(j, l)] == 1]
        if len(js) > 1:
            out.append(ScarcityViolation(3, l, tuple((j, l) for j in js)))
    return out


# ---------------------------------------------------------------------------
# Oppression and harassment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OppressionCounterexample:
    kind: str  # "suffix", "sample" or "degree"
    subset: tuple[CnfOrdinal, ...]
    survivors: tuple[CnfOrdinal, ...]

    def __str__(self) -> str:
        return (
            f"{self.kind} of size {len(self.subset)} leaves "
            f"{len(self.survivors)} uncovered"
        )


def _uncovered(
    col: Colouring, subset: Sequence[CnfOrdinal], b: Sequence[CnfOrdinal]
) -> list[CnfOrdinal]:
    out = []
    for y in b:
        if not any(col.colour(x, y) == 1 for x in subset):
            out.append(y)
    return out


def oppress_check(
    col: Colouring,
    a: Sequence[CnfOrdinal],
    b: Sequence[CnfOrdinal],
    s: int,
    f: int,
    samples: int = 0,
    seed: int = 0,
) -> Optional[OppressionCounterexample]:
    """Suffix surrogate of domination: every suffix of a with at least s
    elements must cover all but f elements of b.  Random max-containing
    subsets approximate the remaining cofinal sets when samples > 0."""
    a = list(a)
    b = list(b)
    if set(a) & set(b):
        raise ValueError("a and b must be disjoint")
    for i in range(len(a) - s + 1):
        suffix = a[i:]
        missed = _uncovered(col, suffix, b)
        if len(missed) > f:
            return OppressionCounterexample("suffix", tuple(suffix), tuple(missed))
    if samples and len(a) > s:
        rng = random.Random(seed)
        for _ in range(samples):
            size = rng.randint(s, len(a))
            subset = sorted(rng.sample(a[:-1], size - 1) + [a[-1]])
            missed = _uncovered(col, subset, b)
            if len(missed) > f:
                return OppressionCounterexample(
                    "sample", tuple(subset), tuple(missed)
                )
    return None


def harass_check(
    col: Colouring,
    a: Sequence[CnfOrdinal],
    b: Sequence[CnfOrdinal],
    s: int,
    f: int,
    g: int,
    samples: int = 0,
    seed: int = 0,
) -> Optional[OppressionCounterexample]:
    """Oppression plus the per-element bound |N(x) n b| <= g for x in a."""
    for x in a:
        seen = tuple(y for y in b if col.colour(x, y) == 1)
        if len(seen) > g:
            return OppressionCounterexample("degree", (x,), seen)
    return oppress_check(col, a, b, s, f, samples=samples, seed=seed)


class RefinementError(RuntimeError):
    def __init__(self, blocking: CnfOrdinal, missed: int):
        super().__init__(
            f"no admissible suffix: {blocking} misses {missed} elements"
        )
        self.blocking = blocking
        self.missed = missed


def harassment_refine(
    col: Colouring,
    a: Sequence[CnfOrdinal],
    b: Sequence[CnfOrdinal],
    s: int,
    f: int,
    g: int,
) -> tuple[tuple[CnfOrdinal, ...], tuple[CnfOrdinal, ...]]:
    """Extract (a0, b0) with a0 a suffix of a of size >= s, |b \\ b0| <= f
    and every element of b0 missing at most g elements of a0."""
    a = list(a)
    b = list(b)
    best: Optional[tuple[CnfOrdinal, int]] = None
    for i in range(len(a) - s + 1):
        a0 = a[i:]
        misses = {y: sum(1 for x in a0 if col.colour(x, y) == 0) for y in b}
        b0 = [y for y in b if misses[y] <= g]
        if len(b) - len(b0) <= f:
            return tuple(a0), tuple(b0)
        worst = max((y for y in b if misses[y] > g), key=lambda y: misses[y])
        if best is None or misses[worst] < best[1]:
            best = (worst, misses[worst])
    assert best is not None
    raise RefinementError(*best)
