"""Exhaustive checks and bounded searches over colourings of truncations.

Triangle scanning and the four lower-bound sub-steps are exhaustive over
their truncations.  The witness, grid and subset searches are sound but
deliberately incomplete: every returned object is re-validated before it
is handed back, and "none" only means "none at this scale and budget".
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

from .adjacency import AdjacencyBitmap, adjacency, build_adjacency
from .canonical import (
    CanonicalTables,
    RefinementError,
    ScarcityViolation,
    harassment_refine,
    oppress_check,
    scarcity_check,
)
from .colourings import Colouring, GomegaColouring
from .ordinals import CnfOrdinal, Truncation, ZERO, add, omega_power
from .tree import (
    ClosedGridWitness,
    children,
    parent,
    subtree_rank,
    tree_le,
    validate_witness,
)

__all__ = [
    "TriangleReport",
    "find_triangles",
    "naive_triangles",
    "StepResult",
    "LowerBoundStepReport",
    "check_lowerbound_steps",
    "block_rows",
    "search_independent_grid",
    "validate_grid",
    "independent_subset",
    "validate_independent",
    "search_closed_witness",
    "dominating_vertex",
    "validate_dominating",
    "ExtractParams",
    "ExtractOutcome",
    "extract_upper",
]

TRIANGLE_LIST_CAP = 10_000


# ---------------------------------------------------------------------------
# Triangles
# ---------------------------------------------------------------------------


@dataclass
class TriangleReport:
    trunc: Truncation
    colouring_name: str
    vertices: int
    edges: int
    triangle_count: int
    triangles: list[tuple[CnfOrdinal, CnfOrdinal, CnfOrdinal]]
    wall_time: float

    @property
    def triangle_free(self) -> bool:
        return self.triangle_count == 0


def find_triangles(adj: AdjacencyBitmap) -> TriangleReport:
    """All triangles, by intersecting neighbourhood bit rows along each
    edge; listed triples are re-checked against the bitmap."""
    start = time.perf_counter()
    rows = adj.row_ints()
    n = adj.n
    edges = 0
    count = 0
    listed: list[tuple[int, int, int]] = []
    for u in range(n):
        ru = rows[u]
        rest = ru >> (u + 1)
        v = u + 1
        while rest:
            tz = (rest & -rest).bit_length() - 1
            v += tz
            edges += 1
            common = (ru & rows[v]) >> (v + 1)
            if common:
                w = v + 1
                while common:
                    tz2 = (common & -common).bit_length() - 1
                    w += tz2
                    count += 1
                    if len(listed) < TRIANGLE_LIST_CAP:
                        listed.append((u, v, w))
                    common >>= tz2 + 1
                    w += 1
            rest >>= tz + 1
            v += 1
    tri = []
    for u, v, w in listed:
        assert adj.get(u, v) and adj.get(u, w) and adj.get(v, w)
        tri.append(
            (adj.trunc.ordinal_at(u), adj.trunc.ordinal_at(v), adj.trunc.ordinal_at(w))
        )
    return TriangleReport(
        trunc=adj.trunc,
        colouring_name=adj.colouring_name,
        vertices=adj.n,
        edges=edges,
        triangle_count=count,
        triangles=tri,
        wall_time=time.perf_counter() - start,
    )


def naive_triangles(
    col: Colouring, trunc: Truncation
) -> list[tuple[CnfOrdinal, CnfOrdinal, CnfOrdinal]]:
    """Cubic reference scan, usable up to a few hundred vertices."""
    xs = col.vertices(trunc)
    out = []
    for i, a in enumerate(xs):
        for j in range(i + 1, len(xs)):
            b = xs[j]
            if col.colour(a, b) != 1:
                continue
            for k in range(j + 1, len(xs)):
                c = xs[k]
                if col.colour(a, c) == 1 and col.colour(b, c) == 1:
                    out.append((a, b, c))
    return out


# ---------------------------------------------------------------------------
# Lower-bound sub-steps
# ---------------------------------------------------------------------------


@dataclass
class StepResult:
    step: str
    passed: bool
    vacuous: bool = False
    counterexample: Optional[tuple[CnfOrdinal, ...]] = None
    checked: int = 0


@dataclass
class LowerBoundStepReport:
    k: int
    n: int
    trunc: Truncation
    colouring_name: str
    steps: list[StepResult]

    @property
    def ok(self) -> bool:
        return all(s.passed for s in self.steps)


def check_lowerbound_steps(
    k: int, trunc: Truncation, col: Optional[Colouring] = None
) -> LowerBoundStepReport:
    """The four finitely checkable sub-steps behind the rank floor, taken
    at n = the truncation's top rank.

    (a) every cover of a rank-n vertex is adjacent to it;
    (b) rank-n below rank-(n-2) in ordinal order is always an edge;
    (c) between rank-n vertices a < b with b's coefficients below the
        ceiling, some rank-(n-3) member of a's subtree sees b;
    (d) every rank-(n-4) vertex with small top coefficients sees some
        tree-incomparable rank-n vertex above it.
    """
    if col is None:
        col = GomegaColouring()
    n = trunc.max_exp
    if n < 4:
        raise ValueError("need max_exp >= 4 for the four sub-steps")
    if 5 * k > n:
        raise ValueError(f"k={k} too large for max_exp={n}")
    adj = build_adjacency(col, trunc)
    idx = trunc.index
    c_max = trunc.max_coeff
    top = trunc.members(rank=n)
    steps: list[StepResult] = []

    res = StepResult("a", True)
    for alpha in top:
        ia = idx(alpha)
        for child in children(alpha, c_max):
            res.checked += 1
            if not adj.get(ia, idx(child)):
                res.passed = False
                res.counterexample = (alpha, child)
                break
        if not res.passed:
            break
    steps.append(res)

    res = StepResult("b", True)
    lower = trunc.members(rank=n - 2)
    for x in top:
        ix = idx(x)
        for y in lower:
            if x < y:
                res.checked += 1
                if not adj.get(ix, idx(y)):
                    res.passed = False
                    res.counterexample = (x, y)
                    break
        if not res.passed:
            break
    steps.append(res)

    res = StepResult("c", True)
    for alpha, beta in combinations(top, 2):
        if beta.max_coeff >= c_max:
            continue
        res.checked += 1
        ib = idx(beta)
        if not any(
            adj.get(idx(g), ib) for g in subtree_rank(alpha, n - 3, trunc)
        ):
            res.passed = False
            res.counterexample = (alpha, beta)
            break
    res.vacuous = res.checked == 0
    steps.append(res)

    res = StepResult("d", True)
    for gamma in trunc.members(rank=n - 4):
        if gamma.coefficient(n - 1) + gamma.coefficient(n - 2) >= c_max:
            continue
        # The unbounded supply of top-rank vertices has a finite stand-in:
        # gamma only counts when some tree-incomparable one sits above it.
        pool = [b for b in top if b > gamma and not tree_le(gamma, b)]
        if not pool:
            continue
        res.checked += 1
        ig = idx(gamma)
        if not any(adj.get(ig, idx(beta)) for beta in pool):
            res.passed = False
            res.counterexample = (gamma,)
            break
    res.vacuous = res.checked == 0
    steps.append(res)

    return LowerBoundStepReport(k, n, trunc, col.name, steps)


# ---------------------------------------------------------------------------
# Independent grids and subsets
# ---------------------------------------------------------------------------


def block_rows(trunc: Truncation, level: int = 0) -> list[list[CnfOrdinal]]:
    """Rank-`level` vertices grouped into rows by everything above the
    level coefficient: the natural omega-block structure."""
    rows: list[list[CnfOrdinal]] = []
    key = None
    for x in trunc.members(rank=level):
        if x.is_zero:
            continue
        head = tuple(t for t in x.terms if t[0] > level)
        if head != key:
            rows.append([])
            key = head
        rows[-1].append(x)
    return rows


def _compatible(col: Colouring, x: CnfOrdinal, chosen: Sequence[CnfOrdinal]) -> bool:
    return all(x != y and col.colour(x, y) == 0 for y in chosen)


def search_independent_grid(
    col: Colouring,
    rows: Sequence[Sequence[CnfOrdinal]],
    p: int,
    q: int,
    node_budget: int = 50_000,
) -> Optional[list[list[CnfOrdinal]]]:
    """First independent selection of q cells from each of p rows (row-major
    backtracking), or None within the budget."""
    budget = [node_budget]

    def fill_row(pool: list[CnfOrdinal], chosen: list[CnfOrdinal], start: int):
        if len(chosen) == q:
            yield list(chosen)
            return
        for i in range(start, len(pool)):
            if budget[0] <= 0:
                return
            budget[0] -= 1
            x = pool[i]
            if _compatible(col, x, chosen):
                chosen.append(x)
                yield from fill_row(pool, chosen, i + 1)
                chosen.pop()

    def rec(row_idx: int, picked: list[list[CnfOrdinal]], flat: list[CnfOrdinal]):
        if len(picked) == p:
            return list(picked)
        if len(rows) - row_idx < p - len(picked) or budget[0] <= 0:
            return None
        pool = [x for x in rows[row_idx] if _compatible(col, x, flat)]
        if len(pool) >= q:
            for combo in fill_row(pool, [], 0):
                picked.append(combo)
                flat.extend(combo)
                got = rec(row_idx + 1, picked, flat)
                if got is not None:
                    return got
                picked.pop()
                del flat[-q:]
        return rec(row_idx + 1, picked, flat)

    grid = rec(0, [], [])
    if grid is not None and validate_grid(col, grid, p, q):
        return grid
    return None


def validate_grid(
    col: Colouring, grid: Sequence[Sequence[CnfOrdinal]], p: int, q: int
) -> bool:
    if len(grid) != p or any(len(r) != q for r in grid):
        return False
    flat = [x for r in grid for x in r]
    if len(set(flat)) != len(flat):
        return False
    return all(
        col.colour(a, b) == 0 for a, b in combinations(flat, 2)
    )


def independent_subset(
    col: Colouring,
    s: Sequence[CnfOrdinal],
    target: int,
    exact_threshold: int = 24,
) -> Optional[list[CnfOrdinal]]:
    """Independent subset of size >= target: exact backtracking below the
    threshold, first-fit greedy above it; the result is re-verified."""
    xs = list(s)
    if target <= 0:
        return []
    if len(xs) < target:
        return None
    if len(xs) <= exact_threshold:

        def rec(start: int, chosen: list[CnfOrdinal]) -> Optional[list[CnfOrdinal]]:
            if len(chosen) == target:
                return list(chosen)
            if len(chosen) + len(xs) - start < target:
                return None
            for i in range(start, len(xs)):
                if _compatible(col, xs[i], chosen):
                    chosen.append(xs[i])
                    got = rec(i + 1, chosen)
                    if got is not None:
                        return got
                    chosen.pop()
            return None

        out = rec(0, [])
    else:
        greedy: list[CnfOrdinal] = []
        for x in xs:
            if _compatible(col, x, greedy):
                greedy.append(x)
        out = greedy[:target] if len(greedy) >= target else None
    if out is not None and validate_independent(col, out) and len(out) >= target:
        return out
    return None


def validate_independent(col: Colouring, xs: Sequence[CnfOrdinal]) -> bool:
    return all(col.colour(a, b) == 0 for a, b in combinations(xs, 2))


# ---------------------------------------------------------------------------
# Closed-grid witness search
# ---------------------------------------------------------------------------


def _witness_backtrack(
    col: Colouring,
    limit_pool: Sequence[CnfOrdinal],
    candidates_for,
    p: int,
    q: int,
    node_budget: int,
) -> Optional[ClosedGridWitness]:
    """Shared backtracking core: ascending limits interleaved with block
    fills drawn from candidates_for(prev_limit, limit), a map rank -> pool.
    Returns the first candidate accepted by the validator."""
    budget = [node_budget]

    def fill_block(pool, members, chosen, start):
        if len(chosen) == q:
            yield list(chosen)
            return
        for i in range(start, len(pool)):
            if budget[0] <= 0:
                return
            budget[0] -= 1
            x = pool[i]
            if _compatible(col, x, chosen) and _compatible(col, x, members):
                chosen.append(x)
                yield from fill_block(pool, members, chosen, i + 1)
                chosen.pop()

    def rec(limits, blocks, members):
        if budget[0] <= 0:
            return None
        if len(limits) == p:
            w = ClosedGridWitness(tuple(limits), tuple(tuple(b) for b in blocks))
            if not validate_witness(w, col):
                return w
            return None
        prev = limits[-1] if limits else None
        is_member_limit = len(limits) < p - 1
        for lam in limit_pool:
            if prev is not None and not prev < lam:
                continue
            if budget[0] <= 0:
                return None
            if is_member_limit and not _compatible(col, lam, members):
                continue
            by_rank = candidates_for(prev, lam)
            for rank in sorted(by_rank):
                pool = by_rank[rank]
                if len(pool) < q:
                    continue
                new_members = members + ([lam] if is_member_limit else [])
                for block in fill_block(pool, new_members, [], 0):
                    got = rec(
                        limits + [lam],
                        blocks + [block],
                        members + block + ([lam] if is_member_limit else []),
                    )
                    if got is not None:
                        return got
        return None

    return rec([], [], [])


def search_closed_witness(
    col: Colouring,
    trunc: Truncation,
    p: int,
    q: int,
    max_limit_rank: int,
    node_budget: int = 50_000,
) -> Optional[ClosedGridWitness]:
    """Backtracking over ascending limit tuples with interleaved block
    fills; any returned witness has passed the validator."""
    universe = list(trunc)
    limit_pool = [x for x in universe if 1 <= x.cb_rank <= max_limit_rank]

    def candidates_for(lo: Optional[CnfOrdinal], lam: CnfOrdinal):
        by_rank: dict[int, list[CnfOrdinal]] = {}
        for x in universe:
            if (lo is None or lo < x) and x < lam and tree_le(x, lam):
                by_rank.setdefault(x.cb_rank, []).append(x)
        return by_rank

    return _witness_backtrack(col, limit_pool, candidates_for, p, q, node_budget)


# ---------------------------------------------------------------------------
# Dominating vertex
# ---------------------------------------------------------------------------


def dominating_vertex(
    col: Colouring,
    rows: Sequence[Sequence[CnfOrdinal]],
    b_side: Sequence[CnfOrdinal],
    p: int,
    q: int,
) -> Optional[tuple[CnfOrdinal, list[list[CnfOrdinal]]]]:
    """Pigeonhole over least B-neighbours: group the grid side by the
    minimum of its B-neighbourhood, then try to carve a p x q grid out of
    each candidate's neighbourhood, most frequent candidate first."""
    flat = [x for row in rows for x in row]
    if set(flat) & set(b_side):
        raise ValueError("grid side and b side must be disjoint")
    counts: dict[CnfOrdinal, int] = {}
    for a in flat:
        seen = [b for b in b_side if col.colour(a, b) == 1]
        if seen:
            m = min(seen)
            counts[m] = counts.get(m, 0) + 1
    order = {b: i for i, b in enumerate(b_side)}
    candidates = sorted(counts, key=lambda b: (-counts[b], order[b]))
    for b in candidates:
        picked: list[list[CnfOrdinal]] = []
        for row in rows:
            cells = [x for x in row if col.colour(x, b) == 1]
            if len(cells) >= q:
                picked.append(cells[:q])
                if len(picked) == p:
                    break
        if len(picked) == p and validate_dominating(col, b, picked, p, q):
            return b, picked
    return None


def validate_dominating(
    col: Colouring,
    b: CnfOrdinal,
    grid: Sequence[Sequence[CnfOrdinal]],
    p: int,
    q: int,
) -> bool:
    if len(grid) != p or any(len(r) != q for r in grid):
        return False
    flat = [x for r in grid for x in r]
    if len(set(flat)) != len(flat) or b in flat:
        return False
    return all(col.colour(x, b) == 1 for x in flat)


# ---------------------------------------------------------------------------
# Upper-bound extraction pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtractParams:
    p: int = 2
    q: int = 3
    s: int = 3
    f: int = 1
    g: int = 2
    retries: int = 8
    slice_cap: int = 48
    node_budget: int = 20_000
    oppress_samples: int = 0
    seed: int = 0


@dataclass
class ExtractOutcome:
    stage: str
    witness: Optional[ClosedGridWitness]
    log: list[str] = field(default_factory=list)
    scarcity: list[ScarcityViolation] = field(default_factory=list)
    delegated: bool = False

    @property
    def ok(self) -> bool:
        return self.witness is not None


def _anchor_slices(
    trunc: Truncation, anchors: Sequence[CnfOrdinal], level: int, cap: int
) -> dict[CnfOrdinal, list[CnfOrdinal]]:
    # Members of the anchor's subtree above the previous anchor are exactly
    # prefix + tail with prefix one step below the anchor.
    top = trunc.max_exp
    sub = Truncation(top - 1, trunc.max_coeff)
    tails = [t for t in sub.members(rank=level) if not t.is_zero][:cap]
    out = {}
    for h in anchors:
        coeff = h.coefficient(top)
        prefix = omega_power(top, coeff - 1) if coeff > 1 else ZERO
        out[h] = [add(prefix, t) for t in tails]
    return out


def extract_upper(
    col: Colouring,
    tables: CanonicalTables,
    trunc: Truncation,
    params: ExtractParams = ExtractParams(),
) -> ExtractOutcome:
    """Best-effort staged extraction of an independent closed grid.

    The stages mirror the two-colour analysis: a scarcity gate, selection
    of two fully-zero levels, anchor thinning, the suffix oppression test,
    then either the contradiction construction (blocks out of the anchor
    slices) or refinement plus a dominating vertex.  Scale infeasibility
    surfaces as a stage-tagged diagnostic, never as an invalid witness.
    """
    log: list[str] = []
    top = trunc.max_exp
    if tables.k != top + 1:
        raise ValueError("tables ambient rank must match the truncation")

    sc = scarcity_check(tables)
    if sc:
        log.append(f"scarcity violated ({len(sc)} conditions); delegating")
        w = search_closed_witness(
            col, trunc, params.p, params.q, max_limit_rank=top,
            node_budget=params.node_budget,
        )
        return ExtractOutcome("scarcity", w, log, sc, delegated=True)

    goods = [
        t
        for t in range(top)
        if tables.descolor[(top, t)] == 0
        and tables.domcolor[(t, top)] == 0
        and tables.domcolor[(top, t)] == 0
    ]
    if len(goods) < 2:
        log.append(f"only {len(goods)} fully-zero levels below {top}")
        return ExtractOutcome("select-levels", None, log)
    pairs = [
        (x, y) for i, x in enumerate(goods) for y in goods[i + 1 :]
    ]
    # Blocks sit inside their limit's subtree, so a pair whose cross-level
    # descolor vanishes gives the assembly a chance on non-triangle-free
    # input as well.
    pairs.sort(key=lambda xy: (tables.descolor[(xy[1], xy[0])], xy))
    t1, t2 = pairs[0]
    log.append(f"levels t1={t1} t2={t2}")

    anchors = [omega_power(top, i) for i in range(1, trunc.max_coeff + 1)]
    slices1 = _anchor_slices(trunc, anchors, t1, params.slice_cap)
    slices2 = _anchor_slices(trunc, anchors, t2, params.slice_cap)
    for _ in range(params.retries):
        pruned = False
        for pos, h in enumerate(anchors):
            earlier = anchors[:pos]
            for store in (slices1, slices2):
                store[h] = [
                    x
                    for x in store[h]
                    if all(col.colour(x, e) == 0 for e in earlier)
                ]
            if min(len(slices1[h]), len(slices2[h])) < params.q:
                log.append(f"anchor {h} starved; dropped")
                anchors.remove(h)
                pruned = True
                break
        if not pruned:
            break
    if len(anchors) < max(params.p, 2):
        log.append(f"{len(anchors)} anchors left after thinning")
        return ExtractOutcome("anchors", None, log)

    failure = None
    for pos in range(len(anchors) - 1):
        later = anchors[pos + 1 :]
        ce = oppress_check(
            col,
            slices1[anchors[pos]],
            later,
            params.s,
            params.f,
            samples=params.oppress_samples,
            seed=params.seed,
        )
        if ce is not None:
            failure = (pos, ce)
            break

    if failure is not None:
        pos, ce = failure
        log.append(f"oppression fails at anchor {anchors[pos]}: {ce}")

        def anchor_candidates(prev, lam):
            pool = [x for x in slices1[lam] if prev is None or prev < x]
            return {t1: pool}

        w = _witness_backtrack(
            col, anchors, anchor_candidates, params.p, params.q,
            params.node_budget,
        )
        if w is None:
            log.append("no independent grid over the anchor slices")
            return ExtractOutcome("claim-branch", None, log)
        log.append("witness from the contradiction construction")
        return ExtractOutcome("claim-branch", w, log)

    log.append("oppression holds at every anchor")
    base = anchors[0]
    later = anchors[1:]
    try:
        a0, b0 = harassment_refine(
            col, slices2[base], later, params.s, params.f, params.g
        )
    except RefinementError as err:
        log.append(f"refinement failed: {err}")
        return ExtractOutcome("refine", None, log)
    if not b0:
        log.append("refinement kept no anchors")
        return ExtractOutcome("refine", None, log)

    a1 = slices1[base]
    rows: list[list[CnfOrdinal]] = []
    key = None
    for x in a1:
        head = tuple(t for t in x.terms if t[0] > t1)
        if head != key:
            rows.append([])
            key = head
        rows[-1].append(x)
    dom = dominating_vertex(col, rows, list(b0), params.p, params.q)
    if dom is None:
        log.append("no dominating anchor hosts a grid")
        return ExtractOutcome("dominate", None, log)
    h_star, _ = dom
    log.append(f"dominating anchor {h_star}")

    # In a triangle-free colouring the neighbourhood of the dominating
    # anchor is independent; assemble the witness wholly inside it, with
    # blocks converging to refined second-level limits.
    in_star = [lam for lam in a0 if col.colour(lam, h_star) == 1]
    sub = Truncation(t2 - 1, trunc.max_coeff)
    tails = [x for x in sub.members(rank=t1) if not x.is_zero][: params.slice_cap]

    def star_candidates(prev, lam):
        exp, coeff = lam.terms[-1]
        pred_terms = lam.terms[:-1] if coeff == 1 else lam.terms[:-1] + (
            (exp, coeff - 1),
        )
        pred = CnfOrdinal(pred_terms)
        pool = []
        for t in tails:
            x = add(pred, t)
            if (prev is None or prev < x) and col.colour(x, h_star) == 1:
                pool.append(x)
        return {t1: pool}

    w = _witness_backtrack(
        col, in_star, star_candidates, params.p, params.q, params.node_budget
    )
    if w is None:
        log.append("no witness inside the dominating neighbourhood")
        return ExtractOutcome("assemble", None, log)
    log.append("witness inside the dominating neighbourhood")
    return ExtractOutcome("assemble", w, log)
