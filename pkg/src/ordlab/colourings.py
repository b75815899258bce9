"""Symmetric {0,1} pair-colourings, including the explicit triangle-free
graph built from four coefficient-comparison edge families.

For an unordered pair of distinct ordinals the CB-rank difference selects
the single family that may fire:

* difference 1: the lower-rank element must be a tree-order cover (E1);
* difference 2: the higher-rank element must be ordinal-smaller (E2);
* difference 3 and 4: ordinal order, tree-incomparability and coefficient
  comparisons against the higher element's coefficients (E3, E4).

Edges are the symmetric closure of the fired families.
"""

from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from .ordinals import CnfOrdinal, Truncation, parse_ordinal
from .tree import parent, tree_le

__all__ = [
    "EdgeFamily",
    "edge_family",
    "Colouring",
    "GomegaColouring",
    "ExampleOmega2Colouring",
    "EmptyColouring",
    "CompleteColouring",
    "EdgeSetColouring",
    "MatrixColouring",
    "DerivedColouring",
    "colour",
    "restrict",
    "TruncationContext",
    "truncation_context",
    "colour_row",
    "parse_edge_file",
    "builtin_colouring",
    "BUILTIN_NAMES",
]


# ---------------------------------------------------------------------------
# Edge families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeFamily:
    """Family tag of an unordered pair; tag "none" when no family fires."""

    tag: str
    n: Optional[int] = None

    @property
    def fires(self) -> bool:
        return self.tag != "none"


NO_FAMILY = EdgeFamily("none")


def edge_family(a: CnfOrdinal, b: CnfOrdinal) -> EdgeFamily:
    """The unique family covering {a, b}, or "none"."""
    if a == b:
        raise ValueError("edge_family requires distinct arguments")
    if a.cb_rank > b.cb_rank:
        a, b = b, a
    lo, hi = a, b
    n = hi.cb_rank
    diff = n - lo.cb_rank
    if diff == 1:
        if parent(lo) == hi:
            return EdgeFamily("E1", n)
    elif diff == 2:
        if hi < lo:
            return EdgeFamily("E2", n)
    elif diff == 3:
        if lo < hi and not tree_le(lo, hi) and hi.max_coeff < lo.coefficient(n - 1):
            return EdgeFamily("E3", n)
    elif diff == 4:
        if (
            lo < hi
            and not tree_le(lo, hi)
            and hi.max_coeff > lo.coefficient(n - 1) + lo.coefficient(n - 2)
        ):
            return EdgeFamily("E4", n)
    return NO_FAMILY


# ---------------------------------------------------------------------------
# Vectorised truncation context
# ---------------------------------------------------------------------------


class TruncationContext:
    """Coefficient matrix and per-vertex statistics for one truncation.

    Row i of ``vecs`` holds the coefficients of the ordinal at index i,
    column e being the coefficient of omega^e.
    """

    def __init__(self, trunc: Truncation):
        self.trunc = trunc
        n = trunc.size
        base = trunc.max_coeff + 1
        width = trunc.max_exp + 1
        idx = np.arange(n, dtype=np.int64)
        vecs = np.empty((n, width), dtype=np.int64)
        for e in range(width):
            vecs[:, e] = (idx // base**e) % base
        self.n = n
        self.idx = idx
        self.vecs = vecs
        self.ranks = np.argmax(vecs != 0, axis=1).astype(np.int64)
        self.maxco = vecs.max(axis=1)
        self.sumco = vecs.sum(axis=1)
        self.coeff_at_rank = np.take_along_axis(
            vecs, self.ranks[:, None], axis=1
        )[:, 0]

    def eq_from(self, u: int) -> np.ndarray:
        """eq_from[v, e] = vertex v agrees with vertex u on every coefficient
        at exponents >= e; the sentinel column max_exp+1 is all True."""
        width = self.vecs.shape[1]
        out = np.ones((self.n, width + 1), dtype=bool)
        eqc = self.vecs == self.vecs[u]
        out[:, :width] = np.logical_and.accumulate(eqc[:, ::-1], axis=1)[:, ::-1]
        return out


@lru_cache(maxsize=32)
def _context_cached(max_exp: int, max_coeff: int) -> TruncationContext:
    return TruncationContext(Truncation(max_exp, max_coeff))


def truncation_context(trunc: Truncation) -> TruncationContext:
    return _context_cached(trunc.max_exp, trunc.max_coeff)


# ---------------------------------------------------------------------------
# Colourings
# ---------------------------------------------------------------------------


class Colouring:
    """A total symmetric rule on unordered pairs of distinct ordinals.

    ``bound``, when set, clips the vertex domain used for adjacency and
    reports; the rule itself stays total.
    """

    provenance = "built-in"

    def __init__(self, base_name: str, bound: Optional[CnfOrdinal] = None):
        self.base_name = base_name
        self.bound = bound

    @property
    def name(self) -> str:
        if self.bound is None:
            return self.base_name
        return f"{self.base_name}<{self.bound}"

    @property
    def cache_key(self) -> Optional[str]:
        return None

    def colour(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        if a == b:
            raise ValueError("colour requires distinct arguments")
        return self._rule(a, b)

    def _rule(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        raise NotImplementedError

    def row(self, ctx: TruncationContext, u: int) -> Optional[np.ndarray]:
        """Vectorised colour of vertex u against the whole universe, or None
        when only the scalar rule is available."""
        return None

    def vertices(self, t: Truncation) -> list[CnfOrdinal]:
        if self.bound is None:
            return list(t)
        return [x for x in t if x < self.bound]

    def restrict(self, bound: CnfOrdinal) -> "Colouring":
        clone = copy.copy(self)
        clone.bound = bound
        return clone


def colour(col: Colouring, a: CnfOrdinal, b: CnfOrdinal) -> int:
    return col.colour(a, b)


def restrict(col: Colouring, t: Truncation, bound: Optional[CnfOrdinal]) -> Colouring:
    if bound is None:
        return col
    return col.restrict(bound)


class GomegaColouring(Colouring):
    def __init__(self, bound: Optional[CnfOrdinal] = None):
        super().__init__("gomega", bound)

    @property
    def cache_key(self) -> Optional[str]:
        return self.name

    def _rule(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        return 1 if edge_family(a, b).fires else 0

    def row(self, ctx: TruncationContext, u: int) -> np.ndarray:
        vecs, ranks, idx = ctx.vecs, ctx.ranks, ctx.idx
        top = ctx.trunc.max_exp
        a = vecs[u]
        ra = int(ranks[u])
        eq_from = ctx.eq_from(u)
        out = np.zeros(ctx.n, dtype=bool)

        # E1, u as the parent: covers decrement u's rank coefficient.
        if ra >= 1:
            out |= (
                (ranks == ra - 1)
                & eq_from[:, ra + 1]
                & (vecs[:, ra] == a[ra] - 1)
            )
        # E1, u as the child: its parent is a single vertex.
        pu = parent(ctx.trunc.ordinal_at(u))
        if ctx.trunc.contains(pu):
            out[ctx.trunc.index(pu)] = True

        # E2: the higher-rank element must be ordinal-smaller.
        if ra >= 2:
            out |= (ranks == ra - 2) & (idx > u)
        if ra + 2 <= top:
            out |= (ranks == ra + 2) & (idx < u)

        # E3 / E4 with u as the low-rank element.
        for gap, cmp in ((3, "lt"), (4, "gt")):
            n = ra + gap
            if n > top:
                continue
            treed = eq_from[:, n + 1] & (vecs[:, n] == a[n] + 1)
            mask = (ranks == n) & (idx > u) & ~treed
            if cmp == "lt":
                mask &= ctx.maxco < a[n - 1]
            else:
                mask &= ctx.maxco > a[n - 1] + a[n - 2]
            out |= mask

        # E3 / E4 with u as the high-rank element (n = ra).
        if ra >= 3:
            treed = eq_from[:, ra + 1] & (vecs[:, ra] == a[ra] - 1)
            out |= (
                (ranks == ra - 3)
                & (idx < u)
                & ~treed
                & (vecs[:, ra - 1] > ctx.maxco[u])
            )
        if ra >= 4:
            treed = eq_from[:, ra + 1] & (vecs[:, ra] == a[ra] - 1)
            out |= (
                (ranks == ra - 4)
                & (idx < u)
                & ~treed
                & (vecs[:, ra - 1] + vecs[:, ra - 2] < ctx.maxco[u])
            )
        out[u] = False
        return out


class ExampleOmega2Colouring(Colouring):
    """The worked two-rule canonical colouring of omega^2: writing elements
    as w*k + k', the pair {w*k, w*l+n} is an edge when l > k > n > 0 and
    {w*k+k', w*l+l'} is an edge when k < l and l' > k' > 0.  Pairs touching
    any exponent >= 2 are uncoloured (0)."""

    def __init__(self, bound: Optional[CnfOrdinal] = None):
        super().__init__("paper-example", bound)

    @property
    def cache_key(self) -> Optional[str]:
        return self.name

    def _rule(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        if a.leading_exp > 1 or b.leading_exp > 1:
            return 0
        k, kp = a.coefficient(1), a.coefficient(0)
        l, lp = b.coefficient(1), b.coefficient(0)
        for (x, xp), (y, yp) in (((k, kp), (l, lp)), ((l, lp), (k, kp))):
            if xp == 0 and x >= 1 and yp >= 1 and y > x > yp:
                return 1
        if kp >= 1 and lp >= 1:
            if (k < l and lp > kp) or (l < k and kp > lp):
                return 1
        return 0

    def row(self, ctx: TruncationContext, u: int) -> np.ndarray:
        vecs = ctx.vecs
        a = vecs[u]
        width = vecs.shape[1]
        out = np.zeros(ctx.n, dtype=bool)
        if width > 2 and a[2:].any():
            return out
        low = ~vecs[:, 2:].any(axis=1) if width > 2 else np.ones(ctx.n, dtype=bool)
        k = int(a[1]) if width > 1 else 0
        kp = int(a[0])
        L = vecs[:, 1] if width > 1 else np.zeros(ctx.n, dtype=np.int64)
        LP = vecs[:, 0]
        if kp == 0 and k >= 1:
            out |= (LP >= 1) & (L > k) & (LP < k)
        if kp >= 1:
            out |= (LP == 0) & (L >= 1) & (L < k) & (L > kp)
            out |= (LP >= 1) & (((L > k) & (LP > kp)) | ((L < k) & (LP < kp)))
        out &= low
        out[u] = False
        return out


class EmptyColouring(Colouring):
    def __init__(self, bound: Optional[CnfOrdinal] = None):
        super().__init__("empty", bound)

    @property
    def cache_key(self) -> Optional[str]:
        return self.name

    def _rule(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        return 0

    def row(self, ctx: TruncationContext, u: int) -> np.ndarray:
        return np.zeros(ctx.n, dtype=bool)


class CompleteColouring(Colouring):
    def __init__(self, bound: Optional[CnfOrdinal] = None):
        super().__init__("complete", bound)

    @property
    def cache_key(self) -> Optional[str]:
        return self.name

    def _rule(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        return 1

    def row(self, ctx: TruncationContext, u: int) -> np.ndarray:
        out = np.ones(ctx.n, dtype=bool)
        out[u] = False
        return out


class EdgeSetColouring(Colouring):
    """Explicit edge list over a declared truncation; everything else is 0."""

    provenance = "file"

    def __init__(
        self,
        edges: Iterable[tuple[CnfOrdinal, CnfOrdinal]],
        trunc: Truncation,
        name: Optional[str] = None,
        bound: Optional[CnfOrdinal] = None,
    ):
        canon = frozenset(
            (a, b) if a < b else (b, a) for a, b in edges if a != b
        )
        self.edges = canon
        self.declared = trunc
        digest = hashlib.sha256(
            "\n".join(sorted(f"{a}|{b}" for a, b in canon)).encode()
        ).hexdigest()[:12]
        super().__init__(name or f"edges-{digest}", bound)

    @property
    def cache_key(self) -> Optional[str]:
        return self.name

    def _rule(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        pair = (a, b) if a < b else (b, a)
        return 1 if pair in self.edges else 0


class MatrixColouring(Colouring):
    """Dense symmetric adjacency over one truncation; used for fuzzing."""

    provenance = "table"

    def __init__(self, matrix: np.ndarray, trunc: Truncation, name: str):
        m = np.asarray(matrix, dtype=bool)
        if m.shape != (trunc.size, trunc.size):
            raise ValueError("matrix shape does not match truncation")
        if not (m == m.T).all():
            raise ValueError("matrix must be symmetric")
        self.matrix = m
        self.declared = trunc
        super().__init__(name, None)

    def _rule(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        return int(self.matrix[self.declared.index(a), self.declared.index(b)])

    def row(self, ctx: TruncationContext, u: int) -> np.ndarray:
        if ctx.trunc != self.declared:
            raise ValueError("matrix colouring queried on a foreign truncation")
        out = self.matrix[u].copy()
        out[u] = False
        return out


class DerivedColouring(Colouring):
    """Base colouring with a set of pairs flipped (defect injection)."""

    provenance = "derived"

    def __init__(
        self,
        base: Colouring,
        flips: Iterable[tuple[CnfOrdinal, CnfOrdinal]],
        name: Optional[str] = None,
    ):
        self.base = base
        self.flips = frozenset((a, b) if a < b else (b, a) for a, b in flips)
        super().__init__(name or f"{base.base_name}#flip{len(self.flips)}", base.bound)

    def _rule(self, a: CnfOrdinal, b: CnfOrdinal) -> int:
        pair = (a, b) if a < b else (b, a)
        v = self.base.colour(a, b)
        return 1 - v if pair in self.flips else v

    def row(self, ctx: TruncationContext, u: int) -> Optional[np.ndarray]:
        base_row = self.base.row(ctx, u)
        if base_row is None:
            return None
        out = base_row.copy()
        ou = ctx.trunc.ordinal_at(u)
        for a, b in self.flips:
            other = b if a == ou else (a if b == ou else None)
            if other is not None and ctx.trunc.contains(other):
                j = ctx.trunc.index(other)
                out[j] = ~out[j]
        return out


def colour_row(col: Colouring, trunc: Truncation, u: int) -> np.ndarray:
    """Colours of vertex u against the whole universe, boolean, via the
    vectorised path when the colouring provides one."""
    ctx = truncation_context(trunc)
    r = col.row(ctx, u)
    if r is not None:
        return r
    out = np.zeros(trunc.size, dtype=bool)
    a = trunc.ordinal_at(u)
    for v in range(trunc.size):
        if v != u:
            out[v] = bool(col.colour(a, trunc.ordinal_at(v)))
    return out


def parse_edge_file(text: str, trunc: Truncation) -> EdgeSetColouring:
    """One pair of ordinal literals per line; '#' starts a comment."""
    edges = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 2:
            raise ValueError(f"expected two literals per line, got {line!r}")
        edges.append((parse_ordinal(toks[0]), parse_ordinal(toks[1])))
    return EdgeSetColouring(edges, trunc)


BUILTIN_NAMES = ("gomega", "paper-example", "empty", "complete")


def builtin_colouring(name: str) -> Colouring:
    table = {
        "gomega": GomegaColouring,
        "paper-example": ExampleOmega2Colouring,
        "empty": EmptyColouring,
        "complete": CompleteColouring,
    }
    if name not in table:
        raise KeyError(f"unknown colouring {name!r}")
    return table[name]()
