"""The tree order on ordinals below omega^omega and the closed-grid witness.

``beta <| alpha`` holds when ``alpha = beta + w^g`` for some ``g`` strictly
above the CB rank of beta.  Every ordinal has a unique cover ``parent``;
the relation restricted to a truncation is a finite forest whose level-n
nodes are the ordinals of CB rank n.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

from .ordinals import (
    CnfOrdinal,
    OrdinalParseError,
    Truncation,
    add,
    format_ordinal,
    omega_power,
    parse_ordinal,
)

if TYPE_CHECKING:  # pragma: no cover
    from .colourings import Colouring

__all__ = [
    "tree_le",
    "tree_lt",
    "parent",
    "children",
    "subtree_rank",
    "TreeCopyCertificate",
    "TreeCopyMismatch",
    "is_tree_copy",
    "ClosedGridWitness",
    "ViolationKind",
    "WitnessViolation",
    "validate_witness",
    "format_witness",
    "parse_witness",
    "LeafError",
]


class LeafError(ValueError):
    """Requested children of a rank-0 ordinal."""


def tree_le(beta: CnfOrdinal, alpha: CnfOrdinal) -> bool:
    """True iff beta equals alpha or alpha = beta + w^g for some g > CB(beta).

    The exponent search is bounded by alpha's leading exponent.
    """
    if beta == alpha:
        return True
    for g in range(beta.cb_rank + 1, alpha.leading_exp + 1):
        if add(beta, omega_power(g)) == alpha:
            return True
    return False


def tree_lt(beta: CnfOrdinal, alpha: CnfOrdinal) -> bool:
    return beta != alpha and tree_le(beta, alpha)


def parent(beta: CnfOrdinal) -> CnfOrdinal:
    """The unique cover of beta in the tree order."""
    return add(beta, omega_power(beta.cb_rank + 1))


def children(alpha: CnfOrdinal, m: int) -> list[CnfOrdinal]:
    """First m covers below alpha: decrement the last coefficient and append
    w^(c-1)*i for i = 1..m, where c is alpha's CB rank."""
    c = alpha.cb_rank
    if alpha.is_zero or c == 0:
        raise LeafError(f"{alpha} has CB rank 0")
    exp, coeff = alpha.terms[-1]
    base = alpha.terms[:-1] if coeff == 1 else alpha.terms[:-1] + ((exp, coeff - 1),)
    return [CnfOrdinal(base + ((c - 1, i),)) for i in range(1, m + 1)]


def subtree_rank(alpha: CnfOrdinal, level: int, t: Truncation) -> list[CnfOrdinal]:
    """All universe members below-or-equal alpha in tree order with CB rank
    = level, ascending."""
    if level > alpha.cb_rank:
        raise ValueError(f"level {level} exceeds CB rank of {alpha}")
    return [b for b in t.members(rank=level) if tree_le(b, alpha)]


@dataclass(frozen=True)
class TreeCopyCertificate:
    """Order isomorphism witnessing that image copies pattern's tree order."""

    mapping: tuple[tuple[CnfOrdinal, CnfOrdinal], ...]


@dataclass(frozen=True)
class TreeCopyMismatch:
    pattern_pair: tuple[CnfOrdinal, CnfOrdinal]
    image_pair: tuple[CnfOrdinal, CnfOrdinal]


def is_tree_copy(pattern, image):
    """Check whether the unique order-preserving bijection pattern -> image
    preserves the tree order both ways.

    Returns a TreeCopyCertificate, or a TreeCopyMismatch naming the first
    violating pair.
    """
    ps = sorted(set(pattern))
    qs = sorted(set(image))
    if len(ps) != len(qs):
        raise ValueError("pattern and image must have equal cardinality")
    pairs = tuple(zip(ps, qs))
    for i, (pa, qa) in enumerate(pairs):
        for pb, qb in pairs[i + 1 :]:
            if tree_le(pa, pb) != tree_le(qa, qb):
                return TreeCopyMismatch((pa, pb), (qa, qb))
    return TreeCopyCertificate(pairs)


# ---------------------------------------------------------------------------
# Closed-grid witnesses
# ---------------------------------------------------------------------------


class ViolationKind(enum.Enum):
    SHAPE = "shape"
    LIMIT_RANK = "limit-rank"
    BLOCK_RANK = "block-rank"
    ORDER = "order"
    CLOSURE = "closure"
    INDEPENDENCE = "independence"


@dataclass(frozen=True)
class WitnessViolation:
    kind: ViolationKind
    message: str

    def __str__(self) -> str:
        return f"{self.kind.value}: {self.message}"


@dataclass(frozen=True)
class ClosedGridWitness:
    """Finite stand-in for an independent copy of omega^2 closed in its
    supremum: blocks B_1..B_p interleaved with limits l_1..l_{p-1}; the last
    limit is an exterior anchor, not a member."""

    limits: tuple[CnfOrdinal, ...]
    blocks: tuple[tuple[CnfOrdinal, ...], ...]

    @property
    def members(self) -> list[CnfOrdinal]:
        out: list[CnfOrdinal] = []
        for i, block in enumerate(self.blocks):
            out.extend(block)
            if i < len(self.limits) - 1:
                out.append(self.limits[i])
        return out


def validate_witness(
    w: ClosedGridWitness, col: "Colouring"
) -> list[WitnessViolation]:
    """Check every structural invariant and pairwise independence of the
    members; an empty list means the witness is accepted."""
    out: list[WitnessViolation] = []
    p = len(w.limits)
    if p < 1 or len(w.blocks) != p:
        out.append(
            WitnessViolation(
                ViolationKind.SHAPE,
                f"{len(w.blocks)} blocks against {p} limits",
            )
        )
        return out
    sizes = {len(b) for b in w.blocks}
    if len(sizes) != 1 or 0 in sizes:
        out.append(
            WitnessViolation(ViolationKind.SHAPE, f"block sizes {sorted(sizes)}")
        )
        return out

    for lam in w.limits:
        if lam.cb_rank < 1:
            out.append(
                WitnessViolation(ViolationKind.LIMIT_RANK, f"limit {lam} has rank 0")
            )
    for block in w.blocks:
        ranks = {b.cb_rank for b in block}
        if len(ranks) > 1:
            out.append(
                WitnessViolation(
                    ViolationKind.BLOCK_RANK,
                    f"block ranks {sorted(ranks)} not constant",
                )
            )

    for i in range(1, p):
        if not w.limits[i - 1] < w.limits[i]:
            out.append(
                WitnessViolation(
                    ViolationKind.ORDER,
                    f"limits {w.limits[i - 1]} !< {w.limits[i]}",
                )
            )
    seq: list[CnfOrdinal] = []
    for i, block in enumerate(w.blocks):
        seq.extend(block)
        if i < p - 1:
            seq.append(w.limits[i])
    for x, y in zip(seq, seq[1:]):
        if not x < y:
            out.append(
                WitnessViolation(ViolationKind.ORDER, f"members {x} !< {y}")
            )
    for i, block in enumerate(w.blocks):
        lam = w.limits[i]
        prev = w.limits[i - 1] if i > 0 else None
        for b in block:
            if prev is not None and not prev < b:
                out.append(
                    WitnessViolation(
                        ViolationKind.ORDER, f"{b} not above previous limit {prev}"
                    )
                )
            if b == lam or not tree_le(b, lam):
                out.append(
                    WitnessViolation(
                        ViolationKind.CLOSURE,
                        f"{b} not strictly below {lam} in tree order",
                    )
                )

    members = w.members
    for i, x in enumerate(members):
        for y in members[i + 1 :]:
            if x != y and col.colour(x, y) == 1:
                out.append(
                    WitnessViolation(
                        ViolationKind.INDEPENDENCE, f"edge {{{x}, {y}}}"
                    )
                )
    return out


def format_witness(w: ClosedGridWitness) -> str:
    lines = ["limits: " + " ".join(format_ordinal(x) for x in w.limits)]
    for block in w.blocks:
        lines.append("block: " + " ".join(format_ordinal(x) for x in block))
    return "\n".join(lines) + "\n"


def parse_witness(text: str) -> ClosedGridWitness:
    limits: Optional[tuple[CnfOrdinal, ...]] = None
    blocks: list[tuple[CnfOrdinal, ...]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("limits:"):
            if limits is not None:
                raise OrdinalParseError("duplicate limits line")
            limits = tuple(parse_ordinal(tok) for tok in line[7:].split())
        elif line.startswith("block:"):
            blocks.append(tuple(parse_ordinal(tok) for tok in line[6:].split()))
        else:
            raise OrdinalParseError(f"unrecognised witness line {line!r}")
    if limits is None:
        raise OrdinalParseError("missing limits line")
    return ClosedGridWitness(limits, tuple(blocks))
