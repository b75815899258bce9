"""Ordinals below omega^omega in Cantor normal form.

An ordinal is represented as its list of (exponent, coefficient) terms with
strictly decreasing exponents and positive coefficients; the empty list is 0.
The literal grammar is::

    ordinal := "0" | term ("+" term)*
    term    := "w" ("^" nat)? ("*" nat)? | nat

where ``w`` denotes omega, an omitted ``^`` means exponent 1, an omitted
``*`` means coefficient 1, and a bare ``nat`` is the exponent-0 term.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional

__all__ = [
    "CnfOrdinal",
    "OrdinalParseError",
    "ZERO",
    "OMEGA",
    "omega_power",
    "nat",
    "parse_ordinal",
    "format_ordinal",
    "compare",
    "add",
    "cb_rank",
    "coefficient",
    "Truncation",
    "enumerate_universe",
]


class OrdinalParseError(ValueError):
    """A literal does not conform to the ordinal grammar."""


@dataclass(frozen=True)
class CnfOrdinal:
    """An ordinal < omega^omega as its Cantor normal form term list."""

    terms: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        prev = None
        for exp, coeff in self.terms:
            if exp < 0:
                raise ValueError(f"negative exponent {exp}")
            if coeff < 1:
                raise ValueError(f"zero coefficient at exponent {exp}")
            if prev is not None and exp >= prev:
                raise ValueError("exponents must strictly decrease")
            prev = exp

    # Ordinal order coincides with lexicographic order on the term tuples:
    # a longer list extends a shorter equal prefix by a strictly smaller tail.
    def __lt__(self, other: "CnfOrdinal") -> bool:
        return self.terms < other.terms

    def __le__(self, other: "CnfOrdinal") -> bool:
        return self.terms <= other.terms

    def __gt__(self, other: "CnfOrdinal") -> bool:
        return self.terms > other.terms

    def __ge__(self, other: "CnfOrdinal") -> bool:
        return self.terms >= other.terms

    def __str__(self) -> str:
        return format_ordinal(self)

    def __repr__(self) -> str:
        return f"CnfOrdinal({format_ordinal(self)!r})"

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def cb_rank(self) -> int:
        """Least exponent of the normal form; 0 for the ordinal 0."""
        return self.terms[-1][0] if self.terms else 0

    @property
    def leading_exp(self) -> int:
        return self.terms[0][0] if self.terms else 0

    def coefficient(self, i: int) -> int:
        """Coefficient of omega^i, 0 when the term is absent."""
        for exp, coeff in self.terms:
            if exp == i:
                return coeff
            if exp < i:
                break
        return 0

    @property
    def max_coeff(self) -> int:
        return max((c for _, c in self.terms), default=0)

    @property
    def coeff_sum(self) -> int:
        return sum(c for _, c in self.terms)

    def __add__(self, other: "CnfOrdinal") -> "CnfOrdinal":
        return add(self, other)


ZERO = CnfOrdinal()
OMEGA = CnfOrdinal(((1, 1),))


def omega_power(exp: int, coeff: int = 1) -> CnfOrdinal:
    """omega^exp * coeff; nat(coeff) when exp = 0, ZERO when coeff = 0."""
    if coeff == 0:
        return ZERO
    return CnfOrdinal(((exp, coeff),))


def nat(n: int) -> CnfOrdinal:
    return ZERO if n == 0 else CnfOrdinal(((0, n),))


_TERM_RE = re.compile(r"^w(?:\^(\d+))?(?:\*(\d+))?$|^(\d+)$")


def parse_ordinal(text: str) -> CnfOrdinal:
    """Parse an ordinal literal; inverse of :func:`format_ordinal`."""
    text = text.strip()
    if not text:
        raise OrdinalParseError("empty literal")
    if text == "0":
        return ZERO
    terms: list[tuple[int, int]] = []
    for piece in text.split("+"):
        m = _TERM_RE.match(piece)
        if m is None:
            raise OrdinalParseError(f"bad term {piece!r}")
        if m.group(3) is not None:
            exp, coeff = 0, int(m.group(3))
        else:
            exp = int(m.group(1)) if m.group(1) is not None else 1
            coeff = int(m.group(2)) if m.group(2) is not None else 1
        if coeff < 1:
            raise OrdinalParseError(f"zero coefficient in {piece!r}")
        if terms and exp >= terms[-1][0]:
            raise OrdinalParseError("exponents must strictly decrease")
        terms.append((exp, coeff))
    return CnfOrdinal(tuple(terms))


def format_ordinal(a: CnfOrdinal) -> str:
    if a.is_zero:
        return "0"
    parts = []
    for exp, coeff in a.terms:
        if exp == 0:
            parts.append(str(coeff))
        else:
            head = "w" if exp == 1 else f"w^{exp}"
            parts.append(head if coeff == 1 else f"{head}*{coeff}")
    return "+".join(parts)


def compare(a: CnfOrdinal, b: CnfOrdinal) -> int:
    """Total ordinal order: -1, 0 or 1."""
    if a.terms == b.terms:
        return 0
    return -1 if a.terms < b.terms else 1


def add(a: CnfOrdinal, b: CnfOrdinal) -> CnfOrdinal:
    """Ordinal sum: terms of a below b's leading exponent are absorbed."""
    if b.is_zero:
        return a
    if a.is_zero:
        return b
    cut = b.leading_exp
    kept = [t for t in a.terms if t[0] > cut]
    merged = a.coefficient(cut) + b.terms[0][1]
    return CnfOrdinal(tuple(kept) + ((cut, merged),) + b.terms[1:])


def cb_rank(a: CnfOrdinal) -> int:
    return a.cb_rank


def coefficient(a: CnfOrdinal, i: int) -> int:
    return a.coefficient(i)


@dataclass(frozen=True)
class Truncation:
    """Finite vertex universe: all ordinals with exponents <= max_exp and
    coefficients <= max_coeff.  Indexing interprets the coefficient vector
    as a little-endian base-(max_coeff+1) numeral, which is monotone in
    ordinal order."""

    max_exp: int
    max_coeff: int

    def __post_init__(self) -> None:
        if self.max_exp < 0:
            raise ValueError("max_exp must be >= 0")
        if self.max_coeff < 1:
            raise ValueError("max_coeff must be >= 1")

    @property
    def size(self) -> int:
        return (self.max_coeff + 1) ** (self.max_exp + 1)

    def contains(self, a: CnfOrdinal) -> bool:
        return all(e <= self.max_exp and c <= self.max_coeff for e, c in a.terms)

    def index(self, a: CnfOrdinal) -> int:
        if not self.contains(a):
            raise ValueError(f"{a} outside truncation {self}")
        base = self.max_coeff + 1
        return sum(c * base**e for e, c in a.terms)

    def ordinal_at(self, idx: int) -> CnfOrdinal:
        if not 0 <= idx < self.size:
            raise IndexError(idx)
        base = self.max_coeff + 1
        terms = []
        for exp in range(self.max_exp, -1, -1):
            coeff = (idx // base**exp) % base
            if coeff:
                terms.append((exp, coeff))
        return CnfOrdinal(tuple(terms))

    def __iter__(self) -> Iterator[CnfOrdinal]:
        return (self.ordinal_at(i) for i in range(self.size))

    def members(self, rank: Optional[int] = None) -> list[CnfOrdinal]:
        """Ascending universe, optionally filtered to CB rank = rank."""
        if rank is None:
            return list(self)
        return [a for a in self if a.cb_rank == rank]


def enumerate_universe(
    t: Truncation, rank_filter: Optional[int] = None
) -> list[CnfOrdinal]:
    return t.members(rank_filter)
