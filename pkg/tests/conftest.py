import random

import numpy as np
import pytest
from hypothesis import strategies as st

from ordlab.canonical import CanonicalTables
from ordlab.colourings import MatrixColouring
from ordlab.ordinals import CnfOrdinal, Truncation
from ordlab.tree import parent, tree_le


def cnf_ordinals(max_exp=4, max_coeff=5):
    """Strategy for ordinals with bounded exponents and coefficients."""

    def build(picks):
        terms = tuple(
            (e, c) for e, c in sorted(picks.items(), reverse=True) if c > 0
        )
        return CnfOrdinal(terms)

    return st.dictionaries(
        st.integers(0, max_exp), st.integers(1, max_coeff), max_size=max_exp + 1
    ).map(build)


def random_matrix_colouring(trunc: Truncation, seed: int, density=0.25):
    rng = np.random.default_rng(seed)
    n = trunc.size
    m = rng.random((n, n)) < density
    m = np.triu(m, 1)
    m = m | m.T
    return MatrixColouring(m, trunc, f"rand-{seed}")


def random_scarce_tables(k: int, rng: random.Random) -> CanonicalTables:
    """Random tables satisfying the three at-most-one conditions."""
    desc = {}
    for l in range(k):
        js = list(range(l + 1, k))
        pick = rng.choice(js) if js and rng.random() < 0.7 else None
        for j in range(l + 1, k):
            desc[(j, l)] = 1 if j == pick else 0
    dom = {(j, l): 0 for j in range(k) for l in range(k)}
    cols = list(range(k))
    rng.shuffle(cols)
    for j in range(k):
        if rng.random() < 0.6:
            dom[(j, cols[j])] = 1
    return CanonicalTables(k, desc, dom)


def raw_families(a: CnfOrdinal, b: CnfOrdinal) -> list[tuple[str, int]]:
    """The four family definitions evaluated directly over both orderings
    of the pair; independent of edge_family's rank-difference dispatch."""
    out = []
    for x, y in ((a, b), (b, a)):
        n = y.cb_rank
        if x.cb_rank + 1 == n and parent(x) == y:
            out.append(("E1", n))
        if x.cb_rank == y.cb_rank + 2 and x < y:
            out.append(("E2", x.cb_rank))
        if (
            x.cb_rank + 3 == n
            and x < y
            and not tree_le(x, y)
            and y.max_coeff < x.coefficient(n - 1)
        ):
            out.append(("E3", n))
        if (
            x.cb_rank + 4 == n
            and x < y
            and not tree_le(x, y)
            and y.max_coeff > x.coefficient(n - 1) + x.coefficient(n - 2)
        ):
            out.append(("E4", n))
    return out


@pytest.fixture
def tiny():
    return Truncation(1, 1)
