import random
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordlab.canonical import (
    AmbiguousTableEntry,
    CanonicalTables,
    LargenessSpec,
    RefinementError,
    audit_canonical,
    default_deficiency,
    extract_tables,
    format_tables,
    harass_check,
    harassment_refine,
    is_large,
    oppress_check,
    parse_tables,
    scarcity_check,
    synthesize_canonical,
)
from ordlab.colourings import MatrixColouring, builtin_colouring
from ordlab.ordinals import Truncation, parse_ordinal as po
from ordlab.tree import tree_le

from conftest import random_matrix_colouring, random_scarce_tables


def brute_large(points, levels, side, d):
    """Remove-at-most-d-per-level enumeration; oracle for is_large."""
    points = set(points)
    if levels == 1:
        return any(
            {(v,) for v in range(side) if v not in drop} <= points
            for r in range(d + 1)
            for drop in combinations(range(side), r)
        )
    for r in range(d + 1):
        for drop in combinations(range(side), r):
            if all(
                brute_large(
                    {p[1:] for p in points if p[0] == v}, levels - 1, side, d
                )
                for v in range(side)
                if v not in drop
            ):
                return True
    return False


class TestIsLarge:
    def test_full_grid(self):
        grid = set(product(range(4), repeat=2))
        assert is_large(grid, LargenessSpec(2, 4, 0))

    def test_missing_one_slice(self):
        grid = {(v, w) for v in range(1, 4) for w in range(4)}
        assert is_large(grid, LargenessSpec(2, 4, 1))
        assert not is_large(grid, LargenessSpec(2, 4, 0))

    def test_half_removed(self):
        grid = {(v, w) for v in range(2, 4) for w in range(4)}
        assert not is_large(grid, LargenessSpec(2, 4, 1))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            is_large({(1, 2)}, LargenessSpec(3, 4, 1))

    def test_spec_guards(self):
        with pytest.raises(ValueError):
            LargenessSpec(0, 4, 1)
        with pytest.raises(ValueError):
            LargenessSpec(2, 4, 4)

    @given(
        st.sets(
            st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)),
            max_size=40,
        ),
        st.integers(0, 2),
    )
    @settings(max_examples=40, deadline=None)
    def test_matches_brute_enumeration(self, points, d):
        spec = LargenessSpec(3, 4, d)
        assert is_large(points, spec) == brute_large(points, 3, 4, d)

    @given(
        st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=20),
        st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=10),
        st.integers(0, 2),
    )
    @settings(max_examples=40)
    def test_monotone(self, points, extra, d):
        spec = LargenessSpec(2, 5, d)
        if is_large(points, spec):
            assert is_large(points | extra, spec)


PAPER_TABLES = {
    "descolor": {(1, 0): 0},
    "domcolor": {(0, 0): 1, (0, 1): 0, (1, 0): 0, (1, 1): 0},
}


class TestAudit:
    def test_paper_example_clean_with_least_representatives(self):
        rep = audit_canonical(
            builtin_colouring("paper-example"),
            Truncation(1, 6),
            k=2,
            d=1,
            alphas_per_rank=1,
        )
        assert rep.ok and rep.checks > 0

    def test_paper_example_clean_at_default_deficiency(self):
        d = default_deficiency(6)
        assert d == 2
        rep = audit_canonical(builtin_colouring("paper-example"), Truncation(1, 6), 2, d)
        assert rep.ok

    def test_empty_clean_even_at_zero_deficiency(self):
        rep = audit_canonical(builtin_colouring("empty"), Truncation(1, 6), 2, 0)
        assert rep.ok

    def test_single_flipped_edge_caught_at_zero_deficiency(self):
        # one edge from the sampled rank-0 representative into an otherwise
        # empty (hence fully 0-large) slice
        t = Truncation(1, 4)
        n = t.size
        m = np.zeros((n, n), dtype=bool)
        i, j = t.index(po("1")), t.index(po("w*2+3"))
        m[i, j] = m[j, i] = True
        col = MatrixColouring(m, t, "one-flip")
        rep = audit_canonical(col, t, 2, 0)
        viols = [v for v in rep.violations if v.condition in ("i", "ii")]
        assert viols and any(v.alpha == po("1") for v in viols)

    def test_flip_inside_subtree_trips_entirety(self):
        t = Truncation(1, 4)
        n = t.size
        m = np.zeros((n, n), dtype=bool)
        i, j = t.index(po("w")), t.index(po("3"))
        m[i, j] = m[j, i] = True
        col = MatrixColouring(m, t, "sub-flip")
        rep = audit_canonical(col, t, 2, 0)
        assert any(v.condition == "ii" and v.alpha == po("w") for v in rep.violations)


class TestExtractTables:
    def test_paper_example_entries(self):
        tables = extract_tables(
            builtin_colouring("paper-example"), Truncation(1, 6), 2, 2
        )
        assert tables.descolor == PAPER_TABLES["descolor"]
        assert tables.domcolor == PAPER_TABLES["domcolor"]

    def test_empty_all_zero(self):
        tables = extract_tables(builtin_colouring("empty"), Truncation(1, 6), 2, 2)
        assert set(tables.descolor.values()) <= {0}
        assert set(tables.domcolor.values()) <= {0}

    def test_ambiguous_entry_raises(self):
        # two non-tree slice mates split 1/1 with zero deficiency
        t = Truncation(0, 3)
        n = t.size
        m = np.zeros((n, n), dtype=bool)
        i, j = t.index(po("1")), t.index(po("2"))
        m[i, j] = m[j, i] = True
        col = MatrixColouring(m, t, "tie")
        with pytest.raises(AmbiguousTableEntry):
            extract_tables(col, t, 1, 0)

    @pytest.mark.parametrize("seed", range(4))
    def test_roundtrip(self, seed):
        tables = random_scarce_tables(6, random.Random(seed))
        col = synthesize_canonical(tables, 1)
        got = extract_tables(col, Truncation(5, 4), 6, 1)
        assert got.descolor == tables.descolor
        assert got.domcolor == tables.domcolor


class TestSynthesize:
    def test_all_zero_rule_reading(self):
        k = 3
        zero = CanonicalTables(
            k,
            {(j, l): 0 for j in range(k) for l in range(j)},
            {(j, l): 0 for j in range(k) for l in range(k)},
        )
        col = synthesize_canonical(zero, 1)
        # colour 1 exactly on non-tree pairs below threshold dominance
        a, b = po("w"), po("w*2")
        assert not tree_le(a, b) and b.max_coeff <= a.coeff_sum + 1
        assert col.colour(a, b) == 1
        assert col.colour(po("w"), po("w+1")) == 1
        assert col.colour(po("1"), po("w^2*3")) == 0  # dominant, table 0
        assert col.colour(po("w"), po("w^2")) == 0  # tree pair, descolor 0

    def test_parent_child_takes_descolor(self):
        k = 4
        desc = {(j, l): (1 if (j, l) == (2, 1) else 0) for j in range(k) for l in range(j)}
        dom = {(j, l): 0 for j in range(k) for l in range(k)}
        col = synthesize_canonical(CanonicalTables(k, desc, dom), 1)
        assert col.colour(po("w*3"), po("w^2")) == 1
        assert col.colour(po("w*3+1"), po("w^2")) == 0  # rank pair (2,0)

    def test_rows_match_scalar(self):
        tables = random_scarce_tables(4, random.Random(5))
        col = synthesize_canonical(tables, 1)
        t = Truncation(3, 3)
        from ordlab.colourings import truncation_context

        ctx = truncation_context(t)
        xs = list(t)
        for u in range(0, t.size, 7):
            row = col.row(ctx, u)
            for v in range(t.size):
                expected = 0 if u == v else col.colour(xs[u], xs[v])
                assert bool(row[v]) == bool(expected), (xs[u], xs[v])

    def test_serialisation_roundtrip(self):
        tables = random_scarce_tables(5, random.Random(9))
        back = parse_tables(format_tables(tables))
        assert back == tables
        assert format_tables(tables).splitlines()[0] == "k 5"


def brute_scarcity(tables):
    bad = set()
    k = tables.k
    for l in range(k):
        hits = 0
        for j in range(k):
            if j > l and tables.descolor.get((j, l)) == 1:
                hits += 1
        if hits > 1:
            bad.add((1, l))
    for j in range(k):
        if sum(tables.domcolor[(j, l)] for l in range(k)) > 1:
            bad.add((2, j))
    for l in range(k):
        if sum(tables.domcolor[(j, l)] for j in range(k)) > 1:
            bad.add((3, l))
    return bad


class TestScarcity:
    def test_descolor_column_violation(self):
        desc = {(j, l): 0 for j in range(6) for l in range(j)}
        desc[(0 + 1, 0)] = 0
        desc[(5, 0)] = 1
        desc[(1, 0)] = 1
        dom = {(j, l): 0 for j in range(6) for l in range(6)}
        out = scarcity_check(CanonicalTables(6, desc, dom))
        assert len(out) == 1 and out[0].condition == 1 and out[0].fixed == 0

    def test_paper_tables_scarce(self):
        tables = CanonicalTables(2, dict(PAPER_TABLES["descolor"]), dict(PAPER_TABLES["domcolor"]))
        assert scarcity_check(tables) == []

    def test_domcolor_row_violation(self):
        desc = {(j, l): 0 for j in range(4) for l in range(j)}
        dom = {(j, l): 0 for j in range(4) for l in range(4)}
        dom[(2, 0)] = dom[(2, 3)] = 1
        out = scarcity_check(CanonicalTables(4, desc, dom))
        conds = {(v.condition, v.fixed) for v in out}
        assert (2, 2) in conds

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_brute_reimplementation(self, seed):
        rng = random.Random(seed)
        k = 5
        desc = {(j, l): rng.randint(0, 1) for j in range(k) for l in range(j)}
        dom = {(j, l): rng.randint(0, 1) for j in range(k) for l in range(k)}
        tables = CanonicalTables(k, desc, dom)
        got = {(v.condition, v.fixed) for v in scarcity_check(tables)}
        assert got == brute_scarcity(tables)


def bipartite_colouring(a_size, b_size, edges, trunc):
    n = trunc.size
    m = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        m[i, j] = m[j, i] = True
    return MatrixColouring(m, trunc, "bip")


class TestOppressHarass:
    def setup_method(self):
        self.t = Truncation(1, 6)
        self.a = [po(f"{i}") for i in range(1, 6)]
        self.b = [po(f"w+{i}") for i in range(1, 5)]

    def _col(self, edges):
        n = self.t.size
        m = np.zeros((n, n), dtype=bool)
        for x, y in edges:
            i, j = self.t.index(x), self.t.index(y)
            m[i, j] = m[j, i] = True
        return MatrixColouring(m, self.t, "bip")

    def test_complete_bipartite_oppresses(self):
        col = self._col([(x, y) for x in self.a for y in self.b])
        assert oppress_check(col, self.a, self.b, 2, 0) is None

    def test_empty_counterexample(self):
        col = self._col([])
        ce = oppress_check(col, self.a, self.b, 2, 1)
        assert ce is not None and len(ce.survivors) == len(self.b)

    def test_single_dominator(self):
        a = [po("1")]
        col = self._col([(po("1"), y) for y in self.b])
        assert oppress_check(col, a, self.b, 1, 0) is None

    def test_disjointness_required(self):
        col = self._col([])
        with pytest.raises(ValueError):
            oppress_check(col, self.a, self.a, 1, 0)

    def test_harass_adds_degree_bound(self):
        col = self._col([(x, y) for x in self.a for y in self.b])
        ce = harass_check(col, self.a, self.b, 2, 0, g=2)
        assert ce is not None and ce.kind == "degree"
        assert harass_check(col, self.a, self.b, 2, 0, g=len(self.b)) is None

    def test_matching_harasses(self):
        pairs = list(zip(self.a, self.b))
        col = self._col(pairs)
        assert harass_check(col, self.a[: len(self.b)], self.b,
                            s=len(self.b), f=0, g=1) is None

    def test_refine_complete(self):
        col = self._col([(x, y) for x in self.a for y in self.b])
        a0, b0 = harassment_refine(col, self.a, self.b, 2, 0, 0)
        assert set(b0) == set(self.b) and len(a0) >= 2

    def test_refine_drops_deaf_vertex(self):
        edges = [(x, y) for x in self.a for y in self.b[:-1]]
        col = self._col(edges)
        a0, b0 = harassment_refine(col, self.a, self.b, 2, 1, 0)
        assert set(b0) == set(self.b[:-1])

    def test_refine_failure_diagnoses(self):
        col = self._col([])
        with pytest.raises(RefinementError):
            harassment_refine(col, self.a, self.b, 2, 0, 0)
