"""Inclusion dependencies and minimal unique column combinations vs oracles."""

import pytest

from conftest import make_db, make_table, random_db, random_table
from fkdetect.discovery import (
    Ind,
    MinUcc,
    discover_all_min_uccs,
    discover_min_uccs,
    discover_single_column_inds,
    inds_as_pairs,
    oracle_inds,
    oracle_uccs,
)
from fkdetect.store import Column, ColumnRef, Table


def ucc_sets(uccs: set[MinUcc]) -> set[frozenset]:
    return {u.columns for u in uccs}


class TestIndDiscovery:
    def test_matches_oracle_on_random_databases(self, kernel_backend):
        for seed in range(40):
            db = random_db(seed, max_tables=4, max_cols=4, max_rows=60)
            assert discover_single_column_inds(db) == oracle_inds(db), f"seed {seed}"

    def test_basic_containment(self, kernel_backend):
        db = make_db(
            "d",
            [
                make_table("small", [("a", "integer", [1, 2])]),
                make_table("big", [("b", "integer", [1, 2, 3])]),
            ],
        )
        got = inds_as_pairs(discover_single_column_inds(db))
        assert got == {("small", "a", "big", "b")}

    def test_nulls_ignored_on_referencing_side(self, kernel_backend):
        db = make_db(
            "d",
            [
                make_table("small", [("a", "integer", [1, None, 2, None])]),
                make_table("big", [("b", "integer", [1, 2, 3, 3])]),
            ],
        )
        got = inds_as_pairs(discover_single_column_inds(db))
        assert ("small", "a", "big", "b") in got

    def test_empty_column_vacuously_contained(self, kernel_backend):
        db = make_db(
            "d",
            [
                make_table("e", [("a", "integer", [None, None])]),
                make_table("big", [("b", "integer", [1, 2])]),
            ],
        )
        got = inds_as_pairs(discover_single_column_inds(db))
        assert ("e", "a", "big", "b") in got
        assert ("big", "b", "e", "a") not in got

    def test_cross_type_never_pairs(self, kernel_backend):
        db = make_db(
            "d",
            [
                make_table("t", [("i", "integer", [1]), ("f", "float", [1.0]), ("s", "text", ["1"])]),
            ],
        )
        assert discover_single_column_inds(db) == set()

    def test_same_table_pairs_allowed_self_pairs_not(self, kernel_backend):
        db = make_db(
            "d",
            [make_table("t", [("narrow", "integer", [1, 1]), ("wide", "integer", [1, 2])])],
        )
        got = inds_as_pairs(discover_single_column_inds(db))
        assert got == {("t", "narrow", "t", "wide")}

    def test_equal_columns_pair_both_ways(self, kernel_backend):
        db = make_db(
            "d",
            [
                make_table("x", [("a", "integer", [5, 6])]),
                make_table("y", [("b", "integer", [6, 5])]),
            ],
        )
        got = inds_as_pairs(discover_single_column_inds(db))
        assert got == {("x", "a", "y", "b"), ("y", "b", "x", "a")}

    def test_discovered_set_is_transitively_closed(self, kernel_backend):
        for seed in (3, 11, 19):
            db = random_db(seed, max_tables=4, max_cols=4, max_rows=40)
            got = discover_single_column_inds(db)
            pairs = {(i.referencing, i.referenced) for i in got}
            by_source: dict = {}
            for a, b in pairs:
                by_source.setdefault(a, set()).add(b)
            for a, b in pairs:
                for c in by_source.get(b, ()):
                    if c != a:
                        assert (a, c) in pairs, (str(a), str(b), str(c))

    def test_boolean_and_date_groups(self, kernel_backend):
        from datetime import date

        db = make_db(
            "d",
            [
                make_table("t1", [("f", "boolean", [True]), ("d", "date", [date(2020, 1, 1)])]),
                make_table("t2", [("g", "boolean", [True, False]),
                                  ("e", "date", [date(2020, 1, 1), date(2020, 1, 2)])]),
            ],
        )
        got = inds_as_pairs(discover_single_column_inds(db))
        assert ("t1", "f", "t2", "g") in got
        assert ("t1", "d", "t2", "e") in got


class TestMinUccDiscovery:
    def test_matches_oracle_on_random_tables(self, kernel_backend):
        for seed in range(40):
            table = random_table(seed, max_cols=5, max_rows=80)
            assert discover_min_uccs(table, 4) == oracle_uccs(table, 4), f"seed {seed}"

    def test_pair_needed_when_no_single_unique(self, kernel_backend):
        table = make_table("t", [("x", "integer", [1, 1, 2]), ("y", "integer", [1, 2, 2])])
        assert ucc_sets(discover_min_uccs(table)) == {frozenset({"x", "y"})}

    def test_single_unique_column(self, kernel_backend):
        table = make_table("t", [("id", "integer", [3, 1, 2]), ("v", "integer", [0, 0, 0])])
        assert ucc_sets(discover_min_uccs(table)) == {frozenset({"id"})}

    def test_duplicate_rows_kill_all_uccs(self, kernel_backend):
        table = make_table("t", [("a", "integer", [1, 1]), ("b", "integer", [2, 2])])
        assert discover_min_uccs(table) == set()

    def test_zero_rows_has_no_uccs(self, kernel_backend):
        table = Table("t", [Column("a", 1, "integer", [])], 0)
        assert discover_min_uccs(table) == set()

    def test_nulls_compare_equal(self, kernel_backend):
        table = make_table("t", [("a", "integer", [None, None]), ("b", "integer", [1, 2])])
        got = ucc_sets(discover_min_uccs(table))
        assert frozenset({"a"}) not in got
        assert got == {frozenset({"b"})}

    def test_null_distinct_from_values(self, kernel_backend):
        table = make_table("t", [("a", "integer", [None, 1])])
        assert ucc_sets(discover_min_uccs(table)) == {frozenset({"a"})}

    def test_minimality_no_subset_pairs(self, kernel_backend):
        for seed in (2, 9, 23):
            table = random_table(seed, max_cols=6, max_rows=40)
            got = ucc_sets(discover_min_uccs(table, 4))
            for s in got:
                for other in got:
                    assert not (other < s), (s, other)

    def test_every_result_is_actually_unique(self, kernel_backend):
        for seed in (4, 15):
            table = random_table(seed, max_cols=5, max_rows=60)
            n = table.row_count
            for ucc in discover_min_uccs(table, 4):
                cols = sorted(ucc.columns)
                projected = {
                    tuple(table.column(c).values[i] for c in cols) for i in range(n)
                }
                assert len(projected) == n

    def test_max_arity_limits_search(self, kernel_backend):
        table = make_table(
            "t",
            [("x", "integer", [1, 1, 2]), ("y", "integer", [1, 2, 2])],
        )
        assert discover_min_uccs(table, max_arity=1) == set()
        assert ucc_sets(discover_min_uccs(table, max_arity=2)) == {frozenset({"x", "y"})}

    def test_bad_arity_rejected(self, kernel_backend):
        table = make_table("t", [("a", "integer", [1])])
        with pytest.raises(ValueError, match="max_arity"):
            discover_min_uccs(table, 0)

    def test_arity_three_combination(self, kernel_backend):
        # rows engineered so only the full triple is unique
        table = make_table(
            "t",
            [
                ("a", "integer", [0, 0, 0, 0, 1, 1, 1, 1]),
                ("b", "integer", [0, 0, 1, 1, 0, 0, 1, 1]),
                ("c", "integer", [0, 1, 0, 1, 0, 1, 0, 1]),
            ],
        )
        assert ucc_sets(discover_min_uccs(table, 4)) == {frozenset({"a", "b", "c"})}
        assert discover_min_uccs(table, max_arity=2) == set()

    def test_discover_all_returns_per_table_map(self, kernel_backend):
        db = make_db(
            "d",
            [
                make_table("u", [("id", "integer", [1, 2])]),
                make_table("v", [("a", "integer", [1, 1])]),
            ],
        )
        got = discover_all_min_uccs(db)
        assert set(got) == {"u", "v"}
        assert ucc_sets(got["u"]) == {frozenset({"id"})}
        assert got["v"] == set()


class TestHelpers:
    def test_ind_str_and_pairs(self):
        ind = Ind(ColumnRef("a", "x"), ColumnRef("b", "y"))
        assert str(ind) == "a.x→b.y"
        assert inds_as_pairs([ind]) == {("a", "x", "b", "y")}

    def test_minucc_sorted_columns(self):
        ucc = MinUcc("t", frozenset({"b", "a"}))
        assert ucc.sorted_columns() == ("a", "b")
