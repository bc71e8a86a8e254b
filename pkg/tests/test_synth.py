"""Synthetic planted-key databases: determinism, shape checks, plant integrity."""

import random

import pytest

from fkdetect.discovery import discover_single_column_inds, oracle_inds
from fkdetect.evaluation import ref_to_pair
from fkdetect.synth import generate_planted_db, planted_hub_count


def db_signature(db):
    return [
        (t.name, t.row_count, [(c.name, c.ordinal, c.logical_type, c.values) for c in t.columns])
        for t in db.tables
    ]


class TestDeterminism:
    def test_same_seed_same_database(self):
        a_db, a_truth = generate_planted_db(seed=7, n_tables=6, n_cols=4, n_rows=25, n_fks=4)
        b_db, b_truth = generate_planted_db(seed=7, n_tables=6, n_cols=4, n_rows=25, n_fks=4)
        assert db_signature(a_db) == db_signature(b_db)
        assert a_truth.refs == b_truth.refs

    def test_different_seeds_differ(self):
        a_db, _ = generate_planted_db(seed=1, n_tables=4, n_cols=3, n_rows=20, n_fks=2)
        b_db, _ = generate_planted_db(seed=2, n_tables=4, n_cols=3, n_rows=20, n_fks=2)
        assert db_signature(a_db) != db_signature(b_db)

    def test_database_name_carries_seed(self):
        db, _ = generate_planted_db(seed=42, n_tables=3, n_cols=3, n_rows=10, n_fks=1)
        assert db.name == "planted42"


class TestShapeValidation:
    def test_too_few_tables(self):
        with pytest.raises(ValueError, match="at least 2 tables"):
            generate_planted_db(seed=0, n_tables=1)

    def test_too_few_columns(self):
        with pytest.raises(ValueError, match="at least 2 columns"):
            generate_planted_db(seed=0, n_cols=1)

    def test_too_few_rows(self):
        with pytest.raises(ValueError, match="at least 1 row"):
            generate_planted_db(seed=0, n_rows=0)

    def test_negative_fk_count(self):
        with pytest.raises(ValueError, match=">= 0"):
            generate_planted_db(seed=0, n_fks=-1)

    def test_fk_capacity_enforced(self):
        # 3 tables, 1 hub, 2 non-hubs, 2 free slots each -> capacity 4
        generate_planted_db(seed=0, n_tables=3, n_cols=3, n_rows=10, n_fks=4)
        with pytest.raises(ValueError, match="cannot place 5 foreign keys"):
            generate_planted_db(seed=0, n_tables=3, n_cols=3, n_rows=10, n_fks=5)

    def test_per_hub_row_floor_enforced(self):
        # 4 keys into 1 hub need poison ids; 4 rows leave no shareable id
        with pytest.raises(ValueError, match="foreign keys over 1 hubs"):
            generate_planted_db(seed=0, n_tables=3, n_cols=3, n_rows=4, n_fks=4)

    def test_hub_count_rule(self):
        assert planted_hub_count(2) == 1
        assert planted_hub_count(9) == 1
        assert planted_hub_count(10) == 2
        assert planted_hub_count(20) == 4


class TestPlantedStructure:
    def cases(self):
        return [
            dict(seed=3, n_tables=6, n_cols=4, n_rows=20, n_fks=4),
            dict(seed=9, n_tables=10, n_cols=3, n_rows=30, n_fks=6),
            dict(seed=21, n_tables=4, n_cols=5, n_rows=12, n_fks=5),
            dict(seed=40, n_tables=2, n_cols=2, n_rows=8, n_fks=1),
        ]

    def test_truth_size_matches_request(self):
        for case in self.cases():
            _, truth = generate_planted_db(**case)
            assert len(truth) == case["n_fks"], case

    def test_expected_shape(self):
        for case in self.cases():
            db, _ = generate_planted_db(**case)
            assert len(db.tables) == case["n_tables"]
            for t in db.tables:
                assert len(t.columns) == case["n_cols"]
                assert t.row_count == case["n_rows"]

    def test_planted_references_point_non_hub_to_hub(self):
        for case in self.cases():
            db, truth = generate_planted_db(**case)
            hubs = {t.name for t in db.tables[: planted_hub_count(case["n_tables"])]}
            for ft, fc, pt, pc in truth.refs:
                assert pt in hubs
                assert ft not in hubs
                assert pc == f"{pt}_id"
                assert fc.startswith(f"{pt}_id")

    def test_referential_integrity_and_key_uniqueness(self):
        for case in self.cases():
            db, truth = generate_planted_db(**case)
            for ref in truth.refs:
                pair = ref_to_pair(ref)
                _, col_f = db.resolve(pair.referencing)
                _, col_p = db.resolve(pair.referenced)
                key_values = [v for v in col_p.values if v is not None]
                assert len(set(key_values)) == len(key_values)
                assert set(col_f.values) <= set(key_values)

    def test_fk_columns_are_not_unique(self):
        # pigeonhole: each key column repeats values, so it cannot look like a key
        for case in self.cases():
            if case["n_rows"] < 3:
                continue
            db, truth = generate_planted_db(**case)
            for ref in truth.refs:
                pair = ref_to_pair(ref)
                _, col_f = db.resolve(pair.referencing)
                assert len(set(col_f.values)) < len(col_f.values), ref

    def test_all_planted_keys_discovered_as_inds(self):
        for case in self.cases():
            db, truth = generate_planted_db(**case)
            found = {
                (i.referencing.table, i.referencing.column,
                 i.referenced.table, i.referenced.column)
                for i in discover_single_column_inds(db)
            }
            assert truth.refs <= found, case

    def test_discovery_matches_oracle_on_planted_data(self):
        db, _ = generate_planted_db(seed=17, n_tables=5, n_cols=4, n_rows=15, n_fks=3)
        assert set(discover_single_column_inds(db)) == set(oracle_inds(db))

    def test_no_reverse_inclusion_from_hub_into_key(self):
        # the hidden largest hub id guarantees hub ids never sit inside a key column
        for case in self.cases():
            db, truth = generate_planted_db(**case)
            for ft, fc, pt, pc in truth.refs:
                _, col_f = db.resolve(ref_to_pair((ft, fc, pt, pc)).referencing)
                _, col_p = db.resolve(ref_to_pair((ft, fc, pt, pc)).referenced)
                assert not set(col_p.values) <= set(col_f.values)

    def test_sibling_keys_into_same_hub_never_contain_each_other(self):
        db, truth = generate_planted_db(seed=5, n_tables=6, n_cols=4, n_rows=10, n_fks=4)
        by_hub: dict[str, list] = {}
        for ref in truth.refs:
            pair = ref_to_pair(ref)
            _, col = db.resolve(pair.referencing)
            by_hub.setdefault(ref[2], []).append(set(col.values))
        for hub, value_sets in by_hub.items():
            for i, a in enumerate(value_sets):
                for j, b in enumerate(value_sets):
                    if i != j:
                        assert not a <= b

    def test_random_shapes_do_not_crash(self):
        rng = random.Random(123)
        for _ in range(25):
            n_tables = rng.randint(2, 12)
            n_cols = rng.randint(2, 6)
            n_rows = rng.randint(5, 40)
            hubs = planted_hub_count(n_tables)
            capacity = (n_tables - hubs) * (n_cols - 1)
            per_hub_cap = hubs * (n_rows - 1)
            n_fks = rng.randint(0, min(capacity, per_hub_cap, 8))
            db, truth = generate_planted_db(
                seed=rng.randrange(1 << 30), n_tables=n_tables,
                n_cols=n_cols, n_rows=n_rows, n_fks=n_fks)
            assert len(truth) == n_fks
            assert len(db.tables) == n_tables
