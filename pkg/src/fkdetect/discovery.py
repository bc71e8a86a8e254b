"""Discovery of structural metadata: inclusion dependencies and unique keys.

``discover_single_column_inds`` finds every pair of columns (same logical
type, any tables) where the referencing column's non-null values all occur in
the referenced column.  ``discover_min_uccs`` finds minimal unique column
combinations per table with a level-wise search that only tests a combination
when none of its subsets is already unique.

Both have deliberately naive ``oracle_*`` twins used to cross-check results
in tests; the oracles share semantics (nulls ignored for containment, nulls
compare equal for uniqueness) but none of the machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np

from fkdetect import kernels
from fkdetect.store import Column, ColumnRef, Database, Table


@dataclass(frozen=True)
class Ind:
    """Single-column inclusion dependency: referencing values ⊆ referenced."""

    referencing: ColumnRef
    referenced: ColumnRef

    def __str__(self) -> str:
        return f"{self.referencing}→{self.referenced}"


@dataclass(frozen=True)
class MinUcc:
    """Minimal unique column combination of one table."""

    table: str
    columns: frozenset[str]

    def sorted_columns(self) -> tuple[str, ...]:
        return tuple(sorted(self.columns))


def discover_single_column_inds(db: Database) -> set[Ind]:
    """All single-column INDs, grouped by logical type.

    Columns with zero non-null values are vacuously contained in every column
    of their type group; those INDs are emitted here and removed later by the
    rule filter.  Self-pairs are never emitted; same-table pairs are.
    """
    groups: dict[str, list[tuple[ColumnRef, Column]]] = {}
    for table in db.tables:
        for column in table.columns:
            groups.setdefault(column.logical_type, []).append((ColumnRef(table.name, column.name), column))
    out: set[Ind] = set()
    for members in groups.values():
        if len(members) < 2:
            continue
        distinct_sets = [frozenset(col.non_null()) for _, col in members]
        code_of = {v: i for i, v in enumerate(sorted(frozenset().union(*distinct_sets)))}
        arrays = [
            np.array(sorted(code_of[v] for v in values), dtype=np.int64) for values in distinct_sets
        ]
        incl = kernels.containment_matrix(arrays)
        for i, (ref_i, _) in enumerate(members):
            for j, (ref_j, _) in enumerate(members):
                if i != j and incl[i, j]:
                    out.add(Ind(ref_i, ref_j))
    return out


def discover_min_uccs(table: Table, max_arity: int = 4) -> set[MinUcc]:
    """Minimal unique column combinations up to ``max_arity`` columns.

    Nulls compare equal to each other, so a column with two nulls is not
    unique.  A table with zero rows has no unique combination at all.
    """
    if max_arity < 1:
        raise ValueError(f"max_arity must be >= 1, got {max_arity}")
    n = table.row_count
    k = len(table.columns)
    if n == 0 or k == 0:
        return set()
    codes = np.empty((n, k), dtype=np.int64)
    for j, column in enumerate(table.columns):
        seen: dict = {}
        for i, v in enumerate(column.values):
            codes[i, j] = seen.setdefault(v, len(seen))
    names = table.column_names()
    minimal: set[MinUcc] = set()
    open_combos: list[tuple[int, ...]] = [()]
    for arity in range(1, min(max_arity, k) + 1):
        open_set = set(open_combos)
        next_open: list[tuple[int, ...]] = []
        for combo in combinations(range(k), arity):
            if any(sub not in open_set for sub in combinations(combo, arity - 1)):
                continue
            if kernels.distinct_row_count(codes[:, combo]) == n:
                minimal.add(MinUcc(table.name, frozenset(names[j] for j in combo)))
            else:
                next_open.append(combo)
        open_combos = next_open
        if not open_combos:
            break
    return minimal


def discover_all_min_uccs(db: Database, max_arity: int = 4) -> dict[str, set[MinUcc]]:
    return {table.name: discover_min_uccs(table, max_arity) for table in db.tables}


# --- Oracles ------------------------------------------------------------------


def oracle_inds(db: Database) -> set[Ind]:
    """Brute-force IND ground truth: direct set containment per pair."""
    cols: list[tuple[ColumnRef, str, frozenset]] = []
    for table in db.tables:
        for column in table.columns:
            cols.append(
                (ColumnRef(table.name, column.name), column.logical_type, frozenset(column.non_null()))
            )
    out: set[Ind] = set()
    for ref_f, type_f, set_f in cols:
        for ref_p, type_p, set_p in cols:
            if ref_f != ref_p and type_f == type_p and set_f <= set_p:
                out.add(Ind(ref_f, ref_p))
    return out


def oracle_uccs(table: Table, max_arity: int = 4) -> set[MinUcc]:
    """Brute-force minimal-UCC ground truth via full subset enumeration."""
    names = table.column_names()
    n = table.row_count
    if n == 0:
        return set()

    def unique(cols: tuple[str, ...]) -> bool:
        projected = {tuple(table.column(c).values[i] for c in cols) for i in range(n)}
        return len(projected) == n

    unique_sets = {
        frozenset(combo)
        for arity in range(1, min(max_arity, len(names)) + 1)
        for combo in combinations(names, arity)
        if unique(combo)
    }
    return {
        MinUcc(table.name, s)
        for s in unique_sets
        if not any(other < s for other in unique_sets)
    }


def inds_as_pairs(inds: Iterable[Ind]) -> set[tuple[str, str, str, str]]:
    """Flatten INDs to 4-tuples for easy comparison in tests."""
    return {
        (i.referencing.table, i.referencing.column, i.referenced.table, i.referenced.column)
        for i in inds
    }
