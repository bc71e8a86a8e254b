"""Seed-deterministic synthetic databases with planted foreign keys.

The generator designates the first few tables as hubs; every planted foreign
key points from a non-hub table into a hub's id column, so the true edge set
is a DAG and the expected discovery outcome is known exactly.  Value ranges
are engineered so the only inclusion dependencies that survive type rules are
the planted keys plus decoys aimed at each pruning stage:

* per-table integer id ranges are disjoint, so ids never contain each other;
* every foreign-key column carries a private "poison" id that no sibling key
  into the same hub may draw, so parallel keys never contain each other;
* one hub id (the largest) is hidden from all keys, so a hub id column is
  never contained in a key column;
* partial-overlap integer decoys mix a slice of hub ids with a unique
  out-of-range marker, defeating containment in both directions;
* alternate-key decoys are fully contained in a hub's secondary unique
  column and are meant to die at unique-key pruning, not before;
* float and boolean decoys produce inclusions that only type rules remove.

Identical seeds and shape parameters yield identical databases.
"""

from __future__ import annotations

import random
from datetime import date, timedelta

from fkdetect.evaluation import GroundTruth, Ref
from fkdetect.store import Column, Database, Table

_DECOY_KINDS = ("txt", "num", "day", "flag", "val", "ref")


def planted_hub_count(n_tables: int) -> int:
    return max(1, n_tables // 5)


def generate_planted_db(
    seed: int,
    n_tables: int = 6,
    n_cols: int = 4,
    n_rows: int = 20,
    n_fks: int = 4,
) -> tuple[Database, GroundTruth]:
    if n_tables < 2:
        raise ValueError(f"need at least 2 tables, got {n_tables}")
    if n_cols < 2:
        raise ValueError(f"need at least 2 columns per table, got {n_cols}")
    if n_rows < 1:
        raise ValueError(f"need at least 1 row, got {n_rows}")
    if n_fks < 0:
        raise ValueError(f"foreign key count must be >= 0, got {n_fks}")
    hubs = planted_hub_count(n_tables)
    capacity = (n_tables - hubs) * (n_cols - 1)
    if n_fks > capacity:
        raise ValueError(f"cannot place {n_fks} foreign keys in {capacity} free slots")
    per_hub = -(-n_fks // hubs) if n_fks else 0
    if n_fks and per_hub > n_rows - 1:
        raise ValueError(
            f"{n_fks} foreign keys over {hubs} hubs need at least {per_hub + 1} rows, got {n_rows}"
        )

    rng = random.Random(seed)
    names = [f"tab{i:02d}" for i in range(n_tables)]
    hub_names = names[:hubs]
    span = max(1000, 10 * n_rows)

    # hub id columns drive everything downstream; lay their values out first
    id_values: dict[str, list[int]] = {}
    alt_values: dict[str, list[int]] = {}
    for i, name in enumerate(names):
        base = (i + 1) * 10 * span
        ids = list(range(base, base + n_rows))
        rng.shuffle(ids)
        id_values[name] = ids
        if name in hub_names:
            alts = list(range(base + 5 * span, base + 5 * span + n_rows))
            rng.shuffle(alts)
            alt_values[name] = alts

    # per-hub bookkeeping for poison and hidden ids
    hub_sorted = {h: sorted(id_values[h]) for h in hub_names}
    hub_fk_counter = {h: 0 for h in hub_names}
    hidden = {h: hub_sorted[h][-1] for h in hub_names}

    # assign each foreign key a (table, hub); slots fill table-major
    slots = [(names[t], s) for t in range(hubs, n_tables) for s in range(n_cols - 1)]
    assignments: dict[tuple[str, int], str] = {}
    for k in range(n_fks):
        assignments[slots[k]] = hub_names[k % hubs]

    poison_of: dict[tuple[str, int], int] = {}
    for slot in sorted(assignments, key=lambda s: (names.index(s[0]), s[1])):
        hub = assignments[slot]
        poison_of[slot] = hub_sorted[hub][hub_fk_counter[hub]]
        hub_fk_counter[hub] += 1

    # slice pools for partial-overlap and alternate-key decoys, both from hub 0
    first_hub = hub_names[0]
    reserved = set(poison_of.values()) | set(hidden.values())
    overlap_pool = [v for v in hub_sorted[first_hub][:-1] if v not in reserved]
    alt_pool = sorted(alt_values[first_hub])[: max(0, n_rows - 1)]
    pool_cursor = {"num": 0, "ref": 0}
    marker_counter = {"next": 10 * span - 1}

    def next_slice(pool: list[int], which: str, width: int) -> list[int] | None:
        start = pool_cursor[which]
        if start + width > len(pool):
            return None
        pool_cursor[which] = start + width
        return pool[start : start + width]

    def decoy_column(table_idx: int, ordinal: int, kind: str) -> Column:
        table_name = names[table_idx]
        if kind == "num":
            chunk = next_slice(overlap_pool, "num", min(3, max(2, n_rows // 2)))
            if chunk is None or n_rows < 2:
                kind = "txt"
            else:
                marker = marker_counter["next"]
                marker_counter["next"] -= 1
                values = [marker] + [rng.choice(chunk) for _ in range(n_rows - 1)]
                rng.shuffle(values)
                return Column(f"c{ordinal}_num", ordinal, "integer", values)
        if kind == "ref":
            chunk = next_slice(alt_pool, "ref", min(3, max(2, n_rows // 2)))
            if chunk is None or n_rows < 2 or table_name in hub_names:
                kind = "txt"
            else:
                values = [rng.choice(chunk) for _ in range(n_rows)]
                return Column(f"c{ordinal}_ref", ordinal, "integer", values)
        if kind == "day":
            origin = date(2019, 1, 1) + timedelta(days=(table_idx * n_cols + ordinal) * 97)
            values = [origin + timedelta(days=rng.randrange(31)) for _ in range(n_rows)]
            return Column(f"c{ordinal}_day", ordinal, "date", values)
        if kind == "flag":
            values = [rng.random() < 0.5 for _ in range(n_rows)]
            return Column(f"c{ordinal}_flag", ordinal, "boolean", values)
        if kind == "val":
            values = [round(rng.uniform(0.0, 1000.0), 4) for _ in range(n_rows)]
            return Column(f"c{ordinal}_val", ordinal, "float", values)
        prefix = f"{table_name}_c{ordinal}"
        values = [f"{prefix}_x{rng.randrange(max(4, n_rows))}" for _ in range(n_rows)]
        return Column(f"c{ordinal}_txt", ordinal, "text", values)

    tables: list[Table] = []
    truth: set[Ref] = set()
    for i, table_name in enumerate(names):
        columns = [Column(f"{table_name}_id", 1, "integer", list(id_values[table_name]))]
        if table_name in hub_names:
            columns.append(Column(f"{table_name}_code", 2, "integer", list(alt_values[table_name])))
            for slot in range(n_cols - 2):
                kind = _DECOY_KINDS[(i * 31 + slot) % len(_DECOY_KINDS)]
                if kind in ("num", "ref"):
                    kind = "txt"
                columns.append(decoy_column(i, len(columns) + 1, kind))
        else:
            fk_names_used: dict[str, int] = {}
            for slot in range(n_cols - 1):
                ordinal = len(columns) + 1
                hub = assignments.get((table_name, slot))
                if hub is not None:
                    count = fk_names_used.get(hub, 0)
                    fk_names_used[hub] = count + 1
                    col_name = f"{hub}_id" if count == 0 else f"{hub}_id_{count + 1}"
                    poison = poison_of[(table_name, slot)]
                    allowed = [
                        v
                        for v in hub_sorted[hub]
                        if v != hidden[hub] and (v == poison or v not in reserved)
                    ]
                    values = [poison] + [rng.choice(allowed) for _ in range(n_rows - 1)]
                    rng.shuffle(values)
                    columns.append(Column(col_name, ordinal, "integer", values))
                    truth.add((table_name, col_name, hub, f"{hub}_id"))
                else:
                    kind = _DECOY_KINDS[(i * 31 + slot) % len(_DECOY_KINDS)]
                    columns.append(decoy_column(i, ordinal, kind))
        tables.append(Table(name=table_name, columns=columns, row_count=n_rows))
    db = Database(name=f"planted{seed}", tables=tables)
    return db, GroundTruth(frozenset(truth))
