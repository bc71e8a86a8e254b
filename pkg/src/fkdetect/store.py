"""Relational data access: loading, schema types, and per-column statistics.

A database is loaded either from a single SQLite file or from a directory of
CSV files.  CSV directories may carry a ``manifest.json`` declaring logical
column types; undeclared columns fall back to value-based inference.  All
values are normalized into one of seven logical types so that downstream
containment and uniqueness checks compare like with like.
"""

from __future__ import annotations

import csv
import json
import math
import sqlite3
from dataclasses import dataclass, field
from datetime import date, datetime
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Iterator

LOGICAL_TYPES = ("integer", "float", "decimal", "text", "boolean", "date", "datetime")

_PYTHON_TYPES = {
    "integer": int,
    "float": float,
    "decimal": Decimal,
    "text": str,
    "boolean": bool,
    "date": date,
    "datetime": datetime,
}

_TRUE_WORDS = {"true", "1"}
_FALSE_WORDS = {"false", "0"}


class StoreError(ValueError):
    """Raised for unreadable sources, schema violations, or bad references."""


@dataclass(frozen=True)
class ColumnRef:
    """Fully qualified column identifier."""

    table: str
    column: str

    def __str__(self) -> str:
        return f"{self.table}.{self.column}"


@dataclass
class Column:
    name: str
    ordinal: int
    logical_type: str
    values: list[Any] = field(repr=False)

    def non_null(self) -> list[Any]:
        return [v for v in self.values if v is not None]


@dataclass
class Table:
    name: str
    columns: list[Column]
    row_count: int

    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise StoreError(f"unknown column: {self.name}.{name}")

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def rows(self, limit: int | None = None) -> Iterator[tuple]:
        stop = self.row_count if limit is None else min(limit, self.row_count)
        for i in range(stop):
            yield tuple(col.values[i] for col in self.columns)


@dataclass
class Database:
    name: str
    tables: list[Table]
    _stats: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        _validate(self)

    def table(self, name: str) -> Table:
        for tab in self.tables:
            if tab.name == name:
                return tab
        raise StoreError(f"unknown table: {name}")

    def resolve(self, ref: ColumnRef) -> tuple[Table, Column]:
        tab = self.table(ref.table)
        return tab, tab.column(ref.column)

    def all_column_refs(self) -> list[ColumnRef]:
        return [ColumnRef(t.name, c.name) for t in self.tables for c in t.columns]


@dataclass(frozen=True)
class ColumnStats:
    """Profile of one column, computed over its stored values."""

    table: str
    column: str
    ordinal: int
    logical_type: str
    row_count: int
    distinct_count: int
    cardinality_ratio: float
    avg_text_len: float
    min_value: Any
    max_value: Any


def _validate(db: Database) -> None:
    if not db.name:
        raise StoreError("database name must be non-empty")
    if not db.tables:
        raise StoreError(f"no tables found in database {db.name!r}")
    seen_tables: set[str] = set()
    for tab in db.tables:
        lowered = tab.name.lower()
        if lowered in seen_tables:
            raise StoreError(f"duplicate table name (case-insensitive): {tab.name!r}")
        seen_tables.add(lowered)
        if not tab.columns:
            raise StoreError(f"table {tab.name!r} has no columns")
        seen_cols: set[str] = set()
        for i, col in enumerate(tab.columns, start=1):
            if col.name.lower() in seen_cols:
                raise StoreError(f"duplicate column name in {tab.name!r}: {col.name!r}")
            seen_cols.add(col.name.lower())
            if col.ordinal != i:
                raise StoreError(
                    f"ordinals of {tab.name!r} must be contiguous from 1, got {col.ordinal} at position {i}"
                )
            if col.logical_type not in LOGICAL_TYPES:
                raise StoreError(f"unknown logical type {col.logical_type!r} for {tab.name}.{col.name}")
            if len(col.values) != tab.row_count:
                raise StoreError(
                    f"{tab.name}.{col.name} holds {len(col.values)} values, expected {tab.row_count}"
                )
            expected = _PYTHON_TYPES[col.logical_type]
            for v in col.values:
                if v is None:
                    continue
                if isinstance(v, bool) and col.logical_type != "boolean":
                    raise StoreError(f"type mismatch in {tab.name}.{col.name}: {v!r} is not {col.logical_type}")
                if col.logical_type == "date" and isinstance(v, datetime):
                    raise StoreError(f"type mismatch in {tab.name}.{col.name}: {v!r} is not a plain date")
                if not isinstance(v, expected):
                    raise StoreError(f"type mismatch in {tab.name}.{col.name}: {v!r} is not {col.logical_type}")


def render_value(value: Any) -> str:
    """Canonical text rendering used for length statistics and prompts."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (date, datetime)):
        return value.isoformat()
    return str(value)


def column_stats(db: Database, ref: ColumnRef) -> ColumnStats:
    """Compute (and memoize on the database) the profile of one column."""
    key = (ref.table, ref.column)
    cached = db._stats.get(key)
    if cached is not None:
        return cached
    tab, col = db.resolve(ref)
    stats = stats_for(tab, col)
    db._stats[key] = stats
    return stats


def stats_for(table: Table, column: Column) -> ColumnStats:
    non_null = column.non_null()
    distinct = len(set(non_null))
    rows = table.row_count
    cardinality = distinct / rows if rows else 0.0
    if non_null:
        avg_len = sum(len(render_value(v)) for v in non_null) / len(non_null)
        mn = min(non_null)
        mx = max(non_null)
    else:
        avg_len = 0.0
        mn = None
        mx = None
    return ColumnStats(
        table=table.name,
        column=column.name,
        ordinal=column.ordinal,
        logical_type=column.logical_type,
        row_count=rows,
        distinct_count=distinct,
        cardinality_ratio=cardinality,
        avg_text_len=avg_len,
        min_value=mn,
        max_value=mx,
    )


def sample_rows(db: Database, table: str, count: int = 5) -> list[tuple]:
    """First ``count`` rows of a table in storage order."""
    if count < 0:
        raise StoreError(f"sample count must be >= 0, got {count}")
    return list(db.table(table).rows(limit=count))


def load_database(source: str | Path) -> Database:
    """Load a database from a SQLite file or a CSV directory."""
    path = Path(source)
    if path.is_dir():
        return _load_csv_dir(path)
    if path.is_file():
        return _load_sqlite(path)
    raise StoreError(f"unreadable source: {source}")


# --- CSV directory loading ---------------------------------------------------


def _load_csv_dir(root: Path) -> Database:
    files = sorted(root.glob("*.csv"), key=lambda p: p.stem.lower())
    if not files:
        raise StoreError(f"no tables found under {root}")
    manifest = _read_manifest(root)
    known = {p.stem for p in files}
    for name in manifest:
        if name not in known:
            raise StoreError(f"manifest declares unknown table {name!r}")
    tables = [_load_csv_table(p, manifest.get(p.stem, {})) for p in files]
    return Database(name=root.name, tables=tables)


def _read_manifest(root: Path) -> dict[str, dict[str, str]]:
    path = root / "manifest.json"
    if not path.exists():
        return {}
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise StoreError(f"manifest.json is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise StoreError("manifest.json must hold an object")
    body = raw.get("tables", raw)
    if not isinstance(body, dict):
        raise StoreError("manifest 'tables' must be an object")
    out: dict[str, dict[str, str]] = {}
    for tname, spec in body.items():
        cols: dict[str, str] = {}
        if isinstance(spec, dict):
            items = spec.items()
        elif isinstance(spec, list):
            items = ((entry.get("name"), entry.get("type")) for entry in spec)
        else:
            raise StoreError(f"manifest entry for {tname!r} must be an object or list")
        for cname, ctype in items:
            if not isinstance(cname, str) or not isinstance(ctype, str):
                raise StoreError(f"manifest entry for {tname!r} has a malformed column declaration")
            if ctype not in LOGICAL_TYPES:
                raise StoreError(f"manifest declares unknown type {ctype!r} for {tname}.{cname}")
            cols[cname] = ctype
        out[tname] = cols
    return out


def _load_csv_table(path: Path, declared: dict[str, str]) -> Table:
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise StoreError(f"table {path.stem!r} has no columns") from None
        rows = [row for row in reader]
    if any(not name for name in header):
        raise StoreError(f"table {path.stem!r} has an unnamed column")
    for row in rows:
        if len(row) != len(header):
            raise StoreError(f"table {path.stem!r} has a row with {len(row)} fields, expected {len(header)}")
    for cname in declared:
        if cname not in header:
            raise StoreError(f"manifest declares unknown column {path.stem}.{cname}")
    columns = []
    for idx, cname in enumerate(header):
        raws = [row[idx] for row in rows]
        ltype = declared.get(cname) or _infer_logical(raws)
        where = f"{path.stem}.{cname}"
        values = [_parse_text_value(raw, ltype, where) for raw in raws]
        columns.append(Column(name=cname, ordinal=idx + 1, logical_type=ltype, values=values))
    return Table(name=path.stem, columns=columns, row_count=len(rows))


def _infer_logical(raws: list[str]) -> str:
    present = [r for r in raws if r != ""]
    if not present:
        return "text"
    for candidate, probe in (("integer", _probe_int), ("float", _probe_float), ("date", _probe_date)):
        if all(probe(r) for r in present):
            return candidate
    return "text"


def _probe_int(raw: str) -> bool:
    try:
        int(raw)
    except ValueError:
        return False
    return True


def _probe_float(raw: str) -> bool:
    try:
        float(raw)
    except ValueError:
        return False
    return True


def _probe_date(raw: str) -> bool:
    try:
        date.fromisoformat(raw)
    except ValueError:
        return False
    return True


def _parse_text_value(raw: str, ltype: str, where: str) -> Any:
    if raw == "":
        return None
    try:
        if ltype == "integer":
            return int(raw)
        if ltype == "float":
            parsed = float(raw)
            return None if math.isnan(parsed) else parsed
        if ltype == "decimal":
            return Decimal(raw)
        if ltype == "boolean":
            word = raw.strip().lower()
            if word in _TRUE_WORDS:
                return True
            if word in _FALSE_WORDS:
                return False
            raise ValueError(raw)
        if ltype == "date":
            return date.fromisoformat(raw)
        if ltype == "datetime":
            return datetime.fromisoformat(raw)
        return raw
    except (ValueError, InvalidOperation) as exc:
        raise StoreError(f"type mismatch in {where}: {raw!r} is not {ltype}") from exc


# --- SQLite loading -----------------------------------------------------------


def _load_sqlite(path: Path) -> Database:
    try:
        conn = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
    except sqlite3.Error as exc:
        raise StoreError(f"unreadable source: {path}: {exc}") from exc
    try:
        try:
            names = [
                row[0]
                for row in conn.execute(
                    "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%'"
                )
            ]
        except sqlite3.DatabaseError as exc:
            raise StoreError(f"unreadable source: {path}: {exc}") from exc
        if not names:
            raise StoreError(f"no tables found in {path}")
        tables = [_load_sqlite_table(conn, name) for name in names]
    finally:
        conn.close()
    return Database(name=path.stem, tables=tables)


def _load_sqlite_table(conn: sqlite3.Connection, name: str) -> Table:
    quoted = '"' + name.replace('"', '""') + '"'
    info = list(conn.execute(f"PRAGMA table_info({quoted})"))
    col_names = [row[1] for row in info]
    declared = [_logical_from_decl(row[2] or "") for row in info]
    data = list(conn.execute(f"SELECT * FROM {quoted}"))
    columns = []
    for idx, cname in enumerate(col_names):
        raw_values = [row[idx] for row in data]
        ltype = declared[idx] or _infer_sqlite_logical(raw_values)
        where = f"{name}.{cname}"
        values = [_coerce_sqlite_value(v, ltype, where) for v in raw_values]
        columns.append(Column(name=cname, ordinal=idx + 1, logical_type=ltype, values=values))
    return Table(name=name, columns=columns, row_count=len(data))


def _logical_from_decl(decl: str) -> str | None:
    d = decl.upper()
    if not d.strip():
        return None
    if "BOOL" in d:
        return "boolean"
    if "INT" in d:
        return "integer"
    if "DATETIME" in d or "TIMESTAMP" in d:
        return "datetime"
    if "DATE" in d:
        return "date"
    if "DEC" in d or "NUMERIC" in d:
        return "decimal"
    if "REAL" in d or "FLOA" in d or "DOUB" in d:
        return "float"
    if "CHAR" in d or "CLOB" in d or "TEXT" in d:
        return "text"
    return None


def _infer_sqlite_logical(values: list[Any]) -> str:
    present = [v for v in values if v is not None]
    if not present:
        return "text"
    if all(isinstance(v, int) and not isinstance(v, bool) for v in present):
        return "integer"
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in present):
        return "float"
    if all(isinstance(v, str) for v in present):
        if all(_probe_date(v) for v in present):
            return "date"
        return "text"
    return "text"


def _coerce_sqlite_value(value: Any, ltype: str, where: str) -> Any:
    if value is None:
        return None
    try:
        if ltype == "integer":
            if isinstance(value, int) and not isinstance(value, bool):
                return value
            if isinstance(value, float) and value.is_integer():
                return int(value)
            if isinstance(value, str):
                return int(value)
            raise ValueError(value)
        if ltype == "float":
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                parsed = float(value)
                return None if math.isnan(parsed) else parsed
            if isinstance(value, str):
                parsed = float(value)
                return None if math.isnan(parsed) else parsed
            raise ValueError(value)
        if ltype == "decimal":
            if isinstance(value, bool):
                raise ValueError(value)
            return Decimal(str(value))
        if ltype == "boolean":
            if isinstance(value, bool):
                return value
            if isinstance(value, int) and value in (0, 1):
                return bool(value)
            if isinstance(value, str):
                return _parse_text_value(value, "boolean", where)
            raise ValueError(value)
        if ltype == "date":
            if isinstance(value, str):
                return date.fromisoformat(value)
            raise ValueError(value)
        if ltype == "datetime":
            if isinstance(value, str):
                return datetime.fromisoformat(value)
            raise ValueError(value)
        if isinstance(value, bytes):
            return value.decode("utf-8", errors="replace")
        return value if isinstance(value, str) else str(value)
    except (ValueError, InvalidOperation) as exc:
        raise StoreError(f"type mismatch in {where}: {value!r} is not {ltype}") from exc
