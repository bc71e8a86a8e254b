"""Candidate pruning driven by typing rules and selected unique keys.

Raw INDs are first filtered by hard rules (matching logical types only, no
float/decimal/boolean references, no empty referencing columns).  For every
table still referenced, one unique key is selected from its minimal unique
column combinations, and only pairs pointing at a selected key column
survive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from fkdetect import store
from fkdetect.discovery import Ind, MinUcc
from fkdetect.gateway import Gateway, GatewayError, heuristic_key_choice
from fkdetect.prompts import PromptKind, render_prompt
from fkdetect.store import ColumnRef, Database, Table

_DISALLOWED_REFERENCED_TYPES = ("float", "decimal", "boolean")


class ProfilerError(ValueError):
    """Raised for unsatisfiable pruning inputs."""


@dataclass(frozen=True)
class CandidatePair:
    """Directed candidate: referencing column may be a foreign key into referenced."""

    referencing: ColumnRef
    referenced: ColumnRef

    def subject(self) -> str:
        return f"{self.referencing}→{self.referenced}"

    @staticmethod
    def from_ind(ind: Ind) -> "CandidatePair":
        return CandidatePair(ind.referencing, ind.referenced)


@dataclass(frozen=True)
class KeySelection:
    """Outcome of unique-key selection for one table."""

    table: str
    columns: tuple[str, ...]
    reason: str
    backend: str
    no_ucc_mode: bool = False
    fallback: bool = False


def filter_by_rules(inds: Iterable[Ind], db: Database) -> set[CandidatePair]:
    """Drop INDs that cannot be foreign keys regardless of any reasoning.

    Removes pairs whose logical types differ, whose referenced type is
    float, decimal, or boolean, or whose referencing column holds zero
    non-null values (vacuous containment).
    """
    out: set[CandidatePair] = set()
    for ind in inds:
        stats_f = store.column_stats(db, ind.referencing)
        stats_p = store.column_stats(db, ind.referenced)
        if stats_f.logical_type != stats_p.logical_type:
            continue
        if stats_p.logical_type in _DISALLOWED_REFERENCED_TYPES:
            continue
        if stats_f.distinct_count == 0:
            continue
        out.add(CandidatePair.from_ind(ind))
    return out


def referenced_tables(pairs: Iterable[CandidatePair]) -> list[str]:
    return sorted({p.referenced.table for p in pairs})


def key_candidates(table: Table, minuccs: Iterable[MinUcc]) -> list[tuple[str, ...]]:
    """Candidate keys in presentation order: by arity, then column names.

    With no minimal unique combination at all, every column is offered as a
    single-column candidate instead, so key selection still has options.
    """
    combos = [m.sorted_columns() for m in minuccs if m.table == table.name]
    if combos:
        return sorted(combos, key=lambda cols: (len(cols), cols))
    return [(c.name,) for c in table.columns]


def _candidate_features(table: Table, cols: tuple[str, ...], sample_count: int) -> dict:
    features = []
    for name in cols:
        column = table.column(name)
        stats = store.stats_for(table, column)
        samples = [store.render_value(v) if v is not None else None for v in column.values[:sample_count]]
        features.append(
            {
                "name": name,
                "ordinal": stats.ordinal,
                "data_type": stats.logical_type,
                "avg_text_len": stats.avg_text_len,
                "distinct_count": stats.distinct_count,
                "row_count": stats.row_count,
                "samples": samples,
            }
        )
    return {"columns": features}


def select_unique_key(
    table: Table,
    minuccs: Iterable[MinUcc],
    gateway: Gateway,
    knowledge: Mapping[str, str] | None = None,
    db_name: str = "",
    mask: bool = True,
    sample_count: int = 5,
) -> KeySelection:
    """Pick the unique key of one table from its minimal unique combinations.

    A single candidate is returned without any gateway call.  Gateway
    failures (including out-of-range indexes) fall back to deterministic
    heuristic scoring and mark the selection as a fallback.
    """
    minuccs = list(minuccs)
    no_ucc = not any(m.table == table.name for m in minuccs)
    cands = key_candidates(table, minuccs)
    if len(cands) == 1:
        return KeySelection(table.name, cands[0], "only candidate", "forced", no_ucc_mode=no_ucc)
    cand_features = [_candidate_features(table, cols, sample_count) for cols in cands]
    payload = {
        "db_name": db_name,
        "table": table.name,
        "no_ucc_mode": no_ucc,
        "candidates": cand_features,
    }
    prompt = render_prompt(PromptKind.UNIQUE_KEY, payload, knowledge, mask)
    try:
        resp = gateway.complete(
            PromptKind.UNIQUE_KEY, prompt, subject=table.name, features={"candidates": cand_features}
        )
        idx = resp.parsed["chosen_index"]
        if not 0 <= idx < len(cands):
            raise GatewayError(f"chosen_index {idx} out of range for {table.name}")
        return KeySelection(
            table.name, cands[idx], resp.parsed.get("reason", ""), resp.backend, no_ucc_mode=no_ucc
        )
    except GatewayError:
        idx = heuristic_key_choice(cand_features)
        return KeySelection(
            table.name, cands[idx], "heuristic scoring after gateway failure",
            "heuristic-fallback", no_ucc_mode=no_ucc, fallback=True,
        )


def prune_by_unique_keys(
    pairs: Iterable[CandidatePair], keys: Mapping[str, KeySelection]
) -> set[CandidatePair]:
    """Keep only pairs whose referenced column belongs to its table's key."""
    out: set[CandidatePair] = set()
    for pair in pairs:
        selection = keys.get(pair.referenced.table)
        if selection is None:
            raise ProfilerError(f"no unique key selected for referenced table {pair.referenced.table!r}")
        if pair.referenced.column in selection.columns:
            out.add(pair)
    return out


def pruning_report(db: Database, stage_counts: Mapping[str, int]) -> dict[str, int]:
    """Stage counts against the raw and table-pair baselines.

    ``raw_pairs`` is the square of the total column count (every ordered
    column pair, self-pairs included); ``table_baseline`` is the number of
    ordered table pairs.
    """
    total_columns = sum(len(t.columns) for t in db.tables)
    n_tables = len(db.tables)
    report = {
        "raw_pairs": total_columns * total_columns,
        "table_baseline": n_tables * (n_tables - 1),
    }
    for stage in ("after_ind", "after_rules", "after_unique_key"):
        if stage not in stage_counts:
            raise ProfilerError(f"missing stage count {stage!r}")
        report[stage] = int(stage_counts[stage])
    return report
