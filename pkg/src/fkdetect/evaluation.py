"""Scoring of predicted foreign keys against ground truth.

References are canonical 4-tuples ``(from_table, from_column, to_table,
to_column)``.  Recall is reported twice: against the full truth (this one
feeds F1) and against the truth restricted to the candidate set, which
separates pruning losses from validation mistakes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from fkdetect import store
from fkdetect.profiler import CandidatePair
from fkdetect.similarity import name_similarity
from fkdetect.store import ColumnRef, Database

Ref = tuple[str, str, str, str]

_REF_FIELDS = ("from_table", "from_column", "to_table", "to_column")


@dataclass(frozen=True)
class GroundTruth:
    refs: frozenset[Ref]

    def __len__(self) -> int:
        return len(self.refs)


@dataclass(frozen=True)
class ScoreReport:
    precision: float
    recall: float
    f1: float
    true_positives: int
    false_positives: int
    false_negatives: int
    candidate_recall: float
    pruning_loss: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "candidate_recall": self.candidate_recall,
            "pruning_loss": self.pruning_loss,
        }


def as_ref(pair: CandidatePair) -> Ref:
    return (
        pair.referencing.table,
        pair.referencing.column,
        pair.referenced.table,
        pair.referenced.column,
    )


def as_refs(pairs: Iterable[CandidatePair]) -> set[Ref]:
    return {as_ref(p) for p in pairs}


def ref_to_pair(ref: Ref) -> CandidatePair:
    return CandidatePair(ColumnRef(ref[0], ref[1]), ColumnRef(ref[2], ref[3]))


def score(predicted: set[Ref], truth: GroundTruth, candidates: set[Ref]) -> ScoreReport:
    """Precision, dual recall, and F1 for one prediction run.

    ``candidates`` is the post-pruning candidate set the validator actually
    saw; predictions outside it indicate a wiring bug and raise.  With an
    empty prediction set, precision is 1.0 against an empty truth and 0.0
    otherwise; recall over an empty (sub)truth is 1.0.
    """
    stray = predicted - candidates
    if stray:
        sample = ", ".join(".".join(r[:2]) + "→" + ".".join(r[2:]) for r in sorted(stray)[:3])
        raise ValueError(f"predicted references missing from candidate set: {sample}")
    tp = len(predicted & truth.refs)
    fp = len(predicted) - tp
    fn = len(truth.refs) - tp
    if predicted:
        precision = tp / len(predicted)
    else:
        precision = 1.0 if not truth.refs else 0.0
    recall = tp / len(truth.refs) if truth.refs else 1.0
    reachable = truth.refs & candidates
    candidate_recall = tp / len(reachable) if reachable else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ScoreReport(
        precision=precision,
        recall=recall,
        f1=f1,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        candidate_recall=candidate_recall,
        pruning_loss=len(truth.refs) - len(reachable),
    )


def load_ground_truth(path: str | Path, db: Database | None = None) -> GroundTruth:
    """Read a ground-truth JSON array; optionally verify refs against a database."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot load ground truth {path}: {exc}") from exc
    refs = parse_refs(raw, what="ground truth")
    if db is not None:
        for ref in sorted(refs):
            for table, column in ((ref[0], ref[1]), (ref[2], ref[3])):
                try:
                    db.resolve(ColumnRef(table, column))
                except store.StoreError as exc:
                    raise ValueError(f"dangling ground-truth reference {table}.{column}: {exc}") from exc
    return GroundTruth(frozenset(refs))


def parse_refs(raw, what: str = "reference list") -> set[Ref]:
    """Parse a JSON array of reference objects (or 4-element lists)."""
    if not isinstance(raw, list):
        raise ValueError(f"{what} must be a JSON array")
    refs: set[Ref] = set()
    for i, entry in enumerate(raw):
        if isinstance(entry, dict):
            missing = [f for f in _REF_FIELDS if f not in entry]
            if missing:
                raise ValueError(f"{what} entry {i} is missing fields: {', '.join(missing)}")
            values = tuple(entry[f] for f in _REF_FIELDS)
        elif isinstance(entry, (list, tuple)) and len(entry) == 4:
            values = tuple(entry)
        else:
            raise ValueError(f"{what} entry {i} must be an object with {_REF_FIELDS} or a 4-element list")
        if not all(isinstance(v, str) and v for v in values):
            raise ValueError(f"{what} entry {i} must hold non-empty strings")
        refs.add(values)  # type: ignore[arg-type]
    return refs


def refs_to_json(refs: Iterable[Ref]) -> list[dict]:
    return [dict(zip(_REF_FIELDS, ref)) for ref in sorted(refs)]


def fast_fk_score(pair: CandidatePair, db: Database) -> float:
    """Name-and-cardinality baseline score for ranking candidate pairs.

    Combines column-name similarity, similarity of the referencing column
    name to the referenced table name, and cardinality alignment; a unique
    referencing column is penalized because it looks like a key itself.
    """
    stats_f = store.column_stats(db, pair.referencing)
    stats_p = store.column_stats(db, pair.referenced)
    column_sim = name_similarity(pair.referencing.column, pair.referenced.column)
    table_sim = name_similarity(pair.referencing.column, pair.referenced.table)
    if stats_p.distinct_count > 0:
        alignment = min(stats_f.distinct_count / stats_p.distinct_count, 1.0)
    else:
        alignment = 0.0
    penalty = 0.5 if stats_f.row_count > 0 and stats_f.distinct_count == stats_f.row_count else 0.0
    return 0.2 * column_sim + 0.5 * table_sim + 0.3 * alignment - penalty
