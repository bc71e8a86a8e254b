"""Candidate validation: evidence assembly and backend-driven accept/reject.

Domain knowledge is derived once per run from the table names and injected
into later prompts.  Each surviving candidate pair is validated independently
with full statistical evidence for both columns; validation runs in a thread
pool but results are assembled in sorted pair order, so output never depends
on scheduling.  Any unrecoverable backend failure rejects that single pair
and flags the run instead of aborting it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from fkdetect import store
from fkdetect.gateway import Gateway, GatewayError, ResponseParseError
from fkdetect.profiler import CandidatePair
from fkdetect.prompts import PromptKind, render_prompt
from fkdetect.store import ColumnStats, Database


@dataclass(frozen=True)
class DomainKnowledge:
    domain: str = ""
    entity_notes: str = ""

    def is_empty(self) -> bool:
        return not self.domain and not self.entity_notes

    def to_dict(self) -> dict[str, str]:
        return {"domain": self.domain, "entity_notes": self.entity_notes}


EMPTY_KNOWLEDGE = DomainKnowledge()


@dataclass(frozen=True)
class PairEvidence:
    """Everything a validator sees about one candidate pair.

    Ratios are ``None`` when undefined: coverage and out-of-range need a
    non-empty referencing column, table size ratio needs a non-empty
    referenced table.
    """

    pair: CandidatePair
    referencing: ColumnStats
    referenced: ColumnStats
    coverage_ratio: float | None
    table_size_ratio: float | None
    out_of_range_ratio: float | None
    referencing_header: tuple[str, ...]
    referenced_header: tuple[str, ...]
    referencing_samples: tuple[tuple, ...]
    referenced_samples: tuple[tuple, ...]

    def to_dict(self) -> dict[str, Any]:
        def stats_dict(s: ColumnStats) -> dict[str, Any]:
            return {
                "table": s.table,
                "column": s.column,
                "ordinal": s.ordinal,
                "data_type": s.logical_type,
                "avg_text_len": s.avg_text_len,
                "distinct_count": s.distinct_count,
                "row_count": s.row_count,
                "cardinality_ratio": s.cardinality_ratio,
                "min_value": None if s.min_value is None else store.render_value(s.min_value),
                "max_value": None if s.max_value is None else store.render_value(s.max_value),
            }

        def render_rows(rows: tuple[tuple, ...]) -> list[list]:
            return [
                [None if v is None else store.render_value(v) for v in row] for row in rows
            ]

        return {
            "referencing": stats_dict(self.referencing),
            "referenced": stats_dict(self.referenced),
            "coverage_ratio": self.coverage_ratio,
            "table_size_ratio": self.table_size_ratio,
            "out_of_range_ratio": self.out_of_range_ratio,
            "referencing_header": list(self.referencing_header),
            "referenced_header": list(self.referenced_header),
            "referencing_samples": render_rows(self.referencing_samples),
            "referenced_samples": render_rows(self.referenced_samples),
        }

    def features(self) -> dict[str, Any]:
        return {
            "referencing_table": self.pair.referencing.table,
            "referencing_column": self.pair.referencing.column,
            "referenced_table": self.pair.referenced.table,
            "referenced_column": self.pair.referenced.column,
            "coverage_ratio": self.coverage_ratio,
        }


@dataclass(frozen=True)
class Verdict:
    pair: CandidatePair
    accepted: bool
    reasoning: str
    backend: str
    error: bool = False
    prompt: str = ""
    raw_response: str = ""


@dataclass
class ValidationResult:
    accepted: set[CandidatePair]
    verdicts: list[Verdict]
    flags: list[str]


def derive_domain_knowledge(
    table_names: Iterable[str],
    gateway: Gateway,
    db_name: str = "",
    mask: bool = True,
) -> tuple[DomainKnowledge, list[str]]:
    """One knowledge request per run; failures degrade to empty knowledge.

    An empty table list means no candidates survived, so no request is made.
    """
    names = sorted(set(table_names))
    if not names:
        return EMPTY_KNOWLEDGE, []
    payload = {"db_name": db_name, "table_names": names}
    prompt = render_prompt(PromptKind.DOMAIN_KNOWLEDGE, payload, None, mask)
    subject = ",".join(names)
    try:
        resp = gateway.complete(
            PromptKind.DOMAIN_KNOWLEDGE, prompt, subject=subject, features={"table_names": names}
        )
    except GatewayError as exc:
        return EMPTY_KNOWLEDGE, [f"domain knowledge request failed, continuing without it: {exc}"]
    return DomainKnowledge(resp.parsed["domain"], resp.parsed["entity_notes"]), []


def build_pair_evidence(db: Database, pair: CandidatePair, sample_count: int = 5) -> PairEvidence:
    table_f, col_f = db.resolve(pair.referencing)
    table_p, col_p = db.resolve(pair.referenced)
    stats_f = store.column_stats(db, pair.referencing)
    stats_p = store.column_stats(db, pair.referenced)
    values_f = [v for v in col_f.values if v is not None]
    coverage = None
    out_of_range = None
    if values_f:
        distinct_f = set(values_f)
        distinct_p = set(v for v in col_p.values if v is not None)
        coverage = len(distinct_f & distinct_p) / len(distinct_f)
        if stats_p.min_value is not None:
            outside = sum(1 for v in values_f if v < stats_p.min_value or v > stats_p.max_value)
            out_of_range = outside / len(values_f)
    table_size = None
    if stats_p.row_count > 0:
        table_size = stats_f.row_count / stats_p.row_count
    return PairEvidence(
        pair=pair,
        referencing=stats_f,
        referenced=stats_p,
        coverage_ratio=coverage,
        table_size_ratio=table_size,
        out_of_range_ratio=out_of_range,
        referencing_header=tuple(table_f.column_names()),
        referenced_header=tuple(table_p.column_names()),
        referencing_samples=tuple(store.sample_rows(db, table_f.name, sample_count)),
        referenced_samples=tuple(store.sample_rows(db, table_p.name, sample_count)),
    )


def validate_candidate(
    pair: CandidatePair,
    evidence: PairEvidence,
    knowledge: DomainKnowledge,
    gateway: Gateway,
    mask: bool = True,
    db_name: str = "",
) -> Verdict:
    """Ask the backend whether one candidate is a real foreign key.

    A gateway failure after its internal repair retry rejects the pair (the
    conservative default) and marks the verdict as an error.
    """
    payload = {"db_name": db_name, "evidence": evidence.to_dict()}
    know = None if knowledge.is_empty() else knowledge.to_dict()
    prompt = render_prompt(PromptKind.PAIR_VALIDATION, payload, know, mask)
    try:
        resp = gateway.complete(
            PromptKind.PAIR_VALIDATION, prompt, subject=pair.subject(), features=evidence.features()
        )
    except GatewayError as exc:
        raw = exc.raw if isinstance(exc, ResponseParseError) else ""
        return Verdict(
            pair=pair, accepted=False,
            reasoning=f"rejected by default after backend failure: {exc}",
            backend=gateway.backend.name, error=True, prompt=prompt, raw_response=raw,
        )
    return Verdict(
        pair=pair, accepted=resp.parsed["is_foreign_key"],
        reasoning=resp.parsed.get("reasoning", ""), backend=resp.backend,
        prompt=prompt, raw_response=resp.raw,
    )


def validate_all(
    pairs: Iterable[CandidatePair],
    db: Database,
    knowledge: DomainKnowledge,
    gateway: Gateway,
    concurrency: int = 4,
    sample_count: int = 5,
    mask: bool = True,
) -> ValidationResult:
    ordered = sorted(pairs, key=lambda p: p.subject())
    if not ordered:
        return ValidationResult(set(), [], [])

    def job(pair: CandidatePair) -> Verdict:
        evidence = build_pair_evidence(db, pair, sample_count)
        return validate_candidate(pair, evidence, knowledge, gateway, mask=mask, db_name=db.name)

    workers = max(1, int(concurrency))
    if workers == 1:
        verdicts = [job(p) for p in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(job, ordered))
    accepted = {v.pair for v in verdicts if v.accepted}
    flags = [
        f"validation of {v.pair.subject()} fell back to reject: {v.reasoning}"
        for v in verdicts
        if v.error
    ]
    return ValidationResult(accepted, verdicts, flags)
