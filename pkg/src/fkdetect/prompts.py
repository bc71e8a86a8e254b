"""Prompt construction for each reasoning request kind.

Payloads are plain JSON-ready dicts assembled by callers; this module turns
them into prompt text and applies database-name masking.  Masking replaces
every case-insensitive occurrence of the raw database name in the final text
with ``MASK_TOKEN`` so outbound requests never leak the name.
"""

from __future__ import annotations

import re
from enum import Enum
from typing import Any, Mapping

MASK_TOKEN = "[database]"


class PromptKind(str, Enum):
    UNIQUE_KEY = "UniqueKeySelection"
    DOMAIN_KNOWLEDGE = "DomainKnowledge"
    PAIR_VALIDATION = "PairValidation"
    MULTI_REF_SELECT = "MultiRefSelect"
    CYCLE_WEAKEST = "CycleWeakest"


def mask_text(text: str, db_name: str) -> str:
    if not db_name:
        return text
    return re.sub(re.escape(db_name), MASK_TOKEN, text, flags=re.IGNORECASE)


def render_prompt(
    kind: PromptKind,
    payload: Mapping[str, Any],
    knowledge: Mapping[str, str] | None = None,
    mask: bool = True,
) -> str:
    if kind is PromptKind.UNIQUE_KEY:
        text = _render_unique_key(payload, knowledge)
    elif kind is PromptKind.DOMAIN_KNOWLEDGE:
        text = _render_domain_knowledge(payload)
    elif kind is PromptKind.PAIR_VALIDATION:
        text = _render_pair_validation(payload, knowledge)
    elif kind is PromptKind.MULTI_REF_SELECT:
        text = _render_multi_ref(payload, knowledge)
    elif kind is PromptKind.CYCLE_WEAKEST:
        text = _render_cycle(payload, knowledge)
    else:
        raise ValueError(f"unknown prompt kind: {kind!r}")
    if mask:
        text = mask_text(text, str(payload.get("db_name", "")))
    return text


def _fmt_ratio(value: float | None) -> str:
    return "undefined" if value is None else f"{value:.6f}"


def _fmt_value(value: str | None) -> str:
    return "NULL" if value is None else value


def _db_line(payload: Mapping[str, Any]) -> str:
    return f"Database: {payload.get('db_name', '') or '(unnamed)'}"


def _knowledge_block(knowledge: Mapping[str, str] | None) -> str:
    if not knowledge:
        return ""
    domain = knowledge.get("domain", "")
    notes = knowledge.get("entity_notes", "")
    if not domain and not notes:
        return ""
    lines = []
    if domain:
        lines.append(f"Domain context: {domain}")
    if notes:
        lines.append(f"Entity notes: {notes}")
    return "\n".join(lines) + "\n\n"


def _profile_block(stats: Mapping[str, Any]) -> str:
    return "\n".join(
        [
            f"  Table name: {stats['table']}",
            f"  Column name: {stats['column']}",
            f"  Ordinal position: {stats['ordinal']}",
            f"  Data type: {stats['data_type']}",
            f"  Average value text length: {_fmt_ratio(stats['avg_text_len'])}",
            f"  Number of distinct values: {stats['distinct_count']}",
            f"  Number of rows in table: {stats['row_count']}",
            f"  Cardinality ratio: {_fmt_ratio(stats['cardinality_ratio'])}",
            f"  Minimum value: {_fmt_value(stats['min_value'])}",
            f"  Maximum value: {_fmt_value(stats['max_value'])}",
        ]
    )


def _measurement_block(evidence: Mapping[str, Any]) -> str:
    return "\n".join(
        [
            f"  Coverage ratio: {_fmt_ratio(evidence['coverage_ratio'])}",
            f"  Table size ratio: {_fmt_ratio(evidence['table_size_ratio'])}",
            f"  Out-of-range ratio: {_fmt_ratio(evidence['out_of_range_ratio'])}",
        ]
    )


def _sample_block(table: str, header: list[str], rows: list[list[str]]) -> str:
    lines = [f"Example data from table {table} (first 5 rows):"]
    lines.append("  " + " | ".join(header))
    if not rows:
        lines.append("  (no rows)")
    for row in rows:
        lines.append("  " + " | ".join(_fmt_value(v) for v in row))
    return "\n".join(lines)


def _render_pair_validation(payload: Mapping[str, Any], knowledge: Mapping[str, str] | None) -> str:
    ev = payload["evidence"]
    ref = ev["referencing"]
    refd = ev["referenced"]
    parts = [
        "You review candidate foreign keys in a relational database.",
        _db_line(payload),
        "",
        _knowledge_block(knowledge)
        + f"Candidate: does column {ref['table']}.{ref['column']} reference "
        + f"column {refd['table']}.{refd['column']}?",
        "",
        "Referencing column profile:",
        _profile_block(ref),
        "",
        "Referenced column profile:",
        _profile_block(refd),
        "",
        "Relationship measurements:",
        _measurement_block(ev),
        "",
        _sample_block(ref["table"], ev["referencing_header"], ev["referencing_samples"]),
        "",
        _sample_block(refd["table"], ev["referenced_header"], ev["referenced_samples"]),
        "",
        "Assess the candidate from a syntactic perspective based on naming conventions, "
        "from a statistical perspective based on the column profiles and relationship "
        "measurements, and from a semantic perspective based on what the tables and "
        "columns represent. A real foreign key should hold up from all three perspectives.",
        'Respond with a single JSON object: {"is_foreign_key": true or false, '
        '"reasoning": "<short explanation>"}.',
    ]
    return "\n".join(parts)


def _render_unique_key(payload: Mapping[str, Any], knowledge: Mapping[str, str] | None) -> str:
    lines = [
        "You select the unique key by which rows of a table are identified.",
        _db_line(payload),
        "",
    ]
    block = _knowledge_block(knowledge)
    if block:
        lines.append(block.rstrip("\n"))
        lines.append("")
    lines.append(f"Table: {payload['table']}")
    if payload.get("no_ucc_mode"):
        lines.append(
            "No column combination is unique in the stored data; choose the column "
            "that most plausibly identifies rows."
        )
    lines.append("")
    lines.append("Candidate keys:")
    for idx, cand in enumerate(payload["candidates"]):
        names = ", ".join(c["name"] for c in cand["columns"])
        lines.append(f"  [{idx}] columns: ({names})")
        for col in cand["columns"]:
            lines.append(
                f"      {col['name']}: ordinal position {col['ordinal']}, "
                f"type {col['data_type']}, "
                f"average value text length {_fmt_ratio(col['avg_text_len'])}, "
                f"{col['distinct_count']} distinct of {col['row_count']} rows"
            )
            samples = ", ".join(_fmt_value(v) for v in col["samples"])
            lines.append(f"      sample values: {samples if samples else '(none)'}")
    lines.extend(
        [
            "",
            "A good key can uniquely identify a specific tuple. Prefer columns "
            "positioned earlier in the table definition, column names containing "
            'typical identifiers such as "id", "key", or "code", and values that are '
            "typically an integer or a string. The key should be concise and "
            "human-readable, favor fewer constituent columns, and logically represent "
            "the entity the table describes.",
            'Respond with a single JSON object: {"chosen_index": <integer>, '
            '"reason": "<short explanation>"}.',
        ]
    )
    return "\n".join(lines)


def _render_domain_knowledge(payload: Mapping[str, Any]) -> str:
    names = ", ".join(payload["table_names"])
    return "\n".join(
        [
            "You describe the domain of a relational database given its table names.",
            _db_line(payload),
            "",
            f"Tables: {names}",
            "",
            "Summarize the business domain these tables cover and note the main "
            "entities and how they relate to each other.",
            'Respond with a single JSON object: {"domain": "<one sentence>", '
            '"entity_notes": "<short notes on entities and relationships>"}.',
        ]
    )


def _render_multi_ref(payload: Mapping[str, Any], knowledge: Mapping[str, str] | None) -> str:
    lines = [
        "A referencing column matches several candidate referenced keys, but at most "
        "one reference can be correct.",
        _db_line(payload),
        "",
    ]
    block = _knowledge_block(knowledge)
    if block:
        lines.append(block.rstrip("\n"))
        lines.append("")
    lines.append(f"Referencing column: {payload['referencing']}")
    lines.append("")
    lines.append("Options:")
    for idx, option in enumerate(payload["options"]):
        ev = option["evidence"]
        lines.append(f"  [{idx}] {payload['referencing']} references {option['target']}")
        lines.append("      Referenced column profile:")
        lines.append(_indent(_profile_block(ev["referenced"]), "    "))
        lines.append("      Relationship measurements:")
        lines.append(_indent(_measurement_block(ev), "    "))
    lines.extend(
        [
            "",
            "Pick the single reference to retain, weighing naming, the column "
            "profiles, and the relationship measurements of every option together.",
            'Respond with a single JSON object: {"retained_index": <integer>}.',
        ]
    )
    return "\n".join(lines)


def _render_cycle(payload: Mapping[str, Any], knowledge: Mapping[str, str] | None) -> str:
    path = " -> ".join(list(payload["tables"]) + [payload["tables"][0]]) if payload.get("tables") else ""
    lines = [
        "The retained references form a reference cycle between tables"
        + (f": {path}." if path else "."),
        "Real schemas resolve such cycles by dropping the weakest link; exactly one "
        "edge must be removed.",
        _db_line(payload),
        "",
    ]
    block = _knowledge_block(knowledge)
    if block:
        lines.append(block.rstrip("\n"))
        lines.append("")
    lines.append("Edges in the cycle:")
    for idx, edge in enumerate(payload["edges"]):
        ev = edge["evidence"]
        lines.append(f"  [{idx}] {edge['edge']}")
        lines.append("      Relationship measurements:")
        lines.append(_indent(_measurement_block(ev), "    "))
    lines.extend(
        [
            "",
            "Considering every edge's naming and measurements together, pick the "
            "least plausible reference.",
            'Respond with a single JSON object: {"removed_index": <integer>}.',
        ]
    )
    return "\n".join(lines)


def _indent(text: str, pad: str) -> str:
    return "\n".join(pad + line for line in text.splitlines())
