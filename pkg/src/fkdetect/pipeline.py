"""End-to-end runs: profile, detect, evaluate, and explain.

``run_detect`` executes the full chain: discovery, rule filtering, unique-key
selection, key pruning, domain knowledge, validation, and conflict
resolution.  The emitted report is a plain JSON-ready dict, fully sorted, so
byte-identical inputs give byte-identical reports regardless of concurrency.
The echoed config covers only keys that change the decision process, which is
why the concurrency limit is not part of it.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from fkdetect import agents, discovery, evaluation, profiler, verifier
from fkdetect.config import RunConfig
from fkdetect.gateway import CompletionParams, Gateway, build_backend
from fkdetect.store import Database, load_database


class PipelineError(RuntimeError):
    """Raised when a run cannot produce a report."""


def build_gateway(config: RunConfig) -> Gateway:
    backend = build_backend(
        config.backend,
        base_url=config.base_url,
        script=config.script or None,
        api_key_env=config.api_key_env,
    )
    params = CompletionParams(model=config.model, temperature=config.temperature)
    return Gateway(backend, params, cache_dir=config.cache_dir or None)


def _config_echo(config: RunConfig) -> dict[str, Any]:
    return {
        "backend": config.backend,
        "model": config.model,
        "temperature": config.temperature,
        "max_ucc_arity": config.max_ucc_arity,
        "sample_rows": config.sample_rows,
        "mask": config.mask,
    }


def _load_db(config: RunConfig) -> Database:
    if not config.db:
        raise PipelineError("no database source given")
    return load_database(config.db)


def _discover_and_prune(db: Database, config: RunConfig, gateway: Gateway):
    inds = discovery.discover_single_column_inds(db)
    candidates = profiler.filter_by_rules(inds, db)
    keys: dict[str, profiler.KeySelection] = {}
    minuccs_by_table: dict[str, set[discovery.MinUcc]] = {}
    for name in profiler.referenced_tables(candidates):
        table = db.table(name)
        minuccs = discovery.discover_min_uccs(table, config.max_ucc_arity)
        minuccs_by_table[name] = minuccs
        keys[name] = profiler.select_unique_key(
            table, minuccs, gateway,
            db_name=db.name, mask=config.mask, sample_count=config.sample_rows,
        )
    pruned = profiler.prune_by_unique_keys(candidates, keys) if candidates else set()
    return inds, candidates, keys, pruned, minuccs_by_table


def run_profile(config: RunConfig, stages_only: bool = False) -> dict[str, Any]:
    db = _load_db(config)
    gateway = build_gateway(config)
    inds, candidates, keys, pruned, minuccs_by_table = _discover_and_prune(db, config, gateway)
    stage_counts = profiler.pruning_report(
        db,
        {
            "after_ind": len(inds),
            "after_rules": len(candidates),
            "after_unique_key": len(pruned),
        },
    )
    if stages_only:
        return stage_counts
    for table in db.tables:
        if table.name not in minuccs_by_table:
            minuccs_by_table[table.name] = discovery.discover_min_uccs(table, config.max_ucc_arity)
    min_uccs = sorted(
        (ucc.table, ucc.sorted_columns())
        for uccs in minuccs_by_table.values()
        for ucc in uccs
    )
    return {
        "database": db.name,
        "tables": {
            t.name: {"rows": t.row_count, "columns": t.column_names()} for t in db.tables
        },
        "stage_counts": stage_counts,
        "inds": evaluation.refs_to_json(discovery.inds_as_pairs(inds)),
        "min_uccs": [{"table": t, "columns": list(cols)} for t, cols in min_uccs],
        "selected_keys": {name: _key_dict(sel) for name, sel in sorted(keys.items())},
        "candidates": evaluation.refs_to_json(
            evaluation.as_refs(pruned)
        ),
    }


def _key_dict(selection: profiler.KeySelection) -> dict[str, Any]:
    return {
        "columns": list(selection.columns),
        "reason": selection.reason,
        "backend": selection.backend,
        "no_ucc_mode": selection.no_ucc_mode,
        "fallback": selection.fallback,
    }


def run_detect(config: RunConfig) -> dict[str, Any]:
    db = _load_db(config)
    gateway = build_gateway(config)
    flags: list[str] = []
    inds, candidates, keys, psi_cand, _ = _discover_and_prune(db, config, gateway)
    for name, selection in sorted(keys.items()):
        if selection.fallback:
            flags.append(f"unique key for {name} selected by heuristic fallback")
    involved = sorted(
        {p.referencing.table for p in psi_cand} | {p.referenced.table for p in psi_cand}
    )
    knowledge, knowledge_flags = agents.derive_domain_knowledge(
        involved, gateway, db_name=db.name, mask=config.mask
    )
    flags.extend(knowledge_flags)
    validation = agents.validate_all(
        psi_cand, db, knowledge, gateway,
        concurrency=config.concurrency, sample_count=config.sample_rows, mask=config.mask,
    )
    flags.extend(validation.flags)
    resolution = verifier.resolve_all(
        validation.accepted, db, knowledge, gateway,
        mask=config.mask, sample_count=config.sample_rows,
    )
    flags.extend(resolution.flags)

    stage_counts = profiler.pruning_report(
        db,
        {
            "after_ind": len(inds),
            "after_rules": len(candidates),
            "after_unique_key": len(psi_cand),
        },
    )
    stage_counts["after_validation"] = len(validation.accepted)
    stage_counts["final"] = len(resolution.accepted)

    rule_pruned = {
        profiler.CandidatePair.from_ind(i).subject()
        for i in inds
        if profiler.CandidatePair.from_ind(i) not in candidates
    }
    key_pruned = {p.subject() for p in candidates - psi_cand}
    verdicts = {}
    for verdict in validation.verdicts:
        evidence = agents.build_pair_evidence(db, verdict.pair, config.sample_rows)
        verdicts[verdict.pair.subject()] = {
            "accepted": verdict.accepted,
            "reasoning": verdict.reasoning,
            "backend": verdict.backend,
            "error": verdict.error,
            "prompt": verdict.prompt,
            "raw_response": verdict.raw_response,
            "evidence": evidence.to_dict(),
        }

    return {
        "database": db.name,
        "config": _config_echo(config),
        "stage_counts": stage_counts,
        "selected_keys": {name: _key_dict(sel) for name, sel in sorted(keys.items())},
        "domain_knowledge": knowledge.to_dict(),
        "foreign_keys": evaluation.refs_to_json(evaluation.as_refs(resolution.accepted)),
        "verdicts": verdicts,
        "pruned": {
            **{subject: "rules" for subject in sorted(rule_pruned)},
            **{subject: "unique_key" for subject in sorted(key_pruned)},
        },
        "resolution_trace": resolution.trace,
        "flags": flags,
    }


def report_to_json(report: dict[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(report: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(report_to_json(report), encoding="utf-8")


def load_predictions(path: str | Path) -> tuple[set, set | None, dict[str, Any]]:
    """Read predictions from a detect report or a bare reference array.

    Returns (predicted refs, candidate refs seen by validation, report).
    Bare arrays carry no candidate information, signalled by ``None``; the
    caller widens candidates with the truth so scoring still works.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise PipelineError(f"cannot load predictions {path}: {exc}") from exc
    if isinstance(raw, dict):
        if "foreign_keys" not in raw:
            raise PipelineError(f"prediction report {path} has no foreign_keys field")
        predicted = evaluation.parse_refs(raw["foreign_keys"], what="foreign_keys")
        subjects = raw.get("verdicts", {})
        candidates = set()
        for subject in subjects:
            ref_part, _, refd_part = subject.partition("→")
            if not refd_part:
                raise PipelineError(f"malformed verdict subject {subject!r}")
            f_table, _, f_column = ref_part.rpartition(".")
            p_table, _, p_column = refd_part.rpartition(".")
            candidates.add((f_table, f_column, p_table, p_column))
        return predicted, candidates or set(predicted), raw
    predicted = evaluation.parse_refs(raw, what="predictions")
    return predicted, None, {"foreign_keys": evaluation.refs_to_json(predicted)}


def run_evaluate(config: RunConfig) -> dict[str, Any]:
    if not config.pred:
        raise PipelineError("evaluate needs a predictions file")
    if not config.truth:
        raise PipelineError("evaluate needs a ground-truth file")
    predicted, candidates, _ = load_predictions(config.pred)
    db = load_database(config.db) if config.db else None
    truth = evaluation.load_ground_truth(config.truth, db)
    if candidates is None:
        candidates = set(predicted) | truth.refs
    report = evaluation.score(predicted, truth, candidates)
    return report.to_dict()


def run_explain(config: RunConfig, pair: str) -> dict[str, Any]:
    source = config.pred or config.out
    if not source:
        raise PipelineError("explain needs a prediction report (--pred)")
    referencing, sep, referenced = pair.partition(":")
    if not sep or "." not in referencing or "." not in referenced:
        raise PipelineError(f"pair must look like table.column:table.column, got {pair!r}")
    subject = f"{referencing}→{referenced}"
    try:
        raw = json.loads(Path(source).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise PipelineError(f"cannot load prediction report {source}: {exc}") from exc
    out: dict[str, Any] = {"pair": subject}
    verdict = raw.get("verdicts", {}).get(subject)
    if verdict is not None:
        out["stage"] = "validated"
        out["verdict"] = verdict
        final = {
            (r["from_table"], r["from_column"], r["to_table"], r["to_column"])
            for r in raw.get("foreign_keys", [])
        }
        ref_part = (referencing.rsplit(".", 1) + referenced.rsplit(".", 1))
        out["in_final_set"] = tuple(ref_part) in final
        for entry in raw.get("resolution_trace", []):
            if entry.get("removed") == subject or entry.get("retained") == subject:
                out["resolution"] = entry
        return out
    pruned_stage = raw.get("pruned", {}).get(subject)
    if pruned_stage is not None:
        out["stage"] = f"pruned:{pruned_stage}"
        return out
    raise PipelineError(f"pair {subject} does not appear in the report")
