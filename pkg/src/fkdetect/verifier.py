"""Schema-wide conflict resolution over the validated reference set.

Two conflict families are handled in a fixed order.  First, a referencing
column that points at two or more distinct referenced columns keeps exactly
one target.  Second, while the retained references contain a directed cycle
between distinct tables, the shortest such cycle is found and its weakest
edge removed; self-references are legitimate and exempt.  Every decision is
recorded in a resolution trace.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from fkdetect.agents import DomainKnowledge, build_pair_evidence
from fkdetect.gateway import Gateway, GatewayError, heuristic_cycle_choice, heuristic_multi_ref_choice
from fkdetect.profiler import CandidatePair
from fkdetect.prompts import PromptKind, render_prompt
from fkdetect.store import ColumnRef, Database


class VerifierError(RuntimeError):
    """Raised when resolution cannot make progress."""


@dataclass(frozen=True)
class FkEdge:
    pair: CandidatePair

    @property
    def from_table(self) -> str:
        return self.pair.referencing.table

    @property
    def to_table(self) -> str:
        return self.pair.referenced.table

    def subject(self) -> str:
        return self.pair.subject()


@dataclass
class SchemaGraph:
    nodes: list[str]
    edges: list[FkEdge]


@dataclass
class ConflictSet:
    kind: str
    members: list[FkEdge]
    tables: tuple[str, ...] = ()


@dataclass
class ResolutionResult:
    accepted: set[CandidatePair]
    trace: list[dict]
    flags: list[str] = field(default_factory=list)


def build_schema_graph(pairs: Iterable[CandidatePair]) -> SchemaGraph:
    edges = sorted((FkEdge(p) for p in pairs), key=lambda e: e.subject())
    nodes = sorted({t for e in edges for t in (e.from_table, e.to_table)})
    return SchemaGraph(nodes=nodes, edges=edges)


def detect_multi_reference_conflicts(graph: SchemaGraph) -> list[ConflictSet]:
    """Group edges by referencing column; a group with >= 2 targets conflicts."""
    by_source: dict[ColumnRef, list[FkEdge]] = {}
    for edge in graph.edges:
        by_source.setdefault(edge.pair.referencing, []).append(edge)
    out = []
    for source in sorted(by_source, key=str):
        members = by_source[source]
        if len({e.pair.referenced for e in members}) >= 2:
            out.append(ConflictSet(kind="multi_ref", members=sorted(members, key=FkEdge.subject)))
    return out


def find_shortest_cycle(graph: SchemaGraph) -> ConflictSet | None:
    """Shortest directed cycle through distinct tables, or None.

    Breadth-first search from every node in sorted order; the first strictly
    shortest cycle wins, so ties resolve toward the lexicographically
    smallest starting table.  The conflict carries every edge that lies on
    any step of the cycle, including parallel references between the same
    table pair.
    """
    adjacency: dict[str, list[str]] = {node: [] for node in graph.nodes}
    for edge in graph.edges:
        if edge.from_table != edge.to_table:
            adjacency[edge.from_table].append(edge.to_table)
    for node in adjacency:
        adjacency[node] = sorted(set(adjacency[node]))
    best: list[str] | None = None
    for start in sorted(graph.nodes):
        found = _bfs_cycle(start, adjacency)
        if found is not None and (best is None or len(found) < len(best)):
            best = found
    if best is None:
        return None
    steps = list(zip(best, best[1:] + [best[0]]))
    members = [
        edge
        for edge in graph.edges
        if (edge.from_table, edge.to_table) in set(steps)
    ]
    return ConflictSet(kind="cycle", members=members, tables=tuple(best))


def _bfs_cycle(start: str, adjacency: Mapping[str, list[str]]) -> list[str] | None:
    parent: dict[str, str] = {}
    queue: deque[str] = deque([start])
    seen = {start}
    while queue:
        node = queue.popleft()
        for succ in adjacency[node]:
            if succ == start:
                path = [node]
                while path[-1] != start:
                    path.append(parent[path[-1]])
                return list(reversed(path))
            if succ not in seen:
                seen.add(succ)
                parent[succ] = node
                queue.append(succ)
    return None


def _edge_evidence(db: Database, edges: list[FkEdge], sample_count: int) -> list[dict]:
    out = []
    for edge in edges:
        evidence = build_pair_evidence(db, edge.pair, sample_count)
        out.append({"evidence": evidence.to_dict(), "features": evidence.features()})
    return out


def resolve_multi_reference(
    conflict: ConflictSet,
    db: Database,
    knowledge: DomainKnowledge,
    gateway: Gateway,
    mask: bool = True,
    sample_count: int = 5,
) -> tuple[FkEdge, dict]:
    """Choose the one edge to retain from a multi-reference conflict."""
    members = conflict.members
    if len(members) == 1:
        detail = _trace_entry("multi_ref", members, retained=members[0], backend="forced", fallback=False)
        return members[0], detail
    packed = _edge_evidence(db, members, sample_count)
    payload = {
        "db_name": db.name,
        "referencing": str(members[0].pair.referencing),
        "options": [
            {"target": str(edge.pair.referenced), "evidence": item["evidence"]}
            for edge, item in zip(members, packed)
        ],
    }
    know = None if knowledge.is_empty() else knowledge.to_dict()
    prompt = render_prompt(PromptKind.MULTI_REF_SELECT, payload, know, mask)
    subject = str(members[0].pair.referencing)
    features = {"options": [item["features"] for item in packed]}
    try:
        resp = gateway.complete(PromptKind.MULTI_REF_SELECT, prompt, subject=subject, features=features)
        idx = resp.parsed["retained_index"]
        if not 0 <= idx < len(members):
            raise GatewayError(f"retained_index {idx} out of range for {subject}")
        backend, fallback = resp.backend, False
    except GatewayError:
        idx = heuristic_multi_ref_choice(features["options"])
        backend, fallback = "heuristic-fallback", True
    detail = _trace_entry("multi_ref", members, retained=members[idx], backend=backend, fallback=fallback)
    return members[idx], detail


def resolve_cycle(
    cycle: ConflictSet,
    db: Database,
    knowledge: DomainKnowledge,
    gateway: Gateway,
    mask: bool = True,
    sample_count: int = 5,
) -> tuple[FkEdge, dict]:
    """Choose the one edge to remove from a cycle conflict."""
    members = cycle.members
    if not members:
        raise VerifierError("cycle conflict with no member edges")
    packed = _edge_evidence(db, members, sample_count)
    payload = {
        "db_name": db.name,
        "tables": list(cycle.tables),
        "edges": [
            {"edge": edge.subject(), "evidence": item["evidence"]}
            for edge, item in zip(members, packed)
        ],
    }
    know = None if knowledge.is_empty() else knowledge.to_dict()
    prompt = render_prompt(PromptKind.CYCLE_WEAKEST, payload, know, mask)
    subject = ",".join(edge.subject() for edge in members)
    features = {"edges": [item["features"] for item in packed]}
    try:
        resp = gateway.complete(PromptKind.CYCLE_WEAKEST, prompt, subject=subject, features=features)
        idx = resp.parsed["removed_index"]
        if not 0 <= idx < len(members):
            raise GatewayError(f"removed_index {idx} out of range")
        backend, fallback = resp.backend, False
    except GatewayError:
        idx = heuristic_cycle_choice(features["edges"])
        backend, fallback = "heuristic-fallback", True
    detail = _trace_entry(
        "cycle", members, removed=members[idx], backend=backend, fallback=fallback, tables=cycle.tables
    )
    return members[idx], detail


def _trace_entry(
    kind: str,
    members: list[FkEdge],
    retained: FkEdge | None = None,
    removed: FkEdge | None = None,
    backend: str = "",
    fallback: bool = False,
    tables: tuple[str, ...] = (),
) -> dict:
    entry: dict = {
        "kind": kind,
        "candidates": [e.subject() for e in members],
        "backend": backend,
        "fallback": fallback,
    }
    if kind == "multi_ref":
        entry["referencing"] = str(members[0].pair.referencing)
    if retained is not None:
        entry["retained"] = retained.subject()
    if removed is not None:
        entry["removed"] = removed.subject()
    if tables:
        entry["tables"] = list(tables)
    return entry


def resolve_all(
    pairs: Iterable[CandidatePair],
    db: Database,
    knowledge: DomainKnowledge,
    gateway: Gateway,
    mask: bool = True,
    sample_count: int = 5,
) -> ResolutionResult:
    """Run both resolution stages to a conflict-free reference set.

    Multi-reference conflicts are settled first, then cycles are removed one
    edge at a time, re-detecting after each removal.  Each iteration removes
    one edge, so the loop is bounded by the input size.
    """
    current: set[CandidatePair] = set(pairs)
    trace: list[dict] = []
    flags: list[str] = []
    graph = build_schema_graph(current)
    for conflict in detect_multi_reference_conflicts(graph):
        retained, detail = resolve_multi_reference(conflict, db, knowledge, gateway, mask, sample_count)
        for member in conflict.members:
            if member.pair != retained.pair:
                current.discard(member.pair)
        trace.append(detail)
        if detail["fallback"]:
            flags.append(f"multi-reference conflict on {detail['referencing']} settled by heuristic fallback")
    limit = len(trace) + len(current) + 1
    iterations = 0
    while True:
        graph = build_schema_graph(current)
        cycle = find_shortest_cycle(graph)
        if cycle is None:
            break
        iterations += 1
        if iterations > limit:
            raise VerifierError("cycle resolution failed to terminate")
        removed, detail = resolve_cycle(cycle, db, knowledge, gateway, mask, sample_count)
        current.discard(removed.pair)
        trace.append(detail)
        if detail["fallback"]:
            flags.append(f"cycle through {', '.join(detail['tables'])} settled by heuristic fallback")
    return ResolutionResult(accepted=current, trace=trace, flags=flags)
