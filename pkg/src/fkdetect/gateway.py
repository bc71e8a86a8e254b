"""Pluggable completion backends with caching and strict response parsing.

Three backends answer prompts:

* ``http``: POSTs to an OpenAI-style ``/chat/completions`` endpoint.
* ``scripted``: replays canned decisions from a JSON map keyed by
  ``"<kind>|<subject>"``; a missing key is an error, never a silent default.
* ``heuristic``: deterministic offline rules over the structured features a
  call site supplies alongside the prompt.

Responses must contain one JSON object matching the request kind's schema.
A response that fails to parse triggers exactly one repair retry with an
amended prompt; a second failure raises, and call sites fall back to their
conservative defaults.  Completed responses are cached on disk keyed by a
content hash of (kind, model, temperature, prompt).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from fkdetect.prompts import PromptKind
from fkdetect.similarity import name_similarity

REPAIR_SUFFIX = (
    "\n\nYour previous reply could not be parsed. Respond again with a single "
    "JSON object matching the requested schema and nothing else."
)

_KEY_NAME_TOKENS = ("id", "key", "code")


class GatewayError(RuntimeError):
    """Base error for backend failures and unusable responses."""


class ScriptKeyError(GatewayError):
    """A scripted run had no entry for the requested decision."""


class ResponseParseError(GatewayError):
    """The response text did not yield a schema-conforming JSON object."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class CompletionParams:
    model: str = "default"
    temperature: float = 0.0
    max_retries: int = 2
    timeout: float = 60.0


@dataclass(frozen=True)
class GatewayResponse:
    raw: str
    parsed: dict
    backend: str
    cache_hit: bool = False


# --- Response parsing ---------------------------------------------------------

_SCHEMAS: dict[PromptKind, dict[str, type]] = {
    PromptKind.UNIQUE_KEY: {"chosen_index": int},
    PromptKind.DOMAIN_KNOWLEDGE: {"domain": str, "entity_notes": str},
    PromptKind.PAIR_VALIDATION: {"is_foreign_key": bool},
    PromptKind.MULTI_REF_SELECT: {"retained_index": int},
    PromptKind.CYCLE_WEAKEST: {"removed_index": int},
}

_TEXT_DEFAULTS: dict[PromptKind, dict[str, str]] = {
    PromptKind.UNIQUE_KEY: {"reason": ""},
    PromptKind.PAIR_VALIDATION: {"reasoning": ""},
    PromptKind.DOMAIN_KNOWLEDGE: {},
    PromptKind.MULTI_REF_SELECT: {},
    PromptKind.CYCLE_WEAKEST: {},
}


def extract_json_object(text: str) -> dict:
    """First JSON object found in ``text``: bare, fenced, or embedded."""
    body = text.strip()
    if not body:
        raise ResponseParseError("empty response", raw=text)
    try:
        parsed = json.loads(body)
        if isinstance(parsed, dict):
            return parsed
    except json.JSONDecodeError:
        pass
    decoder = json.JSONDecoder()
    start = body.find("{")
    while start != -1:
        try:
            parsed, _ = decoder.raw_decode(body, start)
        except json.JSONDecodeError:
            start = body.find("{", start + 1)
            continue
        if isinstance(parsed, dict):
            return parsed
        start = body.find("{", start + 1)
    raise ResponseParseError("no JSON object in response", raw=text)


def parse_response(kind: PromptKind, text: str) -> dict:
    """Validate a backend reply against the request kind's schema.

    The decision-bearing fields are mandatory and strictly typed; free-text
    fields (``reason``, ``reasoning``) may be omitted and default to "".
    """
    obj = extract_json_object(text)
    out: dict[str, Any] = {}
    for name, expected in _SCHEMAS[kind].items():
        if name not in obj:
            raise ResponseParseError(f"missing field {name!r}", raw=text)
        value = obj[name]
        if expected is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ResponseParseError(f"field {name!r} must be an integer", raw=text)
        elif expected is bool:
            if not isinstance(value, bool):
                raise ResponseParseError(f"field {name!r} must be a boolean", raw=text)
        elif not isinstance(value, expected):
            raise ResponseParseError(f"field {name!r} must be {expected.__name__}", raw=text)
        out[name] = value
    for name, default in _TEXT_DEFAULTS[kind].items():
        value = obj.get(name, default)
        out[name] = value if isinstance(value, str) else str(value)
    return out


# --- Heuristic decision rules -------------------------------------------------


def heuristic_key_choice(candidates: list[Mapping[str, Any]]) -> int:
    """Score candidate keys and return the index of the best one.

    Each candidate carries ``columns``: a list of dicts with ``name``,
    ``ordinal``, ``data_type``, and ``avg_text_len``.  Scoring favors single
    integer-or-text columns named like identifiers that appear early in the
    table; long text values are penalized.  Ties break toward fewer columns,
    then the smaller largest ordinal, then lexicographic column names.
    """
    if not candidates:
        raise ValueError("no candidates to choose from")
    global_min_ordinal = min(min(c["ordinal"] for c in cand["columns"]) for cand in candidates)

    def score(cand: Mapping[str, Any]) -> float:
        cols = cand["columns"]
        total = 0.0
        if len(cols) == 1:
            total += 2.0
        if any(token in c["name"].lower() for c in cols for token in _KEY_NAME_TOKENS):
            total += 1.0
        if all(c["data_type"] in ("integer", "text") for c in cols):
            total += 1.0
        if min(c["ordinal"] for c in cols) == global_min_ordinal:
            total += 0.5
        if any(c["avg_text_len"] > 20 for c in cols):
            total -= 1.0
        return total

    def rank(item: tuple[int, Mapping[str, Any]]) -> tuple:
        idx, cand = item
        cols = cand["columns"]
        return (
            -score(cand),
            len(cols),
            max(c["ordinal"] for c in cols),
            tuple(sorted(c["name"] for c in cols)),
            idx,
        )

    return min(enumerate(candidates), key=rank)[0]


def heuristic_pair_decision(features: Mapping[str, Any]) -> bool:
    """Accept a candidate pair only on full coverage plus a naming signal."""
    if features.get("coverage_ratio") != 1.0:
        return False
    cf = features["referencing_column"]
    cp = features["referenced_column"]
    if name_similarity(cf, cp) >= 0.6:
        return True
    return features["referenced_table"].lower() in cf.lower()


def heuristic_multi_ref_choice(options: list[Mapping[str, Any]]) -> int:
    """Retain the target whose column name is most similar to the referencing one."""
    if not options:
        raise ValueError("no options to choose from")
    sims = [
        name_similarity(opt["referencing_column"], opt["referenced_column"]) for opt in options
    ]
    return max(range(len(options)), key=lambda i: (sims[i], -i))


def heuristic_cycle_choice(edges: list[Mapping[str, Any]]) -> int:
    """Remove the weakest cycle edge: lowest coverage, then least name similarity."""
    if not edges:
        raise ValueError("no edges to choose from")

    def weakness(i: int) -> tuple:
        edge = edges[i]
        coverage = edge.get("coverage_ratio")
        sim = name_similarity(edge["referencing_column"], edge["referenced_column"])
        return (-1.0 if coverage is None else coverage, sim, i)

    return min(range(len(edges)), key=weakness)


def heuristic_decision(kind: PromptKind, features: Mapping[str, Any]) -> dict:
    if kind is PromptKind.UNIQUE_KEY:
        idx = heuristic_key_choice(features["candidates"])
        return {"chosen_index": idx, "reason": "scored naming, position, type, and width signals"}
    if kind is PromptKind.PAIR_VALIDATION:
        accepted = heuristic_pair_decision(features)
        return {
            "is_foreign_key": accepted,
            "reasoning": "full coverage with a naming match" if accepted else "coverage or naming signal missing",
        }
    if kind is PromptKind.DOMAIN_KNOWLEDGE:
        names = sorted(features["table_names"])
        shown = ", ".join(names[:8])
        return {
            "domain": f"relational dataset of {len(names)} tables including {shown}",
            "entity_notes": "entities inferred from table names only",
        }
    if kind is PromptKind.MULTI_REF_SELECT:
        return {"retained_index": heuristic_multi_ref_choice(features["options"])}
    if kind is PromptKind.CYCLE_WEAKEST:
        return {"removed_index": heuristic_cycle_choice(features["edges"])}
    raise GatewayError(f"heuristic backend cannot answer kind {kind!r}")


# --- Backends -----------------------------------------------------------------


class HeuristicBackend:
    """Offline rules; needs structured features, ignores the prompt text."""

    name = "heuristic"

    def complete_text(
        self, kind: PromptKind, prompt: str, params: CompletionParams,
        subject: str, features: Mapping[str, Any] | None,
    ) -> str:
        if features is None:
            raise GatewayError(f"heuristic backend needs features for {kind.value}|{subject}")
        return json.dumps(heuristic_decision(kind, features), sort_keys=True)


class ScriptedBackend:
    """Replays canned decisions from a ``"<kind>|<subject>"`` keyed map."""

    name = "scripted"

    def __init__(self, source: str | Path | Mapping[str, Any]):
        if isinstance(source, Mapping):
            entries = dict(source)
        else:
            try:
                entries = json.loads(Path(source).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise GatewayError(f"cannot load script {source}: {exc}") from exc
            if not isinstance(entries, dict):
                raise GatewayError(f"script {source} must hold a JSON object")
        self.entries = entries

    def complete_text(
        self, kind: PromptKind, prompt: str, params: CompletionParams,
        subject: str, features: Mapping[str, Any] | None,
    ) -> str:
        key = f"{kind.value}|{subject}"
        if key not in self.entries:
            raise ScriptKeyError(f"script has no entry for {key!r}")
        entry = self.entries[key]
        return entry if isinstance(entry, str) else json.dumps(entry, sort_keys=True)


class HttpBackend:
    """OpenAI-style chat-completions client with bounded retries."""

    name = "http"

    def __init__(self, base_url: str, api_key_env: str = "FKDETECT_API_KEY"):
        if not base_url:
            raise GatewayError("http backend requires a base URL")
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env

    def complete_text(
        self, kind: PromptKind, prompt: str, params: CompletionParams,
        subject: str, features: Mapping[str, Any] | None,
    ) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": params.model,
            "temperature": params.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        url = f"{self.base_url}/chat/completions"
        attempts = max(1, params.max_retries + 1)
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(min(0.5 * (2 ** (attempt - 1)), 4.0))
            try:
                resp = requests.post(url, json=body, headers=headers, timeout=params.timeout)
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code >= 500:
                last_error = GatewayError(f"server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise GatewayError(f"completion request failed with status {resp.status_code}")
            try:
                payload = resp.json()
                content = payload["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise GatewayError(f"malformed completion payload: {exc}") from exc
            if not isinstance(content, str):
                raise GatewayError("completion content is not text")
            return content
        raise GatewayError(f"completion request failed after {attempts} attempts: {last_error}")


def build_backend(
    name: str,
    base_url: str = "",
    script: str | Path | Mapping[str, Any] | None = None,
    api_key_env: str = "FKDETECT_API_KEY",
):
    if name == "heuristic":
        return HeuristicBackend()
    if name == "scripted":
        if script is None:
            raise GatewayError("scripted backend requires a script source")
        return ScriptedBackend(script)
    if name == "http":
        return HttpBackend(base_url, api_key_env=api_key_env)
    raise GatewayError(f"unknown backend {name!r}")


# --- Cache and orchestration ---------------------------------------------------


class ResponseCache:
    """Content-addressed response store; one JSON file per completed request."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(kind: PromptKind, model: str, temperature: float, prompt: str) -> str:
        blob = json.dumps(
            {"kind": kind.value, "model": model, "temperature": temperature, "prompt": prompt},
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except json.JSONDecodeError:
            return None

    def put(self, key: str, entry: dict) -> None:
        path = self._path(key)
        tmp = path.with_name(f"{path.name}.{uuid.uuid4().hex}.tmp")
        tmp.write_text(json.dumps(entry, sort_keys=True, indent=2), encoding="utf-8")
        os.replace(tmp, path)


def pair_subject(referencing_table: str, referencing_column: str,
                 referenced_table: str, referenced_column: str) -> str:
    return f"{referencing_table}.{referencing_column}→{referenced_table}.{referenced_column}"


class Gateway:
    """Routes prompts to a backend with caching, parsing, and one repair retry."""

    def __init__(
        self,
        backend,
        params: CompletionParams = CompletionParams(),
        cache_dir: str | Path | None = None,
    ):
        self.backend = backend
        self.params = params
        self.cache = ResponseCache(cache_dir) if cache_dir else None
        self._lock = threading.Lock()
        self.calls = 0
        self.cache_hits = 0

    def complete(
        self,
        kind: PromptKind,
        prompt: str,
        subject: str,
        features: Mapping[str, Any] | None = None,
    ) -> GatewayResponse:
        key = None
        if self.cache is not None:
            key = ResponseCache.key(kind, self.params.model, self.params.temperature, prompt)
            entry = self.cache.get(key)
            if entry is not None:
                with self._lock:
                    self.cache_hits += 1
                return GatewayResponse(
                    raw=entry["raw"], parsed=entry["parsed"],
                    backend=entry.get("backend", self.backend.name), cache_hit=True,
                )
        raw = self._call(kind, prompt, subject, features)
        try:
            parsed = parse_response(kind, raw)
        except ResponseParseError:
            raw = self._call(kind, prompt + REPAIR_SUFFIX, subject, features)
            parsed = parse_response(kind, raw)
        if self.cache is not None and key is not None:
            self.cache.put(
                key,
                {
                    "kind": kind.value,
                    "model": self.params.model,
                    "temperature": self.params.temperature,
                    "prompt": prompt,
                    "raw": raw,
                    "parsed": parsed,
                    "backend": self.backend.name,
                },
            )
        return GatewayResponse(raw=raw, parsed=parsed, backend=self.backend.name)

    def _call(
        self, kind: PromptKind, prompt: str, subject: str, features: Mapping[str, Any] | None
    ) -> str:
        with self._lock:
            self.calls += 1
        return self.backend.complete_text(kind, prompt, self.params, subject, features)
