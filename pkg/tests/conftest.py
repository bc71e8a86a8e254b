"""Shared fixtures: kernel backend switching, database builders, and stubs."""

from __future__ import annotations

import csv
import json
import random
import threading
from datetime import date, timedelta
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from fkdetect import discovery, kernels, profiler, store
from fkdetect.evaluation import GroundTruth
from fkdetect.profiler import CandidatePair
from fkdetect.store import Column, Database, Table


def _numba_importable() -> bool:
    try:
        kernels._numba_funcs()
    except kernels.KernelError:
        return False
    return True


KERNEL_BACKENDS = ("numpy", "numba") if _numba_importable() else ("numpy",)


@pytest.fixture(params=KERNEL_BACKENDS)
def kernel_backend(request):
    previous = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


# --- hand-built databases -------------------------------------------------------


def make_table(name: str, spec: list[tuple[str, str, list]]) -> Table:
    columns = [
        Column(cname, i + 1, ltype, list(values))
        for i, (cname, ltype, values) in enumerate(spec)
    ]
    rows = len(spec[0][2]) if spec else 0
    return Table(name=name, columns=columns, row_count=rows)


def make_db(name: str, tables: list[Table]) -> Database:
    return Database(name=name, tables=tables)


def write_csv_db(db: Database, root: Path) -> Path:
    """Serialize a Database to a CSV directory with a type manifest."""
    root.mkdir(parents=True, exist_ok=True)
    manifest = {"tables": {}}
    for table in db.tables:
        manifest["tables"][table.name] = {c.name: c.logical_type for c in table.columns}
        with (root / f"{table.name}.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([c.name for c in table.columns])
            for row in table.rows():
                writer.writerow([store.render_value(v) for v in row])
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return root


# --- seeded random generators for oracle fuzzing ---------------------------------


def random_db(seed: int, max_tables: int = 6, max_cols: int = 6, max_rows: int = 500) -> Database:
    """Random typed database with shared value pools so containments occur."""
    rng = random.Random(seed)
    pools = {
        "integer": list(range(40)),
        "text": [f"v{i}" for i in range(30)],
        "float": [round(i * 0.75, 2) for i in range(25)],
        "date": [date(2020, 1, 1) + timedelta(days=i) for i in range(40)],
        "boolean": [True, False],
    }
    tables = []
    for t in range(rng.randint(1, max_tables)):
        n_rows = rng.choice([0, rng.randint(1, 40), rng.randint(1, max_rows)])
        columns = []
        for c in range(rng.randint(1, max_cols)):
            ltype = rng.choice(("integer", "integer", "text", "text", "float", "date", "boolean"))
            pool = pools[ltype]
            sub = rng.sample(pool, rng.randint(1, len(pool)))
            values = [rng.choice(sub) for _ in range(n_rows)]
            if n_rows and rng.random() < 0.4:
                values = [None if rng.random() < 0.15 else v for v in values]
            if rng.random() < 0.05:
                values = [None] * n_rows
            columns.append(Column(f"c{c}", c + 1, ltype, values))
        tables.append(Table(f"t{t}", columns, n_rows))
    return Database(f"rand{seed}", tables)


def random_table(seed: int, max_cols: int = 8, max_rows: int = 1000) -> Table:
    """Random integer table with small domains, nulls, and rare unique columns."""
    rng = random.Random(seed ^ 0x5EED)
    n_cols = rng.randint(1, max_cols)
    n_rows = rng.choice([0, 1, rng.randint(2, 60), rng.randint(2, max_rows)])
    columns = []
    for c in range(n_cols):
        domain = rng.choice([2, 3, 5, 8, 30, 1000])
        values = [rng.randrange(domain) for _ in range(n_rows)]
        if rng.random() < 0.3:
            values = [None if rng.random() < 0.2 else v for v in values]
        if rng.random() < 0.1 and n_rows:
            values = rng.sample(range(n_rows * 3), n_rows)
        columns.append(Column(f"c{c}", c + 1, "integer", values))
    return Table(f"fuzz{seed}", columns, n_rows)


def grid_db(n_tables: int = 6, n_cols: int = 3) -> Database:
    """Uniform integer grid used as a substrate for resolver fuzzing."""
    tables = []
    for t in range(n_tables):
        columns = [
            Column(f"c{c}", c + 1, "integer", [t * 100 + c * 10 + r for r in range(4)])
            for c in range(n_cols)
        ]
        tables.append(Table(f"g{t}", columns, 4))
    return Database("grid", tables)


def random_pairs(seed: int, db: Database, n_edges: int) -> set[CandidatePair]:
    rng = random.Random(seed)
    refs = db.all_column_refs()
    out: set[CandidatePair] = set()
    for _ in range(n_edges):
        a, b = rng.sample(refs, 2)
        out.add(CandidatePair(a, b))
    return out


# --- two-table-cycle plus multi-reference scenario --------------------------------


def music_db() -> Database:
    artist = make_table(
        "artist",
        [
            ("id", "integer", [1, 2, 3, 4, 5]),
            ("name", "text", ["verdi", "mozart", "verdi", "holst", "mozart"]),
        ],
    )
    artist_meta = make_table(
        "artist_meta",
        [
            ("id", "integer", [1, 2, 3, 4, 5]),
            ("bio", "text", ["opera", "opera", "requiem", "suite", "requiem"]),
        ],
    )
    entity0 = make_table(
        "entity0",
        [
            ("artist", "integer", [1, 2, 3, 2, 1]),
            ("work", "text", ["aida", "jupiter", "requiem_w", "mars", "otello"]),
        ],
    )
    return Database("music", [artist, artist_meta, entity0])


MUSIC_SCRIPT = {
    "DomainKnowledge|artist,artist_meta,entity0": {
        "domain": "music catalog",
        "entity_notes": "artist is the core entity; artist_meta extends it one row per artist",
    },
    "PairValidation|artist.id→artist_meta.id": {
        "is_foreign_key": True,
        "reasoning": "identical key ranges",
    },
    "PairValidation|artist_meta.id→artist.id": {
        "is_foreign_key": True,
        "reasoning": "metadata rows extend artists",
    },
    "PairValidation|entity0.artist→artist.id": {
        "is_foreign_key": True,
        "reasoning": "column named after the artist table",
    },
    "PairValidation|entity0.artist→artist_meta.id": {
        "is_foreign_key": True,
        "reasoning": "values also covered here",
    },
    "MultiRefSelect|entity0.artist": {"retained_index": 0},
    "CycleWeakest|artist.id→artist_meta.id,artist_meta.id→artist.id": {"removed_index": 0},
}


# --- scripted replay over planted fixtures ----------------------------------------


def build_replay_script(db: Database, truth: GroundTruth, max_ucc_arity: int = 4) -> dict:
    """Script every decision a detect run will request, accepting exactly ``truth``.

    Key selections pick the planted ``<table>_id`` column when present; the
    resulting candidate set is enumerated the same way the pipeline does, so
    the script never misses a subject.
    """
    inds = discovery.discover_single_column_inds(db)
    candidates = profiler.filter_by_rules(inds, db)
    entries: dict = {}
    keys: dict[str, profiler.KeySelection] = {}
    for name in profiler.referenced_tables(candidates):
        table = db.table(name)
        minuccs = discovery.discover_min_uccs(table, max_ucc_arity)
        cands = profiler.key_candidates(table, minuccs)
        want = (f"{name}_id",)
        idx = cands.index(want) if want in cands else 0
        if len(cands) > 1:
            entries[f"UniqueKeySelection|{name}"] = {
                "chosen_index": idx,
                "reason": "id column identifies rows",
            }
        keys[name] = profiler.KeySelection(name, cands[idx], "scripted", "scripted")
    psi = profiler.prune_by_unique_keys(candidates, keys) if candidates else set()
    involved = sorted({p.referencing.table for p in psi} | {p.referenced.table for p in psi})
    if involved:
        entries["DomainKnowledge|" + ",".join(involved)] = {
            "domain": "synthetic planted-reference benchmark",
            "entity_notes": "hub tables hold the referenced entities",
        }
    for pair in sorted(psi, key=lambda p: p.subject()):
        ref = (
            pair.referencing.table,
            pair.referencing.column,
            pair.referenced.table,
            pair.referenced.column,
        )
        planted = ref in truth.refs
        entries[f"PairValidation|{pair.subject()}"] = {
            "is_foreign_key": planted,
            "reasoning": "planted reference" if planted else "not planted",
        }
    return entries


# --- local chat-completions stub ---------------------------------------------------


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802  (http.server API name)
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        owner = self.server.owner
        with owner.lock:
            owner.requests.append(
                {"path": self.path, "headers": dict(self.headers), "body": body}
            )
        result = owner.responder(body)
        if isinstance(result, tuple):
            status, payload = result
            data = json.dumps(payload if payload is not None else {"error": "stub"}).encode()
            self.send_response(status)
        else:
            content = result if isinstance(result, str) else json.dumps(result)
            data = json.dumps(
                {"choices": [{"message": {"role": "assistant", "content": content}}]}
            ).encode()
            self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


def default_responder(body: dict):
    """Answer any request kind by sniffing the requested response schema."""
    prompt = body["messages"][0]["content"]
    if '"chosen_index"' in prompt:
        return {"chosen_index": 0, "reason": "stub"}
    if '"domain"' in prompt:
        return {"domain": "stub domain", "entity_notes": "stub notes"}
    if '"is_foreign_key"' in prompt:
        return {"is_foreign_key": True, "reasoning": "stub"}
    if '"retained_index"' in prompt:
        return {"retained_index": 0}
    if '"removed_index"' in prompt:
        return {"removed_index": 0}
    return {"is_foreign_key": False, "reasoning": "stub"}


class StubLlmServer:
    """Threaded local chat-completions endpoint capturing request bodies."""

    def __init__(self, responder=default_responder):
        self.responder = responder
        self.requests: list[dict] = []
        self.lock = threading.Lock()
        self.base_url = ""

    def __enter__(self) -> "StubLlmServer":
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self._httpd.owner = self
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        self.base_url = f"http://127.0.0.1:{self._httpd.server_port}"
        return self

    def __exit__(self, *exc) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)
