"""HTTP/JSON facade over the analysis pipeline.

Endpoints:

- ``POST /tables`` — upload a CSV body, get a table id plus schema.
- ``POST /tables/{id}/query`` — natural-language query; answers and
  clarification requests are both HTTP 200 (a clarification is a successful
  outcome, not an error).
- ``POST /tables/{id}/commands`` — raw chain text, bypassing the planner.
- ``GET /tables/{id}/history`` — conversation entries in insertion order.
- ``GET /tables/{id}/embedding`` — cached 64-dim global table embedding.

Every state-changing request is appended to a per-table JSON-lines journal
under the data directory. Table ids are content hashes and the pipeline is
deterministic, so replaying a journal against a fresh core reproduces every
response byte for byte (see ``replay_journal``). Commands that mutate data
register the result under a new table id; the original stays immutable.

The service makes no outbound network calls.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import yaml
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .commands import PlotSpec
from .encoder import encode, init_params, load_params_file
from .errors import (
    AmbiguousColumn, ExecError, ParseError, RaggedRow, TableChainError,
    Utf8Error,
)
from .planner import (
    DEFAULT_VAGUENESS_THRESHOLD, MeasureRegistry, default_registry,
    load_planner_config,
)
from .session import AnalysisSession, Answer, ChainInvalid, Clarify, is_mutation
from .table import Table, Value, load_csv

DEFAULT_MAX_UPLOAD = 32 * 1024 * 1024


@dataclass
class ServiceConfig:
    data_dir: Path = field(default_factory=lambda: Path("./tablechain-data"))
    bind: str = "127.0.0.1:8600"
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD
    vagueness_threshold: float = DEFAULT_VAGUENESS_THRESHOLD
    cors: bool = False
    encoder_seed: int = 42
    encoder_params_path: Optional[str] = None
    planner_config_path: Optional[str] = None


_ENV_KEYS = {
    "TABLECHAIN_DATA_DIR": ("data_dir", Path),
    "TABLECHAIN_BIND": ("bind", str),
    "TABLECHAIN_MAX_UPLOAD_BYTES": ("max_upload_bytes", int),
    "TABLECHAIN_VAGUENESS_THRESHOLD": ("vagueness_threshold", float),
    "TABLECHAIN_CORS": ("cors", lambda v: v.lower() in ("1", "true", "yes")),
    "TABLECHAIN_ENCODER_SEED": ("encoder_seed", int),
    "TABLECHAIN_ENCODER_PARAMS": ("encoder_params_path", str),
    "TABLECHAIN_PLANNER_CONFIG": ("planner_config_path", str),
}


def load_service_config(
    path: Optional[str] = None, env: Optional[dict] = None
) -> ServiceConfig:
    """Config file (YAML, keys matching ServiceConfig fields) plus
    TABLECHAIN_* environment overrides; environment wins."""
    cfg = ServiceConfig()
    if path is not None:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        for key, value in raw.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config key {key!r}")
            if key == "data_dir":
                value = Path(value)
            setattr(cfg, key, value)
    environ = env if env is not None else dict(os.environ)
    for env_key, (attr, cast) in _ENV_KEYS.items():
        if env_key in environ:
            setattr(cfg, attr, cast(environ[env_key]))
    return cfg


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _json_value(v: Value) -> Any:
    if isinstance(v, datetime):
        return v.isoformat()
    return v


def table_payload(t: Table) -> dict:
    return {
        "columns": list(t.schema.names),
        "types": [c.ctype for c in t.schema.columns],
        "cells": [[_json_value(v) for v in row] for row in t.rows()],
    }


def schema_payload(t: Table) -> dict:
    return {
        "table_name": t.schema.table_name,
        "columns": [
            {"name": c.name, "type": c.ctype, "synonyms": list(c.synonyms)}
            for c in t.schema.columns
        ],
    }


def _extra_payload(extra: Optional[dict]) -> Optional[dict]:
    if extra is None:
        return None
    out = {}
    for key, value in extra.items():
        out[key] = asdict(value) if isinstance(value, PlotSpec) else value
    return out


def answer_payload(answer: Answer) -> dict:
    result = answer.result
    return {
        "kind": "answered",
        "chain_text": answer.chain_text,
        "corrections": [asdict(c) for c in answer.corrections],
        "rationale": list(answer.rationale),
        "reply": result.reply,
        "result_table": table_payload(result.table),
        "step_logs": [
            {
                "command_index": log.command_index,
                "rows_in": log.rows_in,
                "rows_out": log.rows_out,
                "warnings": list(log.warnings),
                "extra": _extra_payload(log.extra),
            }
            for log in result.step_logs
        ],
    }


@dataclass
class _TableState:
    table_id: str
    session: AnalysisSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    history: list = field(default_factory=list)
    embedding_bytes: Optional[bytes] = None
    seq: int = 0


class ServiceCore:
    """Transport-free service logic: (status, payload) in, JSON-able out.

    The FastAPI app is a thin shell over this class; replay_journal drives
    it directly so determinism checks need no socket.
    """

    def __init__(self, config: ServiceConfig, journaling: bool = True):
        self.config = config
        self.journaling = journaling
        self.tables: dict[str, _TableState] = {}
        self._registry_lock = threading.Lock()
        if config.planner_config_path:
            text = Path(config.planner_config_path).read_text(encoding="utf-8")
            planner_cfg = load_planner_config(text)
            self.registry: MeasureRegistry = planner_cfg.registry
            self.synonyms = planner_cfg.synonyms
            self.vagueness_threshold = planner_cfg.vagueness_threshold
        else:
            self.registry = default_registry()
            self.synonyms = {}
            self.vagueness_threshold = config.vagueness_threshold
        if config.encoder_params_path:
            self.encoder_params = load_params_file(config.encoder_params_path)
        else:
            self.encoder_params = init_params(config.encoder_seed)
        if journaling:
            Path(config.data_dir).mkdir(parents=True, exist_ok=True)

    # -- journaling --------------------------------------------------------

    def _journal(self, table_id: str, kind: str, request: dict,
                 status: int, response: dict) -> None:
        if not self.journaling:
            return
        line = {
            "kind": kind,
            "request": request,
            "status": status,
            "response": response,
            "recorded_at": datetime.now(timezone.utc).isoformat(),
        }
        path = Path(self.config.data_dir) / f"{table_id}.jsonl"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(canonical_json(line) + "\n")

    # -- operations ----------------------------------------------------------

    def upload(self, body: bytes, table_name: str = "table") -> tuple[int, dict]:
        if len(body) > self.config.max_upload_bytes:
            return 413, {
                "error": "TooLarge",
                "limit_bytes": self.config.max_upload_bytes,
            }
        if not body.strip():
            return 400, {"error": "EmptyBody"}
        try:
            table = load_csv(body, table_name=table_name)
        except RaggedRow as e:
            return 400, {
                "error": "RaggedRow", "line": e.line_no,
                "expected": e.expected, "got": e.got,
            }
        except Utf8Error as e:
            return 400, {"error": "Utf8Error", "offset": e.offset}
        except TableChainError as e:
            return 400, {"error": type(e).__name__, "detail": str(e)}
        table_id = hashlib.blake2b(body, digest_size=8).hexdigest()
        state = self._register(table_id, table)
        payload = {
            "table_id": state.table_id,
            "row_count": table.n_rows,
            "schema": schema_payload(state.session.table),
        }
        self._journal(
            table_id, "upload",
            {"csv_b64": base64.b64encode(body).decode("ascii"),
             "table_name": table_name},
            201, payload,
        )
        return 201, payload

    def _register(self, table_id: str, table: Table) -> _TableState:
        with self._registry_lock:
            existing = self.tables.get(table_id)
            if existing is not None:
                return existing
            session = AnalysisSession(
                table,
                registry=self.registry,
                synonyms=self.synonyms,
                vagueness_threshold=self.vagueness_threshold,
            )
            state = _TableState(table_id, session)
            self.tables[table_id] = state
            return state

    def _derived_id(self, parent_id: str, seq: int, chain_text: str) -> str:
        key = f"{parent_id}:{seq}:{chain_text}".encode("utf-8")
        return hashlib.blake2b(key, digest_size=8).hexdigest()

    def query(self, table_id: str, text: str) -> tuple[int, dict]:
        state = self.tables.get(table_id)
        if state is None:
            return 404, {"error": "UnknownTable", "table_id": table_id}
        with state.lock:
            state.seq += 1
            seq = state.seq
            try:
                outcome = state.session.ask(text)
            except ChainInvalid as e:
                status, payload = 422, {
                    "error": "InvalidChain",
                    "issues": [asdict(i) for i in e.issues],
                }
            except ExecError as e:
                status, payload = 422, {
                    "error": "ExecError",
                    "command_index": e.command_index,
                    "detail": str(e.cause),
                }
            else:
                if isinstance(outcome, Clarify):
                    status, payload = 200, {
                        "kind": "clarification",
                        "question": outcome.question,
                        "candidates": list(outcome.candidates),
                    }
                else:
                    status, payload = 200, answer_payload(outcome)
            state.history.append(_history_entry(seq, "query", text, status, payload))
        self._journal(table_id, "query", {"text": text}, status, payload)
        return status, payload

    def commands(self, table_id: str, chain_text: str) -> tuple[int, dict]:
        state = self.tables.get(table_id)
        if state is None:
            return 404, {"error": "UnknownTable", "table_id": table_id}
        with state.lock:
            state.seq += 1
            seq = state.seq
            status, payload = self._run_commands(state, chain_text)
            state.history.append(
                _history_entry(seq, "commands", chain_text, status, payload)
            )
        self._journal(table_id, "commands", {"chain_text": chain_text}, status, payload)
        return status, payload

    def _run_commands(self, state: _TableState, chain_text: str) -> tuple[int, dict]:
        try:
            answer = state.session.run_chain_text(chain_text)
        except ParseError as e:
            return 400, {
                "error": "ParseError", "line": e.line, "col": e.col,
                "expected": e.expected, "found": e.found,
            }
        except AmbiguousColumn as e:
            return 422, {
                "error": "AmbiguousColumn", "name": e.name,
                "candidates": list(e.candidates),
            }
        except ChainInvalid as e:
            return 422, {
                "error": "InvalidChain",
                "issues": [asdict(i) for i in e.issues],
            }
        except ExecError as e:
            return 422, {
                "error": "ExecError",
                "command_index": e.command_index,
                "detail": str(e.cause),
            }
        payload = answer_payload(answer)
        if is_mutation(answer.chain):
            new_id = self._derived_id(state.table_id, state.seq, answer.chain_text)
            result_table = answer.result.table
            self._register(new_id, result_table)
            payload["table_id"] = new_id
        return 200, payload

    def history(self, table_id: str) -> tuple[int, Any]:
        state = self.tables.get(table_id)
        if state is None:
            return 404, {"error": "UnknownTable", "table_id": table_id}
        with state.lock:
            return 200, list(state.history)

    def embedding(self, table_id: str) -> tuple[int, Any]:
        state = self.tables.get(table_id)
        if state is None:
            return 404, {"error": "UnknownTable", "table_id": table_id}
        with state.lock:
            if state.embedding_bytes is None:
                emb = encode(state.session.table, self.encoder_params)
                payload = {"global": [float(x) for x in emb.global_vec]}
                state.embedding_bytes = canonical_json(payload).encode("utf-8")
            return 200, state.embedding_bytes

    # -- startup recovery ----------------------------------------------------

    def load_journals(self) -> int:
        """Rebuild tables and history from every journal in the data directory.

        Lines from all journal files are replayed in their original wall-clock
        order, so a table derived by a mutation is registered again before any
        line that targets it. A torn trailing line (interrupted append) ends
        that file's replay; everything before it is recovered. Returns the
        number of lines replayed.
        """
        entries: list[tuple] = []
        for path in sorted(Path(self.config.data_dir).glob("*.jsonl")):
            with open(path, encoding="utf-8") as fh:
                for order, raw in enumerate(fh):
                    if not raw.strip():
                        continue
                    try:
                        line = json.loads(raw)
                    except json.JSONDecodeError:
                        break
                    stamp = datetime.fromisoformat(line["recorded_at"])
                    entries.append((stamp, path.stem, order, line))
        entries.sort(key=lambda e: e[:3])
        was_journaling = self.journaling
        self.journaling = False
        try:
            for _, table_id, _, line in entries:
                kind = line["kind"]
                if kind == "upload":
                    body = base64.b64decode(line["request"]["csv_b64"])
                    self.upload(body, line["request"].get("table_name", "table"))
                elif kind == "query":
                    self.query(table_id, line["request"]["text"])
                    self._restamp(table_id, line["recorded_at"])
                elif kind == "commands":
                    self.commands(table_id, line["request"]["chain_text"])
                    self._restamp(table_id, line["recorded_at"])
                else:
                    raise ValueError(f"unknown journal entry kind {kind!r}")
        finally:
            self.journaling = was_journaling
        return len(entries)

    def _restamp(self, table_id: str, recorded_at: str) -> None:
        state = self.tables.get(table_id)
        if state is not None and state.history:
            state.history[-1]["recorded_at"] = recorded_at


def _history_entry(
    seq: int, kind: str, request_text: str, status: int, payload: dict
) -> dict:
    if payload.get("kind") == "answered":
        summary = payload["reply"]
        outcome = "answered"
    elif payload.get("kind") == "clarification":
        summary = payload["question"]
        outcome = "clarification"
    else:
        summary = payload.get("error", "error")
        outcome = "error"
    return {
        "seq": seq,
        "kind": kind,
        "input": request_text,
        "outcome": outcome,
        "summary": summary,
        "status": status,
        "recorded_at": datetime.now(timezone.utc).isoformat(),
    }


# --- journal replay ---------------------------------------------------------------

def replay_journal(journal_path, config: Optional[ServiceConfig] = None) -> list[dict]:
    """Re-run a journal against a fresh core; return response mismatches.

    Each journal line's request is replayed in order and the fresh response
    is compared to the recorded one as canonical JSON. An empty return value
    means the journal reproduces byte for byte.
    """
    core = ServiceCore(config or ServiceConfig(), journaling=False)
    mismatches = []
    with open(journal_path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    table_id: Optional[str] = None
    for i, line in enumerate(lines):
        kind = line["kind"]
        if kind == "upload":
            body = base64.b64decode(line["request"]["csv_b64"])
            status, payload = core.upload(
                body, line["request"].get("table_name", "table")
            )
            table_id = payload.get("table_id")
        elif kind == "query":
            status, payload = core.query(table_id, line["request"]["text"])
        elif kind == "commands":
            status, payload = core.commands(table_id, line["request"]["chain_text"])
        else:
            raise ValueError(f"unknown journal entry kind {kind!r}")
        if status != line["status"] or canonical_json(payload) != canonical_json(
            line["response"]
        ):
            mismatches.append({
                "index": i, "kind": kind,
                "expected_status": line["status"], "got_status": status,
                "expected": line["response"], "got": payload,
            })
    return mismatches


# --- FastAPI shell ------------------------------------------------------------------

class QueryBody(BaseModel):
    text: str


class CommandsBody(BaseModel):
    chain_text: str


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    core = ServiceCore(config or load_service_config())
    core.load_journals()
    app = FastAPI(title="tablechain", docs_url=None, redoc_url=None)
    app.state.core = core

    if core.config.cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.post("/tables")
    async def upload(request: Request):
        body = await request.body()
        name = request.query_params.get("name", "table")
        status, payload = core.upload(body, table_name=name)
        return JSONResponse(payload, status_code=status)

    @app.post("/tables/{table_id}/query")
    def query(table_id: str, body: QueryBody):
        status, payload = core.query(table_id, body.text)
        return JSONResponse(payload, status_code=status)

    @app.post("/tables/{table_id}/commands")
    def commands(table_id: str, body: CommandsBody):
        status, payload = core.commands(table_id, body.chain_text)
        return JSONResponse(payload, status_code=status)

    @app.get("/tables/{table_id}/history")
    def history(table_id: str):
        status, payload = core.history(table_id)
        return JSONResponse(payload, status_code=status)

    @app.get("/tables/{table_id}/embedding")
    def embedding(table_id: str):
        status, payload = core.embedding(table_id)
        if status != 200:
            return JSONResponse(payload, status_code=status)
        return Response(content=payload, media_type="application/json")

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    host, _, port = config.bind.partition(":")
    uvicorn.run(create_app(config), host=host or "127.0.0.1",
                port=int(port or 8600), log_level="warning")
