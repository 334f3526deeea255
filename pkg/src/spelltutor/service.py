"""HTTP surface for the pipeline: detection, inquiry synthesis, and
interactive sessions, all returning canonical JSON documents.

Plans and sessions live in bounded in-memory LRU stores; inquiries are
short-lived, so nothing persists across restarts.
"""

from __future__ import annotations

import json
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response

from .detection import AttemptContext
from .errors import (
    AffordanceMismatch,
    NoLegalTrace,
    ProviderFailure,
    SynthesisFailure,
    UnknownWord,
    WrongNode,
)
from .linguistics import DATA_DIR
from .pipeline import InquiryEngine
from .planner import PlannerConfig
from .plans import ExecutionPlan, serialize_plan
from .providers import ProviderHandle, offline_handle, remote_handle
from .runtime import LearnerResponse, Session, start_session, step


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    lexicon_path: str = str(DATA_DIR / "lexicon.jsonl")
    template_path: str = str(DATA_DIR / "hypothesis_templates.json")
    corpus_path: str = str(DATA_DIR / "gpc_corpus.json")
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    backend: str = "offline"
    remote_base_url: str = ""
    credential_env: str = "SPELLTUTOR_API_KEY"
    session_capacity: int = 256
    plan_capacity: int = 256
    max_body_bytes: int = 65536

    def __post_init__(self):
        if not (0 < self.port < 65536):
            raise ValueError(f"invalid port {self.port}")
        for path in (self.lexicon_path, self.template_path, self.corpus_path):
            if not Path(path).exists():
                raise FileNotFoundError(path)

    @staticmethod
    def load(path: str | Path) -> "ServiceConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        planner = PlannerConfig.from_dict(raw.pop("planner", {}))
        return ServiceConfig(planner=planner, **raw)

    def provider(self) -> ProviderHandle:
        if self.backend == "remote":
            return remote_handle(self.remote_base_url, credential_env=self.credential_env)
        return offline_handle(
            lexicon_path=self.lexicon_path,
            corpus_path=self.corpus_path,
            template_path=self.template_path,
        )


class LruStore:
    """Tiny bounded mapping; least-recently-used entries fall out first."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._data: OrderedDict[str, object] = OrderedDict()

    def get(self, key: str):
        if key not in self._data:
            return None
        self._data.move_to_end(key)
        return self._data[key]

    def put(self, key: str, value) -> None:
        self._data[key] = value
        self._data.move_to_end(key)
        while len(self._data) > self.capacity:
            self._data.popitem(last=False)

    def __len__(self) -> int:
        return len(self._data)


def _json_response(data, status_code: int = 200) -> Response:
    return Response(
        content=json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":")),
        status_code=status_code,
        media_type="application/json",
    )


def _error(status_code: int, code: str, detail: str) -> Response:
    return _json_response({"error": code, "detail": detail}, status_code)


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    engine = InquiryEngine(
        provider=config.provider(),
        config=config.planner,
        lexicon_path=config.lexicon_path,
        corpus_path=config.corpus_path,
        template_path=config.template_path,
    )
    plans = LruStore(config.plan_capacity)
    sessions = LruStore(config.session_capacity)
    session_locks: dict[str, threading.Lock] = {}
    app = FastAPI(title="spelltutor", version="0.1.0")
    app.state.engine = engine
    app.state.plans = plans
    app.state.sessions = sessions

    async def _body(request: Request) -> tuple[Optional[dict], Optional[Response]]:
        raw = await request.body()
        if len(raw) > config.max_body_bytes:
            return None, _error(413, "payload_too_large", f"body over {config.max_body_bytes} bytes")
        if not raw.strip():
            return None, _error(400, "empty_body", "request body is empty")
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            return None, _error(400, "bad_json", str(exc))
        if not isinstance(data, dict):
            return None, _error(400, "bad_json", "body must be a JSON object")
        return data, None

    @app.get("/health")
    async def health() -> Response:
        return _json_response({"status": "ok", "lexicon_words": len(engine.lexicon)})

    @app.post("/check")
    async def check(request: Request) -> Response:
        data, err = await _body(request)
        if err:
            return err
        document = data.get("document", "")
        if not document:
            return _error(400, "empty_document", "no document text supplied")
        try:
            report = engine.check(document)
        except ProviderFailure as exc:
            return _error(502, "provider_failure", str(exc))
        return _json_response(report.to_dict())

    @app.post("/inquiry")
    async def inquiry(request: Request) -> Response:
        data, err = await _body(request)
        if err:
            return err
        try:
            context = AttemptContext.from_dict(data)
        except KeyError as exc:
            return _error(400, "bad_context", f"missing field {exc}")
        overrides = data.get("planner")
        planner_config = PlannerConfig.from_dict(overrides) if overrides else None
        try:
            result = engine.run_inquiry(context, planner_config)
        except NoLegalTrace as exc:
            return _error(422, "no_legal_trace", str(exc))
        except UnknownWord as exc:
            return _error(502, "unknown_word", str(exc))
        except SynthesisFailure as exc:
            return _error(502, "synthesis_failure", str(exc))
        except ProviderFailure as exc:
            return _error(502, "provider_failure", str(exc))
        plans.put(result.plan.plan_id, result.plan)
        return Response(content=serialize_plan(result.plan), media_type="application/json")

    @app.post("/session")
    async def create_session(request: Request) -> Response:
        data, err = await _body(request)
        if err:
            return err
        plan_id = data.get("plan_id", "")
        plan = plans.get(plan_id)
        if not isinstance(plan, ExecutionPlan):
            return _error(404, "unknown_plan", f"no plan {plan_id!r}; run /inquiry first")
        session = start_session(plan)
        sessions.put(session.session_id, session)
        return _json_response(session.view())

    @app.post("/session/{session_id}/step")
    async def session_step(session_id: str, request: Request) -> Response:
        data, err = await _body(request)
        if err:
            return err
        session = sessions.get(session_id)
        if not isinstance(session, Session):
            return _error(404, "unknown_session", f"no session {session_id!r}")
        span = data.get("span")
        response = LearnerResponse(
            node_id=data.get("node_id", ""),
            text=data.get("text"),
            span=tuple(span) if span else None,
            selection=data.get("selection"),
        )
        lock = session_locks.setdefault(session_id, threading.Lock())
        try:
            with lock:
                step(session, response, engine.provider)
        except WrongNode as exc:
            return _error(409, "wrong_node", str(exc))
        except AffordanceMismatch as exc:
            return _error(400, "affordance_mismatch", str(exc))
        except ProviderFailure as exc:
            return _error(502, "provider_failure", str(exc))
        return _json_response(session.view())

    return app
