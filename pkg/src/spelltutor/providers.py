"""Uniform contract for every generative call: a deterministic offline
oracle backed by the bundled data files, a remote HTTP backend with retry
and schema validation, and a record/replay wrapper for tests.

No other module performs network I/O.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import httpx
import jsonschema

from .errors import CassetteMiss, ProviderFailure, SchemaViolation, UnknownWord
from .linguistics import DATA_DIR

TASKS = (
    "property_synthesis",
    "target_prediction",
    "error_ranking",
    "descriptor_score",
    "trace_generation",
    "trace_selection",
    "program_synthesis",
    "semantic_check",
)

_NUMBER = {"type": "number"}
_STRING = {"type": "string"}

RESPONSE_SCHEMAS: dict[str, dict] = {
    "property_synthesis": {
        "type": "object",
        "required": ["word", "morphemes", "bases", "graphemes", "phonemes"],
        "properties": {
            "word": _STRING,
            "morphemes": {"type": "array", "items": _STRING, "minItems": 1},
            "bases": {"type": "array", "items": _STRING},
            "prefixes": {"type": "array", "items": _STRING},
            "suffixes": {"type": "array", "items": _STRING},
            "graphemes": {"type": "array", "items": _STRING, "minItems": 1},
            "phonemes": {"type": "array", "items": _STRING, "minItems": 1},
            "related_words": {"type": "array", "items": _STRING},
            "homophones": {"type": "array", "items": _STRING},
        },
    },
    "target_prediction": {
        "type": "object",
        "required": ["contexts"],
        "properties": {
            "contexts": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["attempt", "target", "sentence", "span"],
                    "properties": {
                        "attempt": _STRING,
                        "target": _STRING,
                        "sentence": _STRING,
                        "span": {
                            "type": "array",
                            "items": {"type": "integer"},
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                },
            }
        },
    },
    "error_ranking": {
        "type": "object",
        "required": ["ranking"],
        "properties": {
            "ranking": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "array",
                    "minItems": 2,
                    "maxItems": 2,
                    "items": [
                        {
                            "type": "string",
                            "enum": [
                                "gpc_mismatch", "morphological_confusion",
                                "suffixing_convention", "segmentation", "homophone",
                                "semantic_mismatch", "visual_confusion",
                            ],
                        },
                        {"type": "number", "minimum": 0.0, "maximum": 1.0},
                    ],
                },
            }
        },
    },
    "descriptor_score": {
        "type": "object",
        "required": ["score"],
        "properties": {"score": {"type": "number", "minimum": 0.0, "maximum": 1.0}},
    },
    "trace_generation": {
        "type": "object",
        "required": ["traces"],
        "properties": {
            "traces": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["steps"],
                    "properties": {
                        "steps": {
                            "type": "array",
                            "items": {"type": "string", "pattern": "^H([1-9]|1[0-8])$"},
                            "minItems": 1,
                        },
                        "rationale": _STRING,
                    },
                },
            }
        },
    },
    "trace_selection": {
        "type": "object",
        "required": ["index"],
        "properties": {"index": {"type": "integer", "minimum": 0}},
    },
    "program_synthesis": {"type": "object", "required": ["plan_id", "word", "target", "entry", "nodes"]},
    "semantic_check": {
        "type": "object",
        "required": ["verdict"],
        "properties": {"verdict": {"type": "boolean"}, "detail": _STRING},
    },
}


def validate_response(task: str, payload: dict) -> dict:
    """Reject malformed responses before they reach callers."""
    validator = jsonschema.Draft7Validator(RESPONSE_SCHEMAS[task])
    errors = sorted(validator.iter_errors(payload), key=lambda e: list(e.absolute_path))
    if errors:
        raise SchemaViolation(f"{task}: {errors[0].message}")
    return payload


def canonical_request(task: str, payload: dict) -> str:
    return json.dumps(
        {"task": task, "payload": payload},
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )


@dataclass(frozen=True)
class ProviderRequest:
    """One generative call: a task tag plus its structured payload."""

    task: str
    payload: dict

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")


@dataclass(frozen=True)
class ProviderResponse:
    """Validated structured payload for a completed request."""

    task: str
    payload: dict

    @staticmethod
    def checked(task: str, payload: dict) -> "ProviderResponse":
        return ProviderResponse(task, validate_response(task, payload))


class OfflineOracle:
    """Deterministic task handlers over the bundled fixtures."""

    def __init__(
        self,
        lexicon_path: str | Path = DATA_DIR / "lexicon.jsonl",
        corpus_path: str | Path = DATA_DIR / "gpc_corpus.json",
        template_path: str | Path = DATA_DIR / "hypothesis_templates.json",
        taxonomy_path: str | Path = DATA_DIR / "error_taxonomy.json",
    ):
        from .hypotheses import load_templates
        from .linguistics import GraphemePhonemeCorpus, Lexicon

        self.lexicon = Lexicon.load(lexicon_path)
        self.corpus = GraphemePhonemeCorpus.load(corpus_path)
        self.templates = load_templates(template_path)
        with open(taxonomy_path, encoding="utf-8") as fh:
            self.taxonomy = json.load(fh)

    def handle(self, task: str, payload: dict) -> dict:
        return getattr(self, f"_{task}")(payload)

    def _property_synthesis(self, payload: dict) -> dict:
        word = payload["word"]
        entry = self.lexicon.lookup(word)
        if entry is None:
            failure = ProviderFailure(f"offline lexicon has no entry for {word!r}")
            failure.reason = "unknown_word"
            raise failure
        return entry.to_dict()

    def _target_prediction(self, payload: dict) -> dict:
        from .detection import scan_document

        contexts = scan_document(payload["document"], self.lexicon, self.corpus)
        return {"contexts": [c.to_dict() for c in contexts]}

    def _error_ranking(self, payload: dict) -> dict:
        from .diagnosis import DiagnosticFeatures, rank_categories

        ranking = rank_categories(
            DiagnosticFeatures.from_dict(payload["features"]),
            multi_morphemic=bool(payload.get("multi_morphemic", False)),
            has_family=bool(payload.get("has_family", False)),
            meaning_understood=payload.get("meaning_understood", "unknown"),
            semantic_appropriateness=bool(payload.get("semantic_appropriateness", True)),
            epsilon=float(payload.get("epsilon", 0.15)),
        )
        return {"ranking": [[c, conf] for c, conf in ranking]}

    def _descriptor_score(self, payload: dict) -> dict:
        # Offline descriptor confidence comes straight from the diagnosis
        # ranking; callers short-circuit before reaching the wire.
        return {"score": 0.0}

    def _trace_generation(self, payload: dict) -> dict:
        from .diagnosis import ErrorDiagnosis
        from .planner import PlannerConfig, enumerate_legal_traces

        filtered = [(tid, float(conf)) for tid, conf in payload["filtered"]]
        diagnosis = ErrorDiagnosis.from_dict(payload["diagnosis"])
        config = PlannerConfig.from_dict(payload["config"])
        return {"traces": enumerate_legal_traces(self.templates, filtered, diagnosis, config)}

    def _trace_selection(self, payload: dict) -> dict:
        scores = payload.get("scores", [])
        if not scores:
            return {"index": 0}
        best = min(range(len(scores)), key=lambda i: (-scores[i]["total"], i))
        return {"index": best}

    def _program_synthesis(self, payload: dict) -> dict:
        from .diagnosis import ErrorDiagnosis
        from .linguistics import WordProperties
        from .planner import InquiryTrace, TraceStep
        from .plans import build_program

        raw_trace = payload["trace"]
        trace = InquiryTrace(
            steps=[TraceStep(**s) for s in raw_trace["steps"]],
            rationale=raw_trace.get("rationale", ""),
            achieved_effects=list(raw_trace.get("achieved_effects", [])),
        )
        props = WordProperties.from_dict(payload["props"])
        diagnosis = ErrorDiagnosis.from_dict(payload["diagnosis"])
        raw_attempt = payload.get("attempt_props")
        if raw_attempt is None:
            attempt_props = props
        else:
            attempt_props = WordProperties.from_dict(raw_attempt)
        plan = build_program(trace, props, diagnosis, attempt_props, self.corpus)
        return plan.to_dict()

    def _semantic_check(self, payload: dict) -> dict:
        import re as _re

        keywords = {k.lower() for k in payload["keywords"]}
        tokens = {t.lower() for t in _re.findall(r"[A-Za-z][A-Za-z']*", payload["response"])}
        overlap = keywords & tokens
        ok = len(overlap) >= int(payload.get("min_overlap", 1))
        detail = (
            f"mentions {', '.join(sorted(overlap))}" if ok else "does not mention the key idea"
        )
        return {"verdict": ok, "detail": detail}


@dataclass
class ProviderHandle:
    """Shared, thread-safe handle for one generative backend."""

    backend: str = "offline"  # offline | remote
    base_url: str = ""
    credential_env: str = ""
    timeout: float = 30.0
    retry_budget: int = 3
    backoff_base: float = 0.5
    max_in_flight: int = 4
    fixture_paths: dict = field(default_factory=dict)
    cassette_path: Optional[str] = None
    cassette_mode: str = ""  # record | replay
    transport: Optional[httpx.BaseTransport] = None

    _oracle: Optional[OfflineOracle] = field(default=None, repr=False, compare=False)
    _cassette: Optional[dict] = field(default=None, repr=False, compare=False)
    _gate: Optional[threading.Semaphore] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.backend not in ("offline", "remote"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "remote" and not self.credential_env:
            raise ValueError("remote backend requires a credential reference")
        self._gate = threading.Semaphore(max(self.max_in_flight, 1))

    @property
    def oracle(self) -> OfflineOracle:
        if self._oracle is None:
            self._oracle = OfflineOracle(**self.fixture_paths)
        return self._oracle

    def _load_cassette(self) -> dict:
        if self._cassette is None:
            path = Path(self.cassette_path)
            if path.exists():
                with open(path, encoding="utf-8") as fh:
                    self._cassette = json.load(fh)
            else:
                self._cassette = {}
        return self._cassette

    def _save_cassette(self) -> None:
        with open(self.cassette_path, "w", encoding="utf-8") as fh:
            json.dump(self._cassette, fh, sort_keys=True, ensure_ascii=False, indent=1)

    def complete_request(self, request: ProviderRequest) -> ProviderResponse:
        return ProviderResponse(request.task, self.complete(request.task, request.payload))

    def complete(self, task: str, payload: dict) -> dict:
        """Dispatch one request; the response always passes its task schema."""
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        if not isinstance(payload, dict):
            raise ValueError("payload must be an object")

        key = hashlib.sha256(canonical_request(task, payload).encode()).hexdigest()
        if self.cassette_mode == "replay":
            cassette = self._load_cassette()
            if key not in cassette:
                raise CassetteMiss(f"no recording for task {task}")
            return validate_response(task, cassette[key]["response"])

        if self.backend == "offline":
            try:
                response = self.oracle.handle(task, payload)
            except UnknownWord as exc:
                failure = ProviderFailure(str(exc))
                failure.reason = "unknown_word"
                raise failure from exc
        else:
            response = self._remote(task, payload)
        response = validate_response(task, response)

        if self.cassette_mode == "record":
            cassette = self._load_cassette()
            cassette[key] = {"task": task, "response": response}
            self._save_cassette()
        return response

    def _remote(self, task: str, payload: dict) -> dict:
        headers = {}
        credential = os.environ.get(self.credential_env, "")
        if credential:
            headers["authorization"] = f"Bearer {credential}"
        body = {"task": task, "payload": payload}
        last_error: Optional[Exception] = None
        client_kwargs: dict = {"timeout": self.timeout}
        if self.transport is not None:
            client_kwargs["transport"] = self.transport
        for attempt in range(self.retry_budget):
            try:
                with self._gate:
                    with httpx.Client(**client_kwargs) as client:
                        resp = client.post(
                            f"{self.base_url.rstrip('/')}/complete", json=body, headers=headers
                        )
                if resp.status_code == 200:
                    data = resp.json()
                    return data.get("result", data)
                last_error = ProviderFailure(f"{task}: HTTP {resp.status_code}")
            except (httpx.HTTPError, json.JSONDecodeError) as exc:
                last_error = exc
            if attempt + 1 < self.retry_budget and self.backoff_base > 0:
                time.sleep(self.backoff_base * (2**attempt))
        raise ProviderFailure(
            f"{task}: remote call failed after {self.retry_budget} attempts: {last_error}"
        )


def offline_handle(**fixture_paths) -> ProviderHandle:
    return ProviderHandle(backend="offline", fixture_paths=fixture_paths)


def remote_handle(
    base_url: str,
    credential_env: str = "SPELLTUTOR_API_KEY",
    timeout: float = 30.0,
    retry_budget: int = 3,
    backoff_base: float = 0.5,
    transport: Optional[httpx.BaseTransport] = None,
) -> ProviderHandle:
    return ProviderHandle(
        backend="remote",
        base_url=base_url,
        credential_env=credential_env,
        timeout=timeout,
        retry_budget=retry_budget,
        backoff_base=backoff_base,
        transport=transport,
    )


def record_replay(handle: ProviderHandle, cassette: str | Path, mode: str = "replay") -> ProviderHandle:
    """Wrap a handle so its exchanges are captured or replayed byte-stably."""
    if mode not in ("record", "replay"):
        raise ValueError(f"unknown cassette mode {mode!r}")
    clone = ProviderHandle(
        backend=handle.backend,
        base_url=handle.base_url,
        credential_env=handle.credential_env,
        timeout=handle.timeout,
        retry_budget=handle.retry_budget,
        backoff_base=handle.backoff_base,
        max_in_flight=handle.max_in_flight,
        fixture_paths=dict(handle.fixture_paths),
        cassette_path=str(cassette),
        cassette_mode=mode,
        transport=handle.transport,
    )
    clone._oracle = handle._oracle
    return clone
