from __future__ import annotations

import json
import socket

import httpx
import pytest

from spelltutor.detection import AttemptContext
from spelltutor.errors import CassetteMiss, ProviderFailure, SchemaViolation
from spelltutor.providers import (
    ProviderHandle,
    offline_handle,
    record_replay,
    remote_handle,
    validate_response,
)


def test_offline_property_synthesis_returns_reference_record(provider):
    record = provider.complete(
        task="property_synthesis",
        payload={"word": "reaching", "context_sentence": "She was reaching for the book."},
    )
    assert record["morphemes"] == ["reach", "-ing"]
    assert record["graphemes"] == ["r", "ea", "ch", "i", "ng"]


def test_offline_unknown_word_maps_to_provider_failure(provider):
    with pytest.raises(ProviderFailure) as err:
        provider.complete(task="property_synthesis", payload={"word": "zyzzyva"})
    assert getattr(err.value, "reason", "") == "unknown_word"


def test_unknown_task_rejected(provider):
    with pytest.raises(ValueError):
        provider.complete(task="poetry", payload={})


def test_offline_responses_pass_task_schemas(provider, engine):
    """The same validation applied to remote responses accepts every
    offline handler's output."""
    checks = [
        ("property_synthesis", {"word": "reach", "context_sentence": ""}),
        ("target_prediction", {"document": "She was reeching for the book."}),
        (
            "error_ranking",
            {
                "attempt": "reech",
                "target": "reach",
                "features": {
                    "prefix_error": False,
                    "suffix_error": False,
                    "segmentation_error": False,
                    "suffixing_change_applies": False,
                    "phoneme_match": 1.0,
                    "grapheme_mismatch_count": 1,
                    "morpheme_boundaries_preserved": True,
                    "homophone_confusion": False,
                    "visual_similarity_only": False,
                },
                "multi_morphemic": False,
                "has_family": True,
            },
        ),
        (
            "semantic_check",
            {"keywords": ["book", "reach"], "response": "I reach for the book", "min_overlap": 1},
        ),
    ]
    for task, payload in checks:
        response = provider.complete(task=task, payload=payload)
        assert validate_response(task, response) == response


def test_schema_violation_detected():
    with pytest.raises(SchemaViolation):
        validate_response("descriptor_score", {"score": 1.5})
    with pytest.raises(SchemaViolation):
        validate_response("error_ranking", {"ranking": [["not_a_category", 0.9]]})
    with pytest.raises(SchemaViolation):
        validate_response("trace_generation", {"traces": [{"steps": ["H99"]}]})


def test_remote_requires_credential_reference():
    with pytest.raises(ValueError):
        ProviderHandle(backend="remote", base_url="http://x", credential_env="")


def _mock_remote(responses):
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        index = min(calls["n"], len(responses) - 1)
        calls["n"] += 1
        status, body = responses[index]
        return httpx.Response(status, json=body)

    transport = httpx.MockTransport(handler)
    handle = remote_handle(
        "http://oracle.test", transport=transport, backoff_base=0.0, retry_budget=3
    )
    return handle, calls


def test_remote_retries_then_succeeds():
    good = {"result": {"verdict": True, "detail": "ok"}}
    handle, calls = _mock_remote([(500, {}), (500, {}), (200, good)])
    response = handle.complete(task="semantic_check", payload={"keywords": ["x"], "response": "x"})
    assert response == {"verdict": True, "detail": "ok"}
    assert calls["n"] == 3


def test_remote_exhausts_retry_budget():
    handle, calls = _mock_remote([(503, {})])
    with pytest.raises(ProviderFailure):
        handle.complete(task="semantic_check", payload={"keywords": ["x"], "response": "x"})
    assert calls["n"] == 3


def test_remote_rejects_schema_breaking_response():
    handle, _ = _mock_remote([(200, {"result": {"wrong": 1}})])
    with pytest.raises(SchemaViolation):
        handle.complete(task="semantic_check", payload={"keywords": ["x"], "response": "x"})


def test_record_then_replay_round_trip(tmp_path, provider):
    cassette = tmp_path / "cassette.json"
    recorder = record_replay(provider, cassette, mode="record")
    payload = {"word": "reach", "context_sentence": "x"}
    live = recorder.complete(task="property_synthesis", payload=payload)
    replayer = record_replay(provider, cassette, mode="replay")
    replayed = replayer.complete(task="property_synthesis", payload=payload)
    assert replayed == live
    raw = json.loads(cassette.read_text(encoding="utf-8"))
    assert len(raw) == 1


def test_replay_misses_unseen_request(tmp_path, provider):
    cassette = tmp_path / "cassette.json"
    record_replay(provider, cassette, mode="record").complete(
        task="property_synthesis", payload={"word": "reach", "context_sentence": "x"}
    )
    replayer = record_replay(provider, cassette, mode="replay")
    with pytest.raises(CassetteMiss):
        replayer.complete(task="property_synthesis", payload={"word": "teach", "context_sentence": "x"})


def test_recorded_session_replays_identically(tmp_path, provider):
    from spelltutor.pipeline import InquiryEngine

    cassette = tmp_path / "session.json"
    ctx = AttemptContext(attempt="reech", target="reach", sentence="She was reeching.")
    recording_engine = InquiryEngine(provider=record_replay(provider, cassette, mode="record"))
    first = recording_engine.run_inquiry(ctx)
    replay_engine = InquiryEngine(provider=record_replay(provider, cassette, mode="replay"))
    second = replay_engine.run_inquiry(ctx)
    from spelltutor.plans import serialize_plan

    assert serialize_plan(first.plan) == serialize_plan(second.plan)


def test_offline_pipeline_never_touches_the_network(monkeypatch, constractd_context):
    """Full offline run with sockets disabled: only providers would ever
    open one, and the offline backend must not."""
    from spelltutor.pipeline import InquiryEngine

    def forbidden(*args, **kwargs):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket, "socket", forbidden)
    monkeypatch.setattr(socket, "create_connection", forbidden)
    engine = InquiryEngine(provider=offline_handle())
    result = engine.run_inquiry(constractd_context)
    assert result.plan.plan_id


def test_provider_request_response_types(provider):
    from spelltutor.providers import ProviderRequest

    request = ProviderRequest("property_synthesis", {"word": "reach", "context_sentence": ""})
    response = provider.complete_request(request)
    assert response.task == "property_synthesis"
    assert response.payload["word"] == "reach"
    with pytest.raises(ValueError):
        ProviderRequest("poetry", {})


def test_invariant_violating_provider_record_is_rejected():
    from spelltutor.errors import InvariantViolation
    from spelltutor.linguistics import synthesize_properties

    class BrokenProvider:
        backend = "offline"

        def complete(self, task, payload):
            return {
                "word": "reach",
                "morphemes": ["re", "search"],
                "bases": ["reach"],
                "prefixes": [],
                "suffixes": [],
                "graphemes": ["r", "ea", "ch"],
                "phonemes": ["/r/", "/iː/", "/tʃ/"],
            }

    with pytest.raises(InvariantViolation):
        synthesize_properties("reach", "x", BrokenProvider())
