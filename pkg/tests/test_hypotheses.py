from __future__ import annotations

import json

import pytest

from spelltutor.detection import AttemptContext
from spelltutor.diagnosis import DiagnosticFeatures, diagnose
from spelltutor.errors import DuplicateId, SchemaError
from spelltutor.hypotheses import (
    TEMPLATE_PATH,
    evaluate_guard,
    guard_context,
    load_templates,
    score_descriptor,
    serialize_templates,
    templates_from_dict,
)
from spelltutor.linguistics import derive_attempt_properties


def by_id(templates, tid):
    return next(t for t in templates if t.id == tid)


def features_for(attempt, target, lexicon, corpus, provider):
    target_props = lexicon.lookup(target).with_unknown_meaning()
    attempt_props = derive_attempt_properties(attempt, target_props, corpus)
    ctx = AttemptContext(attempt=attempt, target=target, sentence=f"... {attempt} ...")
    return diagnose(attempt_props, target_props, ctx, provider), target_props


def test_bundled_file_loads_exactly_eighteen(templates):
    assert [t.id for t in templates] == [f"H{i}" for i in range(1, 19)]
    assert len({t.effect for t in templates}) == 18


def test_missing_id_is_rejected():
    raw = json.loads(TEMPLATE_PATH.read_text(encoding="utf-8"))
    raw["templates"] = [t for t in raw["templates"] if t["id"] != "H7"]
    with pytest.raises(DuplicateId) as err:
        templates_from_dict(raw)
    assert "H7" in str(err.value)


def test_duplicate_id_is_rejected():
    raw = json.loads(TEMPLATE_PATH.read_text(encoding="utf-8"))
    clone = dict(raw["templates"][0])
    raw["templates"].append(clone)
    with pytest.raises(DuplicateId):
        templates_from_dict(raw)


def test_unknown_guard_field_is_named_in_error():
    raw = json.loads(TEMPLATE_PATH.read_text(encoding="utf-8"))
    raw["templates"][7]["guard"] = {"cmp": ["phonem_match", ">=", 0.9]}
    with pytest.raises(SchemaError) as err:
        templates_from_dict(raw)
    assert "phonem_match" in str(err.value)


def test_warrant_params_must_be_bound_as_evidence():
    raw = json.loads(TEMPLATE_PATH.read_text(encoding="utf-8"))
    raw["templates"][0]["warrant"]["params"] = ["graphemes"]
    with pytest.raises(SchemaError) as err:
        templates_from_dict(raw)
    assert "graphemes" in str(err.value)


def test_template_data_round_trips(templates):
    rebuilt = templates_from_dict(serialize_templates(templates))
    assert rebuilt == templates


def test_h8_guard_true_for_reech(templates, lexicon, corpus, provider):
    diag, props = features_for("reech", "reach", lexicon, corpus, provider)
    assert evaluate_guard(by_id(templates, "H8"), diag.features, props) is True


def test_h8_guard_blocked_by_suffixing_change(templates, lexicon, corpus, provider):
    diag, props = features_for("runing", "running", lexicon, corpus, provider)
    assert evaluate_guard(by_id(templates, "H8"), diag.features, props) is False
    assert evaluate_guard(by_id(templates, "H5"), diag.features, props) is True


def test_h8_guard_blocked_by_segmentation(templates, lexicon, corpus, provider):
    diag, props = features_for("alot", "a lot", lexicon, corpus, provider)
    assert evaluate_guard(by_id(templates, "H8"), diag.features, props) is False
    assert evaluate_guard(by_id(templates, "H7"), diag.features, props) is True


def test_h7_guard_false_without_error(templates, lexicon):
    props = lexicon.lookup("reach")
    clean = DiagnosticFeatures()
    assert evaluate_guard(by_id(templates, "H7"), clean, props) is False


def test_zero_error_guards_false_except_context_independent(templates, lexicon):
    clean = DiagnosticFeatures()
    allowed_true = {"H9", "H13"}
    for word in ("reach", "running", "constructed", "healthy", "see"):
        props = lexicon.lookup(word)
        for template in templates:
            value = evaluate_guard(template, clean, props)
            if template.id not in allowed_true:
                assert value is False, (word, template.id)


def test_guard_evaluation_is_total_and_deterministic(templates, lexicon):
    import itertools

    props = lexicon.lookup("constructed")
    for values in itertools.product([False, True], repeat=4):
        features = DiagnosticFeatures(
            prefix_error=values[0],
            suffix_error=values[1],
            segmentation_error=values[2],
            suffixing_change_applies=values[3],
            grapheme_mismatch_count=1,
            phoneme_match=0.9,
        )
        for template in templates:
            first = evaluate_guard(template, features, props)
            second = evaluate_guard(template, features, props)
            assert first is second


def test_epsilon_is_tunable(templates, lexicon, corpus, provider):
    diag, props = features_for("constractd", "constructed", lexicon, corpus, provider)
    h8 = by_id(templates, "H8")
    assert diag.features.phoneme_match == pytest.approx(10 / 11)
    assert evaluate_guard(h8, diag.features, props, epsilon=0.15) is True
    assert evaluate_guard(h8, diag.features, props, epsilon=0.01) is False


def test_descriptor_score_from_category_rank(templates, lexicon, corpus, provider):
    diag, props = features_for("reech", "reach", lexicon, corpus, provider)
    ctx = AttemptContext(attempt="reech", target="reach", sentence="x")
    score = score_descriptor(by_id(templates, "H8"), ctx, provider, diagnosis=diag)
    assert score >= 0.8  # rank-1 gpc_mismatch confidence


def test_descriptor_score_zero_when_category_absent(templates, lexicon, corpus, provider):
    diag, props = features_for("reech", "reach", lexicon, corpus, provider)
    ctx = AttemptContext(attempt="reech", target="reach", sentence="x")
    h9 = by_id(templates, "H9")  # carries no error category
    assert score_descriptor(h9, ctx, provider, diagnosis=diag) == 0.0


def test_guard_context_exposes_derived_booleans(lexicon):
    ctx = guard_context(DiagnosticFeatures(), lexicon.lookup("sign"))
    assert ctx["silent_letter_present"] is True
    assert ctx["has_etymology"] is True
    assert ctx["relatives_sharing_base"] >= 2
    assert ctx["morpheme_count"] == 1
