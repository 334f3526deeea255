from __future__ import annotations

import pytest

from spelltutor.errors import InvariantViolation, UnknownWord
from spelltutor.linguistics import (
    GAP,
    WordProperties,
    align,
    canon,
    derive_attempt_properties,
    edit_distance,
    grapheme_mismatch_count,
    phoneme_match,
    rough_pronounce,
    synthesize_properties,
)

from conftest import brute_force_cost


def test_every_lexicon_entry_survives_round_trip(lexicon):
    for props in lexicon.entries():
        assert props.problems() == [], props.word
        rebuilt = WordProperties.from_dict(props.to_dict())
        assert rebuilt == props


def test_synthesize_properties_reaching_matches_reference_record(provider):
    props = synthesize_properties("reaching", "She was reaching for the book.", provider)
    assert props.morphemes == ["reach", "-ing"]
    assert props.graphemes == ["r", "ea", "ch", "i", "ng"]
    assert props.phonemes == ["/r/", "/iː/", "/tʃ/", "/ɪ/", "/ŋ/"]
    assert props.etymology is not None
    assert props.etymology.origin_language == "Old English"
    assert props.etymology.root == "reccan"


def test_synthesize_properties_single_morpheme_word(provider):
    props = synthesize_properties("a", "a cat", provider)
    assert props.morphemes == ["a"]
    assert props.graphemes == ["a"]
    assert len(props.phonemes) == 1
    assert props.prefixes == [] and props.suffixes == []


def test_synthesize_properties_constructed_base(provider):
    props = synthesize_properties("constructed", "The builder constructed the building.", provider)
    assert props.morphemes == ["con-", "struct", "-ed"]
    assert props.bases == ["struct"]


def test_synthesize_properties_unknown_word(provider):
    with pytest.raises(UnknownWord):
        synthesize_properties("zyzzyva", "odd", provider)


def test_synthesize_properties_rejects_bad_input(provider):
    with pytest.raises(ValueError):
        synthesize_properties("", "x", provider)
    with pytest.raises(ValueError):
        synthesize_properties("123", "x", provider)


def test_invariant_violation_reports_problems():
    bad = WordProperties(
        word="reach",
        morphemes=["re", "ak"],
        bases=["xyz"],
        prefixes=[],
        suffixes=[],
        graphemes=["r", "ea"],
        phonemes=["/r/"],
    )
    with pytest.raises(InvariantViolation) as err:
        bad.validate()
    assert len(err.value.problems) >= 3


def test_align_exact_match_costs_nothing():
    result = align(["r", "ea", "ch"], ["/r/", "/iː/", "/tʃ/"])
    assert result.cost == 3  # nothing matches across alphabets
    result = align(["r", "ea", "ch"], ["r", "ea", "ch"])
    assert result.cost == 0
    assert len(result.pairs) == 3


def test_align_single_team_substitution():
    result = align(["r", "ee", "ch"], ["r", "ea", "ch"])
    assert result.cost == 1
    assert result.edits() == [("substitute", "ee", "ea")]


def test_align_reports_missing_silent_letter():
    left = ["s", "i", "ne"]
    right = ["s", "i", "g", "n"]
    result = align(left, right)
    assert result.cost == brute_force_cost(tuple(left), tuple(right)) == 2
    assert any("g" in (frm, to) for _, frm, to in result.edits())


def test_align_projections_reproduce_inputs(lexicon):
    words = lexicon.words()[:20]
    for a, b in zip(words, reversed(words)):
        result = align(list(a), list(b))
        assert result.left() == list(a)
        assert result.right() == list(b)


def test_align_cost_matches_brute_force_on_lexicon_pairs(lexicon):
    words = [w for w in lexicon.words() if " " not in w][:12]
    for a in words:
        for b in words:
            got = align(list(a), list(b)).cost
            assert got == brute_force_cost(tuple(a), tuple(b)), (a, b)


def test_align_cost_is_symmetric(lexicon):
    words = lexicon.words()[:15]
    for a in words:
        for b in words:
            assert align(list(a), list(b)).cost == align(list(b), list(a)).cost


def test_grapheme_mismatch_examples(lexicon, corpus):
    reach = lexicon.lookup("reach")
    reech = derive_attempt_properties("reech", reach, corpus)
    assert grapheme_mismatch_count(reech, reach) == 1
    assert grapheme_mismatch_count(reach, reach) == 0

    constructed = lexicon.lookup("constructed")
    constractd = derive_attempt_properties("constractd", constructed, corpus)
    oracle = brute_force_cost(tuple(constractd.graphemes), tuple(constructed.graphemes))
    assert grapheme_mismatch_count(constractd, constructed) == oracle == 2


def test_grapheme_mismatch_triangle_inequality(lexicon):
    entries = lexicon.entries()[:50]
    for x in entries[::10]:
        for y in entries[::7]:
            for z in entries[::5]:
                xy = grapheme_mismatch_count(x, y)
                yz = grapheme_mismatch_count(y, z)
                xz = grapheme_mismatch_count(x, z)
                assert xz <= xy + yz


def test_phoneme_match_in_unit_interval(lexicon, corpus):
    entries = lexicon.entries()[:50]
    for a in entries[::5]:
        for b in entries[::9]:
            value = phoneme_match(a, b)
            assert 0.0 <= value <= 1.0
    reach = lexicon.lookup("reach")
    reech = derive_attempt_properties("reech", reach, corpus)
    assert phoneme_match(reech, reach) == 1.0


def test_derived_attempt_properties_satisfy_invariants(lexicon, corpus, corpus_samples):
    for sample in corpus_samples:
        for error in sample["errors"]:
            target = lexicon.lookup(error["target"])
            derived = derive_attempt_properties(error["attempt"], target, corpus)
            assert derived.problems() == []
            assert canon(derived.word) == canon(error["attempt"])
            assert derived.meaning_understood == "unknown"


def test_silent_letter_pairing_keeps_lists_equal_length(lexicon):
    sign = lexicon.lookup("sign")
    assert len(sign.graphemes) == len(sign.phonemes)
    assert GAP in sign.phonemes


def test_rough_pronounce_reads_kid_spellings(corpus):
    assert rough_pronounce("nite", corpus) == ["n", "aɪ", "t"]
    assert rough_pronounce("teech", corpus) == ["t", "iː", "tʃ"]


def test_edit_distance_basics():
    assert edit_distance("alot", "alot") == 0
    assert edit_distance("form", "from") == 2
