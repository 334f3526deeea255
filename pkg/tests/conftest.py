from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path

import pytest

from spelltutor.detection import AttemptContext
from spelltutor.hypotheses import load_templates
from spelltutor.linguistics import DATA_DIR, GraphemePhonemeCorpus, Lexicon
from spelltutor.pipeline import InquiryEngine
from spelltutor.providers import offline_handle

GOLDEN_DIR = Path(__file__).parent / "fixtures" / "golden"


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return Lexicon.load()


@pytest.fixture(scope="session")
def corpus() -> GraphemePhonemeCorpus:
    return GraphemePhonemeCorpus.load()


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def provider():
    return offline_handle()


@pytest.fixture(scope="session")
def engine(provider):
    return InquiryEngine(provider=provider)


@pytest.fixture(scope="session")
def corpus_samples() -> list[dict]:
    path = DATA_DIR / "evaluation_corpus.jsonl"
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


@pytest.fixture()
def constractd_context() -> AttemptContext:
    return AttemptContext(
        attempt="constractd",
        target="constructed",
        sentence="I like how the art of constractd.",
        document_excerpt="I like how the art of constractd.",
        span=(22, 32),
    )


@lru_cache(maxsize=None)
def brute_force_cost(left: tuple, right: tuple) -> int:
    """Independent exhaustive minimal-edit oracle (no DP table sharing)."""
    if not left:
        return len(right)
    if not right:
        return len(left)
    return min(
        brute_force_cost(left[1:], right[1:]) + (0 if left[0] == right[0] else 1),
        brute_force_cost(left[1:], right) + 1,
        brute_force_cost(left, right[1:]) + 1,
    )


def fixture_pairs(lexicon) -> list[tuple[str, str]]:
    """50 deterministic attempt/target pairs: the corpus errors plus
    synthetic single-letter mutations of lexicon words."""
    pairs = []
    samples = [
        json.loads(line)
        for line in (DATA_DIR / "evaluation_corpus.jsonl").read_text(encoding="utf-8").splitlines()
        if line
    ]
    for sample in samples:
        for error in sample["errors"]:
            pairs.append((error["attempt"], error["target"]))
    vowels = "aeiou"
    for word in lexicon.words():
        if len(pairs) >= 50:
            break
        if len(word) < 4 or " " in word or (word, word) in pairs:
            continue
        mutated = None
        for i, ch in enumerate(word):
            if ch in vowels:
                swap = "e" if ch != "e" else "a"
                mutated = word[:i] + swap + word[i + 1 :]
                break
        if mutated and mutated != word and (mutated, word) not in pairs:
            pairs.append((mutated, word))
    return pairs[:50]
