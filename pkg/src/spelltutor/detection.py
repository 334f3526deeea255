"""Misspelling detection and context-aware target prediction.

The offline predictor ranks lexicon words by a weighted blend of string
similarity, shared prefix, context-keyword overlap, and a rough read-through
pronunciation match; homophone misuse is caught by comparing context fit
between the written word's entry and entries that list it as a homophone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, asdict
from typing import TYPE_CHECKING, Optional

from . import linguistics as ling
from .linguistics import GraphemePhonemeCorpus, Lexicon, canon

if TYPE_CHECKING:  # pragma: no cover
    from .providers import ProviderHandle

_TOKEN_RE = re.compile(r"[A-Za-z][A-Za-z']*")

# Fixed scorer weights; string-similarity, prefix, context and pronunciation
# terms in that order. A read-through that reproduces the candidate's
# pronunciation exactly is strong kid-spelling evidence, hence the bonus.
W_EDIT = 3.0
W_PREFIX = 0.5
W_CONTEXT = 1.0
W_PHON = 3.0
PHON_EXACT_BONUS = 1.5
CONTEXT_OVERLAP_CAP = 2
# A rival homophone entry must beat the written word's own context fit by
# this much before we flag contextual misuse.
HOMOPHONE_MARGIN = 0.5
MAX_CANDIDATE_DISTANCE = 4
# An unknown token is only reported when the best candidate is plausible:
# close in letters, or a faithful read-through of the candidate's sounds.
FLAG_MAX_EDIT = 2
FLAG_MIN_PHON = 0.75

_STOPWORDS = {"a", "an", "the", "i", "it", "is", "was", "to", "of", "and", "in", "on", "at", "we", "he", "she"}


@dataclass
class AttemptContext:
    """One suspected misspelling with its surrounding context."""

    attempt: str
    target: str
    sentence: str
    document_excerpt: str = ""
    span: tuple[int, int] = (0, 0)
    uncertain: bool = False

    def problems(self) -> list[str]:
        out = []
        if self.document_excerpt:
            s, e = self.span
            if self.document_excerpt[s:e] != self.attempt:
                out.append("span does not cover the attempt")
        if self.target.strip().lower() == self.attempt.strip().lower() and not self.uncertain:
            out.append("target equals attempt but context is not flagged uncertain")
        return out

    def to_dict(self) -> dict:
        data = asdict(self)
        data["span"] = list(self.span)
        return data

    @staticmethod
    def from_dict(data: dict) -> "AttemptContext":
        return AttemptContext(
            attempt=data["attempt"],
            target=data["target"],
            sentence=data.get("sentence", ""),
            document_excerpt=data.get("document_excerpt", ""),
            span=tuple(data.get("span", (0, 0))),
            uncertain=bool(data.get("uncertain", False)),
        )


@dataclass
class DetectionReport:
    contexts: list[AttemptContext] = field(default_factory=list)
    trigger: str = "explicit_check"  # pause | explicit_check

    def problems(self) -> list[str]:
        out = []
        for ctx in self.contexts:
            out.extend(ctx.problems())
        spans = [c.span for c in self.contexts]
        if spans != sorted(spans):
            out.append("spans not sorted")
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            if s2 < e1:
                out.append("spans overlap")
        return out

    def to_dict(self) -> dict:
        return {
            "contexts": [c.to_dict() for c in self.contexts],
            "trigger": self.trigger,
        }


def _keywords(text: str) -> set[str]:
    return {
        t.lower() for t in _TOKEN_RE.findall(text) if t.lower() not in _STOPWORDS
    }


def _sentence_of(document: str, start: int, end: int) -> str:
    left = max(
        document.rfind(".", 0, start),
        document.rfind("?", 0, start),
        document.rfind("!", 0, start),
    )
    right_candidates = [
        i for i in (document.find(str(ch), end) for ch in ".?!") if i != -1
    ]
    right = min(right_candidates) if right_candidates else len(document) - 1
    return document[left + 1 : right + 1].strip()


def _phon_score(token: str, entry_word: str, lexicon: Lexicon, corpus: GraphemePhonemeCorpus) -> float:
    entry = lexicon.lookup(entry_word)
    if entry is None:
        return 0.0
    target = entry.audible_phonemes()
    rough = ling.rough_pronounce(token, corpus)
    longest = max(len(target), len(rough), 1)
    return 1.0 - ling.phoneme_edit_distance(rough, target) / longest


def score_candidate(
    token: str,
    candidate: str,
    doc_keywords: set[str],
    lexicon: Lexicon,
    corpus: GraphemePhonemeCorpus,
) -> float:
    """Context-sensitive plausibility that ``candidate`` was intended."""
    t = canon(token)
    c = canon(candidate)
    dist = ling.edit_distance(t, c)
    norm = max(len(t), len(c), 1)
    prefix = 0
    for a, b in zip(t, c):
        if a != b:
            break
        prefix += 1
    entry = lexicon.lookup(candidate)
    overlap = 0
    if entry is not None:
        ctx_kw = _keywords(entry.context_sentence) - {c}
        overlap = len(ctx_kw & doc_keywords)
    phon = _phon_score(token, candidate, lexicon, corpus)
    return (
        W_EDIT * (1.0 - dist / norm)
        + W_PREFIX * (prefix / norm)
        + W_CONTEXT * min(overlap, CONTEXT_OVERLAP_CAP)
        + W_PHON * phon
        + (PHON_EXACT_BONUS if phon == 1.0 else 0.0)
    )


def predict_target(
    token: str,
    document: str,
    lexicon: Lexicon,
    corpus: GraphemePhonemeCorpus,
) -> tuple[Optional[str], list[str]]:
    """Best lexicon word for a non-lexicon token, plus logged alternates."""
    doc_kw = _keywords(document) - {canon(token)}
    scored: list[tuple[float, str]] = []
    for word in lexicon.words():
        if ling.edit_distance(canon(token), canon(word)) > MAX_CANDIDATE_DISTANCE:
            continue
        scored.append((score_candidate(token, word, doc_kw, lexicon, corpus), word))
    if not scored:
        return None, []
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    best = scored[0][1]
    if (
        ling.edit_distance(canon(token), canon(best)) > FLAG_MAX_EDIT
        and _phon_score(token, best, lexicon, corpus) < FLAG_MIN_PHON
    ):
        return None, []
    alternates = [w for _, w in scored[1:4]]
    return best, alternates


def _homophone_misuse(
    token: str,
    document: str,
    lexicon: Lexicon,
    corpus: GraphemePhonemeCorpus,
) -> Optional[str]:
    """Target word when an in-lexicon token is contextually wrong."""
    own = lexicon.lookup(token)
    if own is None:
        return None
    doc_kw = _keywords(document) - {canon(token)}
    own_ctx = len((_keywords(own.context_sentence) - {canon(token)}) & doc_kw)
    best: Optional[tuple[float, str]] = None
    for word in lexicon.words():
        entry = lexicon.lookup(word)
        if canon(word) == canon(token) or entry is None:
            continue
        if canon(token) not in {canon(h) for h in entry.homophones}:
            continue
        rival_ctx = len((_keywords(entry.context_sentence) - {canon(word)}) & doc_kw)
        gain = rival_ctx - own_ctx
        if gain >= HOMOPHONE_MARGIN and (best is None or gain > best[0]):
            best = (gain, word)
    return best[1] if best else None


def detect(
    document: str,
    provider: "ProviderHandle",
    trigger: str = "explicit_check",
) -> DetectionReport:
    """Locate likely misspellings in running text and predict their targets."""
    if not document:
        raise ValueError("document is empty")
    response = provider.complete(
        task="target_prediction", payload={"document": document}
    )
    contexts = [AttemptContext.from_dict(c) for c in response["contexts"]]
    report = DetectionReport(contexts=contexts, trigger=trigger)
    problems = report.problems()
    if problems:
        raise ValueError("; ".join(problems))
    return report


def scan_document(
    document: str, lexicon: Lexicon, corpus: GraphemePhonemeCorpus
) -> list[AttemptContext]:
    """Offline detection pass over a document. Deterministic."""
    contexts: list[AttemptContext] = []
    for match in _TOKEN_RE.finditer(document):
        token = match.group(0)
        start, end = match.span()
        sentence = _sentence_of(document, start, end)
        if token.lower() in lexicon:
            target = _homophone_misuse(token, document, lexicon, corpus)
            if target is not None:
                contexts.append(
                    AttemptContext(
                        attempt=token,
                        target=target,
                        sentence=sentence,
                        document_excerpt=document,
                        span=(start, end),
                    )
                )
            continue
        target, _alternates = predict_target(token, document, lexicon, corpus)
        if target is None:
            continue
        contexts.append(
            AttemptContext(
                attempt=token,
                target=target,
                sentence=sentence,
                document_excerpt=document,
                span=(start, end),
            )
        )
    return contexts


@dataclass(frozen=True)
class KeystrokeEvent:
    time: float
    text_length: int


class DetectionTrigger:
    """Per-editing-session pause trigger; one writer mutates it."""

    def __init__(self, pause_seconds: float = 2.0):
        self.pause_seconds = pause_seconds
        self._last_checked: float = float("-inf")

    def should_trigger(self, keystroke_log: list[KeystrokeEvent], now: float) -> bool:
        """True when writing has paused and new text exists since last check."""
        if not keystroke_log:
            return False
        last = keystroke_log[-1]
        if now - last.time < self.pause_seconds:
            return False
        new_text = any(ev.time > self._last_checked for ev in keystroke_log)
        return new_text

    def mark_checked(self, now: float) -> None:
        self._last_checked = now
