"""Language-knowledge primitives: word records, the grapheme-phoneme corpus,
and the deterministic alignments every downstream module consumes.

All functions here are pure; the lexicon and corpus are immutable after load,
so everything is safe to share across threads and sessions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import TYPE_CHECKING, Optional

from .errors import InvariantViolation, ProviderFailure, SchemaError, UnknownWord

if TYPE_CHECKING:  # pragma: no cover
    from .providers import ProviderHandle

GAP = "∅"

DATA_DIR = Path(__file__).parent / "data"

_WORD_RE = re.compile(r"^[a-zA-Z][a-zA-Z '\-]*$")
_VOWELS = "aeiou"

# Long readings used by the magic-e heuristic in rough_pronounce.
_LONG_VOWEL = {"a": "eɪ", "e": "iː", "i": "aɪ", "o": "oʊ", "u": "uː"}

# Read-through defaults for graphemes whose first corpus attestation is not
# their most common value.
_ROUGH_OVERRIDES = {"ch": "tʃ"}


def canon(word: str) -> str:
    """Canonical comparison form: lowercased, spaces removed."""
    return word.lower().replace(" ", "")


def strip_ipa(phoneme: str) -> str:
    """Drop slash delimiters; length marks are preserved."""
    return phoneme.strip("/")


@dataclass(frozen=True)
class EtymologyNote:
    origin_language: str
    root: str
    gloss: str = ""


@dataclass
class WordProperties:
    """Structured linguistic record for one word, mirroring the lexicon schema."""

    word: str
    morphemes: list[str]
    bases: list[str]
    prefixes: list[str]
    suffixes: list[str]
    graphemes: list[str]
    phonemes: list[str]
    related_words: list[str] = field(default_factory=list)
    etymology: Optional[EtymologyNote] = None
    homophones: list[str] = field(default_factory=list)
    semantic_appropriateness: bool = True
    syntactic_correctness: bool = True
    meaning_understood: str = "unknown"  # yes | no | unknown
    context_sentence: str = ""

    def problems(self) -> list[str]:
        """All invariant violations, empty when the record is consistent."""
        out: list[str] = []
        target = canon(self.word)
        morph_concat = "".join(m.replace("-", "") for m in self.morphemes)
        if morph_concat != target:
            out.append(f"morphemes concatenate to {morph_concat!r}, not {target!r}")
        graph_concat = "".join(self.graphemes)
        if graph_concat != target:
            out.append(f"graphemes concatenate to {graph_concat!r}, not {target!r}")
        if len(self.graphemes) != len(self.phonemes):
            out.append(
                f"{len(self.graphemes)} graphemes vs {len(self.phonemes)} phonemes"
            )
        if any(not g for g in self.graphemes):
            out.append("empty grapheme")
        if any(not p for p in self.phonemes):
            out.append("empty phoneme")
        stripped = [m.replace("-", "") for m in self.morphemes]
        for base in self.bases:
            if not any(base in m for m in stripped):
                out.append(f"base {base!r} not inside any morpheme")
        if self.etymology is not None and not self.etymology.root:
            out.append("etymology note with empty root")
        if self.meaning_understood not in ("yes", "no", "unknown"):
            out.append(f"bad meaning_understood {self.meaning_understood!r}")
        return out

    def validate(self) -> "WordProperties":
        problems = self.problems()
        if problems:
            raise InvariantViolation(self.word, problems)
        return self

    def audible_phonemes(self) -> list[str]:
        return [strip_ipa(p) for p in self.phonemes if strip_ipa(p) != GAP]

    def base_morph_index(self) -> Optional[int]:
        """Index of the morpheme that realizes the first base, if any."""
        for i, m in enumerate(self.morphemes):
            if self.bases and self.bases[0] == m.replace("-", ""):
                return i
        return None

    def with_unknown_meaning(self) -> "WordProperties":
        """Copy used at inquiry time: the learner's grasp is untested."""
        data = self.to_dict()
        data["meaning_understood"] = "unknown"
        return WordProperties.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        if self.etymology is None:
            data["etymology"] = None
        return data

    @staticmethod
    def from_dict(data: dict) -> "WordProperties":
        ety = data.get("etymology")
        note = EtymologyNote(**ety) if ety else None
        return WordProperties(
            word=data["word"],
            morphemes=list(data["morphemes"]),
            bases=list(data["bases"]),
            prefixes=list(data.get("prefixes", [])),
            suffixes=list(data.get("suffixes", [])),
            graphemes=list(data["graphemes"]),
            phonemes=list(data["phonemes"]),
            related_words=list(data.get("related_words", [])),
            etymology=note,
            homophones=list(data.get("homophones", [])),
            semantic_appropriateness=bool(data.get("semantic_appropriateness", True)),
            syntactic_correctness=bool(data.get("syntactic_correctness", True)),
            meaning_understood=data.get("meaning_understood", "unknown"),
            context_sentence=data.get("context_sentence", ""),
        )


class Lexicon:
    """Immutable word-record store, one JSON record per line."""

    def __init__(self, entries: dict[str, WordProperties]):
        self._entries = entries

    @staticmethod
    def load(path: str | Path = DATA_DIR / "lexicon.jsonl") -> "Lexicon":
        entries: dict[str, WordProperties] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"lexicon line {lineno}: {exc}") from exc
                props = WordProperties.from_dict(record)
                entries[props.word.lower()] = props
        return Lexicon(entries)

    def lookup(self, word: str) -> Optional[WordProperties]:
        return self._entries.get(word.lower())

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._entries

    def words(self) -> list[str]:
        return sorted(self._entries)

    def entries(self) -> list[WordProperties]:
        return [self._entries[w] for w in self.words()]

    def __len__(self) -> int:
        return len(self._entries)


class GraphemePhonemeCorpus:
    """Attested spellings of English phonemes, each with one example word."""

    def __init__(self, entries: dict[str, list[dict]], version: int = 1):
        self.version = version
        self.entries = entries
        self._by_grapheme: dict[str, list[str]] = {}
        for phoneme, spellings in entries.items():
            for row in spellings:
                self._by_grapheme.setdefault(row["grapheme"], []).append(phoneme)

    @staticmethod
    def load(path: str | Path = DATA_DIR / "gpc_corpus.json") -> "GraphemePhonemeCorpus":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        corpus = GraphemePhonemeCorpus(raw["entries"], raw.get("version", 1))
        problems = corpus.problems()
        if problems:
            raise SchemaError("; ".join(problems))
        return corpus

    @staticmethod
    def _contains_grapheme(word: str, grapheme: str) -> bool:
        # Split digraphs like "e-e" match letters in order with one between.
        m = re.fullmatch(r"(.)-(.)", grapheme)
        if m:
            return re.search(re.escape(m.group(1)) + "." + re.escape(m.group(2)), word) is not None
        return grapheme in word

    def problems(self) -> list[str]:
        out = []
        for phoneme, spellings in self.entries.items():
            for row in spellings:
                if not row.get("grapheme"):
                    out.append(f"{phoneme}: empty grapheme")
                elif not self._contains_grapheme(row.get("example", ""), row["grapheme"]):
                    out.append(
                        f"{phoneme}: example {row.get('example')!r} lacks {row['grapheme']!r}"
                    )
        return out

    def attests(self, grapheme: str, phoneme: str) -> bool:
        key = strip_ipa(phoneme)
        return any(
            strip_ipa(p) == key for p in self._by_grapheme.get(grapheme, [])
        )

    def spellings(self, phoneme: str) -> list[str]:
        key = strip_ipa(phoneme)
        for p, rows in self.entries.items():
            if strip_ipa(p) == key:
                return [r["grapheme"] for r in rows]
        return []

    def example(self, phoneme: str, grapheme: str) -> Optional[str]:
        key = strip_ipa(phoneme)
        for p, rows in self.entries.items():
            if strip_ipa(p) == key:
                for r in rows:
                    if r["grapheme"] == grapheme:
                        return r["example"]
        return None

    def default_phoneme(self, grapheme: str) -> Optional[str]:
        phones = self._by_grapheme.get(grapheme)
        return phones[0] if phones else None

    def inventory(self) -> list[str]:
        """All attested graphemes, longest first (for greedy segmentation)."""
        return sorted(self._by_grapheme, key=lambda g: (-len(g), g))


@dataclass(frozen=True)
class Alignment:
    """Monotone minimal-cost pairing of two symbol sequences.

    ``pairs`` may carry the gap marker on either side; cost counts
    substituted, inserted and deleted pairs.
    """

    pairs: tuple[tuple[str, str], ...]
    cost: int

    def left(self) -> list[str]:
        return [a for a, _ in self.pairs if a != GAP]

    def right(self) -> list[str]:
        return [b for _, b in self.pairs if b != GAP]

    def edits(self) -> list[tuple[str, str, str]]:
        """(op, left_symbol, right_symbol) for every non-matching pair."""
        out = []
        for a, b in self.pairs:
            if a == b:
                continue
            if a == GAP:
                out.append(("insert", a, b))
            elif b == GAP:
                out.append(("delete", a, b))
            else:
                out.append(("substitute", a, b))
        return out


def align(left: list[str], right: list[str]) -> Alignment:
    """Minimal-cost monotone alignment of two sequences.

    Deterministic: at equal cost, substitution is preferred over an
    insert+delete pair, and edits are pushed to the earliest position.
    """
    n, m = len(left), len(right)
    # dp[i][j] = cost of aligning left[:i] with right[:j]
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = i
    for j in range(1, m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dp[i - 1][j - 1] + (0 if left[i - 1] == right[j - 1] else 1)
            dele = dp[i - 1][j] + 1
            ins = dp[i][j - 1] + 1
            dp[i][j] = min(sub, dele, ins)
    pairs: list[tuple[str, str]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub_cost = dp[i - 1][j - 1] + (0 if left[i - 1] == right[j - 1] else 1)
            if dp[i][j] == sub_cost:
                pairs.append((left[i - 1], right[j - 1]))
                i, j = i - 1, j - 1
                continue
        if i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            pairs.append((left[i - 1], GAP))
            i -= 1
            continue
        pairs.append((GAP, right[j - 1]))
        j -= 1
    pairs.reverse()
    return Alignment(tuple(pairs), dp[n][m])


def grapheme_mismatch_count(attempt_props: WordProperties, target_props: WordProperties) -> int:
    """Edit cost of the minimal alignment between the two grapheme sequences."""
    return align(attempt_props.graphemes, target_props.graphemes).cost


def edit_distance(a: str, b: str) -> int:
    return align(list(a), list(b)).cost


def phoneme_edit_distance(a: list[str], b: list[str]) -> int:
    return align(a, b).cost


def phoneme_match(attempt_props: WordProperties, target_props: WordProperties) -> float:
    """1 minus the normalized audible-phoneme edit distance, in [0, 1]."""
    a = attempt_props.audible_phonemes()
    b = target_props.audible_phonemes()
    longest = max(len(a), len(b), 1)
    return 1.0 - phoneme_edit_distance(a, b) / longest


def unit_spans(units: list[str]) -> list[tuple[int, int]]:
    """Character span of each unit inside the concatenation of all units."""
    spans = []
    pos = 0
    for u in units:
        spans.append((pos, pos + len(u)))
        pos += len(u)
    return spans


def morph_spans(props: WordProperties) -> list[tuple[int, int]]:
    return unit_spans([m.replace("-", "") for m in props.morphemes])


def is_connector_morph(morph: str) -> bool:
    """Junction glue such as the doubled letter in run + n + ing."""
    return morph.startswith("-") and morph.endswith("-") and len(morph.replace("-", "")) == 1


def derive_attempt_properties(
    attempt: str,
    target_props: WordProperties,
    corpus: GraphemePhonemeCorpus,
    context_sentence: str = "",
) -> WordProperties:
    """Project the target's structure onto a misspelled attempt.

    Segments the attempt into grapheme units that mirror the target's units,
    reads a phoneme for each through the corpus, and maps the target's
    morpheme spans onto attempt renderings. The result satisfies all record
    invariants, with learner-specific fields reset.
    """
    a = canon(attempt)
    t = canon(target_props.word)
    pairs = align(list(a), list(t)).pairs
    spans = unit_spans(target_props.graphemes)

    def unit_of(pos: int) -> int:
        for k, (s, e) in enumerate(spans):
            if s <= pos < e:
                return k
        return len(spans) - 1

    renders = [""] * len(target_props.graphemes)
    # (after_unit, text) for attempt characters with no target counterpart
    inserts: list[list] = []
    tpos = -1
    for ac, tc in pairs:
        if tc != GAP:
            tpos += 1
            if ac != GAP:
                renders[unit_of(tpos)] += ac
        else:
            after = unit_of(tpos) if tpos >= 0 else -1
            if inserts and inserts[-1][0] == after and inserts[-1][2] == tpos:
                inserts[-1][1] += ac
            else:
                inserts.append([after, ac, tpos])

    units: list[tuple[str, Optional[int]]] = []
    for chunk in [i for i in inserts if i[0] == -1]:
        units.append((chunk[1], None))
    for k in range(len(renders)):
        if renders[k]:
            units.append((renders[k], k))
        for chunk in [i for i in inserts if i[0] == k]:
            units.append((chunk[1], None))

    graphemes: list[str] = []
    phonemes: list[str] = []
    consumed = 0
    for text, k in units:
        consumed += len(text)
        at_word_end = consumed == len(a)
        graphemes.append(text)
        if k is not None:
            t_g = target_props.graphemes[k]
            t_p = target_props.phonemes[k]
            if text == t_g or strip_ipa(t_p) == GAP:
                phonemes.append(t_p)
            elif corpus.attests(text, t_p):
                phonemes.append(t_p)
            elif text == "e" and at_word_end:
                phonemes.append(GAP)
            else:
                phonemes.append(corpus.default_phoneme(text) or GAP)
        else:
            if text == "e" and at_word_end:
                phonemes.append(GAP)
            else:
                phonemes.append(corpus.default_phoneme(text) or GAP)

    # Map morpheme spans onto attempt renderings.
    morph_renders = _render_spans(a, t, morph_spans(target_props))
    morphemes: list[str] = []
    bases: list[str] = []
    prefixes: list[str] = []
    suffixes: list[str] = []
    stripped_morphs = [m.replace("-", "") for m in target_props.morphemes]
    for idx, (morph, render) in enumerate(zip(target_props.morphemes, morph_renders)):
        if not render:
            continue
        decorated = render
        if morph.startswith("-"):
            decorated = "-" + decorated
        if morph.endswith("-"):
            decorated = decorated + "-"
        morphemes.append(decorated)
        plain = stripped_morphs[idx]
        if plain in [b for b in target_props.bases]:
            bases.append(render)
        if morph in target_props.prefixes:
            prefixes.append(decorated)
        if morph in target_props.suffixes:
            suffixes.append(decorated)

    return WordProperties(
        word=a,
        morphemes=morphemes or [a],
        bases=bases,
        prefixes=prefixes,
        suffixes=suffixes,
        graphemes=graphemes,
        phonemes=phonemes,
        related_words=list(target_props.related_words),
        etymology=None,
        homophones=[],
        semantic_appropriateness=target_props.semantic_appropriateness,
        syntactic_correctness=target_props.syntactic_correctness,
        meaning_understood="unknown",
        context_sentence=context_sentence or target_props.context_sentence,
    ).validate()


def _render_spans(attempt: str, target: str, spans: list[tuple[int, int]]) -> list[str]:
    """What the attempt writes for each target character span.

    Attempt characters with no target counterpart stick to the span of the
    preceding target character, so the renders always concatenate back to
    the whole attempt.
    """
    pairs = align(list(attempt), list(target)).pairs
    renders = [""] * len(spans)

    def span_of(pos: int) -> int:
        for k, (s, e) in enumerate(spans):
            if s <= pos < e:
                return k
        return max(len(spans) - 1, 0)

    tpos = -1
    for ac, tc in pairs:
        if tc != GAP:
            tpos += 1
            if ac != GAP:
                renders[span_of(tpos)] += ac
        elif spans:
            renders[span_of(max(tpos, 0))] += ac
    return renders


def render_of_span(attempt: str, target: str, span: tuple[int, int]) -> str:
    """Attempt rendering of one target character span."""
    spans = [(0, span[0]), span, (span[1], len(target))]
    rendered = _render_spans(attempt, target, spans)
    return rendered[1]


def map_span_to_target(attempt: str, target: str, span: tuple[int, int]) -> tuple[int, int]:
    """Translate a character span on the attempt into target coordinates."""
    pairs = align(list(attempt), list(target)).pairs
    apos = -1
    tpos = -1
    lo, hi = None, None
    for ac, tc in pairs:
        if ac != GAP:
            apos += 1
        if tc != GAP:
            tpos += 1
        if ac != GAP and span[0] <= apos < span[1] and tc != GAP:
            if lo is None:
                lo = tpos
            hi = tpos + 1
    if lo is None:
        return (0, 0)
    return (lo, hi)


def rough_pronounce(word: str, corpus: GraphemePhonemeCorpus) -> list[str]:
    """Greedy read-through of an arbitrary letter string.

    Segments into the longest attested graphemes and assigns each its
    first attested phoneme; a final vowel-consonant-e pattern is read as
    a long vowel with silent e. Used only for candidate scoring.
    """
    w = canon(word)
    inventory = corpus.inventory()
    units: list[str] = []
    i = 0
    while i < len(w):
        for g in inventory:
            if "-" not in g and w.startswith(g, i):
                units.append(g)
                i += len(g)
                break
        else:
            units.append(w[i])
            i += 1
    phones = [
        _ROUGH_OVERRIDES.get(u, strip_ipa(corpus.default_phoneme(u) or GAP))
        for u in units
    ]
    if (
        len(units) >= 3
        and units[-1] == "e"
        and len(units[-2]) <= 2
        and units[-2][0] not in _VOWELS
        and units[-3] in _VOWELS
    ):
        phones[-3] = _LONG_VOWEL[units[-3]]
        phones[-1] = GAP
    return [p for p in phones if p != GAP]


def synthesize_properties(
    word: str, context_sentence: str, provider: "ProviderHandle"
) -> WordProperties:
    """Full linguistic record for a word, via the configured provider.

    The offline backend answers purely from the bundled lexicon.
    """
    if not word or not _WORD_RE.match(word):
        raise ValueError(f"not a synthesizable word: {word!r}")
    try:
        response = provider.complete(
            task="property_synthesis",
            payload={"word": word, "context_sentence": context_sentence},
        )
    except ProviderFailure as exc:
        if getattr(exc, "reason", "") == "unknown_word":
            raise UnknownWord(word) from exc
        raise
    try:
        props = WordProperties.from_dict(response)
    except (KeyError, TypeError) as exc:
        raise ProviderFailure(f"malformed property record: {exc}") from exc
    return props.validate()
