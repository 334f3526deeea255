"""Error analysis: diagnostic features and ranked error categories for an
attempt/target pair.

Features are computed symbolically from the linguistics core; the category
ranking comes from the provider (offline: a fixed decision table).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import TYPE_CHECKING, Optional

from . import linguistics as ling
from .linguistics import WordProperties, canon

if TYPE_CHECKING:  # pragma: no cover
    from .detection import AttemptContext
    from .providers import ProviderHandle

DATA_DIR = Path(__file__).parent / "data"

DEFAULT_EPSILON = 0.15

CATEGORIES = (
    "gpc_mismatch",
    "morphological_confusion",
    "suffixing_convention",
    "segmentation",
    "homophone",
    "semantic_mismatch",
    "visual_confusion",
)

# Fixed offline confidences by rank position; only the first two are
# pedagogically meaningful, the tail keeps rankings totally ordered.
CONFIDENCE_TIERS = (0.9, 0.5, 0.3, 0.2, 0.15, 0.1, 0.05)
FALLBACK_CONFIDENCE = 0.1


@dataclass(frozen=True)
class SuffixRules:
    known_prefixes: tuple[str, ...]
    known_suffixes: tuple[str, ...]
    rules: tuple[dict, ...]

    @staticmethod
    def load(path: str | Path = DATA_DIR / "suffix_rules.json") -> "SuffixRules":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return SuffixRules(
            tuple(raw["known_prefixes"]),
            tuple(raw["known_suffixes"]),
            tuple(raw["rules"]),
        )

    def apply_suffix(self, base: str, suffix: str) -> tuple[str, Optional[str]]:
        """Join base + suffix, returning (joined form, rule name or None)."""
        suffix = suffix.replace("-", "")
        for rule in self.rules:
            if re.match(rule["base_pattern"], base) and re.match(
                rule["suffix_pattern"], suffix
            ):
                op = rule["operation"]
                if op == "double_final":
                    return base + base[-1] + suffix, rule["name"]
                if op == "drop_final_e":
                    return base[:-1] + suffix, rule["name"]
                if op == "y_to_i":
                    return base[:-1] + "i" + suffix, rule["name"]
        return base + suffix, None


_DEFAULT_RULES: Optional[SuffixRules] = None


def default_rules() -> SuffixRules:
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = SuffixRules.load()
    return _DEFAULT_RULES


@dataclass
class DiagnosticFeatures:
    prefix_error: bool = False
    suffix_error: bool = False
    segmentation_error: bool = False
    suffixing_change_applies: bool = False
    phoneme_match: float = 1.0
    grapheme_mismatch_count: int = 0
    morpheme_boundaries_preserved: bool = True
    homophone_confusion: bool = False
    visual_similarity_only: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "DiagnosticFeatures":
        return DiagnosticFeatures(**data)


@dataclass
class ErrorDiagnosis:
    features: DiagnosticFeatures
    ranked_categories: list[tuple[str, float]]

    def top_categories(self) -> list[str]:
        """All categories tied at the highest confidence."""
        if not self.ranked_categories:
            return []
        best = self.ranked_categories[0][1]
        return [c for c, conf in self.ranked_categories if conf == best]

    def confidence_of(self, category: Optional[str]) -> float:
        for cat, conf in self.ranked_categories:
            if cat == category:
                return conf
        return 0.0

    def to_dict(self) -> dict:
        return {
            "features": self.features.to_dict(),
            "ranked_categories": [[c, conf] for c, conf in self.ranked_categories],
        }

    @staticmethod
    def from_dict(data: dict) -> "ErrorDiagnosis":
        return ErrorDiagnosis(
            DiagnosticFeatures.from_dict(data["features"]),
            [(c, float(conf)) for c, conf in data["ranked_categories"]],
        )


def formation_of(props: WordProperties, rules: Optional[SuffixRules] = None) -> tuple[str, str, Optional[str]]:
    """Rebuild the word from its non-connector morphs.

    Returns (formed, naive_join, rule_name). ``formed`` applies suffixing
    conventions at each join; ``naive_join`` is plain concatenation.
    """
    rules = rules or default_rules()
    parts = [m for m in props.morphemes if not ling.is_connector_morph(m)]
    if not parts:
        return canon(props.word), canon(props.word), None
    formed = parts[0].replace("-", "")
    naive = formed
    applied: Optional[str] = None
    for part in parts[1:]:
        plain = part.replace("-", "")
        naive += plain
        if part in props.suffixes or part.startswith("-"):
            formed, rule = rules.apply_suffix(formed, plain)
            applied = applied or rule
        else:
            formed += plain
    return formed, naive, applied


def _morph_renders(attempt: str, target_props: WordProperties) -> list[str]:
    return ling._render_spans(
        canon(attempt), canon(target_props.word), ling.morph_spans(target_props)
    )


def compute_features(
    attempt_props: WordProperties,
    target_props: WordProperties,
    raw_attempt: str = "",
    raw_target: str = "",
    epsilon: float = DEFAULT_EPSILON,
    rules: Optional[SuffixRules] = None,
) -> DiagnosticFeatures:
    """Symbolic diagnostic features; pure, no provider involved."""
    rules = rules or default_rules()
    attempt = raw_attempt or attempt_props.word
    target = raw_target or target_props.word
    a_canon, t_canon = canon(attempt), canon(target)

    gmc = ling.grapheme_mismatch_count(attempt_props, target_props)
    pm = ling.phoneme_match(attempt_props, target_props)
    segmentation = (" " in target) != (" " in attempt)
    homophone = a_canon in {canon(h) for h in target_props.homophones}

    renders = _morph_renders(attempt, target_props)
    prefix_error = False
    suffix_error = False
    boundaries = True
    if a_canon != t_canon:
        for morph, render in zip(target_props.morphemes, renders):
            plain = morph.replace("-", "")
            if ling.is_connector_morph(morph):
                continue
            if not render:
                boundaries = False
            if morph in target_props.prefixes:
                if not render or (render != plain and render in rules.known_prefixes):
                    prefix_error = True
            if morph in target_props.suffixes:
                if not render or (render != plain and render in rules.known_suffixes):
                    suffix_error = True

    formed, naive, rule_name = formation_of(target_props, rules)
    suffixing = False
    if rule_name is not None and a_canon != t_canon:
        if a_canon == naive:
            suffixing = True
        else:
            # Fall back to checking whether edits touch the junction glue.
            connector_spans = [
                span
                for morph, span in zip(target_props.morphemes, ling.morph_spans(target_props))
                if ling.is_connector_morph(morph)
            ]
            for span in connector_spans:
                if ling.render_of_span(a_canon, t_canon, span) != t_canon[span[0]:span[1]]:
                    suffixing = True

    visual_only = (
        a_canon != t_canon
        and 1 <= gmc <= 2
        and pm < 1.0 - epsilon
        and not homophone
        and not segmentation
        and not suffixing
        and boundaries
        and ling.edit_distance(a_canon, t_canon) <= 2
    )

    return DiagnosticFeatures(
        prefix_error=prefix_error,
        suffix_error=suffix_error,
        segmentation_error=segmentation,
        suffixing_change_applies=suffixing,
        phoneme_match=pm,
        grapheme_mismatch_count=gmc,
        morpheme_boundaries_preserved=boundaries,
        homophone_confusion=homophone,
        visual_similarity_only=visual_only,
    )


def rank_categories(
    features: DiagnosticFeatures,
    multi_morphemic: bool,
    has_family: bool,
    meaning_understood: str = "unknown",
    semantic_appropriateness: bool = True,
    epsilon: float = DEFAULT_EPSILON,
) -> list[tuple[str, float]]:
    """Fixed offline decision table; total over every feature combination."""
    f = features
    ordered: list[str] = []

    def add(category: str) -> None:
        if category not in ordered:
            ordered.append(category)

    if f.segmentation_error:
        add("segmentation")
    if f.homophone_confusion:
        add("homophone")
    if f.suffixing_change_applies:
        add("suffixing_convention")
    if f.prefix_error or f.suffix_error or not f.morpheme_boundaries_preserved:
        add("morphological_confusion")
    if (
        1 <= f.grapheme_mismatch_count <= 2
        and f.phoneme_match >= 1.0 - epsilon
        and f.morpheme_boundaries_preserved
        and not f.suffixing_change_applies
    ):
        add("gpc_mismatch")
    if f.visual_similarity_only:
        add("visual_confusion")
    if (multi_morphemic or has_family) and f.grapheme_mismatch_count >= 1:
        add("morphological_confusion")
    if meaning_understood != "yes" or not semantic_appropriateness:
        add("semantic_mismatch")
    if f.grapheme_mismatch_count >= 1:
        add("gpc_mismatch")

    if not ordered:
        return [("semantic_mismatch", FALLBACK_CONFIDENCE)]
    return [
        (cat, CONFIDENCE_TIERS[i]) for i, cat in enumerate(ordered[: len(CONFIDENCE_TIERS)])
    ]


def multi_morphemic(props: WordProperties) -> bool:
    return len([m for m in props.morphemes if not ling.is_connector_morph(m)]) >= 2


def relatives_sharing_base(props: WordProperties) -> int:
    return sum(
        1
        for w in props.related_words
        if any(base and base in canon(w) for base in props.bases)
    )


def diagnose(
    attempt_props: WordProperties,
    target_props: WordProperties,
    context: "AttemptContext",
    provider: "ProviderHandle",
    epsilon: float = DEFAULT_EPSILON,
) -> ErrorDiagnosis:
    """Diagnostic features plus a provider-ranked list of error categories."""
    features = compute_features(
        attempt_props,
        target_props,
        raw_attempt=context.attempt,
        raw_target=context.target or target_props.word,
        epsilon=epsilon,
    )
    response = provider.complete(
        task="error_ranking",
        payload={
            "attempt": context.attempt,
            "target": target_props.word,
            "features": features.to_dict(),
            "multi_morphemic": multi_morphemic(target_props),
            "has_family": relatives_sharing_base(target_props) >= 1,
            "meaning_understood": target_props.meaning_understood,
            "semantic_appropriateness": target_props.semantic_appropriateness,
            "epsilon": epsilon,
        },
    )
    ranking = [(str(c), float(conf)) for c, conf in response["ranking"]]
    return ErrorDiagnosis(features=features, ranked_categories=ranking)
