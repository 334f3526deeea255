"""The hypothesis-template library: eighteen reusable inquiry moves encoded
as data, each a quintuple of guard, evidence, action, warrant and effect.

Templates live in a JSON definition file so practitioners can edit them
without touching code; the loader enforces the published schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Optional

from . import diagnosis as diag
from .diagnosis import DiagnosticFeatures, ErrorDiagnosis
from .errors import DuplicateId, SchemaError
from .linguistics import GAP, WordProperties, strip_ipa

if TYPE_CHECKING:  # pragma: no cover
    from .detection import AttemptContext
    from .providers import ProviderHandle

DATA_DIR = Path(__file__).parent / "data"
TEMPLATE_PATH = DATA_DIR / "hypothesis_templates.json"

TEMPLATE_IDS = tuple(f"H{i}" for i in range(1, 19))

ACTIONS = (
    "define_meaning", "box_base", "decompose", "word_sum", "inspect_suffix_rule",
    "build_matrix", "segment_aloud", "identify_graphemes", "trace_origin",
    "sort_in_out", "verify_morphemes", "compare_cousins", "contrast_lookalikes",
    "map_phonemes", "compare_relatives_sound", "compare_family_spelling",
    "sort_by_meaning", "visual_contrast",
)

LEARNING_EFFECTS = (
    "meaning_aligned", "base_anchored", "structure_understood", "word_sum_built",
    "rule_induced", "family_generalized", "boundaries_restored", "gpc_aligned",
    "origin_rationale", "family_reinforced", "morphemes_confirmed",
    "cousins_explained", "false_relatives_excluded", "sound_map_aligned",
    "stable_despite_sound_change", "pattern_consistent", "homophone_distinguished",
    "form_difference_noticed",
)

QUESTION_TYPES = ("meaning", "structure", "relatives", "grapheme-phoneme correspondence")

BOOLEAN_FIELDS = (
    "prefix_error", "suffix_error", "segmentation_error", "suffixing_change_applies",
    "morpheme_boundaries_preserved", "homophone_confusion", "visual_similarity_only",
    "semantic_appropriateness", "syntactic_correctness", "has_etymology",
    "silent_letter_present",
)

NUMERIC_FIELDS = (
    "phoneme_match", "grapheme_mismatch_count", "affix_count", "prefix_count",
    "suffix_count", "base_count", "morpheme_count", "relative_count",
    "relatives_sharing_base", "homophone_count",
)

ENUM_FIELDS = ("meaning_understood",)

GUARD_FIELDS = BOOLEAN_FIELDS + NUMERIC_FIELDS + ENUM_FIELDS

EVIDENCE_FIELDS = (
    "word", "morphemes", "bases", "prefixes", "suffixes", "graphemes", "phonemes",
    "related_words", "etymology", "homophones", "semantic_appropriateness",
    "syntactic_correctness", "meaning_understood", "context_sentence",
) + tuple(DiagnosticFeatures().to_dict())

_CMP_OPS = ("==", "!=", ">=", "<=", ">", "<", "in")

DEFAULT_EPSILON = diag.DEFAULT_EPSILON


@dataclass(frozen=True)
class GuardExpr:
    """Expression tree over boolean fields, numeric comparisons,
    set membership, negation, conjunction and disjunction."""

    node: dict

    def fields(self) -> set[str]:
        out: set[str] = set()

        def walk(n: dict) -> None:
            if "all" in n or "any" in n:
                for child in n.get("all", n.get("any", [])):
                    walk(child)
            elif "not" in n:
                walk(n["not"])
            elif "field" in n:
                out.add(n["field"])
            elif "cmp" in n:
                out.add(n["cmp"][0])

        walk(self.node)
        return out

    def problems(self) -> list[str]:
        out: list[str] = []

        def walk(n: dict) -> None:
            if not isinstance(n, dict):
                out.append(f"guard node is not an object: {n!r}")
                return
            if "all" in n:
                for child in n["all"]:
                    walk(child)
            elif "any" in n:
                for child in n["any"]:
                    walk(child)
            elif "not" in n:
                walk(n["not"])
            elif "field" in n:
                if n["field"] not in BOOLEAN_FIELDS:
                    out.append(f"unknown boolean field {n['field']!r}")
            elif "cmp" in n:
                fieldname, op, _ = n["cmp"]
                if fieldname not in GUARD_FIELDS:
                    out.append(f"unknown field {fieldname!r}")
                if op not in _CMP_OPS:
                    out.append(f"unknown operator {op!r}")
            else:
                out.append(f"unrecognized guard node {sorted(n)!r}")

        walk(self.node)
        return out

    def evaluate(self, context: dict, epsilon: float = DEFAULT_EPSILON) -> bool:
        def resolve(value):
            if value == "1-epsilon":
                return 1.0 - epsilon
            if value == "epsilon":
                return epsilon
            return value

        def walk(n: dict) -> bool:
            if "all" in n:
                return all(walk(c) for c in n["all"])
            if "any" in n:
                return any(walk(c) for c in n["any"])
            if "not" in n:
                return not walk(n["not"])
            if "field" in n:
                return bool(context[n["field"]])
            fieldname, op, raw = n["cmp"]
            actual = context[fieldname]
            value = resolve(raw)
            if op == "in":
                return actual in value
            if op == "==":
                return actual == value
            if op == "!=":
                return actual != value
            if op == ">=":
                return actual >= value
            if op == "<=":
                return actual <= value
            if op == ">":
                return actual > value
            return actual < value

        return walk(self.node)


@dataclass(frozen=True)
class HypothesisTemplate:
    id: str
    name: str
    guard: GuardExpr
    descriptor: str
    evidence: tuple[str, ...]
    action: str
    warrant_kind: str
    warrant_params: tuple[str, ...]
    effect: str
    effect_preconditions: frozenset[str]
    category: Optional[str]
    aspect: str
    question_type: str
    note: str = ""

    @property
    def index(self) -> int:
        return int(self.id[1:])

    def to_dict(self) -> dict:
        data = {
            "id": self.id,
            "name": self.name,
            "descriptor": self.descriptor,
            "guard": self.guard.node,
            "evidence": list(self.evidence),
            "action": self.action,
            "warrant": {"kind": self.warrant_kind, "params": list(self.warrant_params)},
            "effect": self.effect,
            "effect_preconditions": sorted(self.effect_preconditions),
            "category": self.category,
            "aspect": self.aspect,
            "question_type": self.question_type,
        }
        if self.note:
            data["note"] = self.note
        return data


def _template_problems(t: HypothesisTemplate) -> list[str]:
    out = []
    out.extend(f"{t.id}: {p}" for p in t.guard.problems())
    for ev in t.evidence:
        if ev not in EVIDENCE_FIELDS:
            out.append(f"{t.id}: evidence names unknown field {ev!r}")
    if not set(t.warrant_params) <= set(t.evidence):
        extra = sorted(set(t.warrant_params) - set(t.evidence))
        out.append(f"{t.id}: warrant params {extra} not bound as evidence")
    if t.action not in ACTIONS:
        out.append(f"{t.id}: unknown action {t.action!r}")
    if t.effect not in LEARNING_EFFECTS:
        out.append(f"{t.id}: unknown learning effect {t.effect!r}")
    for pre in t.effect_preconditions:
        if pre not in LEARNING_EFFECTS:
            out.append(f"{t.id}: unknown precondition effect {pre!r}")
    if t.category is not None and t.category not in diag.CATEGORIES:
        out.append(f"{t.id}: unknown error category {t.category!r}")
    if t.question_type not in QUESTION_TYPES:
        out.append(f"{t.id}: unknown question type {t.question_type!r}")
    return out


def load_templates(path: str | Path = TEMPLATE_PATH) -> list[HypothesisTemplate]:
    """Load and validate the template definition file.

    Exactly the ids H1..H18 must be present, each with a well-typed guard.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"template file: {exc}") from exc
    templates = []
    seen: set[str] = set()
    for entry in raw.get("templates", []):
        try:
            warrant = entry.get("warrant", {})
            t = HypothesisTemplate(
                id=entry["id"],
                name=entry["name"],
                guard=GuardExpr(entry["guard"]),
                descriptor=entry["descriptor"],
                evidence=tuple(entry["evidence"]),
                action=entry["action"],
                warrant_kind=warrant["kind"],
                warrant_params=tuple(warrant.get("params", [])),
                effect=entry["effect"],
                effect_preconditions=frozenset(entry.get("effect_preconditions", [])),
                category=entry.get("category"),
                aspect=entry["aspect"],
                question_type=entry["question_type"],
                note=entry.get("note", ""),
            )
        except KeyError as exc:
            raise SchemaError(f"template entry missing key {exc}") from exc
        if t.id in seen:
            raise DuplicateId(f"template id {t.id} defined twice")
        seen.add(t.id)
        problems = _template_problems(t)
        if problems:
            raise SchemaError("; ".join(problems))
        templates.append(t)
    missing = [i for i in TEMPLATE_IDS if i not in seen]
    extra = sorted(seen - set(TEMPLATE_IDS))
    if missing or extra:
        raise DuplicateId(f"missing ids {missing}, unexpected ids {extra}")
    effects = [t.effect for t in templates]
    if len(set(effects)) != len(effects):
        raise SchemaError("learning effects are not one-per-template")
    templates.sort(key=lambda t: t.index)
    return templates


def serialize_templates(templates: list[HypothesisTemplate]) -> dict:
    return {"version": 1, "templates": [t.to_dict() for t in templates]}


def templates_from_dict(data: dict) -> list[HypothesisTemplate]:
    import tempfile, os

    fd, path = tempfile.mkstemp(suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(data, fh, ensure_ascii=False)
        return load_templates(path)
    finally:
        os.unlink(path)


def guard_context(features: DiagnosticFeatures, props: WordProperties) -> dict:
    """Evaluation namespace: diagnostic features plus record-derived values."""
    ctx = features.to_dict()
    ctx.update(
        affix_count=len(props.prefixes) + len(props.suffixes),
        prefix_count=len(props.prefixes),
        suffix_count=len(props.suffixes),
        base_count=len(props.bases),
        morpheme_count=len([m for m in props.morphemes if not _is_connector(m)]),
        relative_count=len(props.related_words),
        relatives_sharing_base=diag.relatives_sharing_base(props),
        homophone_count=len(props.homophones),
        has_etymology=props.etymology is not None,
        silent_letter_present=any(strip_ipa(p) == GAP for p in props.phonemes),
        semantic_appropriateness=props.semantic_appropriateness,
        syntactic_correctness=props.syntactic_correctness,
        meaning_understood=props.meaning_understood,
    )
    return ctx


def _is_connector(morph: str) -> bool:
    from .linguistics import is_connector_morph

    return is_connector_morph(morph)


def evaluate_guard(
    template: HypothesisTemplate,
    features: DiagnosticFeatures,
    props: WordProperties,
    epsilon: float = DEFAULT_EPSILON,
) -> bool:
    """Pure evaluation of the template's guard expression; no provider call."""
    return template.guard.evaluate(guard_context(features, props), epsilon)


def score_descriptor(
    template: HypothesisTemplate,
    context: "AttemptContext",
    provider: "ProviderHandle",
    diagnosis: Optional[ErrorDiagnosis] = None,
    descriptor_weight: float = 0.5,
) -> float:
    """Soft confidence for the template's diagnostic descriptor.

    Offline this is the diagnosis confidence of the template's associated
    error category; a remote backend's score is blended against that prior
    by ``descriptor_weight``.
    """
    prior = diagnosis.confidence_of(template.category) if diagnosis else 0.0
    if provider.backend == "offline":
        return prior
    response = provider.complete(
        task="descriptor_score",
        payload={
            "template_id": template.id,
            "descriptor": template.descriptor,
            "attempt": context.attempt,
            "target": context.target,
            "sentence": context.sentence,
        },
    )
    remote = float(response["score"])
    if diagnosis is None:
        return remote
    return descriptor_weight * remote + (1.0 - descriptor_weight) * prior
