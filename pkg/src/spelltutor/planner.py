"""Inquiry planning: hypothesis filtering by guard unification, candidate
trace search, and convergent trace selection.

The offline trace generator enumerates every legal sequence over the
filtered templates (depth-bounded by the step budget) and keeps the top
candidates by summed descriptor confidence, with a Jaccard diversity
constraint so the candidates are not near-duplicates. Selection is a pure
argmax over a fixed weighted score.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import TYPE_CHECKING, Optional

from .diagnosis import ErrorDiagnosis
from .errors import NoLegalTrace
from .hypotheses import HypothesisTemplate, evaluate_guard, score_descriptor
from .linguistics import WordProperties, canon

if TYPE_CHECKING:  # pragma: no cover
    from .detection import AttemptContext
    from .providers import ProviderHandle

# Fixed selection weights over (validity, coherence, clarity).
W_VALIDITY = 0.5
W_COHERENCE = 0.2
W_CLARITY = 0.3

JACCARD_LIMIT = 0.8

# Which learning effects settle each diagnosed category.
RESOLVERS: dict[str, frozenset[str]] = {
    "gpc_mismatch": frozenset({"gpc_aligned", "sound_map_aligned"}),
    "morphological_confusion": frozenset(
        {
            "structure_understood",
            "base_anchored",
            "word_sum_built",
            "family_reinforced",
            "family_generalized",
            "morphemes_confirmed",
            "pattern_consistent",
        }
    ),
    "suffixing_convention": frozenset({"rule_induced"}),
    "segmentation": frozenset({"boundaries_restored"}),
    "homophone": frozenset({"homophone_distinguished"}),
    "semantic_mismatch": frozenset({"meaning_aligned", "homophone_distinguished"}),
    "visual_confusion": frozenset({"form_difference_noticed", "false_relatives_excluded"}),
}


@dataclass
class PlannerConfig:
    epsilon: float = 0.15
    min_steps: int = 2
    max_steps: int = 5
    candidate_traces: int = 3
    descriptor_weight: float = 0.5

    def __post_init__(self):
        if not (2 <= self.min_steps <= self.max_steps <= 5):
            raise ValueError("step bounds must satisfy 2 <= min <= max <= 5")
        if self.candidate_traces < 1:
            raise ValueError("candidate_traces must be at least 1")
        if not (0.0 <= self.descriptor_weight <= 1.0):
            raise ValueError("descriptor_weight must lie in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "PlannerConfig":
        return PlannerConfig(**data)

    @staticmethod
    def load(path: str | Path) -> "PlannerConfig":
        with open(path, encoding="utf-8") as fh:
            return PlannerConfig.from_dict(json.load(fh))


@dataclass
class TraceStep:
    template_id: str
    name: str
    confidence: float
    evidence: dict
    warrant: dict
    effect: str
    question_type: str
    rationale: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class InquiryTrace:
    steps: list[TraceStep]
    rationale: str
    achieved_effects: list[str]

    def template_ids(self) -> list[str]:
        return [s.template_id for s in self.steps]

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "rationale": self.rationale,
            "achieved_effects": list(self.achieved_effects),
        }


@dataclass(frozen=True)
class TraceScore:
    validity: float
    coherence: float
    clarity: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


def _index_seq(ids: list[str]) -> tuple[int, ...]:
    return tuple(int(i[1:]) for i in ids)


def filter_hypotheses(
    templates: list[HypothesisTemplate],
    diagnosis: ErrorDiagnosis,
    props: WordProperties,
    context: "AttemptContext",
    provider: "ProviderHandle",
    config: Optional[PlannerConfig] = None,
) -> list[tuple[HypothesisTemplate, float]]:
    """Templates whose guards unify true against the diagnosed situation,
    each paired with its descriptor confidence. Empty only for a non-error."""
    config = config or PlannerConfig()
    # Raw comparison: a run-together attempt differs from its spaced target
    # even though their space-stripped canonical forms coincide.
    if context.attempt.strip().lower() == context.target.strip().lower():
        return []
    out = []
    for template in templates:
        if evaluate_guard(template, diagnosis.features, props, config.epsilon):
            conf = score_descriptor(
                template,
                context,
                provider,
                diagnosis=diagnosis,
                descriptor_weight=config.descriptor_weight,
            )
            out.append((template, conf))
    out.sort(key=lambda pair: (-pair[1], pair[0].index))
    return out


def required_resolvers(diagnosis: ErrorDiagnosis) -> list[frozenset[str]]:
    return [RESOLVERS[c] for c in diagnosis.top_categories() if c in RESOLVERS]


def enumerate_legal_traces(
    templates: list[HypothesisTemplate],
    filtered: list[tuple[str, float]],
    diagnosis: ErrorDiagnosis,
    config: PlannerConfig,
) -> list[dict]:
    """All legal step sequences, ranked and thinned to the top candidates.

    Legality: step bounds, effect preconditions met in order, no repeated
    template, closure over the top-ranked diagnosis categories. The search
    additionally keeps each trace to one step per pedagogical aspect, so a
    plan never stacks near-duplicate moves. Ordering is deterministic:
    summed confidence descending, then shorter, then smallest id sequence.
    """
    by_id = {t.id: t for t in templates}
    conf = dict(filtered)
    ids = sorted(conf, key=lambda i: int(i[1:]))
    need = required_resolvers(diagnosis)
    found: list[tuple[str, ...]] = []

    def dfs(seq: list[str], effects: set[str], aspects: set[str]) -> None:
        if len(seq) >= config.min_steps and all(effects & r for r in need):
            found.append(tuple(seq))
        if len(seq) == config.max_steps:
            return
        for tid in ids:
            if tid in seq:
                continue
            t = by_id[tid]
            if t.aspect in aspects:
                continue
            if not (t.effect_preconditions <= effects):
                continue
            seq.append(tid)
            dfs(seq, effects | {t.effect}, aspects | {t.aspect})
            seq.pop()

    dfs([], set(), set())
    if not found:
        return []

    found.sort(
        key=lambda seq: (-math.fsum(conf[i] for i in seq), len(seq), _index_seq(list(seq)))
    )
    chosen: list[tuple[str, ...]] = []
    for seq in found:
        seq_set = set(seq)
        diverse = all(
            len(seq_set & set(prev)) / len(seq_set | set(prev)) <= JACCARD_LIMIT
            for prev in chosen
        )
        if diverse:
            chosen.append(seq)
        if len(chosen) == config.candidate_traces:
            break
    top = diagnosis.top_categories()
    return [
        {
            "steps": list(seq),
            "rationale": (
                f"addresses {', '.join(top)} with "
                f"{', '.join(by_id[i].name for i in seq)}"
            ),
        }
        for seq in chosen
    ]


def _evidence_values(template: HypothesisTemplate, props: WordProperties, diagnosis: ErrorDiagnosis) -> dict:
    source = props.to_dict()
    source.update(diagnosis.features.to_dict())
    return {f: source.get(f) for f in template.evidence}


def instantiate_trace(
    raw: dict,
    templates: list[HypothesisTemplate],
    diagnosis: ErrorDiagnosis,
    props: WordProperties,
    filtered_conf: dict[str, float],
) -> InquiryTrace:
    by_id = {t.id: t for t in templates}
    steps = []
    effects = []
    for tid in raw["steps"]:
        t = by_id[tid]
        evidence = _evidence_values(t, props, diagnosis)
        warrant = {
            "kind": t.warrant_kind,
            "params": {p: evidence.get(p) for p in t.warrant_params},
        }
        steps.append(
            TraceStep(
                template_id=t.id,
                name=t.name,
                confidence=filtered_conf.get(tid, 0.0),
                evidence=evidence,
                warrant=warrant,
                effect=t.effect,
                question_type=t.question_type,
                rationale=f"{t.name}: {t.descriptor}",
            )
        )
        effects.append(t.effect)
    return InquiryTrace(steps=steps, rationale=raw.get("rationale", ""), achieved_effects=effects)


def generate_traces(
    filtered: list[tuple[HypothesisTemplate, float]],
    diagnosis: ErrorDiagnosis,
    props: WordProperties,
    config: PlannerConfig,
    provider: "ProviderHandle",
    templates: Optional[list[HypothesisTemplate]] = None,
) -> list[InquiryTrace]:
    """Candidate traces over the filtered set; raises when nothing closes."""
    if not filtered:
        raise NoLegalTrace("no applicable hypotheses to sequence")
    templates = templates or [t for t, _ in filtered]
    payload = {
        "filtered": [[t.id, c] for t, c in filtered],
        "diagnosis": diagnosis.to_dict(),
        "config": config.to_dict(),
    }
    if provider.backend == "remote":
        # Divergent generation: one request per candidate slot, in parallel.
        from concurrent.futures import ThreadPoolExecutor

        def one(instance: int) -> list[dict]:
            response = provider.complete(
                task="trace_generation", payload={**payload, "instance": instance}
            )
            return response["traces"]

        with ThreadPoolExecutor(max_workers=config.candidate_traces) as pool:
            batches = list(pool.map(one, range(config.candidate_traces)))
        raw_traces = [raw for batch in batches for raw in batch]
        seen: set[tuple] = set()
        raw_traces = [
            raw
            for raw in raw_traces
            if tuple(raw["steps"]) not in seen and not seen.add(tuple(raw["steps"]))
        ]
    else:
        raw_traces = provider.complete(task="trace_generation", payload=payload)["traces"]
    conf = {t.id: c for t, c in filtered}
    by_id = {t.id: t for t in templates}
    traces: list[InquiryTrace] = []
    for raw in raw_traces:
        if not all(tid in by_id for tid in raw["steps"]):
            continue
        trace = instantiate_trace(raw, templates, diagnosis, props, conf)
        if not validate_trace(trace, templates, diagnosis, config):
            traces.append(trace)
    if not traces:
        raise NoLegalTrace(
            f"filtered set {sorted(conf)} cannot form a closing sequence "
            f"within {config.max_steps} steps"
        )
    return traces


def validate_trace(
    trace: InquiryTrace,
    templates: list[HypothesisTemplate],
    diagnosis: ErrorDiagnosis,
    config: Optional[PlannerConfig] = None,
) -> list[str]:
    """Standalone legality check, independent of the generator's search."""
    config = config or PlannerConfig()
    by_id = {t.id: t for t in templates}
    out = []
    ids = trace.template_ids()
    if not (config.min_steps <= len(ids) <= config.max_steps):
        out.append(f"step count {len(ids)} outside [{config.min_steps}, {config.max_steps}]")
    if len(set(ids)) != len(ids):
        out.append("repeated template id")
    achieved: set[str] = set()
    for tid in ids:
        t = by_id.get(tid)
        if t is None:
            out.append(f"unknown template {tid}")
            continue
        missing = t.effect_preconditions - achieved
        if missing:
            out.append(f"{tid} requires {sorted(missing)} before it")
        achieved.add(t.effect)
    for needed in required_resolvers(diagnosis):
        if not (achieved & needed):
            out.append(f"no step resolves any of {sorted(needed)}")
    if list(achieved) and trace.achieved_effects:
        if set(trace.achieved_effects) != achieved:
            out.append("achieved_effects does not match step effects")
    return out


def score_trace(trace: InquiryTrace, templates: list[HypothesisTemplate], config: PlannerConfig) -> TraceScore:
    """Offline trace quality: mean confidence, adjacent evidence sharing,
    and brevity, blended with the documented fixed weights."""
    by_id = {t.id: t for t in templates}
    steps = trace.steps
    validity = math.fsum(s.confidence for s in steps) / len(steps)
    if len(steps) > 1:
        shared = 0
        for a, b in zip(steps, steps[1:]):
            ta, tb = by_id[a.template_id], by_id[b.template_id]
            if set(ta.evidence) & set(tb.evidence):
                shared += 1
        coherence = shared / (len(steps) - 1)
    else:
        coherence = 1.0
    span = max(config.max_steps - config.min_steps, 1)
    clarity = 1.0 - (len(steps) - config.min_steps) / span
    total = W_VALIDITY * validity + W_COHERENCE * coherence + W_CLARITY * clarity
    return TraceScore(validity=validity, coherence=coherence, clarity=clarity, total=total)


def select_trace(
    candidates: list[InquiryTrace],
    provider: "ProviderHandle",
    templates: Optional[list[HypothesisTemplate]] = None,
    config: Optional[PlannerConfig] = None,
) -> tuple[InquiryTrace, TraceScore]:
    """Argmax over the candidates; ties fall to the shorter trace, then to
    the smaller template-id sequence. Permutation of the input never
    changes the winner."""
    if not candidates:
        raise ValueError("no candidate traces")
    config = config or PlannerConfig()
    if templates is None:
        from .hypotheses import load_templates

        templates = load_templates()
    scored = [(trace, score_trace(trace, templates, config)) for trace in candidates]
    if provider.backend == "remote":
        response = provider.complete(
            task="trace_selection",
            payload={
                "candidates": [t.to_dict() for t in candidates],
                "scores": [s.to_dict() for _, s in scored],
            },
        )
        index = int(response["index"])
        if 0 <= index < len(candidates):
            return scored[index]
    best = min(
        scored,
        key=lambda pair: (-pair[1].total, len(pair[0].steps), _index_seq(pair[0].template_ids())),
    )
    return best
