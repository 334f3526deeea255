"""End-to-end inquiry pipeline: properties, diagnosis, filtering, trace
search, selection, and program synthesis, behind one engine object that the
service and the CLI share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import linguistics as ling
from .detection import AttemptContext, DetectionReport, detect
from .diagnosis import ErrorDiagnosis, diagnose
from .hypotheses import HypothesisTemplate, load_templates
from .linguistics import DATA_DIR, GraphemePhonemeCorpus, Lexicon, WordProperties
from .planner import (
    InquiryTrace,
    PlannerConfig,
    TraceScore,
    filter_hypotheses,
    generate_traces,
    select_trace,
)
from .plans import ExecutionPlan, regenerate_on_failure
from .providers import ProviderHandle, offline_handle


@dataclass
class InquiryResult:
    context: AttemptContext
    target_props: WordProperties
    attempt_props: WordProperties
    diagnosis: ErrorDiagnosis
    filtered: list[tuple[HypothesisTemplate, float]]
    candidates: list[InquiryTrace]
    trace: InquiryTrace
    score: TraceScore
    plan: ExecutionPlan


@dataclass
class InquiryEngine:
    """Shared, reusable pipeline over one provider and one data bundle."""

    provider: ProviderHandle = field(default_factory=offline_handle)
    config: PlannerConfig = field(default_factory=PlannerConfig)
    lexicon_path: str | Path = DATA_DIR / "lexicon.jsonl"
    corpus_path: str | Path = DATA_DIR / "gpc_corpus.json"
    template_path: str | Path = DATA_DIR / "hypothesis_templates.json"

    def __post_init__(self):
        self.lexicon = Lexicon.load(self.lexicon_path)
        self.corpus = GraphemePhonemeCorpus.load(self.corpus_path)
        self.templates = load_templates(self.template_path)

    def check(self, document: str) -> DetectionReport:
        return detect(document, self.provider)

    def run_inquiry(self, context: AttemptContext, config: Optional[PlannerConfig] = None) -> InquiryResult:
        """Full pipeline for one attempt/target pair."""
        config = config or self.config
        target_props = ling.synthesize_properties(
            context.target, context.sentence, self.provider
        )
        attempt_props = ling.derive_attempt_properties(
            context.attempt, target_props, self.corpus, context.sentence
        )
        # The learner's grasp of the word is untested at inquiry time.
        inquiry_props = target_props.with_unknown_meaning()
        diagnosis = diagnose(
            attempt_props, inquiry_props, context, self.provider, epsilon=config.epsilon
        )
        filtered = filter_hypotheses(
            self.templates, diagnosis, inquiry_props, context, self.provider, config
        )
        candidates = generate_traces(
            filtered, diagnosis, inquiry_props, config, self.provider, templates=self.templates
        )
        trace, score = select_trace(
            candidates, self.provider, templates=self.templates, config=config
        )
        plan = regenerate_on_failure(
            trace,
            inquiry_props,
            diagnosis,
            self.provider,
            max_retries=3,
            attempt_props=attempt_props,
        )
        return InquiryResult(
            context=context,
            target_props=target_props,
            attempt_props=attempt_props,
            diagnosis=diagnosis,
            filtered=filtered,
            candidates=candidates,
            trace=trace,
            score=score,
            plan=plan,
        )
