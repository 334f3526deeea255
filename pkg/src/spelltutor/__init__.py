"""spelltutor: turns a misspelling into a short, branching word-inquiry lesson."""

from .detection import AttemptContext, DetectionReport, DetectionTrigger, KeystrokeEvent
from .diagnosis import DiagnosticFeatures, ErrorDiagnosis, diagnose
from .errors import (
    AffordanceMismatch,
    CassetteMiss,
    DuplicateId,
    InvalidPlan,
    InvariantViolation,
    NoLegalTrace,
    ParseError,
    ProviderFailure,
    SchemaError,
    SchemaViolation,
    SpellTutorError,
    SynthesisFailure,
    UnknownWord,
    WrongNode,
)
from .hypotheses import HypothesisTemplate, evaluate_guard, load_templates, score_descriptor
from .linguistics import (
    Alignment,
    EtymologyNote,
    GraphemePhonemeCorpus,
    Lexicon,
    WordProperties,
    align,
    derive_attempt_properties,
    grapheme_mismatch_count,
    phoneme_match,
    synthesize_properties,
)
from .pipeline import InquiryEngine, InquiryResult
from .planner import (
    InquiryTrace,
    PlannerConfig,
    TraceScore,
    filter_hypotheses,
    generate_traces,
    select_trace,
    validate_trace,
)
from .plans import (
    ExecutionPlan,
    PlanNode,
    VerificationCondition,
    parse_plan,
    regenerate_on_failure,
    serialize_plan,
    synthesize_program,
    validate_program,
)
from .providers import ProviderHandle, offline_handle, record_replay, remote_handle
from .runtime import (
    AlwaysCorrectPolicy,
    AlwaysWrongPolicy,
    LearnerResponse,
    ScriptedPolicy,
    Session,
    SessionEvent,
    Transcript,
    run_headless,
    start_session,
    step,
)
from .service import ServiceConfig, create_app

__version__ = "0.1.0"
