"""The executable lesson program: a small acyclic graph of prompt, retry,
reveal and closing nodes, synthesized from a selected trace, validated,
and serialized canonically for the runtime and the UI.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import TYPE_CHECKING, Optional

from . import linguistics as ling
from .diagnosis import ErrorDiagnosis, default_rules, formation_of
from .errors import ParseError, SynthesisFailure
from .linguistics import GAP, GraphemePhonemeCorpus, WordProperties, canon, strip_ipa
from .planner import InquiryTrace, TraceStep

if TYPE_CHECKING:  # pragma: no cover
    from .providers import ProviderHandle

DATA_DIR = Path(__file__).parent / "data"
PLAN_SCHEMA_PATH = DATA_DIR / "schemas" / "execution_plan.schema.json"

AFFORDANCES = (
    "speech_text", "free_text", "highlight_span", "drag_sort",
    "multiple_choice", "reveal_animation", "none",
)
PASSIVE_AFFORDANCES = ("reveal_animation", "none")

VERIFICATION_KINDS = (
    "exact_match", "set_membership", "span_equals", "span_overlaps_base",
    "semantic_check",
)

RULE_PHRASES = {
    "doubling": "double the final consonant",
    "e_drop": "drop the silent e",
    "y_to_i": "change the y to i",
    None: "just join them",
}
RULE_OPTIONS = [
    "double the final consonant",
    "drop the silent e",
    "change the y to i",
    "just join them",
]

_STOP = {"a", "an", "the", "i", "it", "is", "was", "to", "of", "and", "in", "on", "at", "we", "he", "she"}


def _keywords(text: str) -> list[str]:
    seen = []
    for token in re.findall(r"[A-Za-z][A-Za-z']*", text.lower()):
        if token not in _STOP and token not in seen:
            seen.append(token)
    return seen


@dataclass
class VerificationCondition:
    kind: str
    expected: dict
    provider_required: bool = False

    def problems(self, word_length: int) -> list[str]:
        out = []
        if self.kind not in VERIFICATION_KINDS:
            out.append(f"UnknownVerificationKind({self.kind})")
            return out
        if self.provider_required and self.kind != "semantic_check":
            out.append("ProviderRequiredOutsideSemanticCheck")
        if self.kind == "exact_match":
            answers = self.expected.get("expected")
            if not answers or not all(isinstance(a, str) and a for a in answers):
                out.append("EmptyExpected")
        elif self.kind == "set_membership":
            allowed = self.expected.get("allowed")
            if not allowed:
                out.append("EmptyMembership")
        elif self.kind in ("span_equals", "span_overlaps_base"):
            start = self.expected.get("start", self.expected.get("base_start"))
            end = self.expected.get("end", self.expected.get("base_end"))
            if (
                not isinstance(start, int)
                or not isinstance(end, int)
                or not (0 <= start < end <= word_length)
            ):
                out.append("SpanOutOfRange")
        elif self.kind == "semantic_check":
            if not self.expected.get("keywords"):
                out.append("EmptyKeywords")
            if not self.provider_required:
                out.append("SemanticCheckNeedsProvider")
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "VerificationCondition":
        return VerificationCondition(
            kind=data["kind"],
            expected=dict(data["expected"]),
            provider_required=bool(data.get("provider_required", False)),
        )


@dataclass
class PlanNode:
    node_id: str
    hypothesis: Optional[str]
    instruction_text: str
    affordance: str
    verification: Optional[VerificationCondition] = None
    on_true: Optional[str] = None
    on_false: Optional[str] = None
    feedback_true: str = ""
    feedback_false: str = ""
    effect_on_true: Optional[str] = None

    @property
    def terminal(self) -> bool:
        return self.on_true is None and self.on_false is None

    def to_dict(self) -> dict:
        data = asdict(self)
        data["verification"] = self.verification.to_dict() if self.verification else None
        return data

    @staticmethod
    def from_dict(data: dict) -> "PlanNode":
        ver = data.get("verification")
        return PlanNode(
            node_id=data["node_id"],
            hypothesis=data.get("hypothesis"),
            instruction_text=data.get("instruction_text", ""),
            affordance=data["affordance"],
            verification=VerificationCondition.from_dict(ver) if ver else None,
            on_true=data.get("on_true"),
            on_false=data.get("on_false"),
            feedback_true=data.get("feedback_true", ""),
            feedback_false=data.get("feedback_false", ""),
            effect_on_true=data.get("effect_on_true"),
        )


@dataclass
class ExecutionPlan:
    plan_id: str
    word: str
    target: str
    nodes: dict[str, PlanNode]
    entry: str
    metadata: dict = field(default_factory=dict)

    def node(self, node_id: str) -> PlanNode:
        return self.nodes[node_id]

    def to_dict(self) -> dict:
        return {
            "plan_id": self.plan_id,
            "word": self.word,
            "target": self.target,
            "entry": self.entry,
            "nodes": {nid: n.to_dict() for nid, n in sorted(self.nodes.items())},
            "metadata": self.metadata,
        }

    @staticmethod
    def from_dict(data: dict) -> "ExecutionPlan":
        return ExecutionPlan(
            plan_id=data["plan_id"],
            word=data["word"],
            target=data["target"],
            nodes={nid: PlanNode.from_dict(nd) for nid, nd in data["nodes"].items()},
            entry=data["entry"],
            metadata=dict(data.get("metadata", {})),
        )


def validate_program(plan: ExecutionPlan) -> list[str]:
    """Structural and referential checks; an empty list means valid."""
    out: list[str] = []
    if plan.entry not in plan.nodes:
        out.append(f"MissingEntry({plan.entry})")
        return out

    for nid, node in sorted(plan.nodes.items()):
        if node.node_id != nid:
            out.append(f"NodeIdMismatch({nid})")
        if node.affordance not in AFFORDANCES:
            out.append(f"UnknownAffordance({nid}:{node.affordance})")
        for edge in (node.on_true, node.on_false):
            if edge is not None and edge not in plan.nodes:
                out.append(f"DanglingEdge({edge})")
        if node.affordance in PASSIVE_AFFORDANCES:
            if node.verification is not None:
                out.append(f"UnexpectedVerification({nid})")
            if node.on_false is not None:
                out.append(f"BadRevealEdges({nid})")
        else:
            if node.verification is None:
                out.append(f"MissingVerification({nid})")
            else:
                out.extend(f"{p}:{nid}" for p in node.verification.problems(len(plan.word)))
            if (node.on_true is None) != (node.on_false is None):
                out.append(f"HalfWired({nid})")

    # Acyclicity by Kahn's algorithm; parallel edges count once.
    indegree = {nid: 0 for nid in plan.nodes}
    for node in plan.nodes.values():
        for edge in {node.on_true, node.on_false}:
            if edge in indegree:
                indegree[edge] += 1
    queue = sorted(nid for nid, d in indegree.items() if d == 0)
    seen = 0
    while queue:
        nid = queue.pop(0)
        seen += 1
        node = plan.nodes[nid]
        for edge in sorted({e for e in (node.on_true, node.on_false) if e in indegree}):
            indegree[edge] -= 1
            if indegree[edge] == 0:
                queue.append(edge)
    if seen != len(plan.nodes):
        out.append("CycleDetected")
        return out

    # Reachability from entry.
    reachable = set()
    stack = [plan.entry]
    while stack:
        nid = stack.pop()
        if nid in reachable:
            continue
        reachable.add(nid)
        node = plan.nodes[nid]
        stack.extend(e for e in (node.on_true, node.on_false) if e in plan.nodes)
    for nid in sorted(plan.nodes):
        if nid not in reachable:
            out.append(f"Unreachable({nid})")

    terminals = {nid for nid, n in plan.nodes.items() if n.terminal}
    if not terminals:
        out.append("NoTerminalNode")
        return out

    # Every present edge must still lead to a terminal node.
    leads: dict[str, bool] = {}

    def reaches_terminal(nid: str) -> bool:
        if nid in leads:
            return leads[nid]
        leads[nid] = False  # cycle guard; graph is already acyclic here
        node = plan.nodes[nid]
        if node.terminal:
            leads[nid] = True
        else:
            edges = [e for e in (node.on_true, node.on_false) if e in plan.nodes]
            leads[nid] = bool(edges) and all(reaches_terminal(e) for e in edges)
        return leads[nid]

    for nid in sorted(plan.nodes):
        if not reaches_terminal(nid):
            out.append(f"DeadEnd({nid})")

    # One to three nodes per hypothesis step, judged from the metadata map.
    node_templates = plan.metadata.get("node_templates", {})
    if node_templates:
        counts: dict[str, int] = {}
        for tid in node_templates.values():
            counts[tid] = counts.get(tid, 0) + 1
        for tid, count in sorted(counts.items()):
            if not (1 <= count <= 3):
                out.append(f"StepNodeCount({tid}:{count})")
    return out


def serialize_plan(plan: ExecutionPlan) -> str:
    """Canonical encoding: sorted keys, no insignificant whitespace."""
    return json.dumps(plan.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


_SCHEMA_CACHE: Optional[dict] = None


def _plan_schema() -> dict:
    global _SCHEMA_CACHE
    if _SCHEMA_CACHE is None:
        with open(PLAN_SCHEMA_PATH, encoding="utf-8") as fh:
            _SCHEMA_CACHE = json.load(fh)
    return _SCHEMA_CACHE


def parse_plan(document: str) -> ExecutionPlan:
    """Parse and schema-check a canonical plan document."""
    import jsonschema

    if not document or not document.strip():
        raise ParseError("empty document")
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), location=f"line {exc.lineno}") from exc
    validator = jsonschema.Draft7Validator(_plan_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        location = "/".join(str(p) for p in err.absolute_path)
        raise ParseError(err.message, location=location)
    return ExecutionPlan.from_dict(data)


def _plan_id(attempt: str, target: str, ids: list[str]) -> str:
    digest = hashlib.sha256(f"{attempt}|{target}|{'.'.join(ids)}".encode()).hexdigest()
    return f"plan-{digest[:12]}"


def _family_of(props: WordProperties) -> list[str]:
    return [w for w in props.related_words if any(b and b in canon(w) for b in props.bases)]


def _lookalikes(props: WordProperties) -> list[str]:
    return [w for w in props.related_words if not any(b and b in canon(w) for b in props.bases)]


def _base_span_on_attempt(attempt_props: WordProperties, target_props: WordProperties) -> tuple[int, int, str]:
    base = target_props.bases[0] if target_props.bases else canon(target_props.word)
    idx = target_props.base_morph_index()
    spans = ling.morph_spans(target_props)
    t_span = spans[idx] if idx is not None else (0, len(canon(target_props.word)))
    a_span = ling.map_span_to_target(
        canon(target_props.word), canon(attempt_props.word), t_span
    )
    if a_span == (0, 0):
        a_span = (0, len(canon(attempt_props.word)))
    return a_span[0], a_span[1], base


def _contested_team(
    attempt_props: WordProperties,
    target_props: WordProperties,
    corpus: GraphemePhonemeCorpus,
) -> Optional[tuple[str, str, str]]:
    """(attempt team, target team, phoneme) for the first audible substitution."""
    pairs = ling.align(attempt_props.graphemes, target_props.graphemes).pairs
    t_index = -1
    fallback = None
    for a_g, t_g in pairs:
        if t_g != GAP:
            t_index += 1
        if a_g == GAP or t_g == GAP or a_g == t_g:
            continue
        phoneme = target_props.phonemes[t_index]
        if strip_ipa(phoneme) == GAP:
            fallback = fallback or (a_g, t_g, phoneme)
            continue
        return (a_g, t_g, phoneme)
    return fallback


def _contrast_example(
    team: str, phoneme: str, target_word: str, props: WordProperties, corpus: GraphemePhonemeCorpus
) -> str:
    example = corpus.example(phoneme, team)
    if example and canon(example) != canon(target_word):
        return example
    for w in props.related_words:
        if team in canon(w) and canon(w) != canon(target_word):
            return w
    return props.bases[0] if props.bases else target_word


def _reveal_changes(attempt_props: WordProperties, target_props: WordProperties) -> list[list[str]]:
    edits = ling.align(attempt_props.graphemes, target_props.graphemes).edits()
    return [[op, frm, to] for op, frm, to in edits]


def _reveal_text(attempt: str, target: str, changes: list[list[str]]) -> str:
    parts = []
    for op, frm, to in changes:
        if op == "substitute":
            parts.append(f"⟨{frm}⟩ becomes ⟨{to}⟩")
        elif op == "insert":
            parts.append(f"⟨{to}⟩ appears")
        else:
            parts.append(f"⟨{frm}⟩ drops away")
    detail = "; ".join(parts) if parts else "every letter is already in place"
    return f"Watch {attempt} become {target}: {detail}."


@dataclass
class _StepNodes:
    nodes: list[PlanNode]
    reveals: dict[str, list[list[str]]]


def _build_step(
    step: TraceStep,
    attempt_props: WordProperties,
    target_props: WordProperties,
    diagnosis: ErrorDiagnosis,
    corpus: GraphemePhonemeCorpus,
) -> _StepNodes:
    attempt = attempt_props.word
    target = target_props.word
    tid = step.template_id
    index = int(tid[1:])
    nid = f"h{index}"
    base = target_props.bases[0] if target_props.bases else canon(target)
    family = _family_of(target_props)
    reveals: dict[str, list[list[str]]] = {}

    instruction = ""
    affordance = "free_text"
    verification: Optional[VerificationCondition] = None
    feedback_true = ""
    feedback_false = ""
    extra_reveal = False

    if tid == "H1":
        affordance = "speech_text"
        keywords = _keywords(target_props.context_sentence)
        keywords.extend(k for k in (canon(target), base) if k not in keywords)
        instruction = f"Before we fix anything: use '{target}' in a sentence of your own."
        verification = VerificationCondition(
            "semantic_check", {"keywords": keywords, "min_overlap": 1}, provider_required=True
        )
        feedback_true = f"That sentence shows you know what '{target}' means."
        feedback_false = f"Think about what '{target}' is doing in your writing."
    elif tid in ("H2", "H3"):
        affordance = "highlight_span"
        s, e, base_str = _base_span_on_attempt(attempt_props, target_props)
        instruction = (
            f"Box the base: drag across the part of '{attempt}' that carries the core meaning."
        )
        verification = VerificationCondition(
            "span_overlaps_base", {"base_start": s, "base_end": e, "base": base_str}
        )
        feedback_true = f"You found the base region. The base here is '{base_str}'."
        feedback_false = f"Look for the part that means the most: '{base_str}'."
    elif tid == "H4":
        affordance = "free_text"
        plain = [m.replace("-", "") for m in target_props.morphemes if not ling.is_connector_morph(m)]
        full = [m.replace("-", "") for m in target_props.morphemes]
        allowed = sorted({"+".join(plain), "+".join(full)})
        instruction = f"Build the word sum for '{target}': write its parts joined with +."
        verification = VerificationCondition("set_membership", {"allowed": allowed})
        feedback_true = f"Word sum built: {' + '.join(plain)} makes '{target}'."
        feedback_false = f"Start from the base '{base}' and add the parts one at a time."
    elif tid == "H5":
        affordance = "multiple_choice"
        _, _, rule = formation_of(target_props, default_rules())
        phrase = RULE_PHRASES[rule]
        suffix = target_props.suffixes[0].replace("-", "") if target_props.suffixes else ""
        instruction = f"When '{suffix}' joins '{base}', what happens at the join?"
        verification = VerificationCondition(
            "exact_match", {"expected": [phrase], "options": list(RULE_OPTIONS)}
        )
        feedback_true = f"Yes: {phrase}, so '{base}' + '{suffix}' spells '{target}'."
        feedback_false = f"Try joining '{base}' and '{suffix}' on paper and watch the last letter."
    elif tid == "H6":
        affordance = "drag_sort"
        options = family + _lookalikes(target_props)
        instruction = f"Build the matrix for the base '{base}': drag its true family in."
        verification = VerificationCondition(
            "set_membership", {"allowed": family, "options": options}
        )
        feedback_true = f"That matrix shows how '{base}' holds the family together."
        feedback_false = f"A family member must contain the base '{base}'."
    elif tid == "H7":
        affordance = "free_text"
        instruction = (
            f"Say '{attempt}' slowly. How many words do you hear? Type them with a space."
        )
        verification = VerificationCondition("exact_match", {"expected": [target.lower()]})
        feedback_true = f"Right: it is written as '{target}'."
        feedback_false = f"Listen again: there is a break between the words in '{target}'."
    elif tid in ("H8", "H14"):
        contested = _contested_team(attempt_props, target_props, corpus)
        changes = _reveal_changes(attempt_props, target_props)
        single_team = (
            diagnosis.features.grapheme_mismatch_count == 1 and contested is not None
        )
        if single_team:
            a_g, t_g, phoneme = contested
            affordance = "multiple_choice"
            options = [g for g in corpus.spellings(phoneme) if "-" not in g]
            for team in (a_g, t_g):
                if team not in options:
                    options.append(team)
            example = _contrast_example(t_g, phoneme, target, target_props, corpus)
            a_example = corpus.example(phoneme, a_g)
            if tid == "H8":
                instruction = f"Which letter team spells {phoneme} in '{target}'?"
            else:
                instruction = f"Map the sounds: which letters write {phoneme} in '{target}'?"
            verification = VerificationCondition(
                "exact_match", {"expected": [t_g], "options": options}
            )
            aside = f" ⟨{a_g}⟩ does spell {phoneme} in '{a_example}', just not in this family." if a_example else ""
            feedback_true = f"Yes: ⟨{t_g}⟩ spells {phoneme} here, as in '{example}'.{aside}"
            feedback_false = f"Say '{target}' and listen for {phoneme}; this family writes it ⟨{t_g}⟩."
            extra_reveal = True
        else:
            affordance = "reveal_animation"
            instruction = _reveal_text(attempt, target, changes)
            reveals[nid] = changes
    elif tid == "H9":
        ety = target_props.etymology
        affordance = "multiple_choice"
        root = ety.root if ety else canon(target)
        options = [root, "logos", "scribere"]
        origin = ety.origin_language if ety else "an older language"
        gloss = ety.gloss if ety else ""
        instruction = f"'{target}' keeps its spelling from an old root. Which one?"
        verification = VerificationCondition(
            "exact_match", {"expected": [root], "options": options}
        )
        feedback_true = f"Yes: {origin} '{root}'" + (f" ({gloss})" if gloss else "") + " explains this spelling."
        feedback_false = f"It goes back to {origin} '{root}'."
    elif tid == "H10":
        affordance = "free_text"
        instruction = f"Type words that share the base '{base}' (commas between them)."
        verification = VerificationCondition("set_membership", {"allowed": family})
        feedback_true = f"Those belong to the '{base}' family."
        feedback_false = f"Check each word for the exact base '{base}'."
    elif tid == "H11":
        affordance = "drag_sort"
        plain = [m.replace("-", "") for m in target_props.morphemes if not ling.is_connector_morph(m)]
        options = plain + ["tion", "less"]
        instruction = f"Sort the true parts of '{target}' into the IN bin."
        verification = VerificationCondition(
            "set_membership", {"allowed": plain, "options": options}
        )
        feedback_true = f"Those are the real parts of '{target}'."
        feedback_false = f"'{target}' is built from: {', '.join(plain)}."
    elif tid == "H12":
        ety = target_props.etymology
        affordance = "multiple_choice"
        root = ety.root if ety else base
        instruction = f"Which words are cousins of '{target}' through '{root}'?"
        verification = VerificationCondition(
            "set_membership", {"allowed": family, "options": family + _lookalikes(target_props)}
        )
        feedback_true = f"All of them grew from '{root}'."
        feedback_false = f"A cousin keeps a trace of '{root}' in its spelling."
    elif tid == "H13":
        affordance = "drag_sort"
        options = family + [attempt] + _lookalikes(target_props)
        instruction = f"Which of these truly belong to '{target}'? Drag the look-alikes out."
        verification = VerificationCondition(
            "set_membership", {"allowed": family, "options": options}
        )
        feedback_true = f"Right: looking alike is not the same as sharing the base '{base}'."
        feedback_false = f"A true relative carries the base '{base}'."
    elif tid == "H15":
        silent_idx = next(
            (k for k, p in enumerate(target_props.phonemes) if strip_ipa(p) == GAP), None
        )
        letter = target_props.graphemes[silent_idx] if silent_idx is not None else base
        relative = family[0] if family else base
        affordance = "speech_text"
        instruction = (
            f"Say '{target}' and then '{relative}'. What happens to the ⟨{letter}⟩?"
        )
        verification = VerificationCondition(
            "semantic_check",
            {"keywords": [letter, "silent", "sound", canon(relative)], "min_overlap": 1},
            provider_required=True,
        )
        feedback_true = f"Yes: ⟨{letter}⟩ is quiet in '{target}' but speaks up in '{relative}'. The spelling stays."
        feedback_false = f"Listen to '{relative}': the ⟨{letter}⟩ you cannot hear in '{target}' is there."
    elif tid == "H16":
        affordance = "multiple_choice"
        render = attempt_props.bases[0] if attempt_props.bases else canon(attempt)
        options = [base]
        if render != base:
            options.append(render)
        options.append(base[::-1])
        instruction = f"Look at {', '.join(family)}: what spelling stays the same in all of them?"
        verification = VerificationCondition(
            "exact_match", {"expected": [base], "options": options}
        )
        feedback_true = f"The family holds on to '{base}' even when it sounds different."
        feedback_false = f"Scan the family again for the stable letters '{base}'."
    elif tid == "H17":
        affordance = "multiple_choice"
        options = [target] + [h for h in target_props.homophones]
        sentence = target_props.context_sentence or f"It sounds like '{target}'."
        instruction = f"Which spelling fits this sentence: \"{sentence}\"?"
        verification = VerificationCondition(
            "exact_match", {"expected": [target], "options": options}
        )
        feedback_true = f"Yes: meaning picks the spelling, and this meaning takes '{target}'."
        feedback_false = f"Same sound, different jobs: here the job belongs to '{target}'."
    elif tid == "H18":
        affordance = "multiple_choice"
        instruction = "Look closely: which one is the real word?"
        verification = VerificationCondition(
            "exact_match", {"expected": [target], "options": [attempt, target]}
        )
        feedback_true = f"Sharp eyes: '{target}', not '{attempt}'."
        feedback_false = f"Compare them letter by letter: '{attempt}' and '{target}'."
    else:  # pragma: no cover - ids are validated upstream
        raise ValueError(f"no synthesis recipe for {tid}")

    nodes: list[PlanNode] = []
    if affordance == "reveal_animation":
        nodes.append(
            PlanNode(
                node_id=nid,
                hypothesis=tid,
                instruction_text=instruction,
                affordance="reveal_animation",
                effect_on_true=step.effect,
            )
        )
        return _StepNodes(nodes, reveals)

    prompt = PlanNode(
        node_id=nid,
        hypothesis=tid,
        instruction_text=instruction,
        affordance=affordance,
        verification=verification,
        feedback_true=feedback_true,
        feedback_false=feedback_false,
        effect_on_true=step.effect,
    )
    retry = PlanNode(
        node_id=f"{nid}_retry",
        hypothesis=tid,
        instruction_text=f"One more try. {instruction}",
        affordance=affordance,
        verification=verification,
        feedback_true=feedback_true,
        feedback_false=feedback_false,
        effect_on_true=step.effect,
    )
    nodes.extend([prompt, retry])
    if extra_reveal:
        changes = _reveal_changes(attempt_props, target_props)
        reveal_id = f"{nid}_reveal"
        nodes.append(
            PlanNode(
                node_id=reveal_id,
                hypothesis=tid,
                instruction_text=_reveal_text(attempt, target, changes),
                affordance="reveal_animation",
                effect_on_true=step.effect,
            )
        )
        reveals[reveal_id] = changes
    return _StepNodes(nodes, reveals)


def build_program(
    trace: InquiryTrace,
    props: WordProperties,
    diagnosis: ErrorDiagnosis,
    attempt_props: WordProperties,
    corpus: GraphemePhonemeCorpus,
) -> ExecutionPlan:
    """Deterministic offline synthesis of the branching lesson program."""
    attempt = attempt_props.word
    target = props.word
    all_nodes: dict[str, PlanNode] = {}
    metadata_steps = []
    node_templates: dict[str, str] = {}
    reveals: dict[str, list[list[str]]] = {}

    step_groups = [
        _build_step(step, attempt_props, props, diagnosis, corpus) for step in trace.steps
    ]

    done = PlanNode(
        node_id="done",
        hypothesis=None,
        instruction_text=(
            f"'{attempt}' is now '{target}'. You worked out why it is spelled that way."
        ),
        affordance="none",
    )

    for i, group in enumerate(step_groups):
        next_entry = step_groups[i + 1].nodes[0].node_id if i + 1 < len(step_groups) else "done"
        nodes = group.nodes
        if len(nodes) == 1:  # bare reveal step
            nodes[0].on_true = next_entry
        elif len(nodes) == 2:  # prompt + retry
            prompt, retry = nodes
            prompt.on_true = next_entry
            prompt.on_false = retry.node_id
            retry.on_true = next_entry
            retry.on_false = next_entry
        else:  # prompt + retry + reveal
            prompt, retry, reveal = nodes
            prompt.on_true = reveal.node_id
            prompt.on_false = retry.node_id
            retry.on_true = reveal.node_id
            retry.on_false = reveal.node_id
            reveal.on_true = next_entry
        for node in nodes:
            all_nodes[node.node_id] = node
            node_templates[node.node_id] = trace.steps[i].template_id
        reveals.update(group.reveals)
        metadata_steps.append(
            {
                "template_id": trace.steps[i].template_id,
                "name": trace.steps[i].name,
                "question_type": trace.steps[i].question_type,
                "rationale": trace.steps[i].rationale,
                "confidence": trace.steps[i].confidence,
                "node_ids": [n.node_id for n in nodes],
            }
        )

    all_nodes["done"] = done
    entry = step_groups[0].nodes[0].node_id
    plan = ExecutionPlan(
        plan_id=_plan_id(attempt, target, trace.template_ids()),
        word=attempt,
        target=target,
        nodes=all_nodes,
        entry=entry,
        metadata={
            "rationale": trace.rationale,
            "steps": metadata_steps,
            "node_templates": node_templates,
            "reveals": reveals,
            "achieved_effects": list(trace.achieved_effects),
        },
    )
    return plan


def synthesize_program(
    trace: InquiryTrace,
    props: WordProperties,
    diagnosis: ErrorDiagnosis,
    provider: "ProviderHandle",
    attempt_props: Optional[WordProperties] = None,
) -> ExecutionPlan:
    """One synthesis pass through the provider; must validate or it raises."""
    payload = {
        "trace": trace.to_dict(),
        "props": props.to_dict(),
        "diagnosis": diagnosis.to_dict(),
        "attempt_props": attempt_props.to_dict() if attempt_props else None,
    }
    response = provider.complete(task="program_synthesis", payload=payload)
    plan = ExecutionPlan.from_dict(response)
    violations = validate_program(plan)
    if violations:
        raise SynthesisFailure([violations])
    return plan


def regenerate_on_failure(
    trace: InquiryTrace,
    props: WordProperties,
    diagnosis: ErrorDiagnosis,
    provider: "ProviderHandle",
    max_retries: int = 3,
    attempt_props: Optional[WordProperties] = None,
) -> ExecutionPlan:
    """Retry synthesis until a plan validates; offline succeeds first try."""
    if max_retries < 1:
        raise ValueError("max_retries must be at least 1")
    failures: list[list[str]] = []
    for _ in range(max_retries):
        try:
            return synthesize_program(trace, props, diagnosis, provider, attempt_props)
        except SynthesisFailure as exc:
            failures.extend(exc.attempts)
    raise SynthesisFailure(failures)
