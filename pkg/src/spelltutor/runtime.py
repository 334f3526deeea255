"""Session runtime: interprets an execution plan against learner responses,
records a transcript, and accumulates achieved learning effects.

Timestamps are a logical event counter, not wall-clock time, so identical
plans and response sequences always produce byte-identical transcripts.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from . import linguistics as ling
from .errors import AffordanceMismatch, InvalidPlan, WrongNode
from .plans import ExecutionPlan, PlanNode, PASSIVE_AFFORDANCES, validate_program

if TYPE_CHECKING:  # pragma: no cover
    from .providers import ProviderHandle

FINISHED = "FINISHED"

_session_counter = itertools.count(1)

_TOKEN_RE = re.compile(r"[A-Za-z][A-Za-z']*")


@dataclass(frozen=True)
class SessionEvent:
    timestamp: int
    node_id: str
    kind: str  # prompted | responded | verified_true | verified_false | revealed | finished
    payload: dict

    def to_dict(self) -> dict:
        return {
            "t": self.timestamp,
            "node": self.node_id,
            "kind": self.kind,
            "payload": self.payload,
        }


@dataclass
class LearnerResponse:
    node_id: str
    text: Optional[str] = None
    span: Optional[tuple[int, int]] = None
    selection: Optional[list[str]] = None

    def payload(self) -> dict:
        if self.text is not None:
            return {"text": self.text}
        if self.span is not None:
            return {"span": list(self.span)}
        return {"selection": list(self.selection or [])}


@dataclass
class Session:
    session_id: str
    plan: ExecutionPlan
    current: str
    transcript: list[SessionEvent] = field(default_factory=list)
    effects: set[str] = field(default_factory=set)
    retry_counts: dict[str, int] = field(default_factory=dict)

    @property
    def finished(self) -> bool:
        return self.current == FINISHED

    def _emit(self, node_id: str, kind: str, payload: dict) -> None:
        self.transcript.append(
            SessionEvent(len(self.transcript), node_id, kind, payload)
        )

    def view(self) -> dict:
        node = None
        if not self.finished:
            node = self.plan.node(self.current).to_dict()
        return {
            "session_id": self.session_id,
            "plan_id": self.plan.plan_id,
            "current": self.current,
            "node": node,
            "effects": sorted(self.effects),
            "transcript": [e.to_dict() for e in self.transcript],
        }


def _norm_text(text: str) -> str:
    return " ".join(text.lower().split())


def _norm_item(text: str) -> str:
    return "".join(text.lower().split())


def _split_items(text: str) -> list[str]:
    if "," in text or ";" in text:
        return [p.strip() for p in re.split(r"[,;]", text) if p.strip()]
    return [p for p in text.split() if p]


def _nearest_member(item: str, allowed: list[str]) -> tuple[str, str]:
    """Closest allowed member and a letter-level explanation of the gap."""
    norm = _norm_item(item)
    best = min(allowed, key=lambda m: (ling.edit_distance(norm, _norm_item(m)), m))
    edits = ling.align(list(norm), list(_norm_item(best))).edits()
    if len(edits) == 1:
        op, frm, to = edits[0]
        if op == "delete":
            return best, f"'{item}' has an extra ⟨{frm}⟩ compared with '{best}'"
        if op == "insert":
            return best, f"'{item}' is missing ⟨{to}⟩ compared with '{best}'"
        return best, f"'{item}' swaps ⟨{frm}⟩ for ⟨{to}⟩ compared with '{best}'"
    return best, f"'{item}' does not match any family member"


def _check_items(
    node: PlanNode, items: list[str]
) -> list[tuple[str, bool, str]]:
    assert node.verification is not None
    allowed = node.verification.expected.get("allowed", [])
    allowed_norm = {_norm_item(a) for a in allowed}
    results = []
    for item in items:
        ok = _norm_item(item) in allowed_norm
        if ok:
            results.append((item, True, node.feedback_true))
        else:
            _, detail = _nearest_member(item, allowed) if allowed else ("", "")
            feedback = detail or node.feedback_false
            results.append((item, False, feedback))
    return results


def _verify(
    node: PlanNode, response: LearnerResponse, provider: "ProviderHandle"
) -> list[tuple[str, bool, str]]:
    """Per-item verification results in submission order."""
    ver = node.verification
    assert ver is not None
    if ver.kind == "exact_match":
        expected = {_norm_text(e) for e in ver.expected["expected"]}
        if response.selection is not None:
            answer = response.selection[0] if response.selection else ""
        else:
            answer = response.text or ""
        ok = _norm_text(answer) in expected
        return [(answer, ok, node.feedback_true if ok else node.feedback_false)]
    if ver.kind == "set_membership":
        if response.selection is not None:
            items = list(response.selection)
        else:
            text = response.text or ""
            allowed_norm = {_norm_item(a) for a in ver.expected["allowed"]}
            if _norm_item(text) in allowed_norm:
                items = [text]
            else:
                items = _split_items(text)
        if not items:
            return [("", False, node.feedback_false)]
        return _check_items(node, items)
    if ver.kind in ("span_equals", "span_overlaps_base"):
        span = response.span or (0, 0)
        if ver.kind == "span_equals":
            ok = span[0] == ver.expected["start"] and span[1] == ver.expected["end"]
        else:
            ok = span[0] < ver.expected["base_end"] and ver.expected["base_start"] < span[1]
        label = f"{span[0]}:{span[1]}"
        return [(label, ok, node.feedback_true if ok else node.feedback_false)]
    # semantic_check
    result = provider.complete(
        task="semantic_check",
        payload={
            "keywords": ver.expected["keywords"],
            "min_overlap": ver.expected.get("min_overlap", 1),
            "response": response.text or "",
        },
    )
    ok = bool(result["verdict"])
    detail = result.get("detail", "")
    feedback = node.feedback_true if ok else (detail or node.feedback_false)
    return [(response.text or "", ok, feedback)]


def _payload_matches(node: PlanNode, response: LearnerResponse) -> bool:
    if node.affordance in ("speech_text", "free_text"):
        return response.text is not None
    if node.affordance == "highlight_span":
        return response.span is not None
    if node.affordance in ("drag_sort", "multiple_choice"):
        return response.selection is not None
    return False


def _advance(session: Session, node_id: Optional[str]) -> None:
    """Walk passive nodes (reveals, closers) until a prompt or the end."""
    plan = session.plan
    while True:
        if node_id is None:
            session.current = FINISHED
            return
        node = plan.node(node_id)
        if node.affordance == "reveal_animation":
            session._emit(
                node_id,
                "revealed",
                {
                    "text": node.instruction_text,
                    "changes": plan.metadata.get("reveals", {}).get(node_id, []),
                },
            )
            if node.effect_on_true:
                session.effects.add(node.effect_on_true)
            if node.terminal:
                session._emit(node_id, "finished", {})
                session.current = FINISHED
                return
            node_id = node.on_true
            continue
        if node.affordance == "none":
            session._emit(
                node_id,
                "prompted",
                {"instruction": node.instruction_text, "affordance": node.affordance},
            )
            if node.terminal:
                session._emit(node_id, "finished", {})
                session.current = FINISHED
                return
            node_id = node.on_true
            continue
        session._emit(
            node_id,
            "prompted",
            {"instruction": node.instruction_text, "affordance": node.affordance},
        )
        session.current = node_id
        return


def start_session(plan: ExecutionPlan) -> Session:
    """New session at the plan's entry; raises on an invalid plan."""
    violations = validate_program(plan)
    if violations:
        raise InvalidPlan(violations)
    session = Session(
        session_id=f"{plan.plan_id}-s{next(_session_counter)}",
        plan=plan,
        current=plan.entry,
    )
    _advance(session, plan.entry)
    return session


def step(session: Session, response: LearnerResponse, provider: "ProviderHandle") -> Session:
    """Apply one learner response: verify, branch, record, advance."""
    if session.finished:
        raise WrongNode("session already finished")
    if response.node_id != session.current:
        raise WrongNode(f"response for {response.node_id}, current is {session.current}")
    node = session.plan.node(session.current)
    if node.affordance in PASSIVE_AFFORDANCES:  # pragma: no cover - unreachable in valid plans
        raise WrongNode(f"{node.node_id} takes no learner response")
    if not _payload_matches(node, response):
        raise AffordanceMismatch(
            f"{node.affordance} node {node.node_id} got {sorted(response.payload())}"
        )

    session._emit(node.node_id, "responded", response.payload())
    results = _verify(node, response, provider)
    overall = any(ok for _, ok, _ in results)
    for item, ok, feedback in results:
        session._emit(
            node.node_id,
            "verified_true" if ok else "verified_false",
            {"item": item, "feedback": feedback},
        )
    if overall:
        if node.effect_on_true:
            session.effects.add(node.effect_on_true)
        next_id = node.on_true
    else:
        session.retry_counts[node.node_id] = session.retry_counts.get(node.node_id, 0) + 1
        next_id = node.on_false
        if next_id == node.node_id and session.retry_counts[node.node_id] > 1:
            next_id = node.on_true
    _advance(session, next_id)
    return session


class Transcript:
    """Headless run record: one metadata line plus one line per event."""

    def __init__(self, meta: dict, events: list[SessionEvent]):
        self.meta = meta
        self.events = events

    def interventions(self) -> list[dict]:
        return self.meta.get("interventions", [])

    def to_jsonl(self) -> str:
        meta_row = dict(self.meta)
        meta_row["kind"] = "meta"
        lines = [json.dumps(meta_row, sort_keys=True, ensure_ascii=False)]
        lines.extend(
            json.dumps(e.to_dict(), sort_keys=True, ensure_ascii=False)
            for e in self.events
        )
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "Transcript":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        meta = {}
        events = []
        for row in rows:
            if row.get("kind") == "meta":
                meta = {k: v for k, v in row.items() if k != "kind"}
            else:
                events.append(SessionEvent(row["t"], row["node"], row["kind"], row["payload"]))
        return Transcript(meta, events)


class Policy:
    """Simulated learner: maps a prompt node to a response payload."""

    name = "policy"

    def respond(self, node: PlanNode, plan: ExecutionPlan) -> LearnerResponse:
        raise NotImplementedError


class AlwaysCorrectPolicy(Policy):
    name = "always-correct"

    def respond(self, node: PlanNode, plan: ExecutionPlan) -> LearnerResponse:
        ver = node.verification
        nid = node.node_id
        assert ver is not None
        if ver.kind == "exact_match":
            answer = ver.expected["expected"][0]
            if node.affordance in ("drag_sort", "multiple_choice"):
                return LearnerResponse(nid, selection=[answer])
            return LearnerResponse(nid, text=answer)
        if ver.kind == "set_membership":
            allowed = ver.expected["allowed"]
            if node.affordance in ("drag_sort", "multiple_choice"):
                return LearnerResponse(nid, selection=list(allowed))
            return LearnerResponse(nid, text=", ".join(allowed[:2]))
        if ver.kind == "span_equals":
            return LearnerResponse(nid, span=(ver.expected["start"], ver.expected["end"]))
        if ver.kind == "span_overlaps_base":
            return LearnerResponse(nid, span=(ver.expected["base_start"], ver.expected["base_end"]))
        return LearnerResponse(nid, text=" ".join(ver.expected["keywords"][:4]))


class AlwaysWrongPolicy(Policy):
    name = "always-wrong"

    def respond(self, node: PlanNode, plan: ExecutionPlan) -> LearnerResponse:
        ver = node.verification
        nid = node.node_id
        assert ver is not None
        if ver.kind in ("exact_match", "set_membership"):
            wrong = "zyxxyz"
            options = ver.expected.get("options", [])
            good = {
                _norm_text(e)
                for e in ver.expected.get("expected", []) + ver.expected.get("allowed", [])
            }
            for option in options:
                if _norm_text(option) not in good:
                    wrong = option
                    break
            if node.affordance in ("drag_sort", "multiple_choice"):
                return LearnerResponse(nid, selection=[wrong])
            return LearnerResponse(nid, text=wrong)
        if ver.kind in ("span_equals", "span_overlaps_base"):
            start = ver.expected.get("start", ver.expected.get("base_start", 0))
            span = (0, 1) if start > 0 else (len(plan.word) - 1, len(plan.word))
            return LearnerResponse(nid, span=span)
        return LearnerResponse(nid, text="zyxxyz blurg")


class EmptyResponsePolicy(Policy):
    """Sends empty text everywhere, provoking affordance mismatches."""

    name = "empty-response"

    def respond(self, node: PlanNode, plan: ExecutionPlan) -> LearnerResponse:
        return LearnerResponse(node.node_id, text="")


class ScriptedPolicy(Policy):
    """Plays back a fixed list of responses, one per prompt."""

    name = "scripted"

    def __init__(self, responses: list):
        self.responses = list(responses)
        self._index = 0

    def respond(self, node: PlanNode, plan: ExecutionPlan) -> LearnerResponse:
        if self._index >= len(self.responses):
            raise IndexError(f"script exhausted at node {node.node_id}")
        raw = self.responses[self._index]
        self._index += 1
        nid = node.node_id
        if isinstance(raw, str):
            if node.affordance in ("drag_sort", "multiple_choice"):
                return LearnerResponse(nid, selection=[raw])
            return LearnerResponse(nid, text=raw)
        if isinstance(raw, (list, tuple)) and len(raw) == 2 and all(
            isinstance(x, int) for x in raw
        ):
            return LearnerResponse(nid, span=(raw[0], raw[1]))
        items = [str(x) for x in raw]
        if node.affordance in ("speech_text", "free_text"):
            return LearnerResponse(nid, text=", ".join(items))
        return LearnerResponse(nid, selection=items)


def _coerce_empty(node: PlanNode) -> LearnerResponse:
    nid = node.node_id
    if node.affordance in ("speech_text", "free_text"):
        return LearnerResponse(nid, text="")
    if node.affordance == "highlight_span":
        return LearnerResponse(nid, span=(0, 0))
    return LearnerResponse(nid, selection=[])


def run_headless(
    plan: ExecutionPlan, policy: Policy, provider: "ProviderHandle"
) -> Transcript:
    """Drive a plan with a simulated learner until the session finishes."""
    session = start_session(plan)
    mismatches = 0
    while not session.finished:
        node = plan.node(session.current)
        response = policy.respond(node, plan)
        try:
            step(session, response, provider)
        except AffordanceMismatch:
            mismatches += 1
            step(session, _coerce_empty(node), provider)
    steps_meta = plan.metadata.get("steps", [])
    meta = {
        "plan_id": plan.plan_id,
        "attempt": plan.word,
        "target": plan.target,
        "policy": policy.name,
        "rationale": plan.metadata.get("rationale", ""),
        "interventions": [
            {
                "template_id": s["template_id"],
                "hypothesis": s["name"],
                "question_type": s["question_type"],
                "rationale": s["rationale"],
            }
            for s in steps_meta
        ],
        "intervention_count": len(steps_meta),
        "affordance_mismatches": mismatches,
        "effects": sorted(session.effects),
    }
    return Transcript(meta, session.transcript)
