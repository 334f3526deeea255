"""Exception types shared across the package."""

from __future__ import annotations


class SpellTutorError(Exception):
    """Base class for all package errors."""


class UnknownWord(SpellTutorError):
    """The offline lexicon has no entry for the requested word."""

    def __init__(self, word: str):
        super().__init__(f"no lexicon entry for {word!r}")
        self.word = word


class InvariantViolation(SpellTutorError):
    """A structured record failed its own consistency checks."""

    def __init__(self, word: str, problems: list[str]):
        super().__init__(f"{word!r}: " + "; ".join(problems))
        self.word = word
        self.problems = problems


class ProviderFailure(SpellTutorError):
    """A generative-backend call failed after exhausting its retry budget."""


class SchemaViolation(SpellTutorError):
    """A provider response did not match the schema for its task."""


class SchemaError(SpellTutorError):
    """A data file does not conform to its published schema."""


class DuplicateId(SchemaError):
    """A template file defines an id twice, or misses one of H1..H18."""


class NoLegalTrace(SpellTutorError):
    """The filtered hypothesis set cannot form a closing sequence."""


class SynthesisFailure(SpellTutorError):
    """Program synthesis kept producing invalid plans until the retry budget ran out."""

    def __init__(self, attempts: list[list[str]]):
        super().__init__(
            f"no valid plan after {len(attempts)} attempt(s); "
            f"last violations: {attempts[-1] if attempts else []}"
        )
        self.attempts = attempts


class ParseError(SpellTutorError):
    """A plan document failed to parse; ``location`` points at the offender."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{message} (at {location or 'document root'})")
        self.location = location


class InvalidPlan(SpellTutorError):
    """A session was started from a plan that fails validation."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class WrongNode(SpellTutorError):
    """A learner response targeted a node that is not the session's current node."""


class AffordanceMismatch(SpellTutorError):
    """A learner response payload does not fit the current node's input affordance."""


class CassetteMiss(SpellTutorError):
    """Replay mode saw a request that was never recorded."""
