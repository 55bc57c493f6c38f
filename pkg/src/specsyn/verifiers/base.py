"""Shared verifier vocabulary: verdicts, refutation, unit assembly."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Protocol, Sequence

VERDICT_STATUSES = ("Proved", "Unproved", "Timeout", "Invalid")

# Any non-Proved status counts as a refutation for the repair loop.
REFUTED_STATUSES = frozenset({"Unproved", "Timeout", "Invalid"})

DEPS_BEGIN_MARKER = "// SPSN_DEPS_BEGIN"
DEPS_END_MARKER = "// SPSN_DEPS_END"


@dataclass
class VerifierVerdict:
    """Outcome of checking one labeled clause."""

    clause_id: str
    status: str
    diagnostic: str = ""
    goal_name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.status not in VERDICT_STATUSES:
            raise ValueError(f"unknown verdict status {self.status!r}")

    @property
    def refuted(self) -> bool:
        return self.status in REFUTED_STATUSES


class Verifier(Protocol):
    """Anything that can judge labeled clauses against a program text."""

    def verify(self, program_text: str, clauses: Sequence[object],
               clause_labels: Optional[dict] = None) -> List[VerifierVerdict]:
        ...


def refuted_ids(verdicts: Iterable[VerifierVerdict]) -> List[str]:
    """Clause ids whose status falls in the refuted set, in verdict order."""
    return [v.clause_id for v in verdicts if v.refuted]


def partition_verdicts(verdicts: Iterable[VerifierVerdict]):
    """Split verdicts into (proved, refuted) preserving order."""
    proved = []
    refuted = []
    for v in verdicts:
        (refuted if v.refuted else proved).append(v)
    return proved, refuted


def assemble_verification_unit(dep_texts: Sequence[str], segment_text: str) -> str:
    """Join instrumented dependency code with the segment under check.

    Functions between the markers are treated modularly by the bounded
    checker: calls into them use their annotated contracts and never
    execute their bodies, which mirrors how a deductive backend consumes
    callee contracts.
    """
    deps = [t.strip("\n") for t in dep_texts if t.strip()]
    if not deps:
        return segment_text
    joined = "\n\n".join(deps)
    return (f"{DEPS_BEGIN_MARKER}\n{joined}\n{DEPS_END_MARKER}\n\n"
            f"{segment_text}")
