"""Adapter that shells out to a deductive verifier such as Frama-C/WP.

The adapter writes the instrumented program to a temporary .c file,
runs a configurable command, and maps per-goal result lines back to
clause labels. Output that cannot be interpreted raises MalformedOutput
rather than ever counting a clause as proved by default.
"""

from __future__ import annotations

import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from specsyn.errors import BackendUnavailable, MalformedOutput
from specsyn.verifiers.base import VerifierVerdict

DEFAULT_COMMAND = "frama-c -wp -wp-timeout {timeout} {file}"

# One goal-result line: a status word and a goal token carrying a label.
_GOAL_RE = re.compile(r"\b(Valid|Proved|Unsuccess|Unknown|Failed|Unproved|"
                      r"Timeout|Stepout)\b")
_LABEL_RE = re.compile(r"\w*(SPSN_\w+)")
_SUMMARY_RE = re.compile(r"Proved goals:\s*(\d+)\s*/\s*(\d+)")

_STATUS_MAP = {
    "Valid": "Proved", "Proved": "Proved",
    "Unsuccess": "Unproved", "Unknown": "Unproved",
    "Failed": "Unproved", "Unproved": "Unproved",
    "Timeout": "Timeout", "Stepout": "Timeout",
}

# Worst-first ordering when a label owns several goals (e.g. invariant
# establishment and preservation).
_SEVERITY = {"Unproved": 0, "Timeout": 1, "Proved": 2}


def _clause_id(clause) -> str:
    if isinstance(clause, str):
        return clause
    return clause.id


def _clause_kind(clause) -> Optional[str]:
    return getattr(clause, "kind", None)


@dataclass
class _GoalLine:
    status: str
    goal_name: str
    line: str


@dataclass
class ExternalVerifier:
    """Runs `command_template` on a temp file and parses goal verdicts.

    The template receives `{file}` and `{timeout}`. Per-goal lines must
    contain a status word and a goal token embedding the clause label;
    a `Proved goals: X / Y` summary line alone is accepted only as a
    consistency check, never as a substitute for per-goal results.
    """

    command_template: str = DEFAULT_COMMAND
    timeout: int = 10
    wall_timeout: Optional[float] = None

    def verify(self, program_text, clauses: Sequence,
               clause_labels: Optional[Dict[str, str]] = None) -> List[VerifierVerdict]:
        text = getattr(program_text, "text", program_text)
        if clause_labels is None:
            clause_labels = getattr(program_text, "clause_labels", None) or {}
        ids = [_clause_id(c) for c in clauses]
        kinds = {_clause_id(c): _clause_kind(c) for c in clauses}
        label_of = {cid: clause_labels.get(cid, f"SPSN_{cid}") for cid in ids}

        output, timed_out = self._run_tool(text)
        if timed_out:
            return [VerifierVerdict(clause_id=cid, status="Timeout",
                                    diagnostic="verifier wall-clock timeout",
                                    goal_name=label_of[cid])
                    for cid in ids]

        goals = self._parse_goals(output)
        summary = _SUMMARY_RE.search(output)
        if not goals and summary is None:
            raise MalformedOutput(
                "verifier output has no recognizable goal lines or summary; "
                f"first lines: {output.strip().splitlines()[:3]!r}")

        verdicts = []
        for cid in ids:
            label = label_of[cid]
            # Goal tokens may extend the label with sub-goal suffixes,
            # e.g. SPSN_x_init / SPSN_x_preserved for an invariant.
            matched = [g for g in goals
                       if g.goal_name == label
                       or g.goal_name.startswith(label + "_")]
            if matched:
                worst = min(matched, key=lambda g: _SEVERITY[g.status])
                diag = "" if worst.status == "Proved" else worst.line.strip()
                verdicts.append(VerifierVerdict(
                    clause_id=cid, status=worst.status, diagnostic=diag,
                    goal_name=worst.goal_name))
            elif kinds.get(cid) == "Requires":
                # Preconditions generate goals only at call sites; with no
                # goal emitted there is nothing left to discharge.
                verdicts.append(VerifierVerdict(
                    clause_id=cid, status="Proved",
                    diagnostic="no call-site obligations reported",
                    goal_name=label))
            else:
                verdicts.append(VerifierVerdict(
                    clause_id=cid, status="Unproved",
                    diagnostic="no goal reported for this clause",
                    goal_name=label))
        return verdicts

    def _run_tool(self, text: str):
        with tempfile.TemporaryDirectory(prefix="specsyn-verify-") as tmp:
            path = Path(tmp) / "unit.c"
            path.write_text(text)
            command = self.command_template.format(
                timeout=self.timeout, file=shlex.quote(str(path)))
            argv = shlex.split(command)
            wall = self.wall_timeout if self.wall_timeout is not None \
                else self.timeout * 6 + 30
            try:
                proc = subprocess.run(argv, capture_output=True, text=True,
                                      timeout=wall)
            except FileNotFoundError as exc:
                raise BackendUnavailable(
                    f"verifier binary {argv[0]!r} is not available: {exc}")
            except subprocess.TimeoutExpired:
                return "", True
        output = proc.stdout + "\n" + proc.stderr
        if proc.returncode != 0 and not (_GOAL_RE.search(output)
                                         or _SUMMARY_RE.search(output)):
            raise MalformedOutput(
                f"verifier exited with status {proc.returncode} and no "
                f"parseable output: {output.strip()[:400]!r}")
        return output, False

    def _parse_goals(self, output: str) -> List[_GoalLine]:
        goals: List[_GoalLine] = []
        for line in output.splitlines():
            label_m = _LABEL_RE.search(line)
            if not label_m:
                continue
            status_m = _GOAL_RE.search(line)
            if not status_m:
                continue
            status = _STATUS_MAP[status_m.group(1)]
            goals.append(_GoalLine(status=status, goal_name=label_m.group(1),
                                   line=line))
        return goals
