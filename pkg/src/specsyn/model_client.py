"""Language-model backends for sketching and clause synthesis.

Two interchangeable backends sit behind one `complete` call: a live
OpenAI-compatible HTTP client, and a replay client that answers from a
recorded transcript so test runs are deterministic and offline.  Both
run the same clause extraction over the raw completion text.
"""

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Protocol, Sequence, Tuple

import requests

from specsyn import acsl
from specsyn.errors import (
    BackendUnavailable,
    ExtractionEmpty,
    MalformedOutput,
    ReplayMiss,
    TransportError,
)

PURPOSES = ("Sketch", "Generate", "Repair", "Refine")

TRANSCRIPT_FORMAT = "specsyn-transcript"
TRANSCRIPT_VERSION = 1

DEFAULT_ROLE_HEADER = (
    "You are an assistant that writes ACSL specification clauses for C "
    "functions. Answer with clauses inside triple-backtick fences."
)


@dataclass(frozen=True)
class Prompt:
    """One request to the model; `purpose` names the template that built it."""

    role_header: str
    body: str
    purpose: str

    def __post_init__(self):
        if not self.body:
            raise ValueError("prompt body must be non-empty")
        if self.purpose not in PURPOSES:
            raise ValueError(f"unknown prompt purpose: {self.purpose!r}")


@dataclass
class ModelResponse:
    """Raw completion text plus the clause texts extracted from it.

    `extracted_clauses` is always empty for Sketch prompts; sketches are
    consumed as free text.
    """

    text: str
    extracted_clauses: List[str] = field(default_factory=list)


@dataclass
class ModelSettings:
    """Connection and decoding settings for the live backend."""

    endpoint: str = ""
    model: str = ""
    api_key: str = ""
    temperature: float = 0.0
    timeout: float = 60.0
    retries: int = 2


def prompt_digest(body: str) -> str:
    """Stable lookup key for a prompt body: hex sha256 of its UTF-8 bytes."""
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


# --- clause extraction --------------------------------------------------------

# A language tag only counts when its line ends there; otherwise the
# first word of a one-line fence would be mistaken for a tag.
_FENCE_RE = re.compile(r"```(?:[A-Za-z0-9_+-]*[ \t]*\n)?(.*?)```", re.DOTALL)
_ANNOT_RE = re.compile(r"/\*@(.*?)\*/", re.DOTALL)


def _clause_chunks(text: str) -> List[str]:
    """Candidate clause-bearing chunks, in order of appearance.

    Fenced blocks and bare annotation blocks both count; annotation
    markers inside a fence are stripped so the payload parses either way.
    """
    chunks: List[str] = []

    def scan_bare(region: str) -> None:
        for m in _ANNOT_RE.finditer(region):
            chunks.append(m.group(1))

    last = 0
    for m in _FENCE_RE.finditer(text):
        scan_bare(text[last:m.start()])
        content = m.group(1)
        inner = _ANNOT_RE.findall(content)
        chunks.extend(inner if inner else [content])
        last = m.end()
    scan_bare(text[last:])
    return chunks


def _strip_at_margins(chunk: str) -> str:
    # Multi-line ACSL blocks conventionally prefix lines with '@'.
    lines = []
    for line in chunk.splitlines():
        stripped = line.lstrip()
        if stripped.startswith("@"):
            line = stripped[1:]
        lines.append(line)
    return "\n".join(lines)


def _render(clause: acsl.Clause) -> str:
    return f"{clause.keyword} {clause.predicate};"


def extract_clause_texts(text: str) -> List[str]:
    """Clause texts found in a completion, canonically rendered, in order.

    Chunks that fail to parse as a clause sequence fall back to a
    line-by-line scan, so one junk line does not discard a good clause.
    Anything unparseable is ignored.
    """
    out: List[str] = []
    for chunk in _clause_chunks(text):
        chunk = _strip_at_margins(chunk)
        try:
            clauses = acsl.parse_clause_sequence(chunk)
        except Exception:
            clauses = []
            for line in chunk.splitlines():
                parsed = acsl.try_parse_clause(line)
                if parsed is not None:
                    clauses.append(parsed)
        out.extend(_render(c) for c in clauses)
    return out


def _finish(prompt: Prompt, text: str) -> ModelResponse:
    if prompt.purpose == "Sketch":
        return ModelResponse(text=text, extracted_clauses=[])
    extracted = extract_clause_texts(text)
    if not extracted:
        raise ExtractionEmpty(
            f"{prompt.purpose} response contains no parseable clause")
    return ModelResponse(text=text, extracted_clauses=extracted)


# --- backends -----------------------------------------------------------------


class ModelBackend(Protocol):
    def complete(self, prompt: Prompt) -> ModelResponse: ...


class LiveBackend:
    """OpenAI-compatible chat-completions client.

    `settings.endpoint` is the full completions URL.  The API key is
    taken from the settings or from SPECSYN_API_KEY.  Transport and
    response-shape failures are retried `settings.retries` times before
    TransportError is raised.
    """

    def __init__(self, settings: ModelSettings):
        if not settings.endpoint:
            raise BackendUnavailable("live model backend needs an endpoint URL")
        self.settings = settings
        self.api_key = settings.api_key or os.environ.get("SPECSYN_API_KEY", "")

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def complete(self, prompt: Prompt) -> ModelResponse:
        payload = {
            "model": self.settings.model,
            "messages": [
                {"role": "system", "content": prompt.role_header},
                {"role": "user", "content": prompt.body},
            ],
            "temperature": self.settings.temperature,
        }
        last_error: Optional[Exception] = None
        for _ in range(self.settings.retries + 1):
            try:
                resp = requests.post(self.settings.endpoint, json=payload,
                                     headers=self._headers(),
                                     timeout=self.settings.timeout)
                resp.raise_for_status()
                text = resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError,
                    TypeError, ValueError) as exc:
                last_error = exc
                continue
            return _finish(prompt, text)
        raise TransportError(f"model call failed after "
                             f"{self.settings.retries + 1} attempts: {last_error}")


class ReplayBackend:
    """Answers from a recorded transcript, keyed by prompt-body digest."""

    def __init__(self, path):
        self.path = Path(path)
        self.responses = {}
        for lineno, line in enumerate(self.path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedOutput(f"{self.path}:{lineno}: not JSON: {exc}")
            if not isinstance(record, dict):
                raise MalformedOutput(f"{self.path}:{lineno}: record is not an object")
            if "digest" not in record:
                if lineno == 1 and record.get("transcript") == TRANSCRIPT_FORMAT:
                    continue
                raise MalformedOutput(f"{self.path}:{lineno}: record has no digest")
            if "response" not in record:
                raise MalformedOutput(f"{self.path}:{lineno}: record has no response")
            self.responses[record["digest"]] = record["response"]

    def complete(self, prompt: Prompt) -> ModelResponse:
        digest = prompt_digest(prompt.body)
        if digest not in self.responses:
            raise ReplayMiss(
                f"transcript {self.path} has no entry for {prompt.purpose} "
                f"prompt {digest[:12]}")
        return _finish(prompt, self.responses[digest])


class RecordingBackend:
    """Wraps another backend and keeps the exchanges for record_transcript."""

    def __init__(self, inner: ModelBackend):
        self.inner = inner
        self.exchanges: List[Tuple[Prompt, str]] = []

    def complete(self, prompt: Prompt) -> ModelResponse:
        response = self.inner.complete(prompt)
        self.exchanges.append((prompt, response.text))
        return response


def record_transcript(session: Sequence[Tuple[Prompt, str]], path) -> None:
    """Write exchanges as a replayable JSON Lines transcript."""
    lines = [json.dumps({"transcript": TRANSCRIPT_FORMAT,
                         "version": TRANSCRIPT_VERSION})]
    for prompt, response_text in session:
        lines.append(json.dumps({
            "digest": prompt_digest(prompt.body),
            "purpose": prompt.purpose,
            "response": response_text,
        }))
    Path(path).write_text("\n".join(lines) + "\n")
