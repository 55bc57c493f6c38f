"""Scripted model backends and small helpers shared by pipeline tests."""

from typing import Dict, List, Sequence, Tuple

from specsyn import model_client as mc
from specsyn.frontend import load_unit, parse_unit
from specsyn.segmentation import segment_unit
from specsyn.verifiers import MockVerifier


class ScriptedModel:
    """Plays canned answers keyed by prompt purpose.

    Each purpose maps to a queue of response texts consumed in order;
    the last entry repeats once the queue runs dry. A queue entry that
    is an exception instance is raised instead of answered. Calling a
    purpose with no script entry fails the test immediately.
    """

    def __init__(self, script: Dict[str, object]):
        self.script = {k: list(v) if isinstance(v, list) else [v]
                       for k, v in script.items()}
        self.calls: List[Tuple[str, str]] = []

    @property
    def purposes(self) -> List[str]:
        return [p for p, _ in self.calls]

    def complete(self, prompt: mc.Prompt) -> mc.ModelResponse:
        self.calls.append((prompt.purpose, prompt.body))
        queue = self.script.get(prompt.purpose)
        if not queue:
            raise AssertionError(f"no scripted answer for {prompt.purpose!r}")
        entry = queue.pop(0) if len(queue) > 1 else queue[0]
        if isinstance(entry, Exception):
            raise entry
        return mc._finish(prompt, entry)


class ContentModel:
    """Answers by the first (substring, text) rule matching the body."""

    def __init__(self, rules: Sequence[Tuple[str, str]], default: str):
        self.rules = list(rules)
        self.default = default
        self.calls: List[Tuple[str, str]] = []

    def complete(self, prompt: mc.Prompt) -> mc.ModelResponse:
        self.calls.append((prompt.purpose, prompt.body))
        for needle, text in self.rules:
            if needle in prompt.body:
                return mc._finish(prompt, text)
        return mc._finish(prompt, self.default)


class CountingVerifier:
    """MockVerifier that counts how many times verify() runs."""

    def __init__(self, domain=None):
        self.inner = MockVerifier(domain)
        self.calls = 0

    def verify(self, program_text, clauses, clause_labels=None):
        self.calls += 1
        return self.inner.verify(program_text, clauses, clause_labels)


def segments_of(source: str):
    """Parse and segment a source string."""
    _, segments = segment_unit(parse_unit(load_unit(source)))
    return segments


def no_variants(seg, budget, seed):
    """Mutator stub that disables refinement."""
    return []
