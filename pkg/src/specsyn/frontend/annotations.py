"""ACSL annotation blocks: extraction, stripping, and instrumentation.

An annotation block is a `/*@ ... */` comment. Blocks are located with
a small scanner that respects string and character literals and
ordinary comments, so a "/*@" inside a string literal is never treated
as a block.

Stripping and instrumenting are exact inverses: each extracted block
records the precise text that was removed (the block plus any owned
surrounding whitespace) and the offset in the stripped text where it
came out, so re-insertion reproduces the original input byte for byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from specsyn.errors import AttachmentError


@dataclass(frozen=True)
class AnnotationBlock:
    """One `/*@ ... */` block lifted out of a source text."""

    inner: str          # content between the markers, stripped of padding
    anchor: int         # offset in the stripped text where the block sat
    removed_text: str   # exact text removed, including owned whitespace

    @property
    def is_assert(self) -> bool:
        return bool(re.match(r"\s*assert\b", self.inner))


def _scan_blocks(text: str) -> List[Tuple[int, int]]:
    """Return [start, end) spans of annotation blocks, literal-aware."""
    spans = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in "\"'":
            quote = ch
            i += 1
            while i < n:
                if text[i] == "\\":
                    i += 2
                    continue
                if text[i] == quote:
                    i += 1
                    break
                if text[i] == "\n" and quote == "'":
                    break
                i += 1
            continue
        if text.startswith("//", i):
            nl = text.find("\n", i)
            i = n if nl < 0 else nl + 1
            continue
        if text.startswith("/*@", i):
            close = text.find("*/", i + 3)
            end = n if close < 0 else close + 2
            spans.append((i, end))
            i = end
            continue
        if text.startswith("/*", i):
            close = text.find("*/", i + 2)
            i = n if close < 0 else close + 2
            continue
        i += 1
    return spans


def _line_start(text: str, pos: int) -> int:
    return text.rfind("\n", 0, pos) + 1


def _removal_range(text: str, start: int, end: int) -> Tuple[int, int]:
    """Widen a block span to the exact text the block owns.

    A block alone on its line(s) owns the leading indentation and the
    trailing newline; an inline block owns at most one following space.
    """
    ls = _line_start(text, start)
    nl = text.find("\n", end)
    le = len(text) if nl < 0 else nl
    if text[ls:start].strip() == "" and text[end:le].strip() == "":
        return ls, le + 1 if nl >= 0 else le
    if end < len(text) and text[end] == " ":
        return start, end + 1
    return start, end


def extract_annotations(text: str) -> Tuple[str, List[AnnotationBlock]]:
    """Split source into (annotation-free text, extracted blocks).

    Block anchors index into the returned stripped text; inserting each
    block's removed_text back at its anchor (in order) reproduces the
    input exactly.
    """
    spans = _scan_blocks(text)
    blocks: List[AnnotationBlock] = []
    out = []
    cursor = 0
    removed_so_far = 0
    for start, end in spans:
        rs, re_ = _removal_range(text, start, end)
        if rs < cursor:  # overlapping ownership; keep it simple and exact
            rs = cursor
        out.append(text[cursor:rs])
        inner = text[start + 3:end - 2].strip() if end - start >= 5 else ""
        blocks.append(AnnotationBlock(
            inner=inner,
            anchor=rs - removed_so_far,
            removed_text=text[rs:re_],
        ))
        removed_so_far += re_ - rs
        cursor = re_
    out.append(text[cursor:])
    return "".join(out), blocks


def strip_annotations(text: str) -> str:
    """Remove every annotation block along with the whitespace it owns."""
    return extract_annotations(text)[0]


def reinsert(text: str, blocks: Sequence[AnnotationBlock]) -> str:
    """Inverse of extract_annotations for the given stripped text."""
    pieces = []
    cursor = 0
    for block in sorted(blocks, key=lambda b: b.anchor):
        pieces.append(text[cursor:block.anchor])
        pieces.append(block.removed_text)
        cursor = block.anchor
    pieces.append(text[cursor:])
    return "".join(pieces)


@dataclass
class InstrumentedSource:
    """Segment text with ACSL blocks spliced in, plus the label map."""

    text: str
    clause_labels: Dict[str, str] = field(default_factory=dict)


def _indent_at(text: str, pos: int) -> str:
    ls = _line_start(text, pos)
    head = text[ls:pos]
    return head if head.strip() == "" else None


def _format_block(lines: List[str], indent: str) -> str:
    if len(lines) == 1:
        return f"/*@ {lines[0]} */"
    joined = ("\n" + indent + "  ").join(lines)
    return f"/*@ {joined}\n{indent}*/"


def instrument(segment_text: str, specs, pois, targets: Sequence = ()) -> InstrumentedSource:
    """Splice spec clauses (and optional target asserts) into segment text.

    Function-contract clauses form one block immediately before their
    function, requires lines ahead of ensures lines; loop clauses form
    one block immediately before their loop keyword. Labels follow the
    clause id: clause `c` gets ACSL name `SPSN_<c.id>`.

    `targets` is a sequence of (id, AnnotationBlock) pairs re-inserted
    at their recorded anchors; assert targets are labeled like clauses
    so verifier goals map back to them.
    """
    poi_by_id = {p.id: p for p in pois}
    anchors = {p.id: p.anchor for p in pois}

    # clause id -> label, insertion plan: anchor offset -> list of text pieces
    labels: Dict[str, str] = {}
    by_poi: Dict[str, list] = {}
    for clause in specs:
        poi = poi_by_id.get(clause.poi)
        if poi is None:
            raise AttachmentError(
                f"clause {clause.id!r} attaches to unknown POI {clause.poi!r}")
        by_poi.setdefault(clause.poi, []).append(clause)

    insertions: List[Tuple[int, str]] = []
    kind_order = {"Requires": 0, "Ensures": 1, "LoopInvariant": 2, "LoopAssigns": 3, "Assert": 4}
    for poi_id, clauses in by_poi.items():
        poi = poi_by_id[poi_id]
        pos = anchors[poi_id]
        indent = _indent_at(segment_text, pos)
        clauses = sorted(clauses, key=lambda c: (kind_order.get(c.kind, 9), c.seq))
        lines = []
        for c in clauses:
            label = f"SPSN_{c.id}"
            labels[c.id] = label
            keyword = {
                "Requires": "requires", "Ensures": "ensures",
                "LoopInvariant": "loop invariant", "Assert": "assert",
            }[c.kind]
            lines.append(f"{keyword} {label}: {c.predicate};")
        block = _format_block(lines, indent if indent is not None else "")
        if indent is not None:
            insertions.append((_line_start(segment_text, pos), indent + block + "\n"))
        else:
            insertions.append((pos, block + " "))

    for target_id, block in targets:
        text = block.removed_text
        if block.is_assert:
            label = f"SPSN_{target_id}"
            labels[target_id] = label
            # an existing label (e.g. from earlier instrumentation) is
            # replaced, never stacked
            pred = re.match(r"\s*assert\b(?:\s+\w+\s*:)?(.*?);?\s*$",
                            block.inner, re.S).group(1).strip()
            text = text.replace(block.inner, f"assert {label}: {pred};", 1)
        insertions.append((block.anchor, text))

    insertions.sort(key=lambda item: item[0])
    pieces = []
    cursor = 0
    for pos, text in insertions:
        pieces.append(segment_text[cursor:pos])
        pieces.append(text)
        cursor = pos
    pieces.append(segment_text[cursor:])
    return InstrumentedSource(text="".join(pieces), clause_labels=labels)


def strip_instrumentation(text: str) -> str:
    """Remove every `/*@ ... */` block; inverse of instrument."""
    return strip_annotations(text)
