"""Precision, recall, and target metrics for synthesized clause sets.

Precision is the proved share of generated clauses.  Recall measures how
much of a hand-written reference set the generated clauses cover, either
by verifier entailment (the reference clause must prove with only the
generated contracts standing in for the code) or by exact text match.
Both are exact rationals; reports carry the float and the num/den pair.
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from specsyn import acsl
from specsyn.errors import SpecsynError, UnresolvablePOI
from specsyn.frontend import load_unit, parse_unit
from specsyn.frontend import csyntax as cs
from specsyn.frontend.annotations import AnnotationBlock
from specsyn.poi import extract_points_of_interest
from specsyn.segmentation import Segment, dependency_closure, segment_unit
from specsyn.synthesis import (
    SpecClause,
    SpecSet,
    _dep_unit_texts,
    instrument_segment,
    parse_targets,
)
from specsyn.verifiers import assemble_verification_unit

logger = logging.getLogger(__name__)

COVERAGE_MODES = ("entailment", "textual")

# Clause kinds an annotation block may attach to, keyed by clause kind.
_ACCEPTING_POI = {"Requires": "FunctionContract",
                  "Ensures": "FunctionContract",
                  "LoopInvariant": "LoopHead"}

_HARNESS_NAME = "SPSN_probe"
_HARNESS_RESULT = "SPSN_r"


@dataclass
class GroundTruth:
    """Reference clauses and target assertions lifted from an annotated file."""

    clauses: SpecSet
    targets: List[SpecClause]
    segments: List[Segment] = field(default_factory=list)
    target_pairs: Dict[str, List[Tuple[str, AnnotationBlock]]] = field(
        default_factory=dict)


@dataclass
class MetricsReport:
    """One evaluation summary over a subject and its reference set."""

    generated_total: int
    verified_total: int
    precision: Fraction
    gt_total: int
    gt_covered: int
    recall: Fraction
    targets_total: int
    targets_proved: int
    coverage_mode: str = "entailment"
    no_generated: bool = False

    def __post_init__(self) -> None:
        if self.coverage_mode not in COVERAGE_MODES:
            raise ValueError(f"unknown coverage mode: {self.coverage_mode!r}")
        for name in ("precision", "recall"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} out of range: {value}")

    def to_dict(self) -> dict:
        return {
            "generated_total": self.generated_total,
            "verified_total": self.verified_total,
            "precision": float(self.precision),
            "precision_exact": [self.precision.numerator,
                                self.precision.denominator],
            "gt_total": self.gt_total,
            "gt_covered": self.gt_covered,
            "recall": float(self.recall),
            "recall_exact": [self.recall.numerator, self.recall.denominator],
            "targets_total": self.targets_total,
            "targets_proved": self.targets_proved,
            "coverage_mode": self.coverage_mode,
            "no_generated": self.no_generated,
        }


def load_ground_truth(source: str) -> GroundTruth:
    """Parse an annotated C file into reference clauses plus targets.

    Non-assert annotation clauses attach to the nearest accepting point
    of interest at or after the block's anchor; assert blocks become
    target obligations.  An unattachable clause raises UnresolvablePOI.
    """
    _, segments = segment_unit(parse_unit(load_unit(source)))
    clauses = SpecSet()
    targets: List[SpecClause] = []
    target_pairs: Dict[str, List[Tuple[str, AnnotationBlock]]] = {}
    for seg in segments:
        pois = extract_points_of_interest(seg)
        k = 0
        for block in seg.annotations:
            if block.is_assert:
                continue
            for parsed in acsl.parse_clause_sequence(block.inner):
                accepting = _ACCEPTING_POI.get(parsed.kind)
                spot = min((p for p in pois
                            if p.kind == accepting and p.anchor >= block.anchor),
                           key=lambda p: p.anchor, default=None)
                if spot is None:
                    raise UnresolvablePOI(
                        f"reference clause {parsed.predicate!r} in segment "
                        f"{seg.id} has no attachment point")
                clauses.add(SpecClause(
                    id=f"{seg.id}_gt{k}", kind=parsed.kind,
                    predicate=parsed.predicate, poi=spot.id,
                    segment_id=seg.id, seq=k))
                k += 1
        tclauses, tpairs = parse_targets(seg)
        targets.extend(tclauses)
        if tpairs:
            target_pairs[seg.id] = tpairs
    return GroundTruth(clauses=clauses, targets=targets,
                       segments=list(segments), target_pairs=target_pairs)


def _status(verdict) -> str:
    return verdict if isinstance(verdict, str) else verdict.status


def precision(generated: SpecSet, verdicts: Mapping[str, object]) -> Fraction:
    """Proved share of the generated (non-target) clauses.

    `verdicts` maps clause id to a VerifierVerdict or a bare status
    string and must cover every generated clause.  An empty set yields
    0; the caller flags that case in its report.
    """
    gen = [c for c in generated if c.origin != "Target"]
    if not gen:
        return Fraction(0)
    proved = sum(1 for c in gen if _status(verdicts[c.id]) == "Proved")
    return Fraction(proved, len(gen))


def _function_node(seg: Segment, name: str) -> cs.FunctionDef:
    for decl in parse_unit(load_unit(seg.code)):
        node = decl.node
        if (decl.name == name and isinstance(node, cs.FunctionDef)
                and node.body is not None):
            return node
    raise UnresolvablePOI(f"no function body named {name!r} in segment {seg.id}")


def _entailment_unit(seg: Segment, gt_clause: SpecClause,
                     installed: Sequence[SpecClause]) -> Tuple[str, str]:
    """Build (unit_text, label) asking whether `installed` entails `gt_clause`.

    The subject segment goes behind the dependency markers carrying only
    the installed ensures clauses, so the checker constrains the call
    result by those contracts alone; a probe function calls the owner
    and asserts the reference predicate over the returned value.
    """
    owner = next((p.owner for p in extract_points_of_interest(seg)
                  if p.id == gt_clause.poi), None)
    if owner is None:
        raise UnresolvablePOI(
            f"reference clause poi {gt_clause.poi!r} not found in {seg.id}")
    node = _function_node(seg, owner)
    header = seg.code[node.start:node.body.start].strip()
    header = re.sub(rf"\b{re.escape(owner)}\b", _HARNESS_NAME, header, count=1)
    args = ", ".join(p.name for p in node.params)
    pred = re.sub(r"\\result\b", _HARNESS_RESULT, gt_clause.predicate)
    label = f"SPSN_{gt_clause.id}"
    probe = (f"{header} {{\n"
             f"    int {_HARNESS_RESULT} = {owner}({args});\n"
             f"    /*@ assert {label}: {pred}; */\n"
             f"    return {_HARNESS_RESULT};\n"
             f"}}")
    dep_text = instrument_segment(seg, list(installed)).text
    return assemble_verification_unit([dep_text], probe), label


def _entailed(gt_clause: SpecClause, seg: Segment,
              installed: Sequence[SpecClause], verifier) -> bool:
    unit, label = _entailment_unit(seg, gt_clause, installed)
    try:
        verdicts = verifier.verify(unit, [gt_clause.id],
                                   {gt_clause.id: label})
    except SpecsynError as exc:
        logger.debug("entailment check for %s failed: %s", gt_clause.id, exc)
        return False
    return any(v.clause_id == gt_clause.id and v.status == "Proved"
               for v in verdicts)


def _assumable(clause: SpecClause,
               verdicts: Optional[Mapping[str, object]]) -> bool:
    if verdicts is not None and clause.id in verdicts:
        return _status(verdicts[clause.id]) == "Proved"
    return clause.status == "Verified"


def recall(generated: SpecSet, gt: GroundTruth, verifier,
           *, mode: str = "entailment",
           verdicts: Optional[Mapping[str, object]] = None) -> Fraction:
    """Covered share of the reference clauses.

    In entailment mode an ensures reference clause counts as covered
    when it proves against the generated contracts alone; requires and
    loop-invariant clauses fall back to exact normalized-text matching
    (assumption injection has no modular reading for them).  Textual
    mode matches every clause by normalized text.  Only clauses that
    verified (per `verdicts` when given, else their own status) are
    installed as contracts: an unsatisfiable ensures would empty the
    call-result set and cover every reference clause vacuously.
    """
    if mode not in COVERAGE_MODES:
        raise ValueError(f"unknown coverage mode: {mode!r}")
    gt_clauses = list(gt.clauses)
    if not gt_clauses:
        return Fraction(0)
    gen_keys = {c.dedup_key for c in generated if c.origin != "Target"}
    by_segment = {seg.id: seg for seg in gt.segments}
    covered = 0
    for g in gt_clauses:
        if mode == "entailment" and g.kind == "Ensures":
            seg = by_segment.get(g.segment_id)
            if seg is None:
                raise UnresolvablePOI(
                    f"reference clause {g.id} names unknown segment "
                    f"{g.segment_id!r}")
            installed = [c for c in generated
                         if c.origin != "Target" and c.kind == "Ensures"
                         and c.segment_id == g.segment_id
                         and _assumable(c, verdicts)]
            if _entailed(g, seg, installed, verifier):
                covered += 1
        elif g.dedup_key in gen_keys:
            covered += 1
    return Fraction(covered, len(gt_clauses))


def _clauses_by_segment(generated: SpecSet) -> Dict[str, List[SpecClause]]:
    grouped: Dict[str, List[SpecClause]] = {}
    for c in generated:
        if c.origin != "Target":
            grouped.setdefault(c.segment_id, []).append(c)
    return grouped


def final_verdicts(segments: Sequence[Segment], generated: SpecSet,
                   verifier, target_pairs: Optional[Mapping] = None) -> Dict[str, object]:
    """Re-verify every generated clause and target over the full unit.

    Each segment is instrumented with its own clauses and its
    dependencies' contracts; targets are re-derived from the segment
    annotations unless `target_pairs` supplies them.
    """
    ordered = sorted(segments, key=lambda s: s.topo_rank)
    grouped = _clauses_by_segment(generated)
    out: Dict[str, object] = {}
    for seg in ordered:
        own = grouped.get(seg.id, [])
        if target_pairs is None:
            _, tpairs = parse_targets(seg)
        else:
            tpairs = list(target_pairs.get(seg.id, ()))
        ids = [c.id for c in own] + [tid for tid, _ in tpairs]
        if not ids:
            continue
        deps = dependency_closure(seg, ordered)
        inst = instrument_segment(seg, own, targets=tpairs)
        unit = assemble_verification_unit(
            _dep_unit_texts(deps, grouped), inst.text)
        for verdict in verifier.verify(unit, ids, inst.clause_labels):
            out[verdict.clause_id] = verdict
    return out


def count_proved_targets(segments: Sequence[Segment], generated: SpecSet,
                         verifier,
                         target_pairs: Optional[Mapping] = None) -> Tuple[int, int]:
    """(proved, total) over the unit's target assertions.

    Targets are checked in a final-pass setting: each segment carries
    its generated clauses and sees its dependencies through their
    contracts, so a target proves only when those contracts suffice.
    """
    ordered = sorted(segments, key=lambda s: s.topo_rank)
    tids: List[str] = []
    for seg in ordered:
        if target_pairs is None:
            _, tpairs = parse_targets(seg)
        else:
            tpairs = list(target_pairs.get(seg.id, ()))
        tids.extend(tid for tid, _ in tpairs)
    if not tids:
        return (0, 0)
    verdicts = final_verdicts(segments, generated, verifier,
                              target_pairs=target_pairs)
    proved = sum(1 for tid in tids
                 if tid in verdicts and _status(verdicts[tid]) == "Proved")
    return (proved, len(tids))


def evaluate(segments: Sequence[Segment], generated: SpecSet,
             gt: GroundTruth, verifier, *,
             verdicts: Optional[Mapping[str, object]] = None,
             coverage_mode: str = "entailment") -> MetricsReport:
    """Assemble the full metrics report for one subject.

    `verdicts` may carry an earlier run's final statuses keyed by clause
    id; anything missing (including targets) is re-verified here.
    """
    gen = [c for c in generated if c.origin != "Target"]
    tids = [t.id for seg in segments for t in parse_targets(seg)[0]]
    needed = [c.id for c in gen] + tids
    if verdicts is None or any(cid not in verdicts for cid in needed):
        computed = final_verdicts(segments, generated, verifier)
        merged: Dict[str, object] = dict(computed)
        if verdicts:
            merged.update(verdicts)
        verdicts = merged
    p = precision(generated, verdicts)
    r = recall(generated, gt, verifier, mode=coverage_mode, verdicts=verdicts)
    proved_targets = sum(1 for tid in tids
                         if tid in verdicts and _status(verdicts[tid]) == "Proved")
    return MetricsReport(
        generated_total=len(gen),
        verified_total=sum(1 for c in gen
                           if _status(verdicts[c.id]) == "Proved"),
        precision=p,
        gt_total=len(list(gt.clauses)),
        gt_covered=int(r * len(list(gt.clauses))) if gt.clauses else 0,
        recall=r,
        targets_total=len(tids),
        targets_proved=proved_targets,
        coverage_mode=coverage_mode,
        no_generated=not gen,
    )
