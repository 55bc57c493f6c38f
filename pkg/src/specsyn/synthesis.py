"""Bottom-up specification synthesis: sketch, generate, verify, repair.

Segments are visited in dependency order.  For each segment a sketch is
drafted once, then every point of interest runs a bounded
generate/verify/repair loop whose surviving clauses feed the next
segment's context as instrumented dependency code.  A final pass
re-checks the merged set together with any input target assertions.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from specsyn import acsl
from specsyn.errors import (
    AttachmentError,
    BackendUnavailable,
    ExtractionEmpty,
    MalformedOutput,
    ReplayMiss,
    SpecsynError,
    TransportError,
)
from specsyn.frontend import instrument
from specsyn.frontend.annotations import AnnotationBlock
from specsyn.model_client import DEFAULT_ROLE_HEADER, Prompt
from specsyn.poi import PointOfInterest, extract_points_of_interest
from specsyn.segmentation import Segment, dependency_closure
from specsyn.verifiers import assemble_verification_unit

logger = logging.getLogger(__name__)

STATUSES = ("Candidate", "Verified", "Refuted")
ORIGINS = ("Generated", "Repaired", "Refined", "Target")

INFILL_MARKER = "/* >>>INFILL<<< */"

_ORIGIN_BY_PURPOSE = {"Generate": "Generated", "Repair": "Repaired",
                      "Refine": "Refined"}

# Clause kinds that make sense at each point-of-interest kind; candidates
# outside this set cannot be attached and are dropped before verification.
_KINDS_AT_POI = {"FunctionContract": ("Requires", "Ensures"),
                 "LoopHead": ("LoopInvariant",)}


@dataclass
class SpecClause:
    """One specification clause attached to a point of interest."""

    id: str
    kind: str
    predicate: str
    poi: str
    status: str = "Candidate"
    origin: str = "Generated"
    round: int = 0
    segment_id: str = ""
    seq: int = 0

    def __post_init__(self):
        if self.kind not in acsl.CLAUSE_KINDS:
            raise ValueError(f"unknown clause kind: {self.kind!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown clause status: {self.status!r}")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown clause origin: {self.origin!r}")
        acsl.parse_predicate(self.predicate)

    @property
    def keyword(self) -> str:
        return {"Requires": "requires", "Ensures": "ensures",
                "LoopInvariant": "loop invariant", "Assert": "assert"}[self.kind]

    @property
    def text(self) -> str:
        return f"{self.keyword} {self.predicate};"

    @property
    def dedup_key(self) -> Tuple[str, str]:
        normalized = acsl.normalize_clause_text(f"{self.keyword} {self.predicate}")
        return (self.segment_id, normalized)

    def resolve(self, status: str) -> None:
        """Move a Candidate to Verified or Refuted; other moves are illegal."""
        if status not in ("Verified", "Refuted"):
            raise ValueError(f"cannot resolve to {status!r}")
        if self.status != "Candidate" and self.status != status:
            raise ValueError(f"illegal status transition {self.status} -> {status}")
        self.status = status

    def record(self) -> Dict[str, object]:
        return {"id": self.id, "kind": self.kind, "predicate": self.predicate,
                "poi": self.poi, "status": self.status, "origin": self.origin,
                "round": self.round, "segment": self.segment_id}


@dataclass
class SpecSet:
    """Ordered clause collection with lexical duplicate suppression.

    The dedup key pairs the normalized clause text with the owning
    segment tag, so a merged multi-segment set never conflates equal
    texts attached to different functions.
    """

    clauses: List[SpecClause] = field(default_factory=list)
    dedup_keys: Set[Tuple[str, str]] = field(default_factory=set)

    def add(self, clause: SpecClause, force: bool = False) -> bool:
        key = clause.dedup_key
        if key in self.dedup_keys and not force:
            return False
        self.dedup_keys.add(key)
        self.clauses.append(clause)
        return True

    def verified(self) -> List[SpecClause]:
        return [c for c in self.clauses if c.status == "Verified"]

    def __len__(self) -> int:
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)


@dataclass(frozen=True)
class RunConfig:
    """Loop bounds and threshold for one synthesis run."""

    n_refine: int = 5
    n_repair: int = 5
    t: float = 0.75
    mutation_budget: int = 24
    seed: int = 0
    skip_if_strong: bool = False
    model_settings: Optional[Mapping] = None
    verifier_settings: Optional[Mapping] = None
    domain: Optional[Mapping] = None
    toolchain: Optional[str] = None

    def __post_init__(self):
        if self.n_refine < 1:
            raise ValueError("n_refine must be at least 1")
        if self.n_repair < 1:
            raise ValueError("n_repair must be at least 1")
        if not 0 < self.t <= 1:
            raise ValueError("t must lie in (0, 1]")
        if self.mutation_budget < 1:
            raise ValueError("mutation_budget must be at least 1")


@dataclass
class Sketch:
    """Free-text plan for a segment plus per-POI hint lines."""

    segment_id: str
    text: str = ""
    per_poi_hints: Dict[str, List[str]] = field(default_factory=dict)


def instrument_segment(seg: Segment, clauses: Sequence[SpecClause],
                       targets: Sequence[Tuple[str, AnnotationBlock]] = ()):
    """Splice the clauses (and labeled targets) into the segment text."""
    pois = extract_points_of_interest(seg)
    return instrument(seg.code, list(clauses), pois, targets=targets)


def _dep_unit_texts(deps: Sequence[Segment],
                    dep_specs: Optional[Mapping[str, Sequence[SpecClause]]]) -> List[str]:
    specs = dep_specs or {}
    return [instrument_segment(d, list(specs.get(d.id, ()))).text for d in deps]


def generate_sketch(seg: Segment, deps: Sequence[Segment], model) -> Sketch:
    """Ask the model for a plain-language plan covering every POI.

    Model failures degrade to an empty sketch with a logged warning;
    the pipeline never stops here.  A replay miss still propagates
    because it means the transcript itself is wrong.
    """
    pois = extract_points_of_interest(seg)
    hints: Dict[str, List[str]] = {p.id: [] for p in pois}
    lines = [f"- {p.id}: {p.kind} for {p.owner}" for p in pois]
    parts = [
        "Identify all points of interest in the segment below and describe, "
        "in plain language, the specification clauses each one will need. "
        "Refer to each point by its id.",
        "Points of interest:\n" + ("\n".join(lines) if lines else "(none)"),
        "Segment:\n" + seg.code,
    ]
    if deps:
        parts.append("Dependencies:\n" + "\n\n".join(d.code for d in deps))
    prompt = Prompt(DEFAULT_ROLE_HEADER, "\n\n".join(parts), "Sketch")
    try:
        response = model.complete(prompt)
    except ReplayMiss:
        raise
    except SpecsynError as exc:
        logger.warning("sketch for %s failed (%s); continuing without one",
                       seg.id, exc)
        return Sketch(seg.id, "", hints)
    text = response.text or ""
    if not text.strip():
        logger.warning("model returned an empty sketch for %s", seg.id)
        return Sketch(seg.id, "", hints)
    for line in text.splitlines():
        stripped = line.strip()
        for match in re.finditer(r"\b(p\d+)\b", stripped):
            pid = match.group(1)
            if pid in hints and stripped not in hints[pid]:
                hints[pid].append(stripped)
    return Sketch(seg.id, text, hints)


def _poi_instructions(poi: PointOfInterest, sketch: Optional[Sketch]) -> str:
    if poi.kind == "LoopHead":
        ask = "Propose ACSL `loop invariant` clauses for the loop at the marker."
    else:
        ask = ("Propose ACSL `requires` and `ensures` clauses for the function "
               "contract at the marker.")
    text = (ask + " Write each clause inside /*@ ... */ on its own line and "
            "use only variables in scope at that point.")
    if sketch is not None:
        notes = sketch.per_poi_hints.get(poi.id) or []
        if notes:
            text += "\n\nPlan notes for this point:\n" + "\n".join(notes)
    return text


def assemble_generation_context(seg: Segment, poi: PointOfInterest,
                                sketch: Optional[Sketch],
                                deps: Sequence[Segment], *,
                                dep_specs: Optional[Mapping[str, Sequence[SpecClause]]] = None) -> Prompt:
    """Build the generation prompt: sketch, marked code, task, dep code."""
    pois = extract_points_of_interest(seg)
    if poi not in pois:
        raise AttachmentError(
            f"POI {poi.id!r} does not belong to segment {seg.id!r}")
    marked = seg.code[:poi.anchor] + INFILL_MARKER + "\n" + seg.code[poi.anchor:]
    parts = []
    if sketch is not None and sketch.text.strip():
        parts.append("Plan:\n" + sketch.text)
    parts.append("Segment:\n" + marked)
    parts.append("Task:\n" + _poi_instructions(poi, sketch))
    if deps:
        dep_texts = _dep_unit_texts(deps, dep_specs)
        parts.append("Dependencies (verified contracts included):\n"
                     + "\n\n".join(dep_texts))
    return Prompt(DEFAULT_ROLE_HEADER, "\n\n".join(parts), "Generate")


def _repair_prompt(ctx: Prompt, notes: Sequence[str]) -> Prompt:
    section = ("The following candidate clauses were refuted by the verifier. "
               "Analyze each diagnostic and propose corrected clauses.\n"
               + "\n".join(notes))
    return Prompt(ctx.role_header, ctx.body + "\n\n" + section, "Repair")


def repair_round(ctx: Prompt, seg: Segment, poi: PointOfInterest, model,
                 verifier, accumulated: SpecSet, *,
                 deps: Sequence[Segment] = (),
                 dep_specs: Optional[Mapping[str, Sequence[SpecClause]]] = None,
                 targets: Sequence[Tuple[str, AnnotationBlock]] = (),
                 id_prefix: str = "", round_index: int = 1):
    """One model call followed by verification of the fresh candidates.

    Returns (accumulated, refuted, next_ctx).  Verified candidates are
    merged into `accumulated` after lexical dedup; refuted ones are
    embedded, with verifier diagnostics, in the repair context for the
    next round.  Model and backend errors propagate to the caller.
    """
    response = model.complete(ctx)
    origin = _ORIGIN_BY_PURPOSE.get(ctx.purpose, "Generated")
    allowed = _KINDS_AT_POI.get(poi.kind, ())
    candidates: List[SpecClause] = []
    for k, text in enumerate(response.extracted_clauses):
        clause = acsl.try_parse_clause(text)
        if clause is None:
            continue
        if clause.kind not in allowed:
            logger.debug("dropping %s clause at %s POI %s", clause.kind,
                         poi.kind, poi.id)
            continue
        candidates.append(SpecClause(
            id=f"{id_prefix}g{round_index}c{k}", kind=clause.kind,
            predicate=clause.predicate, poi=poi.id, status="Candidate",
            origin=origin, round=round_index, segment_id=seg.id, seq=k))

    seen = set(accumulated.dedup_keys)
    fresh: List[SpecClause] = []
    for cand in candidates:
        key = cand.dedup_key
        if key in seen:
            continue
        seen.add(key)
        fresh.append(cand)
    if not fresh:
        return accumulated, [], ctx

    inst = instrument_segment(seg, accumulated.verified() + fresh,
                              targets=targets)
    unit = assemble_verification_unit(_dep_unit_texts(deps, dep_specs),
                                      inst.text)
    verdicts = verifier.verify(unit, [c.id for c in fresh],
                               inst.clause_labels)
    by_id = {v.clause_id: v for v in verdicts}
    refuted: List[SpecClause] = []
    notes: List[str] = []
    for cand in fresh:
        verdict = by_id.get(cand.id)
        if verdict is not None and verdict.status == "Proved":
            cand.resolve("Verified")
            accumulated.add(cand)
        else:
            cand.resolve("Refuted")
            refuted.append(cand)
            diagnostic = verdict.diagnostic if verdict is not None else "no verdict returned"
            notes.append(f"{cand.text}  /* {diagnostic} */")
    next_ctx = _repair_prompt(ctx, notes) if refuted else ctx
    return accumulated, refuted, next_ctx


_ROUND_FAILURES = (TransportError, ExtractionEmpty, MalformedOutput,
                   BackendUnavailable)


def run_repair_loop(ctx: Prompt, seg: Segment, poi: PointOfInterest, model,
                    verifier, cfg: RunConfig, accumulated: SpecSet, *,
                    deps: Sequence[Segment] = (),
                    dep_specs: Optional[Mapping[str, Sequence[SpecClause]]] = None,
                    targets: Sequence[Tuple[str, AnnotationBlock]] = (),
                    id_prefix: str = "") -> SpecSet:
    """Run repair rounds until nothing is refuted or the budget is spent.

    A round that fails with a transport or extraction error is counted
    against the budget and retried with the same context.  A replay
    miss aborts the run: the transcript does not match the prompts.
    """
    for rnd in range(1, cfg.n_repair + 1):
        try:
            accumulated, refuted, next_ctx = repair_round(
                ctx, seg, poi, model, verifier, accumulated,
                deps=deps, dep_specs=dep_specs, targets=targets,
                id_prefix=id_prefix, round_index=rnd)
        except ReplayMiss:
            raise
        except _ROUND_FAILURES as exc:
            logger.warning("round %d failed for %s/%s: %s", rnd, seg.id,
                           poi.id, exc)
            continue
        if not refuted:
            break
        ctx = next_ctx
    return accumulated


def generate_poi_specs(seg: Segment, poi: PointOfInterest,
                       sketch: Optional[Sketch], deps: Sequence[Segment],
                       model, verifier, cfg: RunConfig, *,
                       dep_specs: Optional[Mapping[str, Sequence[SpecClause]]] = None,
                       targets: Sequence[Tuple[str, AnnotationBlock]] = ()) -> SpecSet:
    """Generate and repair clauses for one POI; only Verified ones return."""
    ctx = assemble_generation_context(seg, poi, sketch, deps,
                                      dep_specs=dep_specs)
    accumulated = SpecSet()
    return run_repair_loop(ctx, seg, poi, model, verifier, cfg, accumulated,
                           deps=deps, dep_specs=dep_specs, targets=targets,
                           id_prefix=f"{seg.id}_{poi.id}_")


def parse_targets(seg: Segment):
    """Lift the segment's assert annotations into Target clauses.

    Returns (clauses, pairs) where pairs are (clause_id, block) ready
    for instrument().  Unparsable assertions are skipped with a
    warning; they stay in the code as plain comments.
    """
    pois = extract_points_of_interest(seg)
    contract_poi = next((p.id for p in pois if p.kind == "FunctionContract"), "")
    clauses: List[SpecClause] = []
    pairs: List[Tuple[str, AnnotationBlock]] = []
    for block in seg.annotations:
        if not block.is_assert:
            continue
        parsed = acsl.try_parse_clause(block.inner)
        if parsed is None or parsed.kind != "Assert":
            logger.warning("unparsable target assertion in %s: %r",
                           seg.id, block.inner)
            continue
        tid = f"{seg.id}_t{len(pairs)}"
        clauses.append(SpecClause(
            id=tid, kind="Assert", predicate=parsed.predicate,
            poi=contract_poi, status="Candidate", origin="Target",
            round=0, segment_id=seg.id, seq=len(pairs)))
        pairs.append((tid, block))
    return clauses, pairs


def synthesize_program(segments: Sequence[Segment], model, verifier,
                       mutator=None, cfg: Optional[RunConfig] = None,
                       report: Optional[dict] = None) -> SpecSet:
    """Synthesize specifications for a whole unit, bottom up.

    Per segment: one sketch, then per-POI generation/repair followed by
    variant-driven refinement, merging everything into one set.  A
    final pass re-verifies each segment with its dependencies'
    surviving contracts; non-target clauses that fail it are dropped,
    target assertions keep their honest verdict.  When `report` is a
    dict it receives per-clause records, per-segment VDR history, and
    the final-pass verdicts.
    """
    from specsyn import refinement

    cfg = cfg or RunConfig()
    ordered = sorted(segments, key=lambda s: s.topo_rank)
    merged = SpecSet()
    seg_specs: Dict[str, List[SpecClause]] = {}
    target_info: Dict[str, tuple] = {}
    histories: Dict[str, list] = {}
    failures: Dict[str, str] = {}

    for seg in ordered:
        deps = dependency_closure(seg, ordered)
        tclauses, tpairs = parse_targets(seg)
        target_info[seg.id] = (tclauses, tpairs)
        histories[seg.id] = []
        seg_set = SpecSet()
        for t in tclauses:
            seg_set.add(t, force=True)
        try:
            pois = extract_points_of_interest(seg)
            sketch = generate_sketch(seg, deps, model) if pois else Sketch(seg.id)
            for poi in pois:
                poi_set = generate_poi_specs(
                    seg, poi, sketch, deps, model, verifier, cfg,
                    dep_specs=seg_specs, targets=tpairs)
                base = SpecSet()
                for c in seg_set.verified():
                    if c.origin != "Target":
                        base.add(c)
                for c in poi_set:
                    base.add(c)
                refined, history = refinement.refine_poi_specs(
                    seg, poi, base, deps, model, verifier, mutator, cfg,
                    dep_specs=seg_specs, targets=tpairs, sketch=sketch)
                histories[seg.id].extend(history)
                for c in refined:
                    seg_set.add(c)
        except ReplayMiss:
            raise
        except SpecsynError as exc:
            logger.warning("segment %s failed: %s", seg.id, exc)
            failures[seg.id] = str(exc)
        seg_specs[seg.id] = [c for c in seg_set.verified()
                             if c.origin != "Target"]
        for c in seg_set:
            merged.add(c, force=(c.origin == "Target"))

    final_verdicts = {}
    for seg in ordered:
        tclauses, tpairs = target_info[seg.id]
        own = seg_specs.get(seg.id, [])
        ids = [c.id for c in own] + [c.id for c in tclauses]
        if not ids:
            continue
        deps = dependency_closure(seg, ordered)
        inst = instrument_segment(seg, own, targets=tpairs)
        unit = assemble_verification_unit(
            _dep_unit_texts(deps, seg_specs), inst.text)
        for verdict in verifier.verify(unit, ids, inst.clause_labels):
            final_verdicts[verdict.clause_id] = verdict

    dropped: Set[str] = set()
    for clause in merged:
        verdict = final_verdicts.get(clause.id)
        if clause.origin == "Target":
            if verdict is not None:
                clause.resolve("Verified" if verdict.status == "Proved"
                               else "Refuted")
            continue
        if verdict is not None and verdict.status != "Proved":
            dropped.add(clause.id)
    if dropped:
        logger.warning("final pass dropped %d clause(s): %s", len(dropped),
                       ", ".join(sorted(dropped)))
        kept = SpecSet()
        for clause in merged:
            if clause.id not in dropped:
                kept.add(clause, force=True)
        merged = kept

    if report is not None:
        report["clauses"] = [c.record() for c in merged]
        report["vdr_history"] = {sid: [r.to_dict() for r in hist]
                                 for sid, hist in histories.items() if hist}
        report["final"] = {cid: {"status": v.status, "diagnostic": v.diagnostic}
                           for cid, v in final_verdicts.items()}
        report["failures"] = failures
    return merged
