"""Variant-guided strengthening of verified specification sets.

The discriminative rate of a spec set is the fraction of non-equivalent
program variants it refutes.  Each refinement round samples fresh
variants, measures the rate, and, while it stays under the threshold,
shows an undistinguished variant to the model and folds the verified
additions back in.
"""

import difflib
import logging
import random
import re
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from specsyn import synthesis
from specsyn.errors import EmptyVariantSet, NoApplicableSites, SpecsynError
from specsyn.frontend import instrument
from specsyn.model_client import Prompt
from specsyn.mutation import Variant, filter_non_equivalent, generate_variants
from specsyn.poi import extract_points_of_interest
from specsyn.segmentation import Segment
from specsyn.verifiers import assemble_verification_unit

logger = logging.getLogger(__name__)

# Distinct rounds draw distinct variant samples; the salt spreads the
# seeds apart without depending on budget or segment contents.
ROUND_SALT = 7919

# At most this many undistinguished variants appear as diff context in
# one refine prompt.
MAX_DIFF_VARIANTS = 3


@dataclass
class VdrReport:
    """Outcome of measuring one spec set against one variant sample."""

    total: int
    refuted: int
    rate: float
    undistinguished: List[str]
    round: int

    def __post_init__(self):
        if self.total < 0 or not 0 <= self.refuted <= self.total:
            raise ValueError("refuted count out of range")
        if not 0 <= self.rate <= 1:
            raise ValueError("rate out of range")
        if self.refuted + len(self.undistinguished) != self.total:
            raise ValueError("undistinguished list does not account for total")

    def to_dict(self) -> Dict[str, object]:
        return {"total": self.total, "refuted": self.refuted,
                "rate": self.rate, "round": self.round,
                "undistinguished": list(self.undistinguished)}


def vdr_objective(report: VdrReport) -> int:
    """Number of variants the set fails to distinguish; 0 is optimal."""
    return report.total - report.refuted


def _natural_key(vid: str):
    return [int(tok) if tok.isdigit() else tok
            for tok in re.split(r"(\d+)", vid)]


class _VariantShim:
    """Just enough of a segment for POI extraction over variant code."""

    def __init__(self, variant: Variant):
        self.id = variant.id
        self.code = variant.code


def _map_clauses_to_variant(clauses, seg: Segment, variant: Variant):
    """Re-attach clauses to the structurally matching variant POIs.

    POIs are matched by (owner, kind) group and position within the
    group; clauses whose POI has no counterpart in the variant are
    skipped, since there is nowhere sound to attach them.
    """
    original = extract_points_of_interest(seg)
    mutated = extract_points_of_interest(_VariantShim(variant))
    groups: Dict[Tuple[str, str], List[str]] = {}
    for p in mutated:
        groups.setdefault((p.owner, p.kind), []).append(p.id)
    taken: Dict[Tuple[str, str], int] = {}
    mapping: Dict[str, str] = {}
    for p in original:
        key = (p.owner, p.kind)
        index = taken.get(key, 0)
        candidates = groups.get(key, [])
        if index < len(candidates):
            mapping[p.id] = candidates[index]
            taken[key] = index + 1
    mapped = []
    for clause in clauses:
        target = mapping.get(clause.poi)
        if target is None:
            continue
        mapped.append(replace(clause, poi=target))
    return mapped, mutated


def compute_vdr(specs, variants: Sequence[Variant], verifier, *,
                segment: Optional[Segment] = None,
                dep_texts: Sequence[str] = (),
                round_index: int = 1) -> VdrReport:
    """Verify the set against every variant and count the refuted ones.

    A variant counts as refuted when any clause fails on it.  With an
    empty spec set nothing can be refuted and no verifier call is made.
    Variants already classified as other than NonEquivalent are ignored
    defensively.  Raises EmptyVariantSet when nothing is measurable.
    """
    usable = [v for v in variants
              if v.equivalence in (None, "NonEquivalent")]
    if not usable:
        raise EmptyVariantSet("no non-equivalent variants to measure")
    usable.sort(key=lambda v: _natural_key(v.id))

    clauses = [c for c in getattr(specs, "clauses", specs)
               if c.status == "Verified" and c.origin != "Target"]
    if not clauses:
        return VdrReport(total=len(usable), refuted=0, rate=0.0,
                         undistinguished=[v.id for v in usable],
                         round=round_index)

    refuted = 0
    undistinguished: List[str] = []
    for variant in usable:
        try:
            if segment is not None:
                mapped, pois = _map_clauses_to_variant(clauses, segment, variant)
            else:
                pois = extract_points_of_interest(_VariantShim(variant))
                mapped = [c for c in clauses if any(p.id == c.poi for p in pois)]
            if not mapped:
                undistinguished.append(variant.id)
                continue
            inst = instrument(variant.code, mapped, pois)
            unit = assemble_verification_unit(dep_texts, inst.text)
            verdicts = verifier.verify(unit, [c.id for c in mapped],
                                       inst.clause_labels)
        except SpecsynError as exc:
            logger.debug("variant %s not measurable: %s", variant.id, exc)
            undistinguished.append(variant.id)
            continue
        if any(v.refuted for v in verdicts):
            refuted += 1
        else:
            undistinguished.append(variant.id)
    return VdrReport(total=len(usable), refuted=refuted,
                     rate=refuted / len(usable),
                     undistinguished=undistinguished, round=round_index)


def _diff(original: Segment, variant: Variant) -> str:
    lines = difflib.unified_diff(
        original.code.splitlines(), variant.code.splitlines(),
        fromfile="original", tofile=variant.id, lineterm="")
    return "\n".join(lines)


def assemble_refine_context(ctx: Prompt, undistinguished: Sequence[Variant],
                            original: Segment, seed: int) -> Prompt:
    """Extend the context with undistinguished variants and ask for
    clauses that tell them apart from the original.

    One variant, picked by seeded RNG, is shown in full; up to two more
    appear as diffs only.
    """
    if not undistinguished:
        raise ValueError("undistinguished variant list is empty")
    pool = sorted(undistinguished, key=lambda v: _natural_key(v.id))
    rng = random.Random(seed)
    picks = rng.sample(pool, min(MAX_DIFF_VARIANTS, len(pool)))
    sections = [
        "The clauses verified so far fail to distinguish the original "
        "program from the variant(s) below. Analyze the syntactic and "
        "semantic differences and propose additional ACSL clauses that "
        "explicitly capture these differences."]
    primary = picks[0]
    sections.append(f"Variant {primary.id} (full text):\n{primary.code}")
    sections.append(f"Diff against the original:\n{_diff(original, primary)}")
    for extra in picks[1:]:
        sections.append(f"Variant {extra.id} diff:\n{_diff(original, extra)}")
    body = ctx.body + "\n\n" + "\n\n".join(sections)
    return Prompt(ctx.role_header, body, "Refine")


def default_mutator(seg: Segment, budget: int, seed: int) -> List[Variant]:
    """Generate variants and drop the trivially equivalent ones.

    A segment with no applicable mutation sites yields an empty list,
    which callers treat the same as an empty variant sample.
    """
    try:
        variants = generate_variants(seg, budget, seed)
    except NoApplicableSites:
        return []
    return filter_non_equivalent(variants, seg.code)


def refine_poi_specs(seg: Segment, poi, base, deps: Sequence[Segment],
                     model, verifier, mutator, cfg, *,
                     dep_specs: Optional[Mapping[str, Sequence[object]]] = None,
                     targets: Sequence[Tuple[str, object]] = (),
                     sketch=None):
    """Strengthen a verified set until the rate meets the threshold.

    Each round samples fresh variants with a round-salted seed and
    measures the current set first, so a set that is already strong
    costs no model calls.  Otherwise an undistinguished variant is
    shown to the model and the inner generate/repair loop folds the
    verified additions in.  Returns (set, history of VdrReports).
    An empty variant sample stops refinement with the set unchanged.
    """
    mutate = mutator if mutator is not None else default_mutator
    dep_texts = synthesis._dep_unit_texts(deps, dep_specs)
    history: List[VdrReport] = []
    base_ctx: Optional[Prompt] = None

    for i in range(1, cfg.n_refine + 1):
        variants = mutate(seg, cfg.mutation_budget, cfg.seed + ROUND_SALT * i)
        try:
            report = compute_vdr(base, variants, verifier, segment=seg,
                                 dep_texts=dep_texts, round_index=i)
        except EmptyVariantSet:
            logger.warning("no variants for %s/%s in round %d; "
                           "refinement stops", seg.id, poi.id, i)
            break
        history.append(report)
        if report.rate >= cfg.t or i == cfg.n_refine:
            break
        chosen = {vid for vid in report.undistinguished}
        pool = [v for v in variants if v.id in chosen]
        if not pool:
            break
        if base_ctx is None:
            base_ctx = synthesis.assemble_generation_context(
                seg, poi, sketch, deps, dep_specs=dep_specs)
        refine_ctx = assemble_refine_context(base_ctx, pool, seg,
                                             cfg.seed + ROUND_SALT * i)
        synthesis.run_repair_loop(
            refine_ctx, seg, poi, model, verifier, cfg, base,
            deps=deps, dep_specs=dep_specs, targets=targets,
            id_prefix=f"{seg.id}_{poi.id}_f{i}")
    return base, history
