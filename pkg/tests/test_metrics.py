"""Tests for precision/recall/target metrics and ground-truth loading."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from specsyn import metrics
from specsyn.errors import UnresolvablePOI
from specsyn.metrics import (
    GroundTruth,
    MetricsReport,
    count_proved_targets,
    evaluate,
    load_ground_truth,
    precision,
    recall,
)
from specsyn.poi import extract_points_of_interest
from specsyn.synthesis import SpecClause, SpecSet
from specsyn.verifiers import MockVerifier

from modelstub import CountingVerifier, segments_of

EVEN = """int is_even(int x) {
    if (x % 2 == 0) {
        return 1;
    }
    return 0;
}
"""

EVEN_GT_WEAK = "/*@ ensures \\result >= 0; */\n" + EVEN
EVEN_GT_EXACT = "/*@ ensures \\result == 0 || \\result == 1; */\n" + EVEN

TWO = """int clamp3(int v) {
    if (v > 3) {
        return 3;
    }
    return v;
}

int twice_clamped(int a) {
    int r = clamp3(a);
    /*@ assert r <= 3; */
    return r;
}
"""

LOOPED_GT = """/*@ requires n >= 0;
    ensures \\result >= 0; */
int sum_to(int n) {
    int s = 0;
    int i = 0;
    /*@ loop invariant s >= 0; */
    while (i < n) {
        s = s + i;
        i = i + 1;
    }
    return s;
}
"""


def contract_poi(seg):
    return next(p for p in extract_points_of_interest(seg)
                if p.kind == "FunctionContract")


def gen_clause(seg, predicate, kind="Ensures", cid=None, poi=None):
    p = poi or contract_poi(seg).id
    return SpecClause(id=cid or f"{seg.id}_x{abs(hash(predicate)) % 1000}",
                      kind=kind, predicate=predicate, poi=p,
                      status="Verified", segment_id=seg.id)


def gen_set(*clauses):
    out = SpecSet()
    for c in clauses:
        out.add(c)
    return out


# --- ground truth loading ---------------------------------------------------


def test_load_ground_truth_contract_clauses():
    gt = load_ground_truth(EVEN_GT_WEAK)
    clauses = list(gt.clauses)
    assert len(clauses) == 1
    c = clauses[0]
    assert c.kind == "Ensures"
    assert c.predicate == "\\result >= 0"
    assert c.segment_id == "s0"
    assert c.poi == contract_poi(gt.segments[0]).id
    assert gt.targets == []


def test_load_ground_truth_multi_clause_block_and_loop():
    gt = load_ground_truth(LOOPED_GT)
    kinds = sorted(c.kind for c in gt.clauses)
    assert kinds == ["Ensures", "LoopInvariant", "Requires"]
    seg = gt.segments[0]
    pois = {p.id: p for p in extract_points_of_interest(seg)}
    for c in gt.clauses:
        expected = "LoopHead" if c.kind == "LoopInvariant" else "FunctionContract"
        assert pois[c.poi].kind == expected


def test_load_ground_truth_targets_and_pairs():
    gt = load_ground_truth(TWO)
    assert [t.predicate for t in gt.targets] == ["r <= 3"]
    assert list(gt.target_pairs) == ["s1"]
    (tid, block), = gt.target_pairs["s1"]
    assert tid == gt.targets[0].id
    assert block.is_assert


def test_load_ground_truth_unattachable_raises():
    source = "/*@ ensures \\result >= 0; */\ntypedef int my_t;\n"
    with pytest.raises(UnresolvablePOI):
        load_ground_truth(source)


def test_load_ground_truth_ids_are_per_segment():
    gt = load_ground_truth(EVEN_GT_WEAK + "\n" + """/*@ ensures \\result == 1; */
int one_fn(int q) {
    return 1;
}
""")
    ids = sorted(c.id for c in gt.clauses)
    assert ids == ["s0_gt0", "s1_gt0"]


# --- precision ---------------------------------------------------------------


def test_precision_hand_tally():
    seg = segments_of(EVEN)[0]
    clauses = [gen_clause(seg, f"\\result != {k}", cid=f"c{k}") for k in range(4)]
    verdicts = {"c0": "Proved", "c1": "Proved", "c2": "Proved", "c3": "Unproved"}
    assert precision(gen_set(*clauses), verdicts) == Fraction(3, 4)


def test_precision_empty_set_is_zero():
    assert precision(SpecSet(), {}) == Fraction(0)


def test_precision_ignores_targets():
    seg = segments_of(EVEN)[0]
    s = gen_set(gen_clause(seg, "\\result >= 0", cid="a"))
    t = SpecClause(id="t0", kind="Assert", predicate="1 == 1", poi="",
                   origin="Target", segment_id=seg.id)
    s.add(t, force=True)
    assert precision(s, {"a": "Proved"}) == Fraction(1, 1)


@given(st.lists(st.booleans(), min_size=1, max_size=12))
def test_precision_matches_arithmetic(flags):
    seg = segments_of(EVEN)[0]
    clauses = [gen_clause(seg, f"\\result != {k + 10}", cid=f"c{k}")
               for k in range(len(flags))]
    verdicts = {f"c{k}": ("Proved" if ok else "Unproved")
                for k, ok in enumerate(flags)}
    expected = Fraction(sum(flags), len(flags))
    assert precision(gen_set(*clauses), verdicts) == expected


def test_precision_accepts_verdict_objects():
    seg = segments_of(EVEN)[0]
    s = gen_set(gen_clause(seg, "\\result >= 0", cid="a"))
    verifier = MockVerifier()
    verdicts = metrics.final_verdicts([seg], s, verifier)
    assert precision(s, verdicts) == Fraction(1, 1)


# --- recall ------------------------------------------------------------------


def test_recall_entailment_weak_from_exact():
    gt = load_ground_truth(EVEN_GT_WEAK)
    seg = gt.segments[0]
    gen = gen_set(gen_clause(seg, "\\result == 0 || \\result == 1"))
    assert recall(gen, gt, MockVerifier()) == Fraction(1, 1)


def test_recall_entailment_strong_not_covered_by_weak():
    gt = load_ground_truth(EVEN_GT_EXACT)
    seg = gt.segments[0]
    gen = gen_set(gen_clause(seg, "\\result >= 0"))
    assert recall(gen, gt, MockVerifier()) == Fraction(0, 1)


def test_recall_empty_generated_is_zero():
    gt = load_ground_truth(EVEN_GT_WEAK)
    assert recall(SpecSet(), gt, MockVerifier()) == Fraction(0)


def test_recall_empty_ground_truth_is_zero():
    gt = load_ground_truth(EVEN)
    seg = gt.segments[0]
    gen = gen_set(gen_clause(seg, "\\result >= 0"))
    assert recall(gen, gt, MockVerifier()) == Fraction(0)


def test_recall_textual_requires_exact_text():
    gt = load_ground_truth(EVEN_GT_WEAK)
    seg = gt.segments[0]
    same = gen_set(gen_clause(seg, "\\result   >=   0"))
    other = gen_set(gen_clause(seg, "\\result >= -1"))
    assert recall(same, gt, MockVerifier(), mode="textual") == Fraction(1, 1)
    assert recall(other, gt, MockVerifier(), mode="textual") == Fraction(0, 1)


def test_recall_requires_clause_falls_back_to_text():
    gt = load_ground_truth(LOOPED_GT)
    seg = gt.segments[0]
    gen = gen_set(
        gen_clause(seg, "n >= 0", kind="Requires", cid="r0"),
        gen_clause(seg, "s >= 0", kind="LoopInvariant", cid="l0",
                   poi=next(p.id for p in extract_points_of_interest(seg)
                            if p.kind == "LoopHead")),
        gen_clause(seg, "\\result == ((n > 0) ? ((n * (n - 1)) / 2) : 0)",
                   cid="e0"),
    )
    # requires and loop invariant match textually; the exact ensures
    # entails the weaker ground-truth ensures.
    assert recall(gen, gt, MockVerifier()) == Fraction(3, 3)


def test_recall_requires_mismatch_not_entailed():
    gt = load_ground_truth(LOOPED_GT)
    seg = gt.segments[0]
    gen = gen_set(gen_clause(seg, "n >= 1", kind="Requires", cid="r0"))
    # n >= 1 implies the ground truth n >= 0 but precondition coverage
    # is text-only, so nothing counts.
    assert recall(gen, gt, MockVerifier()) == Fraction(0, 3)


def test_recall_entailment_grows_with_generated_set():
    gt = load_ground_truth(EVEN_GT_WEAK)
    seg = gt.segments[0]
    weak = gen_set(gen_clause(seg, "\\result != 5", cid="w"))
    strong = gen_set(gen_clause(seg, "\\result != 5", cid="w"),
                     gen_clause(seg, "\\result == 0 || \\result == 1", cid="s"))
    r_weak = recall(weak, gt, MockVerifier())
    r_strong = recall(strong, gt, MockVerifier())
    assert r_weak <= r_strong
    assert r_strong == Fraction(1, 1)


def test_recall_skips_unverified_assumptions():
    # an unsatisfiable ensures must never serve as an assumption: it
    # would empty the call-result set and cover the reference vacuously
    gt = load_ground_truth(EVEN_GT_EXACT)
    seg = gt.segments[0]
    impossible = gen_clause(seg, "\\result == 99", cid="g1")
    impossible.status = "Candidate"
    gen = gen_set(gen_clause(seg, "\\result >= 0", cid="g0"), impossible)
    assert recall(gen, gt, MockVerifier()) == Fraction(0, 1)


def test_recall_consults_supplied_verdicts_for_assumptions():
    # a clause whose own status says Verified is still excluded when the
    # final-pass verdicts mark it Unproved
    gt = load_ground_truth(EVEN_GT_EXACT)
    seg = gt.segments[0]
    gen = gen_set(gen_clause(seg, "\\result >= 0", cid="g0"),
                  gen_clause(seg, "\\result == 99", cid="g1"))
    verdicts = {"g0": "Proved", "g1": "Unproved"}
    assert recall(gen, gt, MockVerifier(), verdicts=verdicts) == Fraction(0, 1)
    # with both marked proved the conjunction is unsatisfiable and the
    # probe passes vacuously, which is exactly what the guard prevents
    permissive = {"g0": "Proved", "g1": "Proved"}
    assert recall(gen, gt, MockVerifier(), verdicts=permissive) == Fraction(1, 1)


def test_recall_unknown_mode_rejected():
    gt = load_ground_truth(EVEN_GT_WEAK)
    with pytest.raises(ValueError):
        recall(SpecSet(), gt, MockVerifier(), mode="semantic")


def test_recall_multi_segment_entailment():
    gt = load_ground_truth(
        "/*@ ensures \\result <= 3; */\n" + TWO)
    s0 = gt.segments[0]
    gen = gen_set(gen_clause(s0, "\\result == ((v > 3) ? 3 : v)"))
    assert recall(gen, gt, MockVerifier()) == Fraction(1, 1)


# --- targets -----------------------------------------------------------------


def test_count_proved_targets_adequate_contract():
    segs = segments_of(TWO)
    gen = gen_set(gen_clause(segs[0], "\\result <= 3"))
    assert count_proved_targets(segs, gen, MockVerifier()) == (1, 1)


def test_count_proved_targets_missing_contract():
    segs = segments_of(TWO)
    assert count_proved_targets(segs, SpecSet(), MockVerifier()) == (0, 1)


def test_count_proved_targets_no_targets():
    segs = segments_of(EVEN)
    gen = gen_set(gen_clause(segs[0], "\\result >= 0"))
    verifier = CountingVerifier()
    assert count_proved_targets(segs, gen, verifier) == (0, 0)
    assert verifier.calls == 0


def test_count_proved_targets_explicit_pairs():
    gt = load_ground_truth(TWO)
    segs = gt.segments
    gen = gen_set(gen_clause(segs[0], "\\result <= 3"))
    got = count_proved_targets(segs, gen, MockVerifier(),
                               target_pairs=gt.target_pairs)
    assert got == (1, 1)


# --- evaluate / report -------------------------------------------------------


def test_evaluate_full_report_adequate():
    segs = segments_of(TWO)
    gt = load_ground_truth("/*@ ensures \\result <= 3; */\n" + TWO)
    gen = gen_set(gen_clause(segs[0], "\\result <= 3", cid="g0"))
    rep = evaluate(segs, gen, gt, MockVerifier())
    assert rep.generated_total == 1
    assert rep.verified_total == 1
    assert rep.precision == Fraction(1, 1)
    assert rep.gt_total == 1
    assert rep.gt_covered == 1
    assert rep.recall == Fraction(1, 1)
    assert (rep.targets_proved, rep.targets_total) == (1, 1)
    assert rep.coverage_mode == "entailment"
    assert not rep.no_generated


def test_evaluate_no_generated_flag():
    segs = segments_of(TWO)
    gt = load_ground_truth("/*@ ensures \\result <= 3; */\n" + TWO)
    rep = evaluate(segs, SpecSet(), gt, MockVerifier())
    assert rep.no_generated
    assert rep.precision == Fraction(0)
    assert rep.recall == Fraction(0, 1)
    assert (rep.targets_proved, rep.targets_total) == (0, 1)


def test_evaluate_uses_supplied_verdicts():
    segs = segments_of(TWO)
    gt = load_ground_truth("/*@ ensures \\result <= 3; */\n" + TWO)
    gen = gen_set(gen_clause(segs[0], "\\result <= 3", cid="g0"))
    tid = gt.targets[0].id
    verifier = CountingVerifier()
    rep = evaluate(segs, gen, gt, verifier,
                   verdicts={"g0": "Unproved", tid: "Proved"})
    # supplied verdicts are authoritative for precision and targets
    assert rep.verified_total == 0
    assert rep.precision == Fraction(0, 1)
    assert rep.targets_proved == 1
    # only recall's entailment probes hit the verifier
    assert verifier.calls == 1


def test_evaluate_textual_mode_recorded():
    segs = segments_of(EVEN)
    gt = load_ground_truth(EVEN_GT_WEAK)
    gen = gen_set(gen_clause(segs[0], "\\result >= 0", cid="g0"))
    rep = evaluate(segs, gen, gt, MockVerifier(), coverage_mode="textual")
    assert rep.coverage_mode == "textual"
    assert rep.recall == Fraction(1, 1)
    assert rep.to_dict()["coverage_mode"] == "textual"


def test_report_dict_shape_and_exact_fields():
    rep = MetricsReport(generated_total=4, verified_total=3,
                        precision=Fraction(3, 4), gt_total=3, gt_covered=2,
                        recall=Fraction(2, 3), targets_total=1,
                        targets_proved=1)
    d = rep.to_dict()
    assert d["precision"] == 0.75
    assert d["precision_exact"] == [3, 4]
    assert d["recall_exact"] == [2, 3]
    assert set(d) == {"generated_total", "verified_total", "precision",
                      "precision_exact", "gt_total", "gt_covered", "recall",
                      "recall_exact", "targets_total", "targets_proved",
                      "coverage_mode", "no_generated"}


@pytest.mark.parametrize("field,value", [
    ("precision", Fraction(5, 4)),
    ("recall", Fraction(-1, 3)),
    ("coverage_mode", "guess"),
])
def test_report_validation(field, value):
    kwargs = dict(generated_total=1, verified_total=1,
                  precision=Fraction(1), gt_total=1, gt_covered=1,
                  recall=Fraction(1), targets_total=0, targets_proved=0)
    kwargs[field] = value
    with pytest.raises(ValueError):
        MetricsReport(**kwargs)


def test_ground_truth_dataclass_defaults():
    gt = GroundTruth(clauses=SpecSet(), targets=[])
    assert gt.segments == []
    assert gt.target_pairs == {}
