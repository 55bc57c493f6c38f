"""Command-line driver: segment, synthesize, mutate, vdr, eval, verify.

Every subcommand reads plain files, writes reports atomically (temp file
plus rename), and exits 0 on success, 1 on pipeline errors, 2 on usage
or configuration errors.  With --deterministic the reports carry no
timestamps, so identical inputs yield byte-identical bytes.
"""

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from specsyn import metrics
from specsyn.config import load_config
from specsyn.errors import (
    ConfigError,
    EmptyVariantSet,
    NoApplicableSites,
    SpecsynError,
)
from specsyn.frontend import load_unit, parse_unit
from specsyn.metrics import evaluate, load_ground_truth
from specsyn.model_client import (
    LiveBackend,
    ModelSettings,
    RecordingBackend,
    ReplayBackend,
    record_transcript,
)
from specsyn.mutation import Toolchain, filter_non_equivalent, generate_variants
from specsyn.refinement import compute_vdr
from specsyn.segmentation import SEGMENT_JOIN, dependency_closure, segment_unit
from specsyn.synthesis import (
    RunConfig,
    SpecClause,
    SpecSet,
    _dep_unit_texts,
    instrument_segment,
    parse_targets,
    synthesize_program,
)
from specsyn.verifiers import ExternalVerifier, MockVerifier
from specsyn.verifiers.mock import MockDomain

_RUN_FIELD_NAMES = ("n_refine", "n_repair", "t", "mutation_budget", "seed",
                    "skip_if_strong")


class _Usage(Exception):
    """Bad invocation input: maps to exit status 2."""


@dataclass
class PipelineRun:
    """Everything one driver invocation touched, for the report envelope."""

    config: Optional[RunConfig] = None
    inputs: List[str] = field(default_factory=list)
    started: Optional[str] = None
    finished: Optional[str] = None
    artifacts: List[str] = field(default_factory=list)
    log: List[dict] = field(default_factory=list)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a same-directory temp file and rename over the target."""
    target = Path(path)
    directory = target.resolve().parent
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".specsyn-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_text(path, what: str = "input") -> str:
    try:
        return Path(path).read_text()
    except (FileNotFoundError, IsADirectoryError):
        raise _Usage(f"{what} file not found: {path}")


def _segments_of(source: str):
    _, segments = segment_unit(parse_unit(load_unit(source)))
    return segments


def _envelope(run: PipelineRun, deterministic: bool) -> dict:
    out: Dict[str, object] = {"inputs": list(run.inputs),
                              "artifacts": list(run.artifacts)}
    if run.config is not None:
        out["config"] = {name: getattr(run.config, name)
                         for name in _RUN_FIELD_NAMES}
    if not deterministic:
        out["started"] = run.started
        out["finished"] = run.finished
    return out


def _flush_log(args, run: PipelineRun) -> None:
    if getattr(args, "log", None):
        lines = "".join(json.dumps(e, sort_keys=True) + "\n" for e in run.log)
        write_atomic(args.log, lines)
        run.artifacts.append(args.log)


def _emit(run: PipelineRun, **fields) -> None:
    run.log.append(fields)


class _LoggedModel:
    def __init__(self, inner, run: PipelineRun):
        self.inner = inner
        self.run = run

    def complete(self, prompt):
        response = self.inner.complete(prompt)
        _emit(self.run, event="model_call", purpose=prompt.purpose)
        return response


class _LoggedVerifier:
    def __init__(self, inner, run: PipelineRun):
        self.inner = inner
        self.run = run

    def verify(self, program_text, clauses, clause_labels=None):
        verdicts = self.inner.verify(program_text, clauses, clause_labels)
        _emit(self.run, event="verify_call", clauses=len(list(clauses)))
        return verdicts


class _LoggedMutator:
    def __init__(self, inner, run: PipelineRun):
        self.inner = inner
        self.run = run

    def __call__(self, seg, budget, seed):
        variants = self.inner(seg, budget, seed)
        for v in variants:
            _emit(self.run, event="variant", id=v.id,
                  operator=v.operator_id, equivalence=v.equivalence)
        return variants


def _config_flags(args) -> dict:
    names = _RUN_FIELD_NAMES + ("verifier", "cc")
    return {name: getattr(args, name, None) for name in names}


def _build_verifier(cfg: RunConfig):
    settings = cfg.verifier_settings or {"kind": "mock"}
    if settings.get("kind") == "external":
        kwargs = {"command_template": settings["command"]}
        if "timeout" in settings:
            kwargs["timeout"] = int(settings["timeout"])
        return ExternalVerifier(**kwargs)
    domain = MockDomain.from_mapping(cfg.domain) if cfg.domain else None
    return MockVerifier(domain)


def _build_model(args, cfg: RunConfig):
    """Returns (backend, recorder); recorder is set only under --record."""
    if getattr(args, "replay", None):
        if not Path(args.replay).is_file():
            raise _Usage(f"replay transcript not found: {args.replay}")
        return ReplayBackend(args.replay), None
    raw = dict(cfg.model_settings or {})
    known = {"endpoint", "model", "api_key", "temperature", "timeout",
             "retries"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown model setting: {unknown[0]}")
    if not raw.get("endpoint"):
        raise ConfigError(
            "model endpoint is required unless --replay is given")
    live = LiveBackend(ModelSettings(**raw))
    if getattr(args, "record", None):
        recorder = RecordingBackend(live)
        return recorder, recorder
    return live, None


def _build_mutator(cfg: RunConfig):
    toolchain = Toolchain(cc=cfg.toolchain) if cfg.toolchain else None

    def mutate(seg, budget, seed):
        try:
            variants = generate_variants(seg, budget, seed)
        except NoApplicableSites:
            return []
        return filter_non_equivalent(variants, seg.code, toolchain=toolchain)

    return mutate


def _grouped_clauses(merged: SpecSet) -> Dict[str, List[SpecClause]]:
    grouped: Dict[str, List[SpecClause]] = {}
    for c in merged:
        if c.origin != "Target":
            grouped.setdefault(c.segment_id, []).append(c)
    return grouped


def _annotated_unit(segments, merged: SpecSet) -> str:
    grouped = _grouped_clauses(merged)
    parts = []
    for seg in sorted(segments, key=lambda s: s.topo_rank):
        _, tpairs = parse_targets(seg)
        inst = instrument_segment(seg, grouped.get(seg.id, []), targets=tpairs)
        parts.append(inst.text.rstrip("\n"))
    return SEGMENT_JOIN.join(parts) + "\n"


# --- subcommands -------------------------------------------------------------


def cmd_segment(args) -> int:
    source = _read_text(args.input)
    run = PipelineRun(inputs=[args.input], started=_now())
    segments = _segments_of(source)
    records = [{"id": seg.id, "members": list(seg.members),
                "deps": sorted(seg.deps), "topo_rank": seg.topo_rank,
                "externals": sorted(seg.externals)} for seg in segments]
    run.finished = _now()
    run.artifacts.append(args.out)
    payload = {"run": _envelope(run, args.deterministic), "segments": records}
    write_atomic(args.out, _json(payload))
    return 0


def cmd_synthesize(args) -> int:
    source = _read_text(args.input)
    cfg = load_config(args.config, env=os.environ,
                      cli_flags=_config_flags(args))
    run = PipelineRun(config=cfg, inputs=[args.input], started=_now())
    segments = _segments_of(source)
    model_backend, recorder = _build_model(args, cfg)
    model = _LoggedModel(model_backend, run)
    verifier = _LoggedVerifier(_build_verifier(cfg), run)
    mutator = _LoggedMutator(_build_mutator(cfg), run)

    report: dict = {}
    merged = None
    error = None
    try:
        merged = synthesize_program(segments, model, verifier,
                                    mutator=mutator, cfg=cfg, report=report)
    except SpecsynError as exc:
        error = str(exc)

    if recorder is not None:
        record_transcript(recorder.exchanges, args.record)
        run.artifacts.append(args.record)

    for sid in sorted(report.get("vdr_history", {})):
        for entry in report["vdr_history"][sid]:
            _emit(run, event="vdr_round", segment=sid, **entry)
    for record in report.get("clauses", ()):
        _emit(run, event="clause_status", id=record["id"],
              status=record["status"])

    run.artifacts.append(args.out)
    if merged is not None and args.emit_annotated:
        write_atomic(args.emit_annotated, _annotated_unit(segments, merged))
        run.artifacts.append(args.emit_annotated)
    _flush_log(args, run)
    run.finished = _now()

    payload = {"run": _envelope(run, args.deterministic)}
    payload.update(report)
    if error is not None:
        payload["error"] = error
    write_atomic(args.out, _json(payload))
    return 1 if error is not None else 0


def cmd_mutate(args) -> int:
    source = _read_text(args.input)
    cfg = load_config(args.config, env=os.environ,
                      cli_flags=_config_flags(args))
    run = PipelineRun(inputs=[args.input], started=_now())
    segments = _segments_of(source)
    if args.segment is not None:
        segments = [seg for seg in segments if seg.id == args.segment]
        if not segments:
            raise _Usage(f"no segment named {args.segment!r}")
    toolchain = Toolchain(cc=cfg.toolchain) if cfg.toolchain else None
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = []
    for seg in segments:
        try:
            variants = generate_variants(seg, args.budget, args.seed)
        except NoApplicableSites:
            continue
        variants = filter_non_equivalent(variants, seg.code,
                                         toolchain=toolchain)
        for v in variants:
            _emit(run, event="variant", id=v.id, operator=v.operator_id,
                  equivalence=v.equivalence)
            path = outdir / f"{v.id}.c"
            write_atomic(path, v.code.rstrip("\n") + "\n")
            run.artifacts.append(str(path))
            records.append({"id": v.id, "segment": v.segment_id,
                            "operator": v.operator_id,
                            "site": list(v.site),
                            "equivalence": v.equivalence,
                            "path": str(path)})
    index_path = outdir / "index.json"
    run.artifacts.append(str(index_path))
    _flush_log(args, run)
    run.finished = _now()
    payload = {"run": _envelope(run, args.deterministic), "variants": records}
    write_atomic(index_path, _json(payload))
    return 0


def cmd_vdr(args) -> int:
    source = _read_text(args.input)
    cfg = load_config(args.config, env=os.environ,
                      cli_flags=_config_flags(args))
    run = PipelineRun(inputs=[args.input], started=_now())
    gt = load_ground_truth(source)
    for clause in gt.clauses:
        clause.resolve("Verified")
    grouped = _grouped_clauses(gt.clauses)
    verifier = _LoggedVerifier(_build_verifier(cfg), run)
    mutator = _LoggedMutator(_build_mutator(cfg), run)
    ordered = sorted(gt.segments, key=lambda s: s.topo_rank)
    results: Dict[str, dict] = {}
    for seg in ordered:
        own = grouped.get(seg.id, [])
        if not own:
            continue
        specs = SpecSet()
        for c in own:
            specs.add(c, force=True)
        deps = dependency_closure(seg, ordered)
        variants = mutator(seg, args.budget, args.seed)
        try:
            report = compute_vdr(specs, variants, verifier, segment=seg,
                                 dep_texts=_dep_unit_texts(deps, grouped))
        except EmptyVariantSet as exc:
            results[seg.id] = {"error": str(exc)}
            continue
        _emit(run, event="vdr_round", segment=seg.id, **report.to_dict())
        results[seg.id] = report.to_dict()
    _flush_log(args, run)
    run.finished = _now()
    if args.out:
        run.artifacts.append(args.out)
        payload = {"run": _envelope(run, args.deterministic), "vdr": results}
        write_atomic(args.out, _json(payload))
    else:
        payload = {"run": _envelope(run, args.deterministic), "vdr": results}
        sys.stdout.write(_json(payload))
    return 0


def _load_generated(path) -> Tuple[SpecSet, Dict[str, str]]:
    try:
        data = json.loads(_read_text(path, what="generated report"))
    except json.JSONDecodeError as exc:
        raise _Usage(f"generated report {path} is not valid JSON: {exc}")
    generated = SpecSet()
    for record in data.get("clauses", ()):
        if record.get("origin") == "Target":
            continue
        try:
            clause = SpecClause(
                id=record["id"], kind=record["kind"],
                predicate=record["predicate"], poi=record["poi"],
                status=record.get("status", "Candidate"),
                origin=record.get("origin", "Generated"),
                round=record.get("round", 0),
                segment_id=record.get("segment", ""))
        except (KeyError, ValueError) as exc:
            raise _Usage(f"generated report {path} holds a bad clause "
                         f"record: {exc}")
        generated.add(clause, force=True)
    verdicts = {cid: entry.get("status", "Unproved")
                for cid, entry in data.get("final", {}).items()}
    return generated, verdicts


def cmd_eval(args) -> int:
    subject = _read_text(args.subject, what="subject")
    gt_source = _read_text(args.ground_truth, what="ground truth")
    cfg = load_config(args.config, env=os.environ,
                      cli_flags=_config_flags(args))
    run = PipelineRun(inputs=[args.subject, args.ground_truth,
                              args.generated], started=_now())
    segments = _segments_of(subject)
    gt = load_ground_truth(gt_source)
    subject_members = {s.id: tuple(s.members) for s in segments}
    gt_members = {s.id: tuple(s.members) for s in gt.segments}
    if subject_members != gt_members:
        raise _Usage("ground truth file does not segment like the subject")
    generated, verdicts = _load_generated(args.generated)
    verifier = _LoggedVerifier(_build_verifier(cfg), run)
    report = evaluate(segments, generated, gt, verifier,
                      verdicts=verdicts or None,
                      coverage_mode=args.coverage)
    _flush_log(args, run)
    run.finished = _now()
    run.artifacts.append(args.out)
    payload = {"run": _envelope(run, args.deterministic),
               "metrics": report.to_dict()}
    write_atomic(args.out, _json(payload))
    return 0


def cmd_verify(args) -> int:
    source = _read_text(args.input)
    cfg = load_config(args.config, env=os.environ,
                      cli_flags=_config_flags(args))
    run = PipelineRun(inputs=[args.input], started=_now())
    gt = load_ground_truth(source)
    verifier = _LoggedVerifier(_build_verifier(cfg), run)
    verdicts = metrics.final_verdicts(gt.segments, gt.clauses, verifier,
                                      target_pairs=gt.target_pairs)
    for cid in sorted(verdicts):
        _emit(run, event="clause_status", id=cid,
              status=verdicts[cid].status)
    records = {cid: {"status": v.status, "diagnostic": v.diagnostic}
               for cid, v in verdicts.items()}
    _flush_log(args, run)
    run.finished = _now()
    if args.out:
        run.artifacts.append(args.out)
        payload = {"run": _envelope(run, args.deterministic),
                   "verdicts": records}
        write_atomic(args.out, _json(payload))
    else:
        payload = {"run": _envelope(run, args.deterministic),
                   "verdicts": records}
        sys.stdout.write(_json(payload))
    return 0


# --- parser ------------------------------------------------------------------


def _add_common(sp) -> None:
    sp.add_argument("--deterministic", action="store_true",
                    help="omit timestamps so outputs are byte-reproducible")
    sp.add_argument("--log", metavar="PATH",
                    help="write a JSON Lines event log")
    sp.add_argument("--config", metavar="PATH", help="TOML config file")
    sp.add_argument("--verifier", choices=["mock", "external"],
                    help="verifier backend kind")
    sp.add_argument("--cc", metavar="CMD",
                    help="C compiler for equivalence checks")


def _add_run_flags(sp) -> None:
    sp.add_argument("--n-refine", type=int, dest="n_refine")
    sp.add_argument("--n-repair", type=int, dest="n_repair")
    sp.add_argument("--t", type=float)
    sp.add_argument("--mutation-budget", type=int, dest="mutation_budget")
    sp.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specsyn",
        description="Segment C code, synthesize ACSL specifications, and "
                    "measure their strength.")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="split a file into ordered segments")
    seg.add_argument("--input", required=True)
    seg.add_argument("--out", default="segments.json")
    _add_common(seg)
    seg.set_defaults(func=cmd_segment)

    syn = sub.add_parser("synthesize",
                         help="generate, verify, and refine specifications")
    syn.add_argument("--input", required=True)
    syn.add_argument("--out", default="report.json")
    syn.add_argument("--emit-annotated", metavar="PATH", dest="emit_annotated")
    mode = syn.add_mutually_exclusive_group()
    mode.add_argument("--replay", metavar="PATH",
                      help="serve model responses from a transcript")
    mode.add_argument("--record", metavar="PATH",
                      help="record live model responses to a transcript")
    _add_run_flags(syn)
    _add_common(syn)
    syn.set_defaults(func=cmd_synthesize)

    mut = sub.add_parser("mutate", help="emit code variants of each segment")
    mut.add_argument("--input", required=True)
    mut.add_argument("--budget", type=int, default=24)
    mut.add_argument("--seed", type=int, default=0)
    mut.add_argument("--outdir", default="variants")
    mut.add_argument("--segment", help="restrict to one segment id")
    _add_common(mut)
    mut.set_defaults(func=cmd_mutate)

    vdr = sub.add_parser("vdr",
                         help="measure variant discrimination of an "
                              "annotated file")
    vdr.add_argument("--input", required=True)
    vdr.add_argument("--budget", type=int, default=24)
    vdr.add_argument("--seed", type=int, default=0)
    vdr.add_argument("--out")
    _add_common(vdr)
    vdr.set_defaults(func=cmd_vdr)

    ev = sub.add_parser("eval",
                        help="score a synthesis report against a reference "
                             "annotated file")
    ev.add_argument("--subject", required=True)
    ev.add_argument("--ground-truth", required=True, dest="ground_truth")
    ev.add_argument("--generated", required=True)
    ev.add_argument("--out", default="metrics.json")
    ev.add_argument("--coverage", choices=["entailment", "textual"],
                    default="entailment")
    _add_common(ev)
    ev.set_defaults(func=cmd_eval)

    ver = sub.add_parser("verify", help="check an annotated file's clauses")
    ver.add_argument("--input", required=True)
    ver.add_argument("--out")
    _add_common(ver)
    ver.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"specsyn: config error: {exc}", file=sys.stderr)
        return 2
    except _Usage as exc:
        print(f"specsyn: {exc}", file=sys.stderr)
        return 2
    except SpecsynError as exc:
        print(f"specsyn: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
