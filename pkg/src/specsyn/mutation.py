"""Program variant generation and trivial-equivalence filtering.

A variant is a single-site rewrite of a segment's code, produced by one
operator from a data-driven catalog.  Variants are later scored by how
many of them the synthesized specification refutes, so variants that a
compiler can prove trivially equivalent to the original (identical
object code at -O2) are filtered out first: they can never be
distinguished by any specification and would only dilute the score.
"""

import json
import os
import random
import shutil
import subprocess
import tempfile
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from specsyn.errors import ConfigError, NoApplicableSites, SpecsynError, ToolchainMissing
from specsyn.frontend import load_unit, parse_unit
from specsyn.frontend import csyntax as cs

OPERATOR_CATEGORIES = (
    "OperatorSwap",
    "OperandReplace",
    "ConstantPerturb",
    "StatementDelete",
    "StatementDuplicate",
    "ControlFlowAlter",
    "ReturnAlter",
    "DeclarationAlter",
)

EQUIVALENCE_CLASSES = ("NonEquivalent", "Equivalent", "CompileFailed")

COMPILE_TIMEOUT = 60


@dataclass(frozen=True)
class Site:
    """One applicable rewrite: splice `replacement` over text[start:end]."""

    start: int
    end: int
    replacement: str


@dataclass(frozen=True)
class MutationOperator:
    """A named single-site rewrite rule drawn from the catalog."""

    id: str
    category: str
    kind: str
    params: Mapping[str, object] = field(default_factory=dict)

    def sites(self, code: str) -> List[Site]:
        """All applicable sites of this operator in `code` (parses it)."""
        return operator_sites(self, code)


@dataclass
class Variant:
    """One mutated copy of a segment.

    `site` is the character span of the original text that was rewritten.
    `equivalence` stays None until trivial-equivalence classification runs.
    """

    id: str
    segment_id: str
    operator_id: str
    site: Tuple[int, int]
    code: str
    equivalence: Optional[str] = None

    def __post_init__(self):
        if self.equivalence is not None and self.equivalence not in EQUIVALENCE_CLASSES:
            raise ValueError(f"unknown equivalence class: {self.equivalence!r}")


# --- occurrence collection ---------------------------------------------------


class _Occurrences:
    """Deterministic source-order inventory of mutable syntax."""

    def __init__(self):
        self.binaries: List[cs.Binary] = []
        self.int_lits: List[cs.IntLit] = []
        self.indexes: List[cs.Index] = []
        self.ifs: List[cs.If] = []
        self.loop_conds: List[cs.Expr] = []
        self.breaks: List[cs.Break] = []
        self.continues: List[cs.Continue] = []
        self.returns: List[cs.Return] = []
        self.expr_stmts: List[cs.ExprStmt] = []
        self.inits: List[Tuple[cs.TypeInfo, cs.Expr]] = []
        self.listed: set = set()  # id() of statements that sit in a statement list


_STMT_TYPES = (
    cs.Block, cs.ExprStmt, cs.LocalDecl, cs.If, cs.While, cs.DoWhile,
    cs.For, cs.Switch, cs.Return, cs.Break, cs.Continue,
)


def _expr_children(node: cs.Node) -> Iterator[cs.Node]:
    for name in getattr(node, "__dataclass_fields__", ()):
        value = getattr(node, name)
        if isinstance(value, cs.Node):
            yield value
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, cs.Node):
                    yield item


def _walk_expr(expr: Optional[cs.Expr], occ: _Occurrences) -> None:
    if expr is None:
        return
    if isinstance(expr, cs.IntLit):
        occ.int_lits.append(expr)
        return
    if isinstance(expr, cs.Binary):
        occ.binaries.append(expr)
    elif isinstance(expr, cs.Index):
        occ.indexes.append(expr)
    for child in _expr_children(expr):
        _walk_expr(child, occ)


def _walk_stmt(stmt: Optional[cs.Stmt], occ: _Occurrences) -> None:
    if stmt is None:
        return
    if isinstance(stmt, cs.Block):
        for s in stmt.stmts:
            occ.listed.add(id(s))
            _walk_stmt(s, occ)
    elif isinstance(stmt, cs.ExprStmt):
        occ.expr_stmts.append(stmt)
        _walk_expr(stmt.expr, occ)
    elif isinstance(stmt, cs.LocalDecl):
        for d in stmt.declarators:
            if d.init is not None:
                occ.inits.append((d.type, d.init))
                _walk_expr(d.init, occ)
    elif isinstance(stmt, cs.If):
        occ.ifs.append(stmt)
        _walk_expr(stmt.cond, occ)
        _walk_stmt(stmt.then, occ)
        _walk_stmt(stmt.other, occ)
    elif isinstance(stmt, cs.While):
        occ.loop_conds.append(stmt.cond)
        _walk_expr(stmt.cond, occ)
        _walk_stmt(stmt.body, occ)
    elif isinstance(stmt, cs.DoWhile):
        occ.loop_conds.append(stmt.cond)
        _walk_stmt(stmt.body, occ)
        _walk_expr(stmt.cond, occ)
    elif isinstance(stmt, cs.For):
        _walk_stmt(stmt.init, occ)
        if stmt.cond is not None:
            occ.loop_conds.append(stmt.cond)
            _walk_expr(stmt.cond, occ)
        _walk_expr(stmt.update, occ)
        _walk_stmt(stmt.body, occ)
    elif isinstance(stmt, cs.Switch):
        _walk_expr(stmt.value, occ)
        for case in stmt.cases:
            for label in case.labels:
                _walk_expr(label, occ)
            for s in case.stmts:
                occ.listed.add(id(s))
                _walk_stmt(s, occ)
    elif isinstance(stmt, cs.Return):
        occ.returns.append(stmt)
        _walk_expr(stmt.value, occ)
    elif isinstance(stmt, cs.Break):
        occ.breaks.append(stmt)
    elif isinstance(stmt, cs.Continue):
        occ.continues.append(stmt)
    else:
        for child in _expr_children(stmt):
            if isinstance(child, _STMT_TYPES):
                _walk_stmt(child, occ)
            else:
                _walk_expr(child, occ)


def _collect(decls) -> _Occurrences:
    occ = _Occurrences()
    for decl in decls:
        node = decl.node
        if isinstance(node, cs.FunctionDef) and node.body is not None:
            _walk_stmt(node.body, occ)
        elif isinstance(node, cs.GlobalVar) and node.init is not None:
            occ.inits.append((node.type, node.init))
            _walk_expr(node.init, occ)
    return occ


# --- operator kinds ----------------------------------------------------------


def _span_text(text: str, node) -> str:
    return text[node.start:node.end]


def _find_binary_op_swap(occ, text, params) -> Iterator[Site]:
    src, dst = params["from"], params["to"]
    for b in occ.binaries:
        if b.op != src:
            continue
        gap = text[b.left.end:b.right.start]
        # A comment in the gap would make the splice ambiguous; skip it.
        if gap.strip() != src:
            continue
        yield Site(b.left.end, b.right.start, gap.replace(src, dst, 1))


def _find_operand_to_const(occ, text, params) -> Iterator[Site]:
    const = params["const"]
    for b in occ.binaries:
        if _span_text(text, b.right).strip() == const:
            continue
        yield Site(b.right.start, b.right.end, const)


def _find_swap_operands(occ, text, params) -> Iterator[Site]:
    ops = set(params["ops"])
    for b in occ.binaries:
        if b.op not in ops:
            continue
        left = _span_text(text, b.left).strip()
        right = _span_text(text, b.right).strip()
        if left == right:
            continue
        yield Site(b.start, b.end, f"{right} {b.op} {left}")


def _find_index_to_const(occ, text, params) -> Iterator[Site]:
    const = params["const"]
    for ix in occ.indexes:
        if _span_text(text, ix.index).strip() == const:
            continue
        yield Site(ix.index.start, ix.index.end, const)


def _render_int(value: int) -> str:
    return str(value) if value >= 0 else f"({value})"


def _find_const_perturb(occ, text, params) -> Iterator[Site]:
    mode = params["mode"]
    for lit in occ.int_lits:
        if mode == "inc":
            repl = _render_int(lit.value + 1)
        elif mode == "dec":
            repl = _render_int(lit.value - 1)
        elif mode == "zero":
            if lit.value == 0:
                continue
            repl = "0"
        else:  # negate
            if lit.value == 0:
                continue
            repl = f"(-{_span_text(text, lit)})"
        yield Site(lit.start, lit.end, repl)


def _side_effectful(expr: cs.Expr) -> bool:
    if isinstance(expr, (cs.Assign, cs.Call)):
        return True
    return isinstance(expr, cs.Unary) and expr.op in ("++", "--")


def _find_delete_stmt(occ, text, params) -> Iterator[Site]:
    for st in occ.expr_stmts:
        if _side_effectful(st.expr):
            yield Site(st.start, st.end, ";")


def _find_delete_jump(occ, text, params) -> Iterator[Site]:
    for j in occ.breaks + occ.continues:
        yield Site(j.start, j.end, ";")


def _find_duplicate_stmt(occ, text, params) -> Iterator[Site]:
    for st in occ.expr_stmts:
        if id(st) in occ.listed and _side_effectful(st.expr):
            body = _span_text(text, st)
            yield Site(st.start, st.end, f"{body} {body}")


def _find_duplicate_if(occ, text, params) -> Iterator[Site]:
    for node in occ.ifs:
        if id(node) in occ.listed:
            body = _span_text(text, node)
            yield Site(node.start, node.end, f"{body} {body}")


def _find_negate_cond(occ, text, params) -> Iterator[Site]:
    conds = [i.cond for i in occ.ifs] if params["target"] == "if" else occ.loop_conds
    for cond in conds:
        yield Site(cond.start, cond.end, f"!({_span_text(text, cond)})")


def _find_swap_branches(occ, text, params) -> Iterator[Site]:
    for node in occ.ifs:
        if node.other is None:
            continue
        then = _span_text(text, node.then).strip()
        other = _span_text(text, node.other).strip()
        if then == other:
            continue
        cond = _span_text(text, node.cond)
        yield Site(node.start, node.end, f"if ({cond}) {{ {other} }} else {{ {then} }}")


def _find_remove_else(occ, text, params) -> Iterator[Site]:
    for node in occ.ifs:
        if node.other is not None:
            yield Site(node.then.end, node.end, "")


def _find_jump_swap(occ, text, params) -> Iterator[Site]:
    jumps = occ.breaks if params["from"] == "break" else occ.continues
    repl = "continue;" if params["from"] == "break" else "break;"
    for j in jumps:
        yield Site(j.start, j.end, repl)


def _find_return_perturb(occ, text, params) -> Iterator[Site]:
    mode = params["mode"]
    for r in occ.returns:
        if r.value is None:
            continue
        value = _span_text(text, r.value).strip()
        if mode == "inc":
            repl = f"({value}) + 1"
        elif mode == "negate":
            if isinstance(r.value, cs.IntLit) and r.value.value == 0:
                continue
            repl = f"(-({value}))"
        elif mode == "zero":
            if value == "0":
                continue
            repl = "0"
        else:  # one
            if value == "1":
                continue
            repl = "1"
        yield Site(r.value.start, r.value.end, repl)


def _find_decl_init_perturb(occ, text, params) -> Iterator[Site]:
    mode = params["mode"]
    for ty, init in occ.inits:
        if isinstance(init, cs.InitList) or not ty.is_int_like() or ty.is_array:
            continue
        value = _span_text(text, init).strip()
        if mode == "inc":
            repl = f"({value}) + 1"
        elif mode == "zero":
            if value == "0":
                continue
            repl = "0"
        else:  # one
            if value == "1":
                continue
            repl = "1"
        yield Site(init.start, init.end, repl)


_KIND_FINDERS = {
    "binary_op_swap": _find_binary_op_swap,
    "operand_to_const": _find_operand_to_const,
    "swap_operands": _find_swap_operands,
    "index_to_const": _find_index_to_const,
    "const_perturb": _find_const_perturb,
    "delete_stmt": _find_delete_stmt,
    "delete_jump": _find_delete_jump,
    "duplicate_stmt": _find_duplicate_stmt,
    "duplicate_if": _find_duplicate_if,
    "negate_cond": _find_negate_cond,
    "swap_branches": _find_swap_branches,
    "remove_else": _find_remove_else,
    "jump_swap": _find_jump_swap,
    "return_perturb": _find_return_perturb,
    "decl_init_perturb": _find_decl_init_perturb,
}


def _operator_sites(op: MutationOperator, occ: _Occurrences, text: str) -> List[Site]:
    found = _KIND_FINDERS[op.kind](occ, text, op.params)
    sites = [s for s in found if s.replacement != text[s.start:s.end]]
    return sorted(sites, key=lambda s: (s.start, s.end, s.replacement))


def operator_sites(op: MutationOperator, code: str) -> List[Site]:
    """Applicable sites of one operator in `code`, in source order."""
    unit = load_unit(code)
    occ = _collect(parse_unit(unit))
    return _operator_sites(op, occ, unit.text)


# --- catalog -----------------------------------------------------------------

_DEFAULT_CATALOG: Optional[List[MutationOperator]] = None


def load_catalog(path: Optional[os.PathLike] = None) -> List[MutationOperator]:
    """Load the operator catalog (the packaged one unless `path` is given)."""
    global _DEFAULT_CATALOG
    if path is None and _DEFAULT_CATALOG is not None:
        return list(_DEFAULT_CATALOG)
    if path is None:
        raw = resources.files("specsyn").joinpath("data/mutation_operators.json").read_text()
    else:
        raw = Path(path).read_text()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"operator catalog is not valid JSON: {exc}")
    ops: List[MutationOperator] = []
    seen = set()
    for entry in data.get("operators", []):
        op_id = entry.get("id")
        category = entry.get("category")
        kind = entry.get("kind")
        if not op_id or op_id in seen:
            raise ConfigError(f"catalog operator id missing or repeated: {op_id!r}")
        if category not in OPERATOR_CATEGORIES:
            raise ConfigError(f"operator {op_id}: unknown category {category!r}")
        if kind not in _KIND_FINDERS:
            raise ConfigError(f"operator {op_id}: unknown kind {kind!r}")
        seen.add(op_id)
        ops.append(MutationOperator(id=op_id, category=category, kind=kind,
                                    params=entry.get("params", {})))
    if not ops:
        raise ConfigError("operator catalog is empty")
    if path is None:
        _DEFAULT_CATALOG = list(ops)
    return ops


# --- variant generation ------------------------------------------------------


def generate_variants(seg, budget: int, seed: int,
                      catalog: Optional[Sequence[MutationOperator]] = None) -> List[Variant]:
    """Sample up to `budget` distinct single-site variants of a segment.

    Sampling is uniform without replacement over (operator, applicable
    site) pairs, so a fixed seed yields the same variants every run.
    Candidates that fail to re-parse and candidates whose code collapses
    to an already-emitted text are dropped, which is why fewer than
    `budget` variants can come back even when more pairs exist.

    Raises NoApplicableSites when no operator applies anywhere.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    code = seg.code if hasattr(seg, "code") else str(seg)
    seg_id = getattr(seg, "id", "seg")
    ops = list(catalog) if catalog is not None else load_catalog()
    unit = load_unit(code)
    occ = _collect(parse_unit(unit))
    text = unit.text
    pairs: List[Tuple[MutationOperator, Site]] = []
    for op in ops:
        for site in _operator_sites(op, occ, text):
            pairs.append((op, site))
    if not pairs:
        raise NoApplicableSites(f"no mutation operator applies in segment '{seg_id}'")
    rng = random.Random(seed)
    chosen = pairs if len(pairs) <= budget else rng.sample(pairs, budget)
    variants: List[Variant] = []
    seen = {text}
    for op, site in chosen:
        candidate = text[:site.start] + site.replacement + text[site.end:]
        if candidate in seen:
            continue
        try:
            parse_unit(load_unit(candidate))
        except SpecsynError:
            continue
        seen.add(candidate)
        variants.append(Variant(id=f"{seg_id}_v{len(variants)}", segment_id=seg_id,
                                operator_id=op.id, site=(site.start, site.end),
                                code=candidate))
    return variants


# --- trivial compiler equivalence ---------------------------------------------


@dataclass(frozen=True)
class Toolchain:
    """Compiler invocation used for equivalence checks, kept deterministic."""

    cc: str = "gcc"
    flags: Tuple[str, ...] = ("-O2", "-c", "-w")

    def describe(self) -> str:
        return " ".join((self.cc,) + tuple(self.flags))

    def available(self) -> bool:
        return shutil.which(self.cc) is not None


def default_toolchain() -> Toolchain:
    return Toolchain(cc=os.environ.get("SPECSYN_CC", "gcc"))


def _compile_object(code: str, toolchain: Toolchain, workdir: Path) -> Optional[bytes]:
    workdir.mkdir(parents=True, exist_ok=True)
    src = workdir / "unit.c"
    obj = workdir / "unit.o"
    src.write_text(code)
    # Same basename on both sides so embedded file names cannot differ.
    argv = [toolchain.cc, *toolchain.flags, src.name, "-o", obj.name]
    try:
        proc = subprocess.run(argv, cwd=workdir, capture_output=True,
                              timeout=COMPILE_TIMEOUT)
    except FileNotFoundError:
        raise ToolchainMissing(f"compiler '{toolchain.cc}' not found")
    except subprocess.TimeoutExpired:
        return None
    if proc.returncode != 0 or not obj.exists():
        return None
    return obj.read_bytes()


def tce_classify(original: str, variant, toolchain: Optional[Toolchain] = None) -> str:
    """Classify a variant against the original by object-code comparison.

    Both texts are compiled with the same deterministic flags; byte-equal
    objects mean Equivalent, a variant that fails to compile means
    CompileFailed, anything else is NonEquivalent.  Raises
    ToolchainMissing when the compiler is absent.
    """
    code = getattr(variant, "code", variant)
    tc = toolchain or default_toolchain()
    if not tc.available():
        raise ToolchainMissing(f"compiler '{tc.cc}' not found")
    with tempfile.TemporaryDirectory(prefix="specsyn-tce-") as td:
        base = Path(td)
        obj_orig = _compile_object(original, tc, base / "orig")
        obj_var = _compile_object(code, tc, base / "var")
    if obj_var is None:
        return "CompileFailed"
    if obj_orig is None:
        return "NonEquivalent"
    return "Equivalent" if obj_orig == obj_var else "NonEquivalent"


def filter_non_equivalent(variants: Iterable[Variant], original: str,
                          toolchain: Optional[Toolchain] = None) -> List[Variant]:
    """Classify every variant and keep only the NonEquivalent ones.

    Input order is preserved.  Without a usable compiler the check is
    skipped entirely: every variant is kept and marked NonEquivalent,
    and a warning says so, because unfiltered variants weaken the
    discrimination score's meaning.
    """
    vs = list(variants)
    tc = toolchain or default_toolchain()
    if not tc.available():
        warnings.warn(
            f"compiler '{tc.cc}' not found: trivial-equivalence filtering is "
            f"disabled and all {len(vs)} variants are kept as NonEquivalent",
            RuntimeWarning, stacklevel=2)
        for v in vs:
            v.equivalence = "NonEquivalent"
        return vs
    kept: List[Variant] = []
    for v in vs:
        v.equivalence = tce_classify(original, v.code, tc)
        if v.equivalence == "NonEquivalent":
            kept.append(v)
    return kept


def equivalence_counts(variants: Iterable[Variant]) -> Dict[str, int]:
    """Tally of equivalence classes over a classified variant list."""
    counts = {name: 0 for name in EQUIVALENCE_CLASSES}
    counts["Unclassified"] = 0
    for v in variants:
        counts[v.equivalence if v.equivalence is not None else "Unclassified"] += 1
    return counts
