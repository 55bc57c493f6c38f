"""Bounded exhaustive checker over an executable C subset.

The checker enumerates every input state of each function over a small
configurable integer domain, interprets the body concretely, and judges
each labeled clause independently:

- Requires clauses restrict only their own enumeration; they are refuted
  solely by violations observed at call sites in interpreted callers.
- Ensures clauses are evaluated against completed runs (scalar formals
  read their pre-state values, arrays their post-state contents).
- Loop invariants are evaluated at every loop-head visit: on reaching
  the loop and before each re-test of the condition.
- Assert clauses are evaluated each time control passes their anchor.

Calls into functions listed in the dependency region (between the
`SPSN_DEPS` markers) never execute bodies: the result is drawn from
every value admitted by the callee's annotated ensures clauses, and a
clause holds only if it holds under all such choices. Calls within the
checked region are interpreted directly.

Bounded-model conventions: ints are unbounded (no overflow), locals and
globals default to 0, casts are value-transparent, dependency calls
leave arrays and globals unmodified, and runs that fault (division by
zero, out-of-range index, missing return) are vacuous for ensures while
clause checks fired before the fault still count.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from specsyn import acsl
from specsyn.errors import SpecsynError
from specsyn.frontend import csyntax as cs
from specsyn.frontend.annotations import extract_annotations
from specsyn.frontend.parser import load_unit, parse_unit
from specsyn.verifiers.base import DEPS_END_MARKER, VerifierVerdict

_INT_WORDS = {"int", "char", "short", "long", "signed", "unsigned"}

_END = -1  # sentinel index for "after the last statement of a list"


def outward_ints(lo: int, hi: int) -> List[int]:
    """Values of [lo, hi] ordered by magnitude, positives first.

    The first counterexample reported by the checker is the first value
    in this order, so small, readable witnesses come out ahead of the
    domain edges.
    """
    return sorted(range(lo, hi + 1), key=lambda v: (abs(v), v < 0))


@dataclass
class MockDomain:
    """Enumeration bounds for the bounded checker."""

    int_min: int = -8
    int_max: int = 8
    array_len_max: int = 2
    loop_cap: int = 128
    call_depth_max: int = 12
    state_cap: int = 50_000
    choice_cap: int = 2_048

    def __post_init__(self) -> None:
        if self.int_min > self.int_max:
            raise ValueError("int_min must not exceed int_max")

    def int_values(self) -> List[int]:
        return outward_ints(self.int_min, self.int_max)

    def havoc_values(self) -> List[int]:
        # Dependency results may land outside the input domain (e.g. a
        # successor function applied at the domain edge), so the havoc
        # range is twice as wide.
        return outward_ints(min(2 * self.int_min, self.int_min),
                            max(2 * self.int_max, self.int_max))

    def quant_range(self) -> Tuple[int, int]:
        return (min(2 * self.int_min, self.int_min),
                max(2 * self.int_max, self.int_max))

    @classmethod
    def from_mapping(cls, values: Dict[str, int]) -> "MockDomain":
        unknown = set(values) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown domain settings: {sorted(unknown)}")
        return cls(**values)


# --- control-flow signals ----------------------------------------------------


class _BreakSig(Exception):
    pass


class _ContinueSig(Exception):
    pass


class _ReturnSig(Exception):
    def __init__(self, value):
        self.value = value


class _RunAbort(Exception):
    """Fault or contract-infeasible path: the run is vacuous."""


class _RunTimeout(Exception):
    pass


class _RunUnsupported(Exception):
    pass


class _ChoicePointExc(Exception):
    def __init__(self, options: List[int]):
        self.options = options


_VOID = object()
_BAD_GLOBAL = object()


# --- program loading ---------------------------------------------------------


@dataclass
class _Labeled:
    label: Optional[str]
    clause: acsl.Clause


@dataclass
class _AssertPoint:
    anchor: int
    labeled: _Labeled
    slot: Optional[Tuple[int, int]] = None  # (id(stmt list), index or _END)
    placed: bool = False


@dataclass
class _FnInfo:
    node: cs.FunctionDef
    modular: bool
    requires: List[_Labeled] = field(default_factory=list)
    ensures: List[_Labeled] = field(default_factory=list)
    invariants: Dict[int, List[_Labeled]] = field(default_factory=dict)
    asserts: List[_AssertPoint] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.node.name

    @property
    def is_void(self) -> bool:
        rt = self.node.return_type
        return rt.pointer_depth == 0 and "void" in rt.base_text.split()


def _walk_stmts(stmt):
    """Yield stmt and every statement nested below it."""
    stack = [stmt]
    while stack:
        s = stack.pop()
        if s is None:
            continue
        yield s
        if isinstance(s, cs.Block):
            stack.extend(s.stmts)
        elif isinstance(s, cs.If):
            stack.append(s.then)
            stack.append(s.other)
        elif isinstance(s, (cs.While, cs.DoWhile)):
            stack.append(s.body)
        elif isinstance(s, cs.For):
            stack.append(s.init)
            stack.append(s.body)
        elif isinstance(s, cs.Switch):
            for case in s.cases:
                stack.extend(case.stmts)


def _loops_in(fn: cs.FunctionDef) -> List[cs.Node]:
    if fn.body is None:
        return []
    loops = [s for s in _walk_stmts(fn.body) if isinstance(s, cs.Loop)]
    loops.sort(key=lambda n: n.start)
    return loops


def _place_anchor(anchor: int, stmt) -> Optional[Tuple[list, int]]:
    """Locate the statement-list slot an anchored assert fires in."""
    if isinstance(stmt, cs.Block):
        for i, child in enumerate(stmt.stmts):
            if anchor <= child.start:
                return (stmt.stmts, i)
            if anchor < child.end:
                return _place_anchor(anchor, child)
        if anchor <= stmt.end:
            return (stmt.stmts, _END)
        return None
    if isinstance(stmt, cs.If):
        if stmt.then.start <= anchor < stmt.then.end:
            return _place_anchor(anchor, stmt.then)
        if stmt.other is not None and stmt.other.start <= anchor < stmt.other.end:
            return _place_anchor(anchor, stmt.other)
        return None
    if isinstance(stmt, (cs.While, cs.DoWhile, cs.For)):
        body = stmt.body
        if body.start <= anchor < body.end:
            return _place_anchor(anchor, body)
        return None
    if isinstance(stmt, cs.Switch):
        for case in stmt.cases:
            for child in case.stmts:
                if child.start <= anchor < child.end:
                    return _place_anchor(anchor, child)
        return None
    return None


def _const_eval(expr, consts: Dict[str, int]) -> Optional[int]:
    if isinstance(expr, cs.IntLit):
        return expr.value
    if isinstance(expr, cs.CharLit):
        return expr.value
    if isinstance(expr, cs.Ident):
        return consts.get(expr.name)
    if isinstance(expr, cs.Unary) and expr.prefix:
        v = _const_eval(expr.operand, consts)
        if v is None:
            return None
        if expr.op == "-":
            return -v
        if expr.op == "+":
            return v
        if expr.op == "~":
            return ~v
        if expr.op == "!":
            return int(v == 0)
        return None
    if isinstance(expr, cs.Binary):
        a = _const_eval(expr.left, consts)
        b = _const_eval(expr.right, consts)
        if a is None or b is None:
            return None
        try:
            return _int_binop(expr.op, a, b)
        except (_RunAbort, _RunUnsupported):
            return None
    return None


def _clean_vars(mapping: Dict[str, object]) -> Dict[str, object]:
    """Drop unsupported-global sentinels so predicate evaluation sees
    only ints and lists; referencing a dropped name then reads as an
    unknown identifier."""
    return {k: v for k, v in mapping.items() if v is not _BAD_GLOBAL}


class _Program:
    """Parsed verification unit with clause attachments resolved."""

    def __init__(self, text: str):
        clean, blocks = extract_annotations(text)
        unit = load_unit(clean, path="<verify>")
        decls = parse_unit(unit)
        marker_pos = clean.find(DEPS_END_MARKER)

        self.consts: Dict[str, int] = {}
        self.globals_init: Dict[str, object] = {}
        self.functions: Dict[str, _FnInfo] = {}
        fn_order: List[_FnInfo] = []

        for decl in decls:
            node = decl.node
            if isinstance(node, cs.EnumDef):
                nxt = 0
                for mname, mexpr in node.members:
                    if mexpr is not None:
                        v = _const_eval(mexpr, self.consts)
                        if v is None:
                            v = nxt
                        nxt = v
                    self.consts[mname] = nxt
                    nxt += 1
            elif isinstance(node, cs.GlobalVar):
                if node.type.is_array or node.type.pointer_depth:
                    self.globals_init[node.name] = _BAD_GLOBAL
                elif node.init is None:
                    self.globals_init[node.name] = 0
                else:
                    v = _const_eval(node.init, self.consts)
                    self.globals_init[node.name] = _BAD_GLOBAL if v is None else v
            elif isinstance(node, cs.FunctionDef):
                modular = marker_pos >= 0 and node.start < marker_pos
                info = _FnInfo(node=node, modular=modular)
                self.functions[node.name] = info
                fn_order.append(info)

        self.fn_order = fn_order
        self.broken_blocks: List[str] = []
        loops_all: List[Tuple[cs.Node, _FnInfo]] = []
        for info in fn_order:
            for loop in _loops_in(info.node):
                loops_all.append((loop, info))
        loops_all.sort(key=lambda pair: pair[0].start)

        for block in blocks:
            try:
                clauses = acsl.parse_clause_sequence(block.inner)
            except acsl.ParseError as exc:
                self.broken_blocks.append(str(exc))
                continue
            for clause in clauses:
                labeled = _Labeled(clause.label, clause)
                if clause.kind in ("Requires", "Ensures"):
                    owner = self._fn_at_or_after(block.anchor)
                    if owner is None:
                        self.broken_blocks.append(
                            f"contract clause at offset {block.anchor} has no function")
                        continue
                    if clause.kind == "Requires":
                        owner.requires.append(labeled)
                    else:
                        owner.ensures.append(labeled)
                elif clause.kind == "LoopInvariant":
                    target = None
                    for loop, info in loops_all:
                        if loop.start >= block.anchor:
                            target = (loop, info)
                            break
                    if target is None:
                        self.broken_blocks.append(
                            f"loop invariant at offset {block.anchor} has no loop")
                        continue
                    loop, info = target
                    info.invariants.setdefault(id(loop), []).append(labeled)
                else:  # Assert
                    owner = self._fn_containing(block.anchor)
                    if owner is None:
                        self.broken_blocks.append(
                            f"assert at offset {block.anchor} is outside any function")
                        continue
                    point = _AssertPoint(anchor=block.anchor, labeled=labeled)
                    if owner.node.body is not None:
                        slot = _place_anchor(block.anchor, owner.node.body)
                        if slot is not None:
                            point.slot = (id(slot[0]), slot[1])
                            point.placed = True
                    owner.asserts.append(point)

        # Fire maps: (id(stmt list), index) -> assert points, in anchor order.
        self.fire_before: Dict[Tuple[int, int], List[_AssertPoint]] = {}
        for info in fn_order:
            info.asserts.sort(key=lambda p: p.anchor)
            for point in info.asserts:
                if point.placed:
                    self.fire_before.setdefault(point.slot, []).append(point)

    def _fn_at_or_after(self, anchor: int) -> Optional[_FnInfo]:
        best = None
        for info in self.fn_order:
            if info.node.start >= anchor:
                if best is None or info.node.start < best.node.start:
                    best = info
        return best

    def _fn_containing(self, anchor: int) -> Optional[_FnInfo]:
        for info in self.fn_order:
            if info.node.start <= anchor < info.node.end:
                return info
        return None


# --- clause bookkeeping ------------------------------------------------------


class _Outcome:
    """Accumulated evidence for one clause id, worst-first precedence."""

    def __init__(self, clause_id: str, label: str):
        self.clause_id = clause_id
        self.label = label
        self.violated: Optional[str] = None
        self.invalid: Optional[str] = None
        self.timed_out: Optional[str] = None

    @property
    def decided(self) -> bool:
        return self.violated is not None

    def mark_violation(self, diagnostic: str) -> None:
        if self.violated is None:
            self.violated = diagnostic

    def mark_invalid(self, reason: str) -> None:
        if self.invalid is None:
            self.invalid = reason

    def mark_timeout(self, reason: str) -> None:
        if self.timed_out is None:
            self.timed_out = reason

    def verdict(self) -> VerifierVerdict:
        if self.violated is not None:
            status, diag = "Unproved", self.violated
        elif self.invalid is not None:
            status, diag = "Invalid", self.invalid
        elif self.timed_out is not None:
            status, diag = "Timeout", self.timed_out
        else:
            status, diag = "Proved", "no counterexample found"
        return VerifierVerdict(clause_id=self.clause_id, status=status,
                               diagnostic=diag, goal_name=self.label)


def _fmt_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(str(x) for x in v) + "]"
    return str(v)


def _fmt_state(params: Sequence[cs.Param], args: Sequence) -> str:
    if not params:
        return "(no inputs)"
    return ", ".join(f"{p.name}={_fmt_value(a)}" for p, a in zip(params, args))


def _int_binop(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise _RunAbort()
        q = abs(a) // abs(b)
        return q if (a >= 0) == (b >= 0) else -q
    if op == "%":
        if b == 0:
            raise _RunAbort()
        q = abs(a) // abs(b)
        q = q if (a >= 0) == (b >= 0) else -q
        return a - q * b
    if op == "&":
        return a & b
    if op == "|":
        return a | b
    if op == "^":
        return a ^ b
    if op == "<<":
        if b < 0:
            raise _RunAbort()
        return a << b
    if op == ">>":
        if b < 0:
            raise _RunAbort()
        return a >> b
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    raise _RunUnsupported(f"operator {op!r}")


# --- input spaces ------------------------------------------------------------


class _SpaceError(Exception):
    pass


def _param_space(param: cs.Param, domain: MockDomain):
    """(count, factory) for one parameter; factory yields candidate values."""
    ty = param.type
    words = set(ty.base_text.split())
    int_like = bool(words & _INT_WORDS)
    ints = domain.int_values()
    if not int_like:
        raise _SpaceError(f"parameter {param.name!r} has unsupported type "
                          f"{ty.base_text!r}")
    if ty.is_array and ty.array_size is not None:
        n = ty.array_size
        if n < 0:
            raise _SpaceError(f"parameter {param.name!r} has negative size")
        count = len(ints) ** n
        return count, lambda: itertools.product(ints, repeat=n)
    if ty.is_array or ty.pointer_depth == 1:
        cap = domain.array_len_max
        count = sum(len(ints) ** k for k in range(cap + 1))

        def gen():
            for k in range(cap + 1):
                yield from itertools.product(ints, repeat=k)
        return count, gen
    if ty.pointer_depth:
        raise _SpaceError(f"parameter {param.name!r}: multi-level pointers "
                          "are unsupported")
    return len(ints), lambda: iter(ints)


# --- the interpreter ---------------------------------------------------------


class _Activation:
    __slots__ = ("info", "scopes", "old", "pre_scalars", "entry_arrays")

    def __init__(self, info: _FnInfo):
        self.info = info
        self.scopes: List[dict] = [{}]
        self.old: Dict[str, object] = {}
        self.pre_scalars: Dict[str, int] = {}
        self.entry_arrays: Dict[str, list] = {}


class _Interp:
    def __init__(self, program: _Program, domain: MockDomain, checker: "_Checker"):
        self.program = program
        self.domain = domain
        self.checker = checker
        self.globals: Dict[str, object] = {}
        self.acts: List[_Activation] = []
        self.loop_iters = 0
        self.script: List[int] = []
        self.script_pos = 0

    # -- run driver --

    def run_top(self, info: _FnInfo, args: Sequence, script: List[int]):
        self.globals = dict(self.program.globals_init)
        self.acts = []
        self.loop_iters = 0
        self.script = script
        self.script_pos = 0
        return self._call_interpreted(info, [
            list(a) if isinstance(a, tuple) else a for a in args
        ])

    def _pick(self, options: List[int]) -> int:
        if self.script_pos < len(self.script):
            v = self.script[self.script_pos]
            self.script_pos += 1
            return v
        raise _ChoicePointExc(options)

    # -- calls --

    def _call_interpreted(self, info: _FnInfo, argvals: List[object]):
        if len(self.acts) >= self.domain.call_depth_max:
            raise _RunTimeout(f"call depth cap {self.domain.call_depth_max} exceeded")
        act = _Activation(info)
        params = info.node.params
        if len(params) != len(argvals):
            raise _RunUnsupported(
                f"call to {info.name!r} with {len(argvals)} arguments, "
                f"expected {len(params)}")
        for p, v in zip(params, argvals):
            act.scopes[0][p.name] = v
            if isinstance(v, list):
                act.entry_arrays[p.name] = v
                act.old[p.name] = list(v)
            else:
                act.pre_scalars[p.name] = v
                act.old[p.name] = v
        for gname, gval in _clean_vars(self.globals).items():
            act.old[gname] = gval
        self.acts.append(act)
        try:
            ret = _VOID
            try:
                self._exec_block(info.node.body)
            except _ReturnSig as sig:
                ret = sig.value if sig.value is not None else _VOID
            except (_BreakSig, _ContinueSig):
                raise _RunAbort()  # break/continue outside any loop: not a C program
            if ret is _VOID and not info.is_void:
                raise _RunAbort()  # fell off the end of a value-returning body
            return ret, act
        finally:
            self.acts.pop()

    def _call_modular(self, info: _FnInfo, argvals: List[object]):
        if info.is_void:
            return _VOID
        binds: Dict[str, object] = _clean_vars(self.globals)
        old: Dict[str, object] = _clean_vars(self.globals)
        for p, v in zip(info.node.params, argvals):
            binds[p.name] = v
            old[p.name] = list(v) if isinstance(v, list) else v
        options: List[int] = []
        constraints = [lc.clause for lc in info.ensures]
        for cand in self.domain.havoc_values():
            env = acsl.EvalEnv(vars=binds, old=old, result=cand,
                               has_result=True,
                               quant_range=self.domain.quant_range())
            admitted = True
            for clause in constraints:
                try:
                    if not acsl.eval_predicate(clause.node, env):
                        admitted = False
                        break
                except acsl.PredicateError:
                    # An unevaluable contract clause constrains nothing.
                    continue
            if admitted:
                options.append(cand)
        if not options:
            raise _RunAbort()  # contract admits no result here: path infeasible
        if len(options) == 1:
            return options[0]
        return self._pick(options)

    # -- environments for clause evaluation --

    def _visible_env(self) -> acsl.EvalEnv:
        act = self.acts[-1]
        merged: Dict[str, object] = dict(self.program.consts)
        merged.update(_clean_vars(self.globals))
        for scope in act.scopes:
            merged.update(scope)
        return acsl.EvalEnv(vars=merged, old=dict(act.old), result=None,
                            has_result=False,
                            quant_range=self.domain.quant_range())

    def ensures_env(self, act: _Activation, ret) -> acsl.EvalEnv:
        merged: Dict[str, object] = dict(self.program.consts)
        merged.update(_clean_vars(self.globals))
        for p in act.info.node.params:
            if p.name in act.entry_arrays:
                merged[p.name] = act.entry_arrays[p.name]
            elif p.name in act.pre_scalars:
                merged[p.name] = act.pre_scalars[p.name]
        old = dict(self.program.consts)
        old.update(act.old)
        return acsl.EvalEnv(vars=merged, old=old,
                            result=None if ret is _VOID else ret,
                            has_result=ret is not _VOID,
                            quant_range=self.domain.quant_range())

    # -- statements --

    def _exec_block(self, blk: cs.Block) -> None:
        act = self.acts[-1]
        act.scopes.append({})
        try:
            self._exec_seq(blk.stmts)
        finally:
            act.scopes.pop()

    def _fire_slot(self, stmts: list, index: int) -> None:
        points = self.program.fire_before.get((id(stmts), index))
        if points:
            env = self._visible_env()
            for point in points:
                self.checker.check_point(point.labeled, env, self)

    def _exec_seq(self, stmts: list) -> None:
        for i, stmt in enumerate(stmts):
            self._fire_slot(stmts, i)
            self._exec_stmt(stmt)
        self._fire_slot(stmts, _END)

    def _exec_stmt(self, stmt) -> None:
        if isinstance(stmt, cs.Block):
            self._exec_block(stmt)
        elif isinstance(stmt, cs.ExprStmt):
            self._eval(stmt.expr)
        elif isinstance(stmt, cs.LocalDecl):
            self._exec_decl(stmt)
        elif isinstance(stmt, cs.If):
            if self._truthy(self._eval(stmt.cond)):
                self._exec_stmt(stmt.then)
            elif stmt.other is not None:
                self._exec_stmt(stmt.other)
        elif isinstance(stmt, cs.While):
            self._exec_while(stmt)
        elif isinstance(stmt, cs.DoWhile):
            self._exec_do_while(stmt)
        elif isinstance(stmt, cs.For):
            self._exec_for(stmt)
        elif isinstance(stmt, cs.Switch):
            self._exec_switch(stmt)
        elif isinstance(stmt, cs.Return):
            raise _ReturnSig(self._eval(stmt.value) if stmt.value is not None else None)
        elif isinstance(stmt, cs.Break):
            raise _BreakSig()
        elif isinstance(stmt, cs.Continue):
            raise _ContinueSig()
        else:
            raise _RunUnsupported(f"statement {type(stmt).__name__}")

    def _exec_decl(self, stmt: cs.LocalDecl) -> None:
        scope = self.acts[-1].scopes[-1]
        for d in stmt.declarators:
            ty = d.type
            if ty.is_array:
                if isinstance(d.init, cs.InitList):
                    items = [self._as_int(self._eval(e)) for e in d.init.items]
                    size = ty.array_size if ty.array_size is not None else len(items)
                    if len(items) > size:
                        raise _RunUnsupported(
                            f"initializer longer than array {d.name!r}")
                    scope[d.name] = items + [0] * (size - len(items))
                elif ty.array_size is not None:
                    scope[d.name] = [0] * ty.array_size
                else:
                    raise _RunUnsupported(f"unsized local array {d.name!r}")
            elif ty.pointer_depth:
                if d.init is None:
                    raise _RunUnsupported(f"uninitialized pointer {d.name!r}")
                val = self._eval(d.init)
                if not isinstance(val, list):
                    raise _RunUnsupported(f"pointer {d.name!r} not bound to an array")
                scope[d.name] = val
            else:
                scope[d.name] = self._as_int(self._eval(d.init)) if d.init is not None else 0

    def _bump_loop(self) -> None:
        self.loop_iters += 1
        if self.loop_iters > self.domain.loop_cap:
            raise _RunTimeout(f"loop iteration cap {self.domain.loop_cap} exceeded")

    def _fire_invariants(self, loop) -> None:
        labeled = self.acts[-1].info.invariants.get(id(loop))
        if labeled:
            env = self._visible_env()
            for lc in labeled:
                self.checker.check_point(lc, env, self)

    def _exec_while(self, stmt: cs.While) -> None:
        while True:
            self._fire_invariants(stmt)
            if not self._truthy(self._eval(stmt.cond)):
                return
            self._bump_loop()
            try:
                self._exec_stmt(stmt.body)
            except _BreakSig:
                return
            except _ContinueSig:
                pass

    def _exec_do_while(self, stmt: cs.DoWhile) -> None:
        self._fire_invariants(stmt)
        while True:
            self._bump_loop()
            try:
                self._exec_stmt(stmt.body)
            except _BreakSig:
                return
            except _ContinueSig:
                pass
            self._fire_invariants(stmt)
            if not self._truthy(self._eval(stmt.cond)):
                return

    def _exec_for(self, stmt: cs.For) -> None:
        act = self.acts[-1]
        act.scopes.append({})
        try:
            if stmt.init is not None:
                self._exec_stmt(stmt.init)
            while True:
                self._fire_invariants(stmt)
                if stmt.cond is not None and not self._truthy(self._eval(stmt.cond)):
                    return
                self._bump_loop()
                try:
                    self._exec_stmt(stmt.body)
                except _BreakSig:
                    return
                except _ContinueSig:
                    pass
                if stmt.update is not None:
                    self._eval(stmt.update)
        finally:
            act.scopes.pop()

    def _exec_switch(self, stmt: cs.Switch) -> None:
        value = self._as_int(self._eval(stmt.value))
        start = None
        default = None
        for ci, case in enumerate(stmt.cases):
            for label in case.labels:
                if label is None:
                    if default is None:
                        default = ci
                elif start is None:
                    lv = self._as_int(self._eval(label))
                    if lv == value:
                        start = ci
            if start is not None:
                break
        if start is None:
            start = default
        if start is None:
            return
        try:
            for case in stmt.cases[start:]:
                self._exec_seq(case.stmts)
        except _BreakSig:
            return

    # -- expressions --

    def _truthy(self, v) -> bool:
        return self._as_int(v) != 0

    def _as_int(self, v) -> int:
        if v is _VOID:
            raise _RunUnsupported("void value used in an expression")
        if isinstance(v, bool):
            return int(v)
        if isinstance(v, int):
            return v
        if isinstance(v, list):
            raise _RunUnsupported("array value used as a scalar")
        raise _RunUnsupported(f"unsupported value {v!r}")

    def _lookup(self, name: str):
        act = self.acts[-1]
        for scope in reversed(act.scopes):
            if name in scope:
                return scope[name]
        if name in self.globals:
            v = self.globals[name]
            if v is _BAD_GLOBAL:
                raise _RunUnsupported(f"global {name!r} has an unsupported type "
                                      "or initializer")
            return v
        if name in self.program.consts:
            return self.program.consts[name]
        raise _RunUnsupported(f"unknown identifier {name!r}")

    def _store(self, name: str, value) -> None:
        act = self.acts[-1]
        for scope in reversed(act.scopes):
            if name in scope:
                scope[name] = value
                return
        if name in self.globals:
            if self.globals[name] is _BAD_GLOBAL:
                raise _RunUnsupported(f"global {name!r} has an unsupported type")
            self.globals[name] = value
            return
        raise _RunUnsupported(f"assignment to unknown identifier {name!r}")

    def _eval(self, expr):
        if isinstance(expr, cs.IntLit):
            return expr.value
        if isinstance(expr, cs.CharLit):
            return expr.value
        if isinstance(expr, cs.FloatLit):
            raise _RunUnsupported("floating-point literal")
        if isinstance(expr, cs.StrLit):
            raise _RunUnsupported("string literal")
        if isinstance(expr, cs.Ident):
            return self._lookup(expr.name)
        if isinstance(expr, cs.Unary):
            return self._eval_unary(expr)
        if isinstance(expr, cs.Binary):
            return self._eval_binary(expr)
        if isinstance(expr, cs.Assign):
            return self._eval_assign(expr)
        if isinstance(expr, cs.Ternary):
            if self._truthy(self._eval(expr.cond)):
                return self._eval(expr.then)
            return self._eval(expr.other)
        if isinstance(expr, cs.Call):
            return self._eval_call(expr)
        if isinstance(expr, cs.Index):
            base, idx = self._index_ref(expr)
            return base[idx]
        if isinstance(expr, cs.CastExpr):
            return self._eval(expr.operand)
        if isinstance(expr, cs.Member):
            raise _RunUnsupported("struct member access")
        if isinstance(expr, cs.SizeofExpr):
            raise _RunUnsupported("sizeof")
        if isinstance(expr, cs.InitList):
            raise _RunUnsupported("initializer list outside a declaration")
        raise _RunUnsupported(f"expression {type(expr).__name__}")

    def _index_ref(self, expr: cs.Index):
        base = self._eval(expr.base)
        if not isinstance(base, list):
            raise _RunUnsupported("indexing a non-array value")
        idx = self._as_int(self._eval(expr.index))
        if idx < 0 or idx >= len(base):
            raise _RunAbort()  # out-of-range access faults the run
        return base, idx

    def _eval_unary(self, expr: cs.Unary):
        if expr.op in ("++", "--"):
            delta = 1 if expr.op == "++" else -1
            old = self._read_lvalue(expr.operand)
            self._write_lvalue(expr.operand, old + delta)
            return old + delta if expr.prefix else old
        v = self._eval(expr.operand)
        if expr.op == "-":
            return -self._as_int(v)
        if expr.op == "+":
            return +self._as_int(v)
        if expr.op == "~":
            return ~self._as_int(v)
        if expr.op == "!":
            return int(self._as_int(v) == 0)
        if expr.op in ("*", "&"):
            raise _RunUnsupported(f"pointer operator {expr.op!r}")
        raise _RunUnsupported(f"unary operator {expr.op!r}")

    def _eval_binary(self, expr: cs.Binary):
        if expr.op == "&&":
            if not self._truthy(self._eval(expr.left)):
                return 0
            return int(self._truthy(self._eval(expr.right)))
        if expr.op == "||":
            if self._truthy(self._eval(expr.left)):
                return 1
            return int(self._truthy(self._eval(expr.right)))
        a = self._eval(expr.left)
        b = self._eval(expr.right)
        if isinstance(a, list) or isinstance(b, list):
            raise _RunUnsupported("array value in arithmetic")
        return _int_binop(expr.op, self._as_int(a), self._as_int(b))

    def _read_lvalue(self, target):
        if isinstance(target, cs.Ident):
            return self._as_int(self._lookup(target.name))
        if isinstance(target, cs.Index):
            base, idx = self._index_ref(target)
            return base[idx]
        raise _RunUnsupported("unsupported assignment target")

    def _write_lvalue(self, target, value) -> None:
        if isinstance(target, cs.Ident):
            current = self._lookup(target.name)
            if isinstance(current, list):
                raise _RunUnsupported("assignment to an array variable")
            self._store(target.name, value)
            return
        if isinstance(target, cs.Index):
            base, idx = self._index_ref(target)
            base[idx] = value
            return
        raise _RunUnsupported("unsupported assignment target")

    def _eval_assign(self, expr: cs.Assign):
        if expr.op == "=":
            value = self._eval(expr.value)
            if isinstance(value, list):
                if isinstance(expr.target, cs.Ident):
                    self._store(expr.target.name, value)
                    return value
                raise _RunUnsupported("array assignment to a non-variable")
            value = self._as_int(value)
            self._write_lvalue(expr.target, value)
            return value
        op = expr.op[:-1]
        old = self._read_lvalue(expr.target)
        value = _int_binop(op, old, self._as_int(self._eval(expr.value)))
        self._write_lvalue(expr.target, value)
        return value

    def _eval_call(self, expr: cs.Call):
        if not isinstance(expr.callee, cs.Ident):
            raise _RunUnsupported("indirect call")
        name = expr.callee.name
        info = self.program.functions.get(name)
        if info is None:
            raise _RunUnsupported(f"call to unknown function {name!r}")
        argvals = [self._eval(a) for a in expr.args]
        self.checker.check_call_requires(info, argvals, self)
        if info.modular or info.node.body is None:
            if info.node.body is None and not info.modular:
                raise _RunUnsupported(f"call to undefined function {name!r}")
            return self._call_modular(info, argvals)
        ret, _act = self._call_interpreted(
            info, [list(v) if isinstance(v, tuple) else v for v in argvals])
        return ret


# --- the checker -------------------------------------------------------------


class _Checker:
    def __init__(self, program: _Program, domain: MockDomain,
                 outcomes: Dict[str, _Outcome]):
        self.program = program
        self.domain = domain
        self.outcomes = outcomes
        self.state_desc = ""

    def _outcome_for(self, labeled: _Labeled) -> Optional[_Outcome]:
        if labeled.label is None:
            return None
        return self.outcomes.get(labeled.label)

    def check_point(self, labeled: _Labeled, env: acsl.EvalEnv, interp) -> None:
        """Evaluate an invariant or assert clause at its program point."""
        out = self._outcome_for(labeled)
        if out is None or out.decided:
            return
        try:
            ok = acsl.eval_predicate(labeled.clause.node, env)
        except acsl.PredicateError as exc:
            if exc.category == "state":
                out.mark_violation(f"counterexample: {self.state_desc}")
            else:
                out.mark_invalid(str(exc))
            return
        if not ok:
            out.mark_violation(f"counterexample: {self.state_desc}")

    def check_call_requires(self, callee: _FnInfo, argvals, interp) -> None:
        pending = [lc for lc in callee.requires
                   if lc.label in self.outcomes and not self.outcomes[lc.label].decided]
        if not pending:
            return
        binds: Dict[str, object] = dict(self.program.consts)
        binds.update(_clean_vars(interp.globals))
        for p, v in zip(callee.node.params, argvals):
            binds[p.name] = v
        env = acsl.EvalEnv(vars=binds, old=None, result=None, has_result=False,
                           quant_range=self.domain.quant_range())
        for lc in pending:
            self.check_point(lc, env, interp)

    def check_requires_wellformed(self, info: _FnInfo, env: acsl.EvalEnv) -> None:
        """Self-enumeration of requires clauses: a requires restricts its
        own inputs, so a false value only excludes the state; eval errors
        other than state errors invalidate the clause."""
        for lc in info.requires:
            out = self._outcome_for(lc)
            if out is None or out.decided or out.invalid is not None:
                continue
            try:
                acsl.eval_predicate(lc.clause.node, env)
            except acsl.PredicateError as exc:
                if exc.category != "state":
                    out.mark_invalid(str(exc))

    def check_ensures(self, info: _FnInfo, env: acsl.EvalEnv) -> None:
        for lc in info.ensures:
            out = self._outcome_for(lc)
            if out is None or out.decided:
                continue
            try:
                ok = acsl.eval_predicate(lc.clause.node, env)
            except acsl.PredicateError as exc:
                if exc.category == "state":
                    out.mark_violation(f"counterexample: {self.state_desc}")
                else:
                    out.mark_invalid(str(exc))
                continue
            if not ok:
                out.mark_violation(f"counterexample: {self.state_desc}")


# --- the public verifier -----------------------------------------------------


def _clause_id(clause) -> str:
    if isinstance(clause, str):
        return clause
    return clause.id


class MockVerifier:
    """Deterministic bounded checker with Frama-C-shaped verdicts."""

    def __init__(self, domain: Optional[MockDomain] = None):
        self.domain = domain or MockDomain()

    def verify(self, program_text, clauses: Sequence,
               clause_labels: Optional[Dict[str, str]] = None) -> List[VerifierVerdict]:
        """Judge each clause id against the program; one verdict per clause.

        `program_text` is either instrumented text or an object carrying
        `.text` and `.clause_labels`. Verdicts come back in input order
        and every clause receives exactly one.
        """
        text = getattr(program_text, "text", program_text)
        if clause_labels is None:
            clause_labels = getattr(program_text, "clause_labels", None) or {}
        ids = [_clause_id(c) for c in clauses]
        label_of = {cid: clause_labels.get(cid, f"SPSN_{cid}") for cid in ids}

        outcomes: Dict[str, _Outcome] = {}
        for cid in ids:
            label = label_of[cid]
            if label not in outcomes:
                outcomes[label] = _Outcome(cid, label)

        try:
            program = _Program(text)
        except SpecsynError as exc:
            return [VerifierVerdict(clause_id=cid, status="Invalid",
                                    diagnostic=f"program rejected: {exc}",
                                    goal_name=label_of[cid])
                    for cid in ids]

        self._check_program(program, outcomes)
        return [outcomes[label_of[cid]].verdict() for cid in ids]

    # -- internals --

    def _check_program(self, program: _Program, outcomes: Dict[str, _Outcome]) -> None:
        under_check = set(outcomes)
        found: set = set()
        fn_of_label: Dict[str, _FnInfo] = {}
        for info in program.fn_order:
            attached = self._attached_labels(info)
            for label in attached:
                if label in under_check:
                    found.add(label)
                    fn_of_label[label] = info

        any_requires = any(
            lc.label in under_check
            for info in program.fn_order for lc in info.requires)

        checker = _Checker(program, self.domain, outcomes)
        for info in program.fn_order:
            if info.modular or info.node.body is None:
                continue
            has_own = any(label in under_check
                          for label in self._attached_labels(info))
            if not (has_own or any_requires):
                continue
            self._enumerate_function(program, info, checker, under_check)

        for label, out in outcomes.items():
            if out.decided or out.invalid is not None or out.timed_out is not None:
                continue
            if label not in found:
                out.mark_invalid("labeled clause not present in program text")
            elif fn_of_label[label].modular:
                out.mark_invalid("clause is attached to dependency context")
            elif fn_of_label[label].node.body is None:
                out.mark_invalid("clause is attached to a bodyless function")

        for label in under_check & found:
            out = outcomes[label]
            info = fn_of_label[label]
            for point in info.asserts:
                if point.labeled.label == label and not point.placed and not out.decided:
                    out.mark_invalid("assert anchor is at an unsupported position")

    def _attached_labels(self, info: _FnInfo) -> List[str]:
        labels = [lc.label for lc in info.requires + info.ensures]
        for group in info.invariants.values():
            labels.extend(lc.label for lc in group)
        labels.extend(p.labeled.label for p in info.asserts)
        return [l for l in labels if l is not None]

    def _own_outcomes(self, info: _FnInfo, outcomes) -> List[_Outcome]:
        return [outcomes[l] for l in self._attached_labels(info) if l in outcomes]

    def _enumerate_function(self, program: _Program, info: _FnInfo,
                            checker: _Checker, under_check) -> None:
        own = self._own_outcomes(info, checker.outcomes)
        try:
            spaces = [_param_space(p, self.domain) for p in info.node.params]
        except _SpaceError as exc:
            for out in own:
                out.mark_invalid(str(exc))
            return
        total = 1
        for count, _factory in spaces:
            total *= count
        if total > self.domain.state_cap:
            for out in own:
                out.mark_timeout(f"state space of {info.name!r} has {total} states, "
                                 f"cap is {self.domain.state_cap}")
            return

        interp = _Interp(program, self.domain, checker)
        own_requires = [lc for lc in info.requires if lc.label in under_check]

        for args in itertools.product(*(factory() for _count, factory in spaces)):
            checker.state_desc = _fmt_state(info.node.params, args)
            if own_requires:
                binds: Dict[str, object] = dict(program.consts)
                binds.update(_clean_vars(program.globals_init))
                for p, v in zip(info.node.params, args):
                    binds[p.name] = list(v) if isinstance(v, tuple) else v
                env = acsl.EvalEnv(vars=binds, old=None, result=None,
                                   has_result=False,
                                   quant_range=self.domain.quant_range())
                checker.check_requires_wellformed(info, env)

            scripts: List[List[int]] = [[]]
            runs = 0
            while scripts:
                script = scripts.pop()
                runs += 1
                if runs > self.domain.choice_cap:
                    for out in own:
                        out.mark_timeout(f"choice budget {self.domain.choice_cap} "
                                         f"exceeded in {info.name!r}")
                    scripts = []
                    break
                try:
                    ret, act = interp.run_top(info, args, script)
                except _ChoicePointExc as cp:
                    for v in reversed(cp.options):
                        scripts.append(script + [v])
                    continue
                except _RunAbort:
                    continue
                except _RunTimeout as exc:
                    for out in own:
                        out.mark_timeout(str(exc))
                    continue
                except _RunUnsupported as exc:
                    for out in own:
                        out.mark_invalid(str(exc))
                    continue
                env = interp.ensures_env(act, ret)
                checker.state_desc = _fmt_state(info.node.params, args)
                checker.check_ensures(info, env)


def mock_check(program_text, clause, domain: Optional[MockDomain] = None,
               clause_labels: Optional[Dict[str, str]] = None) -> VerifierVerdict:
    """Check a single clause id; convenience wrapper over MockVerifier."""
    return MockVerifier(domain).verify(program_text, [clause], clause_labels)[0]
