"""ACSL clause subset: parsing, normalization, and bounded evaluation.

The supported clause kinds are requires, ensures, loop invariant, and
assert. Predicates cover integer arithmetic, comparisons (including
ACSL comparison chains like `0 <= i < n`), boolean connectives with
`==>` and `<==>`, `\\result`, `\\old(...)`, integer quantifiers, array
indexing, and a few evaluable builtins (`\\abs`, `\\min`, `\\max`).
Memory predicates such as `\\valid` parse but cannot be evaluated; the
bounded checker reports them as invalid while an external prover is
free to handle them.

Evaluation is short-circuiting for `&&`, `||`, `==>` and the ternary
operator, which is what makes guarded array accesses like
`0 <= k < n ==> a[k] >= 0` safe to enumerate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from specsyn.errors import ParseError, SpecsynError

CLAUSE_KINDS = ("Requires", "Ensures", "LoopInvariant", "Assert")

_KIND_BY_KEYWORD = {
    "requires": "Requires",
    "ensures": "Ensures",
    "assert": "Assert",
}


class PredicateError(SpecsynError):
    """Evaluation failure, tagged with why.

    category "unsupported": construct outside the bounded model
    (memory predicates, calls, reals) — the clause cannot be checked.
    category "ill_formed": the predicate does not fit its context
    (unknown identifier, \\result without a value).
    category "state": the predicate is checkable but this concrete
    state trips undefined behavior (index out of range, division by
    zero) — counts as a failed state, with this reason attached.
    """

    def __init__(self, reason: str, category: str):
        super().__init__(reason)
        self.reason = reason
        self.category = category


# --- tokens -------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<int>0[xX][0-9a-fA-F]+|\d+)
  | (?P<bsident>\\[A-Za-z_]\w*)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<op><==>|==>|\.\.|<<|>>|<=|>=|==|!=|&&|\|\||[-+*/%()\[\],;:?!~&|^<>.])
""", re.VERBOSE)


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"bad character {text[pos]!r} in ACSL text", column=pos + 1)
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append((m.lastgroup, m.group(), m.start()))
    return tokens


def normalize_clause_text(text: str) -> str:
    """Canonical dedup key: single-space token joining, no trailing ';'.

    ACSL is case-sensitive, so case is preserved; only whitespace and
    token spacing are canonicalized.
    """
    tokens = [t[1] for t in _tokenize(text)]
    while tokens and tokens[-1] == ";":
        tokens.pop()
    return " ".join(tokens)


# --- predicate syntax tree ------------------------------------------------------


@dataclass
class PInt:
    value: int


@dataclass
class PBool:
    value: bool


@dataclass
class PIdent:
    name: str


@dataclass
class PResult:
    pass


@dataclass
class POld:
    operand: "PNode"


@dataclass
class PUnary:
    op: str
    operand: "PNode"


@dataclass
class PBinary:
    op: str
    left: "PNode"
    right: "PNode"


@dataclass
class PChain:
    """Comparison chain `e0 op1 e1 op2 e2 ...`, conjunction semantics."""

    operands: List["PNode"]
    ops: List[str]


@dataclass
class PTernary:
    cond: "PNode"
    then: "PNode"
    other: "PNode"


@dataclass
class PQuant:
    quantifier: str  # "forall" or "exists"
    variables: List[str]
    body: "PNode"


@dataclass
class PIndex:
    base: "PNode"
    index: "PNode"


@dataclass
class PCall:
    name: str  # backslash name, e.g. "\\valid"
    args: List["PNode"]


@dataclass
class PRange:
    low: "PNode"
    high: "PNode"


PNode = Union[PInt, PBool, PIdent, PResult, POld, PUnary, PBinary, PChain,
              PTernary, PQuant, PIndex, PCall, PRange]


@dataclass
class Clause:
    """One parsed ACSL clause."""

    kind: str  # element of CLAUSE_KINDS
    predicate: str  # predicate text, without label or trailing ';'
    node: PNode
    label: Optional[str] = None

    @property
    def keyword(self) -> str:
        return {"Requires": "requires", "Ensures": "ensures",
                "LoopInvariant": "loop invariant", "Assert": "assert"}[self.kind]


# --- parser ---------------------------------------------------------------------

_REL_OPS = {"<", "<=", ">", ">=", "==", "!="}
_ASC = {"<", "<=", "=="}
_DESC = {">", ">=", "=="}
_QUANT_TYPE_WORDS = {"integer", "int", "long", "short", "char", "unsigned", "signed"}


class _PredParser:
    def __init__(self, tokens, text: str):
        self.toks = tokens
        self.text = text
        self.i = 0

    def peek(self, offset=0):
        j = self.i + offset
        if j < len(self.toks):
            return self.toks[j]
        return ("eof", "", len(self.text))

    def advance(self):
        tok = self.peek()
        if tok[0] != "eof":
            self.i += 1
        return tok

    def at(self, text) -> bool:
        return self.peek()[1] == text

    def expect(self, text):
        tok = self.peek()
        if tok[1] != text:
            self.fail(f"expected {text!r}, found {tok[1]!r}")
        return self.advance()

    def fail(self, message):
        raise ParseError(f"{message} in {self.text!r}", column=self.peek()[2] + 1)

    def parse_full(self) -> PNode:
        node = self.parse_pred()
        if self.peek()[0] != "eof":
            self.fail(f"unexpected trailing {self.peek()[1]!r}")
        return node

    def parse_pred(self) -> PNode:
        return self._iff()

    def _iff(self) -> PNode:
        node = self._implies()
        while self.at("<==>"):
            self.advance()
            node = PBinary("<==>", node, self._implies())
        return node

    def _implies(self) -> PNode:
        node = self._ternary()
        if self.at("==>"):
            self.advance()
            return PBinary("==>", node, self._implies())  # right associative
        return node

    def _ternary(self) -> PNode:
        node = self._or()
        if self.at("?"):
            self.advance()
            then = self.parse_pred()
            self.expect(":")
            other = self._ternary()
            return PTernary(node, then, other)
        return node

    def _or(self) -> PNode:
        node = self._and()
        while self.at("||"):
            self.advance()
            node = PBinary("||", node, self._and())
        return node

    def _and(self) -> PNode:
        node = self._bitor()
        while self.at("&&"):
            self.advance()
            node = PBinary("&&", node, self._bitor())
        return node

    def _bitor(self) -> PNode:
        node = self._bitxor()
        while self.at("|"):
            self.advance()
            node = PBinary("|", node, self._bitxor())
        return node

    def _bitxor(self) -> PNode:
        node = self._bitand()
        while self.at("^"):
            self.advance()
            node = PBinary("^", node, self._bitand())
        return node

    def _bitand(self) -> PNode:
        node = self._comparison()
        while self.at("&"):
            self.advance()
            node = PBinary("&", node, self._comparison())
        return node

    def _comparison(self) -> PNode:
        node = self._shift()
        ops: List[str] = []
        operands = [node]
        while self.peek()[1] in _REL_OPS:
            op = self.advance()[1]
            ops.append(op)
            operands.append(self._shift())
        if not ops:
            return node
        if len(ops) > 1:
            if not (all(o in _ASC for o in ops) or all(o in _DESC for o in ops)):
                self.fail(f"mixed-direction comparison chain {ops!r}")
        if len(ops) == 1:
            return PBinary(ops[0], operands[0], operands[1])
        return PChain(operands, ops)

    def _shift(self) -> PNode:
        node = self._additive()
        while self.peek()[1] in ("<<", ">>"):
            op = self.advance()[1]
            node = PBinary(op, node, self._additive())
        if self.at(".."):
            self.advance()
            return PRange(node, self._additive())
        return node

    def _additive(self) -> PNode:
        node = self._multiplicative()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = PBinary(op, node, self._multiplicative())
        return node

    def _multiplicative(self) -> PNode:
        node = self._unary()
        while self.peek()[1] in ("*", "/", "%"):
            op = self.advance()[1]
            node = PBinary(op, node, self._unary())
        return node

    def _unary(self) -> PNode:
        tok = self.peek()
        if tok[1] in ("!", "-", "+", "~", "*"):
            self.advance()
            return PUnary(tok[1], self._unary())
        return self._postfix()

    def _postfix(self) -> PNode:
        node = self._primary()
        while True:
            if self.at("["):
                self.advance()
                index = self.parse_pred()
                self.expect("]")
                node = PIndex(node, index)
            elif self.at("."):
                self.advance()
                name = self.advance()
                node = PCall("\\field", [node, PIdent(name[1])])
            else:
                return node

    def _primary(self) -> PNode:
        kind, text, pos = self.peek()
        if kind == "int":
            self.advance()
            return PInt(int(text, 0))
        if kind == "bsident":
            return self._backslash()
        if kind == "ident":
            self.advance()
            if self.at("("):
                self.fail(f"C function call {text!r} not allowed in predicates")
            return PIdent(text)
        if text == "(":
            self.advance()
            node = self.parse_pred()
            self.expect(")")
            return node
        self.fail(f"expected a term, found {text!r}")

    def _backslash(self) -> PNode:
        _, name, _ = self.advance()
        if name == "\\result":
            return PResult()
        if name == "\\true":
            return PBool(True)
        if name == "\\false":
            return PBool(False)
        if name in ("\\forall", "\\exists"):
            type_tok = self.advance()
            if type_tok[1] not in _QUANT_TYPE_WORDS:
                self.fail(f"unsupported quantifier type {type_tok[1]!r}")
            variables = []
            while True:
                var = self.advance()
                if var[0] != "ident":
                    self.fail("expected bound variable name")
                variables.append(var[1])
                if self.at(","):
                    self.advance()
                    continue
                break
            self.expect(";")
            body = self.parse_pred()
            return PQuant(name[1:], variables, body)
        if name == "\\old":
            self.expect("(")
            operand = self.parse_pred()
            self.expect(")")
            return POld(operand)
        if self.at("("):
            self.advance()
            args = []
            if not self.at(")"):
                while True:
                    args.append(self.parse_pred())
                    if self.at(","):
                        self.advance()
                        continue
                    break
            self.expect(")")
            return PCall(name, args)
        self.fail(f"unsupported ACSL construct {name!r}")


def parse_predicate(text: str) -> PNode:
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty predicate")
    return _PredParser(tokens, text).parse_full()


def parse_clause_sequence(text: str) -> List[Clause]:
    """Parse a run of clauses, as found inside one annotation block.

    Clauses are separated by top-level semicolons; the semicolon inside
    a quantifier binder is consumed by the binder itself and never
    splits a clause.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty clause text")
    parser = _PredParser(tokens, text)
    clauses: List[Clause] = []
    while parser.peek()[0] != "eof":
        kind_tok = parser.advance()
        if kind_tok[0] != "ident":
            parser.fail(f"expected a clause keyword, found {kind_tok[1]!r}")
        if kind_tok[1] == "loop":
            inv = parser.advance()
            if inv[1] != "invariant":
                parser.fail(f"unsupported loop clause 'loop {inv[1]}'")
            kind = "LoopInvariant"
        elif kind_tok[1] in _KIND_BY_KEYWORD:
            kind = _KIND_BY_KEYWORD[kind_tok[1]]
        else:
            parser.fail(f"not an ACSL clause keyword: {kind_tok[1]!r}")
        label = None
        if parser.peek()[0] == "ident" and parser.peek(1)[1] == ":":
            label = parser.advance()[1]
            parser.advance()
        pred_first = parser.peek()
        if pred_first[0] == "eof" or pred_first[1] == ";":
            parser.fail("clause has no predicate")
        node = parser.parse_pred()
        last = parser.peek(-1) if parser.i > 0 else pred_first
        pred_text = text[pred_first[2]:last[2] + len(last[1])].strip()
        clauses.append(Clause(kind=kind, predicate=pred_text, node=node, label=label))
        if parser.peek()[1] == ";":
            parser.advance()
        elif parser.peek()[0] != "eof":
            parser.fail(f"unexpected trailing {parser.peek()[1]!r}")
    if not clauses:
        raise ParseError(f"no clauses in {text!r}")
    return clauses


def parse_clause(text: str) -> Clause:
    """Parse exactly one ACSL clause (label optional, ';' optional)."""
    clauses = parse_clause_sequence(text)
    if len(clauses) != 1:
        raise ParseError(f"expected exactly one clause, found {len(clauses)}: {text!r}")
    return clauses[0]


def try_parse_clause(text: str) -> Optional[Clause]:
    try:
        return parse_clause(text)
    except ParseError:
        return None


# --- evaluation -------------------------------------------------------------------


@dataclass
class EvalEnv:
    """Concrete state for bounded predicate evaluation.

    vars maps names to ints (scalars) or lists of ints (arrays); old
    is the pre-state for `\\old`; result is the return value for
    `\\result`; quant_range bounds integer quantifier enumeration,
    inclusive on both ends.
    """

    vars: Dict[str, object]
    old: Optional[Dict[str, object]] = None
    result: Optional[int] = None
    has_result: bool = False
    quant_range: Tuple[int, int] = (-9, 9)


_EVAL_BUILTINS = {"\\abs": lambda a: abs(a), "\\min": min, "\\max": max}


def _truth(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return value != 0
    raise PredicateError(f"non-scalar value in boolean position: {value!r}", "ill_formed")


def _as_int(value) -> int:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int):
        return value
    raise PredicateError(f"array used as a scalar", "ill_formed")


def _cdiv(a: int, b: int) -> int:
    if b == 0:
        raise PredicateError("division by zero", "state")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _cmod(a: int, b: int) -> int:
    return a - _cdiv(a, b) * b


_CMP = {
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
}


def eval_predicate(node: PNode, env: EvalEnv) -> bool:
    """Evaluate to a truth value over the given concrete state."""
    return _truth(_eval(node, env))


def _lookup(env: EvalEnv, name: str):
    if name in env.vars:
        return env.vars[name]
    raise PredicateError(f"unknown identifier {name!r}", "ill_formed")


def _eval(node: PNode, env: EvalEnv):
    if isinstance(node, PInt):
        return node.value
    if isinstance(node, PBool):
        return node.value
    if isinstance(node, PIdent):
        return _lookup(env, node.name)
    if isinstance(node, PResult):
        if not env.has_result:
            raise PredicateError("\\result is not available here", "ill_formed")
        return env.result
    if isinstance(node, POld):
        if env.old is None:
            raise PredicateError("\\old is not available here", "ill_formed")
        old_env = EvalEnv(vars=env.old, old=env.old, result=env.result,
                          has_result=env.has_result, quant_range=env.quant_range)
        return _eval(node.operand, old_env)
    if isinstance(node, PUnary):
        value = _eval(node.operand, env)
        if node.op == "!":
            return not _truth(value)
        if node.op == "-":
            return -_as_int(value)
        if node.op == "+":
            return _as_int(value)
        if node.op == "~":
            return ~_as_int(value)
        raise PredicateError(f"cannot evaluate unary {node.op!r}", "unsupported")
    if isinstance(node, PBinary):
        return _eval_binary(node, env)
    if isinstance(node, PChain):
        values = [_as_int(_eval(part, env)) for part in node.operands]
        return all(_CMP[op](values[k], values[k + 1]) for k, op in enumerate(node.ops))
    if isinstance(node, PTernary):
        if _truth(_eval(node.cond, env)):
            return _eval(node.then, env)
        return _eval(node.other, env)
    if isinstance(node, PQuant):
        return _eval_quant(node, env)
    if isinstance(node, PIndex):
        base = _eval(node.base, env)
        if not isinstance(base, (list, tuple)):
            raise PredicateError("indexing a non-array value", "ill_formed")
        index = _as_int(_eval(node.index, env))
        if index < 0 or index >= len(base):
            raise PredicateError(f"index {index} out of range 0..{len(base) - 1}", "state")
        return base[index]
    if isinstance(node, PCall):
        fn = _EVAL_BUILTINS.get(node.name)
        if fn is not None:
            args = [_as_int(_eval(a, env)) for a in node.args]
            try:
                return fn(*args)
            except TypeError:
                raise PredicateError(f"wrong arity for {node.name}", "ill_formed")
        raise PredicateError(f"cannot evaluate {node.name} in the bounded model", "unsupported")
    if isinstance(node, PRange):
        raise PredicateError("range expressions only occur inside memory predicates", "unsupported")
    raise PredicateError(f"unhandled node {node!r}", "unsupported")


def _eval_binary(node: PBinary, env: EvalEnv):
    op = node.op
    if op == "&&":
        return _truth(_eval(node.left, env)) and _truth(_eval(node.right, env))
    if op == "||":
        return _truth(_eval(node.left, env)) or _truth(_eval(node.right, env))
    if op == "==>":
        return (not _truth(_eval(node.left, env))) or _truth(_eval(node.right, env))
    if op == "<==>":
        return _truth(_eval(node.left, env)) == _truth(_eval(node.right, env))
    if op in _CMP:
        left = _eval(node.left, env)
        right = _eval(node.right, env)
        if isinstance(left, (list, tuple)) or isinstance(right, (list, tuple)):
            if op in ("==", "!="):
                same = list(left) == list(right) if (
                    isinstance(left, (list, tuple)) and isinstance(right, (list, tuple))
                ) else False
                return same if op == "==" else not same
            raise PredicateError("ordering comparison on arrays", "ill_formed")
        return _CMP[op](_as_int(left), _as_int(right))
    left = _as_int(_eval(node.left, env))
    right = _as_int(_eval(node.right, env))
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        return _cdiv(left, right)
    if op == "%":
        if right == 0:
            raise PredicateError("modulo by zero", "state")
        return _cmod(left, right)
    if op == "<<":
        if right < 0:
            raise PredicateError("negative shift", "state")
        return left << right
    if op == ">>":
        if right < 0:
            raise PredicateError("negative shift", "state")
        return left >> right
    if op == "&":
        return left & right
    if op == "|":
        return left | right
    if op == "^":
        return left ^ right
    raise PredicateError(f"cannot evaluate binary {op!r}", "unsupported")


def _eval_quant(node: PQuant, env: EvalEnv) -> bool:
    lo, hi = env.quant_range
    values = range(lo, hi + 1)

    def recurse(remaining: List[str]) -> bool:
        if not remaining:
            return _truth(_eval(node.body, env))
        name = remaining[0]
        shadowed = env.vars.get(name)
        had = name in env.vars
        try:
            for v in values:
                env.vars[name] = v
                result = recurse(remaining[1:])
                if node.quantifier == "forall" and not result:
                    return False
                if node.quantifier == "exists" and result:
                    return True
            return node.quantifier == "forall"
        finally:
            if had:
                env.vars[name] = shadowed
            else:
                env.vars.pop(name, None)

    return recurse(list(node.variables))
