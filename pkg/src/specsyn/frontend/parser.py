"""Recursive-descent parser producing spanned declarations.

The accepted language is a self-contained C subset: function
definitions and prototypes, global scalar/array variables, typedefs,
struct/union definitions, and enums. Preprocessor directives, goto,
comma-at-file-scope declarators, function pointers and variadics are
rejected with a ParseError rather than silently mis-parsed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from specsyn.errors import DuplicateName, EmptyUnit, ParseError
from specsyn.frontend import csyntax as cs
from specsyn.frontend.annotations import AnnotationBlock, extract_annotations
from specsyn.frontend.lexer import Token, tokenize

TYPE_KEYWORDS = {
    "void", "char", "short", "int", "long", "float", "double",
    "signed", "unsigned", "struct", "union", "enum", "const", "volatile",
    "static", "extern", "register", "auto", "inline",
}

_QUALIFIERS = {"const", "volatile", "static", "extern", "register", "auto", "inline"}

DECL_KINDS = ("FunctionDef", "TypeDef", "StructOrUnionDef", "EnumDef", "GlobalVarDecl")


@dataclass
class SourceUnit:
    """One self-contained C file, with annotations lifted out.

    `text` is the annotation-free source that all spans index into;
    `raw_text` is the file as given. The stripped blocks keep anchors
    into `text` so they can be re-inserted byte-exactly.
    """

    path: str
    text: str
    preprocessed: bool = True
    raw_text: str = ""
    annotations: List[AnnotationBlock] = field(default_factory=list)


@dataclass
class Declaration:
    """One top-level declaration with its source span and references.

    Ids equal names: top-level names are unique within a unit, which
    keeps segment member lists human-readable.
    """

    id: str
    name: str
    kind: str  # one of DECL_KINDS
    span: Tuple[int, int]
    node: cs.TopLevel
    referenced_names: Set[str] = field(default_factory=set)
    unit: Optional[SourceUnit] = None

    @property
    def text(self) -> str:
        return self.unit.text[self.span[0]:self.span[1]]

    @property
    def body(self) -> Optional[cs.Block]:
        if isinstance(self.node, cs.FunctionDef):
            return self.node.body
        return None


def load_unit(source: str, path: str = "<memory>", preprocessed: bool = True) -> SourceUnit:
    """Build a SourceUnit from raw file text, stripping ACSL blocks."""
    clean, blocks = extract_annotations(source)
    return SourceUnit(path=path, text=clean, preprocessed=preprocessed,
                      raw_text=source, annotations=blocks)


class _ParserState:
    def __init__(self, tokens: List[Token], text: str):
        self.toks = tokens
        self.text = text
        self.i = 0
        self.typedef_names: Set[str] = set()

    # -- token helpers ------------------------------------------------------

    def peek(self, offset=0) -> Token:
        j = min(self.i + offset, len(self.toks) - 1)
        return self.toks[j]

    def advance(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, *texts) -> bool:
        return self.peek().text in texts and self.peek().kind in ("punct", "keyword")

    def expect(self, text) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind not in ("punct", "keyword"):
            self.fail(f"expected {text!r}, found {tok.text!r}")
        return self.advance()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            self.fail(f"expected identifier, found {tok.text!r}")
        return self.advance()

    def fail(self, message):
        tok = self.peek()
        raise ParseError(message, line=tok.line, column=tok.column)

    # -- types --------------------------------------------------------------

    def at_type_start(self) -> bool:
        tok = self.peek()
        if tok.kind == "keyword" and tok.text in TYPE_KEYWORDS:
            return True
        return tok.kind == "ident" and tok.text in self.typedef_names

    def parse_type_prefix(self) -> Tuple[cs.TypeInfo, int]:
        """Parse qualifiers plus the base type words; no declarator."""
        start = self.peek().start
        words: List[str] = []
        saw_base = False
        while True:
            tok = self.peek()
            if tok.kind == "keyword" and tok.text in _QUALIFIERS:
                self.advance()
                continue
            if tok.kind == "keyword" and tok.text in ("struct", "union", "enum"):
                self.advance()
                tag = self.expect_ident()
                words.append(f"{tok.text} {tag.text}")
                saw_base = True
                continue
            if tok.kind == "keyword" and tok.text in (
                "void", "char", "short", "int", "long", "float", "double",
                "signed", "unsigned",
            ):
                words.append(tok.text)
                self.advance()
                saw_base = True
                continue
            if not saw_base and tok.kind == "ident" and tok.text in self.typedef_names:
                words.append(tok.text)
                self.advance()
                saw_base = True
                continue
            break
        if not saw_base:
            self.fail("expected a type name")
        return cs.TypeInfo(base_text=" ".join(words)), start

    def parse_declarator(self, base: cs.TypeInfo, allow_unnamed=False):
        """Parse `*... name [size]` and return (name, TypeInfo, name_token)."""
        depth = 0
        while self.at("*"):
            self.advance()
            depth += 1
        if self.at("("):
            self.fail("function-pointer declarators are not supported")
        name_tok = None
        name = ""
        if self.peek().kind == "ident":
            name_tok = self.advance()
            name = name_tok.text
        elif not allow_unnamed:
            self.fail(f"expected identifier, found {self.peek().text!r}")
        ty = cs.TypeInfo(base_text=base.base_text, pointer_depth=depth)
        if self.at("["):
            self.advance()
            if self.at("]"):
                ty.is_array = True
                ty.array_size = None
                self.advance()
            else:
                size_tok = self.peek()
                size = self.parse_expr()
                if not isinstance(size, cs.IntLit):
                    raise ParseError(
                        "array sizes must be integer literals",
                        line=size_tok.line, column=size_tok.column,
                    )
                ty.is_array = True
                ty.array_size = size.value
                self.expect("]")
            if self.at("["):
                self.fail("multi-dimensional arrays are not supported")
        return name, ty, name_tok

    # -- expressions ---------------------------------------------------------

    _BIN_BP = {
        "||": 6, "&&": 8, "|": 10, "^": 12, "&": 14,
        "==": 16, "!=": 16,
        "<": 18, "<=": 18, ">": 18, ">=": 18,
        "<<": 20, ">>": 20,
        "+": 22, "-": 22,
        "*": 24, "/": 24, "%": 24,
    }
    _ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}

    def parse_expr(self, min_bp=0) -> cs.Expr:
        lhs = self._parse_unary()
        while True:
            tok = self.peek()
            if tok.kind != "punct":
                break
            op = tok.text
            if op in self._ASSIGN_OPS:
                if min_bp > 2:
                    break
                self.advance()
                rhs = self.parse_expr(2)  # right associative
                lhs = cs.Assign(lhs.start, rhs.end, op, lhs, rhs)
                continue
            if op == "?":
                if min_bp > 4:
                    break
                self.advance()
                then = self.parse_expr(0)
                self.expect(":")
                other = self.parse_expr(4)
                lhs = cs.Ternary(lhs.start, other.end, lhs, then, other)
                continue
            bp = self._BIN_BP.get(op)
            if bp is None or bp < min_bp:
                break
            self.advance()
            rhs = self.parse_expr(bp + 1)
            lhs = cs.Binary(lhs.start, rhs.end, op, lhs, rhs)
        return lhs

    def _parse_unary(self) -> cs.Expr:
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("!", "~", "+", "-", "*", "&", "++", "--"):
            self.advance()
            operand = self._parse_unary()
            return cs.Unary(tok.start, operand.end, tok.text, operand, prefix=True)
        if tok.kind == "keyword" and tok.text == "sizeof":
            self.advance()
            if self.at("("):
                depth = 0
                end = tok.end
                while True:
                    t = self.advance()
                    if t.kind == "eof":
                        self.fail("unterminated sizeof")
                    if t.text == "(":
                        depth += 1
                    elif t.text == ")":
                        depth -= 1
                        if depth == 0:
                            end = t.end
                            break
                return cs.SizeofExpr(tok.start, end, self.text[tok.start:end])
            operand = self._parse_unary()
            return cs.SizeofExpr(tok.start, operand.end, self.text[tok.start:operand.end])
        if tok.kind == "punct" and tok.text == "(" and self._looks_like_cast():
            self.advance()
            ty, _ = self.parse_type_prefix()
            depth = 0
            while self.at("*"):
                self.advance()
                depth += 1
            self.expect(")")
            operand = self._parse_unary()
            type_text = ty.base_text + "*" * depth
            return cs.CastExpr(tok.start, operand.end, type_text, operand)
        return self._parse_postfix()

    def _looks_like_cast(self) -> bool:
        nxt = self.peek(1)
        if nxt.kind == "keyword" and nxt.text in TYPE_KEYWORDS and nxt.text not in _QUALIFIERS:
            return True
        return nxt.kind == "ident" and nxt.text in self.typedef_names

    def _parse_postfix(self) -> cs.Expr:
        expr = self._parse_primary()
        while True:
            tok = self.peek()
            if tok.kind != "punct":
                break
            if tok.text == "(":
                self.advance()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_expr(4))  # no comma operator in args
                        if self.at(","):
                            self.advance()
                            continue
                        break
                close = self.expect(")")
                expr = cs.Call(expr.start, close.end, expr, args)
            elif tok.text == "[":
                self.advance()
                index = self.parse_expr()
                close = self.expect("]")
                expr = cs.Index(expr.start, close.end, expr, index)
            elif tok.text in (".", "->"):
                self.advance()
                name = self.expect_ident()
                expr = cs.Member(expr.start, name.end, expr, tok.text, name.text)
            elif tok.text in ("++", "--"):
                self.advance()
                expr = cs.Unary(expr.start, tok.end, tok.text, expr, prefix=False)
            else:
                break
        return expr

    def _parse_primary(self) -> cs.Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            body = tok.text.rstrip("uUlLfF")
            if "." in body or (("e" in body or "E" in body) and not body.lower().startswith("0x")):
                return cs.FloatLit(tok.start, tok.end, tok.text)
            return cs.IntLit(tok.start, tok.end, int(body, 0), tok.text)
        if tok.kind == "char":
            self.advance()
            return cs.CharLit(tok.start, tok.end, _char_value(tok.text), tok.text)
        if tok.kind == "string":
            self.advance()
            return cs.StrLit(tok.start, tok.end, tok.text)
        if tok.kind == "ident":
            self.advance()
            return cs.Ident(tok.start, tok.end, tok.text)
        if tok.kind == "punct" and tok.text == "(":
            self.advance()
            expr = self.parse_expr()
            close = self.expect(")")
            expr.start, expr.end = tok.start, close.end
            return expr
        if tok.kind == "punct" and tok.text == "{":
            return self._parse_init_list()
        self.fail(f"expected expression, found {tok.text!r}")

    def _parse_init_list(self) -> cs.InitList:
        open_tok = self.expect("{")
        items = []
        if not self.at("}"):
            while True:
                items.append(self.parse_expr(4))
                if self.at(","):
                    self.advance()
                    if self.at("}"):
                        break
                    continue
                break
        close = self.expect("}")
        return cs.InitList(open_tok.start, close.end, items)

    # -- statements ----------------------------------------------------------

    def parse_stmt(self) -> cs.Stmt:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "{":
            return self.parse_block()
        if tok.kind == "punct" and tok.text == ";":
            self.advance()
            return cs.Block(tok.start, tok.end, [])
        if tok.kind == "keyword":
            handler = {
                "if": self._parse_if, "while": self._parse_while,
                "do": self._parse_do, "for": self._parse_for,
                "switch": self._parse_switch, "return": self._parse_return,
                "break": self._parse_break, "continue": self._parse_continue,
            }.get(tok.text)
            if handler is not None:
                return handler()
            if tok.text == "goto":
                self.fail("goto is not supported")
            if tok.text == "typedef":
                self.fail("local typedefs are not supported")
        if self.at_type_start():
            return self._parse_local_decl()
        expr = self.parse_expr()
        semi = self.expect(";")
        return cs.ExprStmt(expr.start, semi.end, expr)

    def parse_block(self) -> cs.Block:
        open_tok = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                self.fail("unterminated block")
            stmts.append(self.parse_stmt())
        close = self.expect("}")
        return cs.Block(open_tok.start, close.end, stmts)

    def _parse_local_decl(self) -> cs.LocalDecl:
        base, start = self.parse_type_prefix()
        declarators = []
        while True:
            name, ty, name_tok = self.parse_declarator(base)
            init = None
            if self.at("="):
                self.advance()
                init = self.parse_expr(4)
            end = init.end if init else self.toks[self.i - 1].end
            declarators.append(cs.Declarator(name, ty, init, name_tok.start, end))
            if self.at(","):
                self.advance()
                continue
            break
        semi = self.expect(";")
        return cs.LocalDecl(start, semi.end, declarators)

    def _parse_paren_expr(self) -> cs.Expr:
        self.expect("(")
        expr = self.parse_expr()
        self.expect(")")
        return expr

    def _parse_if(self) -> cs.If:
        kw = self.expect("if")
        cond = self._parse_paren_expr()
        then = self.parse_stmt()
        other = None
        end = then.end
        if self.at("else"):
            self.advance()
            other = self.parse_stmt()
            end = other.end
        return cs.If(kw.start, end, cond, then, other)

    def _parse_while(self) -> cs.While:
        kw = self.expect("while")
        cond = self._parse_paren_expr()
        body = self.parse_stmt()
        return cs.While(kw.start, body.end, cond, body)

    def _parse_do(self) -> cs.DoWhile:
        kw = self.expect("do")
        body = self.parse_stmt()
        self.expect("while")
        cond = self._parse_paren_expr()
        semi = self.expect(";")
        return cs.DoWhile(kw.start, semi.end, body, cond)

    def _parse_for(self) -> cs.For:
        kw = self.expect("for")
        self.expect("(")
        init = None
        if not self.at(";"):
            if self.at_type_start():
                init = self._parse_local_decl()
            else:
                expr = self.parse_expr()
                semi = self.expect(";")
                init = cs.ExprStmt(expr.start, semi.end, expr)
        else:
            self.advance()
        cond = None
        if not self.at(";"):
            cond = self.parse_expr()
        self.expect(";")
        update = None
        if not self.at(")"):
            update = self.parse_expr()
        self.expect(")")
        body = self.parse_stmt()
        return cs.For(kw.start, body.end, init, cond, update, body)

    def _parse_switch(self) -> cs.Switch:
        kw = self.expect("switch")
        value = self._parse_paren_expr()
        self.expect("{")
        cases: List[cs.SwitchCase] = []
        while not self.at("}"):
            labels = []
            while True:
                if self.at("case"):
                    self.advance()
                    labels.append(self.parse_expr())
                    self.expect(":")
                elif self.at("default"):
                    self.advance()
                    self.expect(":")
                    labels.append(None)
                else:
                    break
            if not labels:
                self.fail("statement outside any case label")
            stmts = []
            while not self.at("case", "default", "}"):
                if self.peek().kind == "eof":
                    self.fail("unterminated switch")
                stmts.append(self.parse_stmt())
            cases.append(cs.SwitchCase(labels, stmts))
        close = self.expect("}")
        return cs.Switch(kw.start, close.end, value, cases)

    def _parse_return(self) -> cs.Return:
        kw = self.expect("return")
        value = None
        if not self.at(";"):
            value = self.parse_expr()
        semi = self.expect(";")
        return cs.Return(kw.start, semi.end, value)

    def _parse_break(self) -> cs.Break:
        kw = self.expect("break")
        semi = self.expect(";")
        return cs.Break(kw.start, semi.end)

    def _parse_continue(self) -> cs.Continue:
        kw = self.expect("continue")
        semi = self.expect(";")
        return cs.Continue(kw.start, semi.end)

    # -- top level ------------------------------------------------------------

    def parse_top_level(self) -> Optional[cs.TopLevel]:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == ";":
            self.advance()
            return None
        if tok.kind == "keyword" and tok.text == "typedef":
            return self._parse_typedef()
        if tok.kind == "keyword" and tok.text in ("struct", "union") and self._tag_is_definition():
            return self._parse_struct_union()
        if tok.kind == "keyword" and tok.text == "enum" and self._tag_is_definition():
            return self._parse_enum()
        return self._parse_func_or_global()

    def _tag_is_definition(self) -> bool:
        # "struct S {" starts a definition; "struct S x" uses the type.
        j = 1
        if self.peek(j).kind == "ident":
            j += 1
        return self.peek(j).text == "{"

    def _parse_struct_body(self) -> List[str]:
        self.expect("{")
        fields = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                self.fail("unterminated struct body")
            base, _ = self.parse_type_prefix()
            while True:
                name, ty, _ = self.parse_declarator(base)
                fields.append(name)
                if self.at(","):
                    self.advance()
                    continue
                break
            self.expect(";")
        self.expect("}")
        return fields

    def _parse_struct_union(self) -> cs.StructOrUnionDef:
        kw = self.advance()
        name = self.expect_ident()
        fields = self._parse_struct_body()
        semi = self.expect(";")
        return cs.StructOrUnionDef(kw.start, semi.end, name.text, kw.text, fields)

    def _parse_enum(self) -> cs.EnumDef:
        kw = self.expect("enum")
        if self.peek().kind != "ident":
            self.fail("anonymous enums at file scope are not supported")
        name = self.expect_ident()
        self.expect("{")
        members: List[Tuple[str, Optional[cs.Expr]]] = []
        while not self.at("}"):
            member = self.expect_ident()
            value = None
            if self.at("="):
                self.advance()
                value = self.parse_expr(4)
            members.append((member.text, value))
            if self.at(","):
                self.advance()
        self.expect("}")
        semi = self.expect(";")
        return cs.EnumDef(kw.start, semi.end, name.text, members)

    def _parse_typedef(self) -> cs.TypedefDecl:
        kw = self.expect("typedef")
        tok = self.peek()
        hidden: List[str] = []
        if tok.kind == "keyword" and tok.text in ("struct", "union", "enum") and (
            self.peek(1).text == "{" or (self.peek(1).kind == "ident" and self.peek(2).text == "{")
        ):
            self.advance()
            if self.peek().kind == "ident":
                self.advance()
            if tok.text == "enum":
                self.expect("{")
                while not self.at("}"):
                    hidden.append(self.expect_ident().text)
                    if self.at("="):
                        self.advance()
                        self.parse_expr(4)
                    if self.at(","):
                        self.advance()
                self.expect("}")
            else:
                hidden = self._parse_struct_body()
            name = self.expect_ident()
            semi = self.expect(";")
            self.typedef_names.add(name.text)
            node = cs.TypedefDecl(kw.start, semi.end, name.text)
            node.hidden_names = hidden
            return node
        base, _ = self.parse_type_prefix()
        name, ty, _ = self.parse_declarator(base)
        semi = self.expect(";")
        self.typedef_names.add(name)
        node = cs.TypedefDecl(kw.start, semi.end, name)
        node.hidden_names = hidden
        return node

    def _parse_func_or_global(self) -> cs.TopLevel:
        base, start = self.parse_type_prefix()
        name, ty, name_tok = self.parse_declarator(base)
        if self.at("("):
            return self._parse_function(start, name, ty)
        init = None
        if self.at("="):
            self.advance()
            init = self.parse_expr(4)
        if self.at(","):
            self.fail("comma-separated declarators at file scope are not supported")
        semi = self.expect(";")
        return cs.GlobalVar(start, semi.end, name, ty, init)

    def _parse_function(self, start, name, return_type) -> cs.FunctionDef:
        self.expect("(")
        params: List[cs.Param] = []
        if self.at("void") and self.peek(1).text == ")":
            self.advance()
        elif not self.at(")"):
            while True:
                if self.at("..."):
                    self.fail("variadic functions are not supported")
                pbase, pstart = self.parse_type_prefix()
                pname, pty, _ = self.parse_declarator(pbase, allow_unnamed=True)
                pend = self.toks[self.i - 1].end
                params.append(cs.Param(pname, pty, pstart, pend))
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        if self.at(";"):
            semi = self.advance()
            return cs.FunctionDef(start, semi.end, name, return_type, params, None)
        body = self.parse_block()
        for p in params:
            if not p.name:
                self.fail(f"function {name!r} has an unnamed parameter")
        return cs.FunctionDef(start, body.end, name, return_type, params, body)


# --- reference collection ----------------------------------------------------


def _char_value(text: str) -> int:
    inner = text[1:-1]
    if inner.startswith("\\"):
        escapes = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34,
                   "a": 7, "b": 8, "f": 12, "v": 11}
        if inner[1] in escapes:
            return escapes[inner[1]]
        if inner[1] == "x":
            return int(inner[2:], 16)
        return int(inner[1:], 8)
    return ord(inner)


def _type_refs(ty: cs.TypeInfo) -> Set[str]:
    refs = set()
    for word in ty.base_text.split():
        if word not in TYPE_KEYWORDS and re.fullmatch(r"[A-Za-z_]\w*", word):
            refs.add(word)
    return refs


class _Scope:
    def __init__(self):
        self.stack: List[Set[str]] = [set()]

    def push(self):
        self.stack.append(set())

    def pop(self):
        self.stack.pop()

    def bind(self, name):
        self.stack[-1].add(name)

    def bound(self, name) -> bool:
        return any(name in frame for frame in self.stack)


def _collect_expr(expr: Optional[cs.Expr], scope: _Scope, refs: Set[str]):
    if expr is None:
        return
    if isinstance(expr, cs.Ident):
        if not scope.bound(expr.name):
            refs.add(expr.name)
    elif isinstance(expr, cs.Unary):
        _collect_expr(expr.operand, scope, refs)
    elif isinstance(expr, cs.Binary):
        _collect_expr(expr.left, scope, refs)
        _collect_expr(expr.right, scope, refs)
    elif isinstance(expr, cs.Assign):
        _collect_expr(expr.target, scope, refs)
        _collect_expr(expr.value, scope, refs)
    elif isinstance(expr, cs.Ternary):
        for sub in (expr.cond, expr.then, expr.other):
            _collect_expr(sub, scope, refs)
    elif isinstance(expr, cs.Call):
        _collect_expr(expr.callee, scope, refs)
        for arg in expr.args:
            _collect_expr(arg, scope, refs)
    elif isinstance(expr, cs.Index):
        _collect_expr(expr.base, scope, refs)
        _collect_expr(expr.index, scope, refs)
    elif isinstance(expr, cs.Member):
        _collect_expr(expr.base, scope, refs)
    elif isinstance(expr, cs.CastExpr):
        _collect_expr(expr.operand, scope, refs)
    elif isinstance(expr, cs.InitList):
        for item in expr.items:
            _collect_expr(item, scope, refs)
    # literals and sizeof carry no references


def _collect_stmt(stmt: cs.Stmt, scope: _Scope, refs: Set[str]):
    if isinstance(stmt, cs.Block):
        scope.push()
        for sub in stmt.stmts:
            _collect_stmt(sub, scope, refs)
        scope.pop()
    elif isinstance(stmt, cs.ExprStmt):
        _collect_expr(stmt.expr, scope, refs)
    elif isinstance(stmt, cs.LocalDecl):
        for d in stmt.declarators:
            refs.update(n for n in _type_refs(d.type) if not scope.bound(n))
            _collect_expr(d.init, scope, refs)
            scope.bind(d.name)
    elif isinstance(stmt, cs.If):
        _collect_expr(stmt.cond, scope, refs)
        _collect_stmt(stmt.then, scope, refs)
        if stmt.other is not None:
            _collect_stmt(stmt.other, scope, refs)
    elif isinstance(stmt, cs.While):
        _collect_expr(stmt.cond, scope, refs)
        _collect_stmt(stmt.body, scope, refs)
    elif isinstance(stmt, cs.DoWhile):
        _collect_stmt(stmt.body, scope, refs)
        _collect_expr(stmt.cond, scope, refs)
    elif isinstance(stmt, cs.For):
        scope.push()
        if stmt.init is not None:
            _collect_stmt(stmt.init, scope, refs)
        _collect_expr(stmt.cond, scope, refs)
        _collect_expr(stmt.update, scope, refs)
        _collect_stmt(stmt.body, scope, refs)
        scope.pop()
    elif isinstance(stmt, cs.Switch):
        _collect_expr(stmt.value, scope, refs)
        scope.push()
        for case in stmt.cases:
            for label in case.labels:
                _collect_expr(label, scope, refs)
            for sub in case.stmts:
                _collect_stmt(sub, scope, refs)
        scope.pop()
    elif isinstance(stmt, cs.Return):
        _collect_expr(stmt.value, scope, refs)
    # Break/Continue carry no references


def _function_refs(fn: cs.FunctionDef) -> Set[str]:
    refs: Set[str] = set()
    scope = _Scope()
    refs.update(_type_refs(fn.return_type))
    for p in fn.params:
        refs.update(_type_refs(p.type))
        scope.bind(p.name)
    if fn.body is not None:
        _collect_stmt(fn.body, scope, refs)
    return refs


def _body_token_refs(text: str, span, exclude: Set[str]) -> Set[str]:
    """Identifier scan limited to the brace-enclosed body of a declaration.

    Used for struct/union/enum definitions, where the defining header
    occurrence of the tag must not count as a self-reference.
    """
    chunk = text[span[0]:span[1]]
    open_brace = chunk.find("{")
    close_brace = chunk.rfind("}")
    if open_brace < 0 or close_brace < open_brace:
        return set()
    refs = set()
    for tok in tokenize(chunk[open_brace + 1:close_brace]):
        if tok.kind == "ident" and tok.text not in exclude:
            refs.add(tok.text)
    return refs


def _span_token_refs(text: str, span, exclude: Set[str]) -> Set[str]:
    refs = set()
    for tok in tokenize(text[span[0]:span[1]]):
        if tok.kind == "ident" and tok.text not in exclude:
            refs.add(tok.text)
    return refs


# --- entry point --------------------------------------------------------------


def parse_unit(unit: SourceUnit) -> List[Declaration]:
    """Parse the unit's text into top-level declarations, source order.

    Prototypes are absorbed: a prototype is dropped when the unit also
    defines the function (and repeated prototypes keep only the first),
    so each name maps to exactly one declaration.
    """
    if not unit.preprocessed:
        raise ParseError("unit must be preprocessed before parsing")
    tokens = tokenize(unit.text)
    state = _ParserState(tokens, unit.text)
    nodes: List[cs.TopLevel] = []
    while state.peek().kind != "eof":
        node = state.parse_top_level()
        if node is not None:
            nodes.append(node)
    declarations = _build_declarations(nodes, unit.text)
    if not declarations:
        raise EmptyUnit(f"{unit.path}: no declarations found")
    for decl in declarations:
        decl.unit = unit
    return declarations


def _build_declarations(nodes: List[cs.TopLevel], text: str) -> List[Declaration]:
    defined = {n.name for n in nodes if isinstance(n, cs.FunctionDef) and n.body is not None}
    result: List[Declaration] = []
    seen: Set[str] = set()
    for node in nodes:
        if isinstance(node, cs.FunctionDef):
            if node.body is None and (node.name in defined or node.name in seen):
                continue
            kind = "FunctionDef"
            refs = _function_refs(node)
        elif isinstance(node, cs.GlobalVar):
            kind = "GlobalVarDecl"
            refs = _type_refs(node.type)
            _collect_expr(node.init, _Scope(), refs)
        elif isinstance(node, cs.TypedefDecl):
            kind = "TypeDef"
            hidden = set(getattr(node, "hidden_names", []))
            refs = _span_token_refs(text, (node.start, node.end), exclude=hidden | {node.name})
        elif isinstance(node, cs.StructOrUnionDef):
            kind = "StructOrUnionDef"
            refs = _body_token_refs(text, (node.start, node.end), exclude=set(node.field_names))
        elif isinstance(node, cs.EnumDef):
            kind = "EnumDef"
            member_names = {m for m, _ in node.members}
            refs = _body_token_refs(text, (node.start, node.end), exclude=member_names)
        else:
            raise AssertionError(f"unhandled node {node!r}")
        name = node.name
        if name in seen:
            raise DuplicateName(f"duplicate top-level name {name!r}")
        seen.add(name)
        result.append(Declaration(id=name, name=name, kind=kind,
                                  span=(node.start, node.end),
                                  node=node, referenced_names=refs))
    return result
