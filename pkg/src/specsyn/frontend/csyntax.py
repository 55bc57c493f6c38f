"""Syntax tree node types for the supported C subset.

Nodes store the character span they cover in the original text; spans
are half-open [start, end) and never overlap between sibling top-level
declarations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union


@dataclass
class Node:
    start: int
    end: int


# --- expressions -----------------------------------------------------------


@dataclass
class IntLit(Node):
    value: int
    text: str


@dataclass
class FloatLit(Node):
    text: str


@dataclass
class CharLit(Node):
    value: int
    text: str


@dataclass
class StrLit(Node):
    text: str


@dataclass
class Ident(Node):
    name: str


@dataclass
class Unary(Node):
    op: str
    operand: "Expr"
    prefix: bool = True


@dataclass
class Binary(Node):
    op: str
    left: "Expr"
    right: "Expr"


@dataclass
class Assign(Node):
    op: str  # "=", "+=", ...
    target: "Expr"
    value: "Expr"


@dataclass
class Ternary(Node):
    cond: "Expr"
    then: "Expr"
    other: "Expr"


@dataclass
class Call(Node):
    callee: "Expr"
    args: List["Expr"]


@dataclass
class Index(Node):
    base: "Expr"
    index: "Expr"


@dataclass
class Member(Node):
    base: "Expr"
    op: str  # "." or "->"
    name: str


@dataclass
class CastExpr(Node):
    type_text: str
    operand: "Expr"


@dataclass
class SizeofExpr(Node):
    text: str


@dataclass
class InitList(Node):
    items: List["Expr"]


Expr = Union[
    IntLit, FloatLit, CharLit, StrLit, Ident, Unary, Binary, Assign,
    Ternary, Call, Index, Member, CastExpr, SizeofExpr, InitList,
]


# --- statements ------------------------------------------------------------


@dataclass
class TypeInfo:
    """Flattened view of a declarator's type, enough for interpretation."""

    base_text: str            # e.g. "int", "unsigned long", "struct node"
    pointer_depth: int = 0
    is_array: bool = False
    array_size: Optional[int] = None  # None for unsized []

    def is_int_like(self) -> bool:
        if self.pointer_depth:
            return False
        words = set(self.base_text.split())
        return bool(words & {"int", "char", "short", "long", "signed", "unsigned"})


@dataclass
class Declarator:
    name: str
    type: TypeInfo
    init: Optional[Expr]
    start: int
    end: int


@dataclass
class Block(Node):
    stmts: List["Stmt"]


@dataclass
class ExprStmt(Node):
    expr: Expr


@dataclass
class LocalDecl(Node):
    declarators: List[Declarator]


@dataclass
class If(Node):
    cond: Expr
    then: "Stmt"
    other: Optional["Stmt"]


@dataclass
class While(Node):
    cond: Expr
    body: "Stmt"


@dataclass
class DoWhile(Node):
    body: "Stmt"
    cond: Expr


@dataclass
class For(Node):
    init: Optional["Stmt"]  # ExprStmt or LocalDecl, span excludes the ';'
    cond: Optional[Expr]
    update: Optional[Expr]
    body: "Stmt"


@dataclass
class SwitchCase:
    labels: List[Optional[Expr]]  # None marks "default"
    stmts: List["Stmt"]


@dataclass
class Switch(Node):
    value: Expr
    cases: List[SwitchCase]


@dataclass
class Return(Node):
    value: Optional[Expr]


@dataclass
class Break(Node):
    pass


@dataclass
class Continue(Node):
    pass


Stmt = Union[
    Block, ExprStmt, LocalDecl, If, While, DoWhile, For, Switch, Return,
    Break, Continue,
]

Loop = (While, DoWhile, For)


# --- top-level declarations ------------------------------------------------


@dataclass
class Param:
    name: str
    type: TypeInfo
    start: int
    end: int


@dataclass
class FunctionDef(Node):
    name: str
    return_type: TypeInfo
    params: List[Param]
    body: Optional[Block]  # None for a bare prototype


@dataclass
class GlobalVar(Node):
    name: str
    type: TypeInfo
    init: Optional[Expr]


@dataclass
class TypedefDecl(Node):
    name: str


@dataclass
class StructOrUnionDef(Node):
    name: str
    keyword: str  # "struct" or "union"
    field_names: List[str] = field(default_factory=list)


@dataclass
class EnumDef(Node):
    name: str
    members: List[Tuple[str, Optional[Expr]]] = field(default_factory=list)


TopLevel = Union[FunctionDef, GlobalVar, TypedefDecl, StructOrUnionDef, EnumDef]
