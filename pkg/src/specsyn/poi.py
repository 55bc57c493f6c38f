"""Points of interest: where specification clauses attach.

A POI is either a function contract (one per function definition) or a
loop head. Ranks follow a post-order depth-first walk of each
function's statement tree with functions in member order, so inner
loops come before the loops that enclose them, sequential loops keep
their textual order, and every loop precedes its function's contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from specsyn.errors import UnresolvablePOI
from specsyn.frontend import load_unit, parse_unit
from specsyn.frontend import csyntax as cs

POI_KINDS = ("FunctionContract", "LoopHead")


@dataclass(frozen=True)
class PointOfInterest:
    id: str
    kind: str  # element of POI_KINDS
    owner: str  # Declaration id
    path: Tuple[int, ...]  # child-index path from the function body root
    order_rank: int
    anchor: int  # offset in segment code where an annotation block goes


def _children(stmt) -> List[object]:
    if isinstance(stmt, cs.Block):
        return list(stmt.stmts)
    if isinstance(stmt, cs.If):
        out = [stmt.then]
        if stmt.other is not None:
            out.append(stmt.other)
        return out
    if isinstance(stmt, (cs.While, cs.DoWhile, cs.For)):
        return [stmt.body]
    if isinstance(stmt, cs.Switch):
        return [s for case in stmt.cases for s in case.stmts]
    return []


def resolve_path(fn: cs.FunctionDef, path: Tuple[int, ...]):
    """Walk a child-index path from the function body root."""
    node = fn.body
    for index in path:
        kids = _children(node)
        if index >= len(kids):
            raise UnresolvablePOI(f"path {path!r} does not resolve in {fn.name!r}")
        node = kids[index]
    return node


def extract_points_of_interest(seg) -> List[PointOfInterest]:
    """All POIs of a segment, sorted by order_rank (which is the index).

    Function members are visited in member order; within a function,
    loops are emitted in post-order and the contract comes last.
    """
    decls = parse_unit(load_unit(seg.code, path=f"<segment {seg.id}>"))
    pois: List[PointOfInterest] = []
    rank = 0

    for decl in decls:
        node = decl.node
        if not isinstance(node, cs.FunctionDef):
            continue
        if node.body is not None:
            loops: List[Tuple[Tuple[int, ...], object]] = []

            def walk(stmt, path):
                for k, child in enumerate(_children(stmt)):
                    walk(child, path + (k,))
                if isinstance(stmt, (cs.While, cs.DoWhile, cs.For)):
                    loops.append((path, stmt))

            walk(node.body, ())
            for path, loop_node in loops:
                pois.append(PointOfInterest(
                    id=f"p{rank}", kind="LoopHead", owner=decl.id,
                    path=path, order_rank=rank, anchor=loop_node.start))
                rank += 1
        pois.append(PointOfInterest(
            id=f"p{rank}", kind="FunctionContract", owner=decl.id,
            path=(), order_rank=rank, anchor=node.start))
        rank += 1
    return pois
