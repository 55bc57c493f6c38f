"""Dependency graph construction, SCC segments, and processing order.

Declarations become nodes; an edge (a, b) means a references b, so b
must be processed first. Strongly connected components are merged into
segments (mutually recursive declarations travel together) and the
segment list is emitted dependencies-first, which is exactly the order
Tarjan's algorithm finishes components in when edges point at
dependencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Sequence, Set, Tuple

from specsyn.errors import DanglingDependency, DuplicateName
from specsyn.frontend import AnnotationBlock, Declaration

SEGMENT_JOIN = "\n\n"


@dataclass
class DependencyGraph:
    nodes: List[str]
    edges: Set[Tuple[str, str]]
    decls: Dict[str, Declaration]
    externals: Dict[str, FrozenSet[str]]  # per-declaration undeclared references

    def successors(self, node: str) -> List[str]:
        order = {n: k for k, n in enumerate(self.nodes)}
        return sorted((b for (a, b) in self.edges if a == node), key=order.__getitem__)


@dataclass
class Segment:
    """One SCC of the dependency graph, ready for synthesis."""

    id: str
    members: List[str]  # declaration ids in source order
    code: str
    deps: Set[str]
    topo_rank: int
    externals: FrozenSet[str] = frozenset()
    annotations: List[AnnotationBlock] = field(default_factory=list)

    def member_decls(self, graph: DependencyGraph) -> List[Declaration]:
        return [graph.decls[m] for m in self.members]


def build_dependency_graph(decls: Sequence[Declaration]) -> DependencyGraph:
    """Edges follow referenced_names, restricted to in-unit declarations.

    References to names not declared in the unit (library calls and the
    like) never become edges; they are kept per declaration so later
    stages can surface them as opaque externals.
    """
    names: Dict[str, Declaration] = {}
    for d in decls:
        if d.id in names:
            raise DuplicateName(f"duplicate declaration id {d.id!r}")
        names[d.id] = d
    edges: Set[Tuple[str, str]] = set()
    externals: Dict[str, FrozenSet[str]] = {}
    for d in decls:
        outside = set()
        for ref in d.referenced_names:
            if ref in names:
                edges.add((d.id, ref))
            else:
                outside.add(ref)
        externals[d.id] = frozenset(outside)
    return DependencyGraph(nodes=[d.id for d in decls], edges=edges,
                           decls=names, externals=externals)


def _tarjan_sccs(graph: DependencyGraph) -> List[List[str]]:
    """Iterative Tarjan; components are emitted dependencies-first."""
    index: Dict[str, int] = {}
    low: Dict[str, int] = {}
    on_stack: Set[str] = set()
    stack: List[str] = []
    counter = [0]
    sccs: List[List[str]] = []
    succ = {n: graph.successors(n) for n in graph.nodes}

    for root in graph.nodes:
        if root in index:
            continue
        work: List[Tuple[str, int]] = [(root, 0)]
        while work:
            node, child_idx = work.pop()
            if child_idx == 0:
                index[node] = low[node] = counter[0]
                counter[0] += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            for k in range(child_idx, len(succ[node])):
                child = succ[node][k]
                if child not in index:
                    work.append((node, k + 1))
                    work.append((child, 0))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                sccs.append(component)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return sccs


def compute_segments(graph: DependencyGraph) -> List[Segment]:
    """Merge SCCs into segments, dependencies before dependents.

    topo_rank equals the list index; members keep source order; each
    segment's code is the concatenation of its members' text.
    """
    sccs = _tarjan_sccs(graph)
    source_order = {n: k for k, n in enumerate(graph.nodes)}
    segment_of: Dict[str, int] = {}
    for rank, component in enumerate(sccs):
        for member in component:
            segment_of[member] = rank

    segments: List[Segment] = []
    for rank, component in enumerate(sccs):
        members = sorted(component, key=source_order.__getitem__)
        deps = set()
        for member in members:
            for (a, b) in graph.edges:
                if a == member and segment_of[b] != rank:
                    deps.add(f"s{segment_of[b]}")
        code_parts = []
        annotations: List[AnnotationBlock] = []
        offset = 0
        for member in members:
            decl = graph.decls[member]
            text = decl.text
            for block in _decl_annotations(decl):
                annotations.append(replace(
                    block, anchor=block.anchor - decl.span[0] + offset))
            code_parts.append(text)
            offset += len(text) + len(SEGMENT_JOIN)
        externals = frozenset().union(*(graph.externals.get(m, frozenset()) for m in members))
        segments.append(Segment(
            id=f"s{rank}",
            members=members,
            code=SEGMENT_JOIN.join(code_parts),
            deps=deps,
            topo_rank=rank,
            externals=externals,
            annotations=annotations,
        ))
    return segments


def _decl_annotations(decl: Declaration) -> List[AnnotationBlock]:
    if decl.unit is None:
        return []
    lo, hi = decl.span
    return [b for b in decl.unit.annotations if lo <= b.anchor < hi]


def dependency_closure(seg: Segment, all_segments: Sequence[Segment]) -> List[Segment]:
    """Transitive dependencies of seg, topological order, seg excluded."""
    by_id = {s.id: s for s in all_segments}
    seen: Set[str] = set()
    frontier = list(seg.deps)
    while frontier:
        sid = frontier.pop()
        if sid in seen:
            continue
        if sid not in by_id:
            raise DanglingDependency(f"segment {seg.id!r} depends on unknown {sid!r}")
        seen.add(sid)
        frontier.extend(by_id[sid].deps)
    closure = [by_id[sid] for sid in seen]
    closure.sort(key=lambda s: s.topo_rank)
    return closure


def segment_unit(decls: Sequence[Declaration]) -> Tuple[DependencyGraph, List[Segment]]:
    """Convenience: graph plus segments in one call."""
    graph = build_dependency_graph(decls)
    return graph, compute_segments(graph)
