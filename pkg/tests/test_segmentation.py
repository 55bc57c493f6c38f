"""Segmentation tests with brute-force reachability and scan oracles."""

import random
import re

import pytest

from specsyn.errors import DanglingDependency, DuplicateName
from specsyn.frontend import load_unit, parse_unit, reinsert
from specsyn.segmentation import (
    Segment,
    build_dependency_graph,
    compute_segments,
    dependency_closure,
    segment_unit,
)


def _parse(src):
    return parse_unit(load_unit(src))


def _digraph_source(n, edges):
    """Render a call digraph as C functions: edge (a,b) = a calls b."""
    lines = []
    for a in range(n):
        calls = sorted(b for (x, b) in edges if x == a)
        body = " + ".join(f"n{b}()" for b in calls) if calls else "0"
        lines.append(f"int n{a}(void) {{ return {body}; }}")
    return "\n".join(lines) + "\n"


def _random_digraph(rng, max_nodes=12):
    n = rng.randint(2, max_nodes)
    edges = set()
    for a in range(n):
        for b in range(n):
            if a != b and rng.random() < 0.18:
                edges.add((a, b))
    if rng.random() < 0.3:
        edges.add((rng.randrange(n), rng.randrange(n)))
    return n, edges


def _reachability(n, edges):
    reach = [[False] * n for _ in range(n)]
    for (a, b) in edges:
        reach[a][b] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j]:
                        reach[i][j] = True
    return reach


def _scc_partition_oracle(n, edges):
    """Mutual-reachability partition, the reference for Tarjan output."""
    reach = _reachability(n, edges)
    groups = []
    assigned = [False] * n
    for a in range(n):
        if assigned[a]:
            continue
        group = {a}
        for b in range(n):
            if b != a and reach[a][b] and reach[b][a]:
                group.add(b)
        for m in group:
            assigned[m] = True
        groups.append(frozenset(f"n{m}" for m in group))
    return set(groups)


# --- dependency graph -----------------------------------------------------------


def test_independent_functions_no_edges():
    decls = _parse("int f(void){return 1;}\nint g(void){return 2;}")
    graph = build_dependency_graph(decls)
    assert len(graph.nodes) == 2
    assert graph.edges == set()


def test_caller_callee_single_edge():
    src = """
int bufs_differ(int a[4], int b[4]) {
    int i = 0;
    while (i < 4) { if (a[i] != b[i]) { return 1; } i++; }
    return 0;
}
int check(int x[4], int y[4]) { return bufs_differ(x, y); }
"""
    graph = build_dependency_graph(_parse(src))
    assert graph.edges == {("check", "bufs_differ")}


def test_external_references_recorded_not_edged():
    src = "int f(int x){ return helper(x) + 1; }"
    graph = build_dependency_graph(_parse(src))
    assert graph.edges == set()
    assert "helper" in graph.externals["f"]


def test_duplicate_ids_rejected():
    decls = _parse("int f(void){return 1;}")
    with pytest.raises(DuplicateName):
        build_dependency_graph(decls + decls)


def test_edges_match_scan_oracle_on_random_fixtures():
    rng = random.Random(7)
    for _ in range(10):
        n, edges = _random_digraph(rng, max_nodes=10)
        decls = _parse(_digraph_source(n, edges))
        graph = build_dependency_graph(decls)
        by_id = {d.id: d for d in decls}
        expected = set()
        for a in decls:
            for b in decls:
                if a.id == b.id:
                    continue
                if re.search(rf"\b{re.escape(b.id)}\b", a.text):
                    expected.add((a.id, b.id))
        observed = {(a, b) for (a, b) in graph.edges if a != b}
        assert observed == expected


# --- SCC segments ------------------------------------------------------------------


def test_chain_orders_dependencies_first():
    src = """
int c(void) { return 1; }
int b(void) { return c(); }
int a(void) { return b(); }
"""
    _, segments = segment_unit(_parse(src))
    names = [seg.members for seg in segments]
    assert names == [["c"], ["b"], ["a"]]
    assert [seg.topo_rank for seg in segments] == [0, 1, 2]
    assert segments[1].deps == {"s0"}
    assert segments[2].deps == {"s1"}


def test_mutual_recursion_merges_into_one_segment():
    src = """
int g(int n);
int f(int n) { if (n <= 0) { return 0; } return g(n - 1); }
int g(int n) { if (n <= 0) { return 1; } return f(n - 1); }
"""
    _, segments = segment_unit(_parse(src))
    assert len(segments) == 1
    assert segments[0].members == ["f", "g"]  # source order
    assert segments[0].deps == set()


def test_self_recursion_single_segment_no_self_dep():
    _, segments = segment_unit(_parse("int fact(int n){ if(n<=1) return 1; return n*fact(n-1); }"))
    assert len(segments) == 1
    assert segments[0].deps == set()


def test_segment_code_concatenates_members():
    src = "int c(void){return 3;}\nint a(void){return c();}"
    decls = _parse(src)
    _, segments = segment_unit(decls)
    assert segments[0].code == decls[0].text
    assert segments[1].code == decls[1].text


def test_random_digraphs_match_reachability_oracle():
    rng = random.Random(99)
    for _ in range(50):
        n, edges = _random_digraph(rng)
        decls = _parse(_digraph_source(n, edges))
        graph, segments = segment_unit(decls)

        observed_partition = {frozenset(seg.members) for seg in segments}
        assert observed_partition == _scc_partition_oracle(n, edges)

        # partition invariant
        all_members = [m for seg in segments for m in seg.members]
        assert sorted(all_members) == sorted(graph.nodes)
        assert len(all_members) == len(set(all_members))

        # deps-first order and rank agreement
        rank = {seg.id: seg.topo_rank for seg in segments}
        for k, seg in enumerate(segments):
            assert seg.topo_rank == k
            assert seg.id not in seg.deps
            for dep in seg.deps:
                assert rank[dep] < seg.topo_rank


def test_segments_deterministic():
    rng = random.Random(11)
    n, edges = _random_digraph(rng)
    src = _digraph_source(n, edges)
    first = compute_segments(build_dependency_graph(_parse(src)))
    second = compute_segments(build_dependency_graph(_parse(src)))
    assert [(s.id, s.members, s.deps, s.code) for s in first] == \
           [(s.id, s.members, s.deps, s.code) for s in second]


def test_annotations_remapped_into_segment_code():
    src = """\
int target_fn(int x) {
    int d = x - x;
    /*@ assert d == 0; */
    return d;
}
"""
    decls = _parse(src)
    _, segments = segment_unit(decls)
    seg = segments[0]
    assert len(seg.annotations) == 1
    assert reinsert(seg.code, seg.annotations).rstrip("\n") == src.rstrip("\n")


# --- dependency closure --------------------------------------------------------------


def test_closure_empty_deps():
    seg = Segment(id="s0", members=["x"], code="", deps=set(), topo_rank=0)
    assert dependency_closure(seg, [seg]) == []


def test_closure_of_chain():
    src = """
int c(void) { return 1; }
int b(void) { return c(); }
int a(void) { return b(); }
"""
    _, segments = segment_unit(_parse(src))
    top = segments[-1]
    closure = dependency_closure(top, segments)
    assert [s.members[0] for s in closure] == ["c", "b"]


def test_closure_matches_bfs_oracle():
    rng = random.Random(5)
    for _ in range(25):
        n, edges = _random_digraph(rng)
        _, segments = segment_unit(_parse(_digraph_source(n, edges)))
        by_id = {s.id: s for s in segments}
        for seg in segments:
            closure = dependency_closure(seg, segments)
            # BFS oracle over segment deps
            want = set()
            queue = list(seg.deps)
            while queue:
                sid = queue.pop(0)
                if sid in want:
                    continue
                want.add(sid)
                queue.extend(by_id[sid].deps)
            assert {s.id for s in closure} == want
            assert seg.id not in {s.id for s in closure}
            ranks = [s.topo_rank for s in closure]
            assert ranks == sorted(ranks)


def test_closure_dangling_dependency():
    seg = Segment(id="s0", members=["x"], code="", deps={"s9"}, topo_rank=0)
    with pytest.raises(DanglingDependency):
        dependency_closure(seg, [seg])
