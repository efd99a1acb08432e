"""Finite oriented graphs with an antipode involution.

Edges come in antipodal pairs (a dart and its reverse); an orientation
singles out one dart of each pair as positive.  Paths are sequences of
composable darts; a path is reduced when it never immediately follows a
dart by its antipode.

A treeing edge is one whose half-graph is a tree, or equivalently one
that no reduced path can start with and return to its source.  The
search for such a return walks the non-backtracking transition relation
on darts.  That is exact on finite graphs: a shortest reduced return
never repeats a dart (a repeated dart could be excised, leaving a
shorter reduced return), so visiting each dart-state once suffices.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable


class GraphError(Exception):
    pass


def idsort(x: Hashable):
    """Total order over mixed edge/vertex identifiers."""
    return (str(type(x).__name__), repr(x))


@dataclass(frozen=True)
class Graph:
    vertices: tuple
    source: dict
    target: dict
    antipode: dict
    positive: frozenset

    def __post_init__(self):
        vs = set(self.vertices)
        for e in self.source:
            if self.antipode.get(e) is None or self.antipode[e] == e:
                raise GraphError(f"antipode must be a fixed-point-free involution (edge {e!r})")
            if self.antipode[self.antipode[e]] != e:
                raise GraphError(f"antipode is not involutive at {e!r}")
            if self.source[self.antipode[e]] != self.target[e]:
                raise GraphError(f"antipode of {e!r} does not reverse it")
            if self.source[e] not in vs or self.target[e] not in vs:
                raise GraphError(f"dangling edge {e!r}")
        neg = {self.antipode[e] for e in self.positive}
        if self.positive & neg or self.positive | neg != set(self.source):
            raise GraphError("orientation must split edges into antipodal halves")
        stars: dict = {v: [] for v in self.vertices}
        for e in sorted(self.source, key=idsort):
            stars[self.source[e]].append(e)
        object.__setattr__(self, "_stars", {v: tuple(es) for v, es in stars.items()})

    @property
    def edges(self) -> tuple:
        return tuple(sorted(self.source, key=idsort))

    def star(self, v) -> tuple:
        return self._stars[v]

    def degree(self, v) -> int:
        return len(self._stars[v])


def make_graph(vertices: Iterable, darts: Iterable[tuple]) -> Graph:
    """Build a graph from (edge id, source, target) triples; each triple
    yields a positive dart and its antipode (edge id, 'bar')."""
    source, target, antipode, positive = {}, {}, {}, set()
    for eid, u, v in darts:
        bid = (eid, "bar")
        source[eid], target[eid] = u, v
        source[bid], target[bid] = v, u
        antipode[eid], antipode[bid] = bid, eid
        positive.add(eid)
    return Graph(tuple(sorted(set(vertices), key=idsort)), source, target, antipode, frozenset(positive))


def is_path(g: Graph, edges: tuple) -> bool:
    if not edges:
        return False
    return all(g.target[edges[k]] == g.source[edges[k + 1]] for k in range(len(edges) - 1))


def is_reduced(g: Graph, edges: tuple) -> bool:
    """No backtracking: an edge is never followed by its antipode."""
    if not is_path(g, edges):
        raise GraphError("not a path")
    return all(edges[k + 1] != g.antipode[edges[k]] for k in range(len(edges) - 1))


def reduced_successors(g: Graph, e) -> list:
    return [f for f in g.star(g.target[e]) if f != g.antipode[e]]


def _reachable_states(g: Graph, e, forbidden=None) -> list:
    """Darts reachable from e by non-backtracking walks (e included),
    never traversing a forbidden dart."""
    seen = {e}
    queue = deque([e])
    while queue:
        cur = queue.popleft()
        for f in reduced_successors(g, cur):
            if f in seen or (forbidden is not None and f == forbidden):
                continue
            seen.add(f)
            queue.append(f)
    return sorted(seen, key=idsort)


def is_treeing_edge(g: Graph, e) -> bool:
    """True iff no reduced path from s(e) back to s(e) starts with e."""
    if e not in g.source:
        raise GraphError(f"unknown edge {e!r}")
    base = g.source[e]
    seen = {e}
    queue = deque([e])
    while queue:
        cur = queue.popleft()
        if g.target[cur] == base:
            return False
        for f in reduced_successors(g, cur):
            if f not in seen:
                seen.add(f)
                queue.append(f)
    return True


def half_graph(g: Graph, e) -> Graph:
    """Subgraph induced by the edges some reduced path from e (avoiding
    the antipode of e) ends with.  For a cycle edge this is the whole
    connected component; for a treeing edge it is its half-tree."""
    if e not in g.source:
        raise GraphError(f"unknown edge {e!r}")
    core = set(_reachable_states(g, e, forbidden=g.antipode[e]))
    edge_set = core | {g.antipode[f] for f in core}
    vs = {g.source[f] for f in edge_set} | {g.target[f] for f in edge_set}
    return Graph(
        tuple(sorted(vs, key=idsort)),
        {f: g.source[f] for f in edge_set},
        {f: g.target[f] for f in edge_set},
        {f: g.antipode[f] for f in edge_set},
        frozenset(f for f in edge_set if f in g.positive),
    )


def treeing_edge_info(g: Graph, e) -> tuple[bool, Graph | None]:
    """Treeing test along with the half-graph when the test succeeds."""
    ok = is_treeing_edge(g, e)
    return ok, (half_graph(g, e) if ok else None)


def is_connected(g: Graph) -> bool:
    if not g.vertices:
        return True
    seen = {g.vertices[0]}
    queue = deque([g.vertices[0]])
    while queue:
        v = queue.popleft()
        for e in g.star(v):
            w = g.target[e]
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(g.vertices)


def is_forest(g: Graph) -> bool:
    """No reduced cycles; component-wise this is |E+| = |V| - 1."""
    return all(is_treeing_edge(g, e) for e in g.source)


def extend_to_treeing(g: Graph, path: tuple) -> tuple:
    """Extend a reduced path to one whose last edge is a treeing edge.

    Deterministic: breadth-first over non-backtracking continuations,
    expanding darts in identifier order, so the shortest extension wins
    and ties break by edge identifier.
    """
    if not is_reduced(g, path):
        raise GraphError("path must be reduced")
    memo: dict = {}

    def treeing(f) -> bool:
        if f not in memo:
            memo[f] = is_treeing_edge(g, f)
        return memo[f]

    last = path[-1]
    if treeing(last):
        return path
    parents: dict = {last: None}
    queue = deque([last])
    while queue:
        cur = queue.popleft()
        for f in reduced_successors(g, cur):
            if f in parents:
                continue
            parents[f] = cur
            if treeing(f):
                ext = []
                node = f
                while node != last:
                    ext.append(node)
                    node = parents[node]
                return path + tuple(reversed(ext))
            queue.append(f)
    if not any(is_treeing_edge(g, f) for f in g.source):
        raise GraphError("graph has no treeing edge")
    raise GraphError("no reduced extension reaches a treeing edge")


def to_dot(g: Graph, name: str = "bass_serre", treeing: bool = True) -> str:
    """DOT export: one line per positive edge; treeing edges set in bold."""
    lines = [f"graph {name} {{"]
    for v in g.vertices:
        lines.append(f'  "{_dot_id(v)}";')
    for e in sorted(g.positive, key=idsort):
        style = ' [style=bold]' if treeing and is_treeing_edge(g, e) else ""
        lines.append(f'  "{_dot_id(g.source[e])}" -- "{_dot_id(g.target[e])}"{style};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_id(x) -> str:
    return str(x).replace('"', "'")
