"""Shared generators for randomized tests: words, graphs, pre-actions."""

from __future__ import annotations

import random

from htact import graphs as G
from htact.groups import make_bs_presentation
from htact.preaction_hnn import Point, PreActionHnn, theta_key


def random_hnn_word(rng: random.Random, max_len: int = 20) -> list:
    word = []
    for _ in range(rng.randint(0, max_len)):
        kind = rng.random()
        if kind < 0.5:
            word.append(("h", rng.randint(-6, 6)))
        elif kind < 0.75:
            word.append(("t", +1))
        else:
            word.append(("t", -1))
    return word


def random_amalgam_word(rng: random.Random, pres, max_len: int = 20) -> list:
    word = []
    for _ in range(rng.randint(0, max_len)):
        side = rng.choice((1, 2))
        p = pres.factor1.p if side == 1 else pres.factor2.p
        word.append((side, rng.randint(0, p - 1)))
    return word


def random_graph(rng: random.Random, max_vertices: int = 12, max_edges: int = 15) -> G.Graph:
    n = rng.randint(1, max_vertices)
    m = rng.randint(0, max_edges)
    darts = []
    for i in range(m):
        u = rng.randrange(n)
        v = rng.randrange(n)
        darts.append((i, u, v))
    return G.make_graph(range(n), darts)


def random_preaction_bs23(rng: random.Random, entries: int = 6) -> PreActionHnn:
    """Random connected non-global pre-action of BS(2, 3): grow a tau table
    by covering uncovered domain keys, sometimes into fresh orbits and
    sometimes into uncovered range orbits."""
    pres = make_bs_presentation(2, 3)
    orbits = [0]
    tau: dict = {}

    def uncovered_pos():
        return [(o, c) for o in orbits for c in pres.reps_pos if (o, c) not in tau]

    def uncovered_neg():
        taken = {theta_key(pres, img) for img in tau.values()}
        return [(o, c) for o in orbits for c in pres.reps_neg if (o, c) not in taken]

    for _ in range(entries):
        pos = uncovered_pos()
        if len(pos) <= 1:
            break  # keep it non-global
        key = rng.choice(pos)
        neg = uncovered_neg()
        if rng.random() < 0.5 or not neg:
            fresh = len(orbits)
            orbits.append(fresh)
            tau[key] = Point(fresh, pres.theta(pres.n * rng.randint(-2, 2)))
        else:
            o, c = rng.choice(neg)
            tau[key] = Point(o, pres.op(c, pres.theta(pres.n * rng.randint(-2, 2))))
    return PreActionHnn(pres, tuple(orbits), tau)


def brute_force_treeing(g: G.Graph, e) -> bool:
    """Independent treeing test: the antipode pair must be a bridge and the
    far side must be acyclic (no component with more edge pairs than a
    tree allows)."""
    if g.source[e] == g.target[e]:
        return False
    rest_edges = [f for f in g.source if f not in (e, g.antipode[e])]
    # union-find over vertices using the remaining darts
    parent = {v: v for v in g.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for f in rest_edges:
        a, b = find(g.source[f]), find(g.target[f])
        if a != b:
            parent[a] = b
    if find(g.source[e]) == find(g.target[e]):
        return False  # not a bridge: a return avoids the pair
    far = find(g.target[e])
    far_vertices = [v for v in g.vertices if find(v) == far]
    far_pairs = sum(1 for f in rest_edges if f in g.positive and find(g.source[f]) == far)
    return far_pairs == len(far_vertices) - 1


def enumerate_reduced_paths(g: G.Graph, e, max_len: int):
    """All reduced paths starting with e, up to the given length."""
    out = [(e,)]
    layer = [(e,)]
    for _ in range(max_len - 1):
        nxt = []
        for path in layer:
            for f in G.reduced_successors(g, path[-1]):
                nxt.append(path + (f,))
        out.extend(nxt)
        layer = nxt
        if not layer:
            break
    return out


def shortest_return_length(g: G.Graph, e) -> int | None:
    """Length of the shortest reduced path from s(e) to s(e) starting
    with e, or None if there is none."""
    base = g.source[e]
    dist = {e: 1}
    queue = [e]
    while queue:
        cur = queue.pop(0)
        if g.target[cur] == base:
            return dist[cur]
        for f in G.reduced_successors(g, cur):
            if f not in dist:
                dist[f] = dist[cur] + 1
                queue.append(f)
    return None
