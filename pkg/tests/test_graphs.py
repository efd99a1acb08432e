import random

import pytest

from htact import graphs as G
from helpers import (
    brute_force_treeing,
    enumerate_reduced_paths,
    random_graph,
    shortest_return_length,
)


def lollipop():
    # triangle 0-1-2 with a pendant edge 2-3
    return G.make_graph([0, 1, 2, 3], [("a", 0, 1), ("b", 1, 2), ("c", 2, 0), ("p", 2, 3)])


def test_graph_validation():
    with pytest.raises(G.GraphError):
        G.Graph((0,), {"e": 0}, {"e": 0}, {"e": "e"}, frozenset({"e"}))


def test_is_reduced():
    g = lollipop()
    assert not G.is_reduced(g, ("a", ("a", "bar")))
    assert G.is_reduced(g, ("a",))
    assert G.is_reduced(g, ("a", "b", "c"))
    with pytest.raises(G.GraphError):
        G.is_reduced(g, ("a", "p"))


def test_treeing_examples():
    tree = G.make_graph(range(5), [(i, i, i + 1) for i in range(4)])
    assert all(G.is_treeing_edge(tree, e) for e in tree.source)
    c5 = G.make_graph(range(5), [(i, i, (i + 1) % 5) for i in range(5)])
    assert not any(G.is_treeing_edge(c5, e) for e in c5.source)
    g = lollipop()
    assert G.is_treeing_edge(g, "p")
    assert not G.is_treeing_edge(g, ("p", "bar"))
    assert not G.is_treeing_edge(g, "a")


def test_loop_edge_is_not_treeing():
    g = G.make_graph([0], [("l", 0, 0)])
    assert not G.is_treeing_edge(g, "l")


def test_half_graph_examples():
    g = lollipop()
    h = G.half_graph(g, "a")
    assert set(h.vertices) == {0, 1, 2, 3}
    assert len(h.edges) == len(g.edges)
    hp = G.half_graph(g, "p")
    assert set(hp.vertices) == {2, 3}
    assert set(hp.edges) == {"p", ("p", "bar")}
    iso = G.make_graph([0, 1], [("e", 0, 1)])
    hi = G.half_graph(iso, "e")
    assert set(hi.vertices) == {0, 1}


def test_half_graph_union_law():
    rng = random.Random(0)
    checked = 0
    while checked < 60:
        g = random_graph(rng)
        if not g.edges or not G.is_connected(g):
            continue
        checked += 1
        e = rng.choice(g.edges)
        he = G.half_graph(g, e)
        hb = G.half_graph(g, g.antipode[e])
        assert set(he.vertices) | set(hb.vertices) == set(g.vertices)
        assert set(he.edges) | set(hb.edges) == set(g.edges)


def test_treeing_info_returns_half_graph():
    g = lollipop()
    ok, h = G.treeing_edge_info(g, "p")
    assert ok and set(h.vertices) == {2, 3}
    ok, h = G.treeing_edge_info(g, "a")
    assert not ok and h is None


def test_treeing_oracle_equivalence_random():
    rng = random.Random(42)
    for _ in range(200):
        g = random_graph(rng)
        for e in g.edges:
            assert G.is_treeing_edge(g, e) == brute_force_treeing(g, e)


def test_range_injectivity_consistency():
    # treeing edges: bounded reduced-path enumeration has injective ranges;
    # non-treeing edges: a range collision appears within the return bound
    rng = random.Random(17)
    done = 0
    while done < 40:
        g = random_graph(rng, max_vertices=7, max_edges=8)
        if not g.edges:
            continue
        done += 1
        for e in g.edges:
            if G.is_treeing_edge(g, e):
                paths = enumerate_reduced_paths(g, e, 2 * len(g.edges))
                ranges = [g.target[p[-1]] for p in paths]
                assert len(set(ranges)) == len(ranges)
            else:
                ret = shortest_return_length(g, e)
                assert ret is not None, "a non-treeing edge admits a reduced return"
                paths = enumerate_reduced_paths(g, e, ret + 1)
                ranges = [g.target[p[-1]] for p in paths]
                assert len(set(ranges)) < len(ranges)


def test_extend_to_treeing_examples():
    g = lollipop()
    assert G.extend_to_treeing(g, ("p",)) == ("p",)
    ext = G.extend_to_treeing(g, ("a",))
    assert ext[: 1] == ("a",)
    assert G.is_reduced(g, ext)
    assert G.is_treeing_edge(g, ext[-1])
    c5 = G.make_graph(range(5), [(i, i, (i + 1) % 5) for i in range(5)])
    with pytest.raises(G.GraphError):
        G.extend_to_treeing(c5, (0,))
    with pytest.raises(G.GraphError):
        G.extend_to_treeing(g, ("a", ("a", "bar")))


def test_extend_to_treeing_random():
    rng = random.Random(23)
    done = 0
    while done < 80:
        g = random_graph(rng)
        if not g.edges or not G.is_connected(g):
            continue
        treeing = [e for e in g.edges if G.is_treeing_edge(g, e)]
        if not treeing:
            continue
        done += 1
        e = rng.choice(g.edges)
        ext = G.extend_to_treeing(g, (e,))
        assert ext[0] == e
        assert G.is_reduced(g, ext)
        assert G.is_treeing_edge(g, ext[-1])


def test_extend_is_deterministic():
    rng = random.Random(5)
    g = random_graph(rng, 8, 12)
    while not (g.edges and G.is_connected(g) and any(G.is_treeing_edge(g, e) for e in g.edges)):
        g = random_graph(rng, 8, 12)
    e = g.edges[0]
    assert G.extend_to_treeing(g, (e,)) == G.extend_to_treeing(g, (e,))


def test_forest_flag():
    tree = G.make_graph(range(4), [("x", 0, 1), ("y", 1, 2), ("z", 1, 3)])
    assert G.is_forest(tree)
    c3 = G.make_graph(range(3), [(i, i, (i + 1) % 3) for i in range(3)])
    assert not G.is_forest(c3)


def test_dot_export():
    g = lollipop()
    dot = G.to_dot(g)
    assert dot.startswith("graph bass_serre {")
    assert '"2" -- "3" [style=bold];' in dot
    assert dot.count("--") == 4  # one line per antipodal pair
    assert G.to_dot(g) == G.to_dot(g)
