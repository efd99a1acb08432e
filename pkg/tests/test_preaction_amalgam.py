import random

import pytest

from htact import amalgam_words as aw
from htact import graphs as G
from htact.groups import GroupError, make_zmod_amalgam
from htact.preaction_amalgam import (
    AmalgamGlobOrbit,
    LazyGlobalizationAmalgam,
    OutsideDomain,
    PreActionAmalgam,
    PreActionError,
    Pt1,
    Pt2,
    bass_serre_graph_amalgam,
    check_preaction_amalgam,
    action_eval_side1,
    globalize_eval_amalgam,
    parse_preaction_amalgam,
    path_from_point_amalgam,
    serialize_preaction_amalgam,
)
from helpers import random_amalgam_word

Z23 = make_zmod_amalgam(2, 3)


def seed_core():
    return PreActionAmalgam(Z23, (0,), (0,), {(0, 0): Pt2(0, 0)})


def random_core(rng: random.Random, entries: int = 5) -> PreActionAmalgam:
    orbits1, orbits2 = [0], [0]
    tau = {(0, 0): Pt2(0, 0)}
    for _ in range(entries):
        pos = [(o, c) for o in orbits1 for c in Z23.reps(1) if (o, c) not in tau]
        if len(pos) <= 1:
            break
        key = rng.choice(pos)
        taken = {(img.orbit, Z23.decompose(2, img.elem)[0]) for img in tau.values()}
        neg = [(o, c) for o in orbits2 for c in Z23.reps(2) if (o, c) not in taken]
        if rng.random() < 0.5 or not neg:
            fresh = len(orbits2)
            orbits2.append(fresh)
            tau[key] = Pt2(fresh, rng.randint(0, 2))
        else:
            o, c = rng.choice(neg)
            tau[key] = Pt2(o, c)
    return PreActionAmalgam(Z23, tuple(orbits1), tuple(orbits2), tau)


def test_check_and_type_errors():
    p = seed_core()
    assert check_preaction_amalgam(p) == []
    with pytest.raises(GroupError):
        p.act(Pt1(0, 0), 2, 1)
    with pytest.raises(PreActionError):
        PreActionAmalgam(Z23, (0,), (0,), {(0, 0): Pt2(0, 0), (0, 1): Pt2(0, 0)})


def test_action_eval_side1_examples():
    p = seed_core()
    g_sub = aw.identity_nf_amalgam(Z23)
    x = Pt1(0, 1)
    assert action_eval_side1(p, x, g_sub) == x
    g1 = aw.reduce_text_amalgam("1:1", Z23)
    assert action_eval_side1(p, x, g1) == Pt1(0, 0)
    g2 = aw.reduce_text_amalgam("2:1", Z23)
    assert action_eval_side1(p, Pt1(0, 1), g2) is None  # (0,1) outside dom
    assert action_eval_side1(p, Pt1(0, 0), g2) is None  # image step leaves rng


def test_action_group_law_where_defined():
    rng = random.Random(5)
    p = random_core(rng, entries=8)
    for _ in range(300):
        g = aw.reduce_amalgam(random_amalgam_word(rng, Z23, 4), Z23)
        x = Pt1(rng.choice(p.orbits1), rng.randint(0, 1))
        xg = action_eval_side1(p, x, g)
        if xg is None:
            continue
        back = action_eval_side1(p, xg, aw.invert_amalgam(g))
        if back is not None:
            assert back == x


def test_bass_serre_graph_shapes():
    empty = PreActionAmalgam(Z23, (0,), (0,), {})
    g = bass_serre_graph_amalgam(empty)
    assert set(g.vertices) == {(1, 0), (2, 0)} and not g.edges
    one = seed_core()
    g1 = bass_serre_graph_amalgam(one)
    assert len(g1.positive) == 1
    e = ("+", (0, 0))
    assert g1.source[e] == (1, 0) and g1.target[e] == (2, 0)
    with pytest.raises(PreActionError):
        bass_serre_graph_amalgam(one, ((), (0,)))


def test_translation_window_biregular_ball():
    gl = LazyGlobalizationAmalgam(seed_core())
    w = gl.window_graph([Pt1(0, 0)], 3)
    assert G.is_forest(w) and G.is_connected(w)
    for v in w.vertices:
        d = w.degree(v)
        if d == 1:
            continue
        assert d == (2 if v[0] == 1 else 3)
    interior1 = [v for v in w.vertices if v[0] == 1 and w.degree(v) == 2]
    interior2 = [v for v in w.vertices if v[0] == 2 and w.degree(v) == 3]
    assert interior1 and interior2


def test_path_examples():
    gl = LazyGlobalizationAmalgam(seed_core())
    b = aw.reduce_text_amalgam("2:1", Z23)
    info = path_from_point_amalgam(gl, 1, Pt1(0, 0), b)
    assert len(info.edges) == 2  # e0 plus one edge per letter
    assert info.edges[0] == ("+", (0, 0))
    ext = aw.reduce_text_amalgam("2:1 1:1 2:1", Z23)
    info2 = path_from_point_amalgam(gl, 1, Pt1(0, 0), ext)
    assert info2.edges[: 2] == info.edges
    assert len(info2.edges) == 4


def test_path_range_is_endpoint_orbit():
    rng = random.Random(9)
    gl = LazyGlobalizationAmalgam(seed_core())
    for g in list(aw.path_type_extensions_amalgam(aw.reduce_text_amalgam("2:1", Z23), 1, 2))[:20]:
        x = Pt1(0, rng.randint(0, 1))
        info = path_from_point_amalgam(gl, 1, x, g)
        end = globalize_eval_amalgam(gl, 1, x, g)
        assert info.points[-1] == end
        assert len(info.edges) == g.syllable_count() + 1


def test_path_letter_resolution_round_trip():
    gl = LazyGlobalizationAmalgam(seed_core())
    x = Pt1(0, 1)
    for g in list(aw.path_type_extensions_amalgam(aw.reduce_text_amalgam("2:2", Z23), 1, 2))[:12]:
        info = path_from_point_amalgam(gl, 1, x, g)
        cur = gl.t_apply(x, +1)
        letters = []
        for edge in info.edges[1:]:
            c = gl.resolve_letter(cur, edge)
            side = cur.side
            letters.append((side, c))
            cur = gl.t_apply(gl.act(cur, side, c), +1 if side == 1 else -1)
        assert tuple(letters) == g.syllables


def test_globalization_agrees_and_round_trips():
    rng = random.Random(21)
    core = random_core(rng)
    gl = LazyGlobalizationAmalgam(core)
    for key in core.tau:
        x = Pt1(key[0], key[1])
        assert gl.t_apply(x, +1) == core.tau_eval(x)
    for _ in range(300):
        g = aw.reduce_amalgam(random_amalgam_word(rng, Z23, 6), Z23)
        x = Pt1(rng.choice(core.orbits1), rng.randint(0, 1))
        y = gl.eval_side1(x, g)
        assert gl.eval_side1(y, aw.invert_amalgam(g)) == x


def test_fresh_copy_provenance():
    core = seed_core()
    gl = LazyGlobalizationAmalgam(core)
    y = gl.t_apply(Pt1(0, 1), +1)
    assert isinstance(y.orbit, AmalgamGlobOrbit)
    assert y.orbit.copy == ("+", 0, 1) and y.orbit.word == ()
    assert y.side == 2
    z = gl.t_apply(Pt2(0, 1), -1)
    assert z.orbit.copy == ("-", 0, 1) and z.side == 1


def test_conjugacy_of_induced_actions():
    rng = random.Random(6)
    core = random_core(rng)
    gl = LazyGlobalizationAmalgam(core)
    for _ in range(500):
        g = aw.reduce_amalgam(random_amalgam_word(rng, Z23, 5), Z23)
        x = Pt1(rng.choice(core.orbits1), rng.randint(0, 1))
        left = gl.t_apply(gl.eval_side1(x, g), +1)
        right = gl.eval_side2(gl.t_apply(x, +1), g)
        assert left == right


def test_frontier_edges_treeing_on_windows():
    rng = random.Random(14)
    for _ in range(5):
        core = random_core(rng)
        gl = LazyGlobalizationAmalgam(core)
        basepts = [Pt1(o, 0) for o in core.orbits1] + [Pt2(o, 0) for o in core.orbits2]
        w = gl.window_graph(basepts, 3)
        for key in core.uncovered_pos_keys():
            edge = ("+", key)
            if edge in w.source:
                assert G.is_treeing_edge(w, edge)


def test_faithfulness_witness_bounded():
    core = seed_core()
    gl = LazyGlobalizationAmalgam(core)
    elems = [g for g in aw.enumerate_nontrivial_amalgam(Z23, 30) if g.syllable_count() <= 4][:5]
    cur = gl.t_apply(Pt1(0, 1), +1)
    found = None
    for _ in range(12):
        if cur.side == 2:
            cur = gl.t_apply(gl.act(cur, 2, 1), -1)
        else:
            if all(gl.eval_side1(cur, g) != cur for g in elems):
                found = cur
                break
            cur = gl.t_apply(gl.act(cur, 1, 1), +1)
    assert found is not None


def test_serialization_round_trip():
    rng = random.Random(30)
    for _ in range(10):
        p = random_core(rng)
        text = serialize_preaction_amalgam(p)
        q = parse_preaction_amalgam(text)
        assert q.pres == p.pres and q.orbits1 == p.orbits1 and q.orbits2 == p.orbits2
        assert q.tau == p.tau
        assert serialize_preaction_amalgam(q) == text


def test_outside_domain_errors():
    p = seed_core()
    with pytest.raises(OutsideDomain):
        p.tau_eval(Pt1(0, 1))
    with pytest.raises(OutsideDomain):
        p.tau_inv_eval(Pt2(0, 1))
