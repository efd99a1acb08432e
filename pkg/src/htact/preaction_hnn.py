"""Pre-actions of an HNN extension and their lazy free globalization.

A pre-action is a free base-group action on a disjoint union of orbits
(each orbit a copy of the base group, points written (orbit, element))
together with a partial bijection tau intertwining the distinguished
subgroup with its twisted image.  Equivariance forces tau to be
determined by one value per subgroup orbit, so the table is keyed by
(orbit, positive coset representative) and stores the image of the
keyed representative point.

The free globalization extends tau to a total bijection by hanging a
copy of the positive translation structure at every uncovered subgroup
orbit on the domain side, and of the negative one at every uncovered
orbit on the range side.  Copies are never materialized: their points
are addressed by (attachment key, reduced syllable word), and applying
tau inside a copy is normal-form arithmetic on the word.  Results are
therefore independent of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from . import graphs
from .groups import GroupError, HnnPresentation, parse_presentation
from .hnn_words import HnnNormalForm, Letter

TauKey = tuple  # (orbit id, positive representative payload)


class PreActionError(Exception):
    pass


class OutsideDomain(PreActionError):
    """A tau evaluation left the finite table (not a malformed input)."""


@dataclass(frozen=True)
class GlobOrbit:
    """Base-group orbit inside an attached translation copy.

    ``copy`` is ("+"|"-", orbit, representative): the uncovered subgroup
    orbit the copy hangs at.  ``word`` is the reduced syllable address
    of the orbit inside the copy; its first syllable carries the copy
    sign and its identity representative.
    """

    copy: tuple
    word: tuple

    def sort_key(self):
        return (self.copy, len(self.word), self.word)


@dataclass(frozen=True)
class Point:
    orbit: object  # int (ambient) or GlobOrbit
    elem: int

    def is_ambient(self) -> bool:
        return isinstance(self.orbit, int)

    def __str__(self) -> str:
        return f"({self.orbit},{self.elem})"


def orbit_sort_key(orbit) -> tuple:
    if isinstance(orbit, int):
        return (0, orbit)
    return (1, orbit.sort_key())


def point_sort_key(p: Point) -> tuple:
    return (orbit_sort_key(p.orbit), p.elem)


def sigma_key(pres: HnnPresentation, p: Point) -> TauKey:
    """Key of the subgroup orbit through p (domain side)."""
    c, _ = pres.decompose_pos(p.elem)
    return (p.orbit, c)


def theta_key(pres: HnnPresentation, p: Point) -> TauKey:
    """Key of the twisted-subgroup orbit through p (range side)."""
    c, _ = pres.decompose_neg(p.elem)
    return (p.orbit, c)


def check_entries(pres: HnnPresentation, orbits: Iterable[int], entries: Iterable[tuple[TauKey, Point]]) -> list[str]:
    """Invariant report for a raw entry list; empty means valid."""
    problems: list[str] = []
    orbit_set = set(orbits)
    seen_keys: set[TauKey] = set()
    seen_images: set[TauKey] = set()
    for key, img in entries:
        orbit, rep = key
        if orbit not in orbit_set:
            problems.append(f"key {key} names an unknown orbit")
        if rep not in pres.reps_pos:
            problems.append(f"key {key} representative is not in the positive transversal")
        if key in seen_keys:
            problems.append(f"key {key} is assigned twice")
        seen_keys.add(key)
        if img.orbit not in orbit_set:
            problems.append(f"image {img} lies in an unknown orbit")
            continue
        ikey = theta_key(pres, img)
        if ikey in seen_images:
            problems.append(f"images collide in the twisted-subgroup orbit {ikey}")
        seen_images.add(ikey)
    return problems


@dataclass(frozen=True)
class PreActionHnn:
    pres: HnnPresentation
    orbits: tuple[int, ...]
    tau: dict
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        problems = self.check()
        if problems:
            raise PreActionError("; ".join(problems))
        inv = {}
        for key, img in self.tau.items():
            c_neg, v0 = self.pres.decompose_neg(img.elem)
            inv[(img.orbit, c_neg)] = (key, v0)
        object.__setattr__(self, "_inv", inv)

    def check(self) -> list[str]:
        return check_entries(self.pres, self.orbits, self.tau.items())

    # evaluation ---------------------------------------------------------
    def act(self, p: Point, h: int) -> Point:
        return Point(p.orbit, self.pres.op(p.elem, h))

    def tau_eval(self, p: Point) -> Point:
        c, s = self.pres.decompose_pos(p.elem)
        img = self.tau.get((p.orbit, c))
        if img is None:
            raise OutsideDomain(f"{p} is outside the domain of tau")
        return Point(img.orbit, self.pres.op(img.elem, self.pres.theta(s)))

    def tau_inv_eval(self, q: Point) -> Point:
        c_neg, v = self.pres.decompose_neg(q.elem)
        hit = self._inv.get((q.orbit, c_neg))
        if hit is None:
            raise OutsideDomain(f"{q} is outside the range of tau")
        (orbit, rep), v0 = hit
        shift = self.pres.theta_inv(self.pres.op(self.pres.inv(v0), v))
        return Point(orbit, self.pres.op(rep, shift))

    # frontier -----------------------------------------------------------
    def uncovered_pos_keys(self) -> list[TauKey]:
        return sorted(
            ((o, c) for o in self.orbits for c in self.pres.reps_pos if (o, c) not in self.tau),
            key=lambda k: (orbit_sort_key(k[0]), k[1]),
        )

    def uncovered_neg_keys(self) -> list[TauKey]:
        return sorted(
            ((o, c) for o in self.orbits for c in self.pres.reps_neg if (o, c) not in self._inv),
            key=lambda k: (orbit_sort_key(k[0]), k[1]),
        )

    def is_global_core(self) -> bool:
        return not self.uncovered_pos_keys() and not self.uncovered_neg_keys()

    # derived structures ---------------------------------------------------
    def graph(self, orbit_subset: Iterable[int] | None = None) -> graphs.Graph:
        return bass_serre_graph(self, orbit_subset)

    def restrict_to_edges(self, keys: Iterable[TauKey]) -> PreActionHnn:
        keys = set(keys)
        unknown = keys - set(self.tau)
        if unknown:
            raise PreActionError(f"unknown tau keys {sorted(unknown)}")
        return PreActionHnn(
            self.pres,
            self.orbits,
            {k: v for k, v in self.tau.items() if k in keys},
            dict(self.provenance),
        )


def check_preaction(p: PreActionHnn) -> list[str]:
    return p.check()


def bass_serre_graph(p: PreActionHnn, orbit_subset: Iterable[int] | None = None) -> graphs.Graph:
    """Quotient graph: orbits as vertices, tau entries as positive edges.

    The positive edge keyed (orbit, c) runs from its orbit to the image
    orbit; its antipode is the twisted-subgroup key of the image point.
    """
    orbits = tuple(p.orbits) if orbit_subset is None else tuple(orbit_subset)
    orbit_set = set(orbits)
    source, target, antipode, positive = {}, {}, {}, set()
    for key, img in p.tau.items():
        if key[0] not in orbit_set or img.orbit not in orbit_set:
            raise PreActionError(f"orbit window misses the entry at {key}")
        pos = ("+", key)
        neg = ("-", theta_key(p.pres, img))
        source[pos], target[pos] = key[0], img.orbit
        source[neg], target[neg] = img.orbit, key[0]
        antipode[pos], antipode[neg] = neg, pos
        positive.add(pos)
    return graphs.Graph(tuple(sorted(orbit_set, key=graphs.idsort)), source, target, antipode, frozenset(positive))


def partial_action_eval(p: PreActionHnn, x: Point, g: HnnNormalForm) -> Point | None:
    """Evaluate the partial bijection of g at x; None when undefined."""
    if g.pres != p.pres:
        raise GroupError("presentation mismatch")
    cur = x
    for c, e in g.syllables:
        cur = p.act(cur, c)
        try:
            cur = p.tau_eval(cur) if e == +1 else p.tau_inv_eval(cur)
        except OutsideDomain:
            return None
    return p.act(cur, g.tail)


@dataclass
class PathInfo:
    """A path in the Bass-Serre graph together with its point trail.

    ``edges`` holds sign-tagged orbit keys; ``in_core`` marks the edges
    backed by the finite tau table (as opposed to globalization copies).
    """

    edges: list
    points: list  # visited points, one more than edges
    in_core: list

    def last_edge(self):
        return self.edges[-1]

    def copy_suffix(self) -> list:
        """Edge keys from the first out-of-core edge on (the half-tree
        address of the final edge); empty when the path stays in core."""
        for i, flag in enumerate(self.in_core):
            if not flag:
                return self.edges[i:]
        return []


class LazyGlobalization:
    """Total evaluation of the free globalization of a finite pre-action."""

    def __init__(self, base: PreActionHnn):
        self.base = base
        self.pres = base.pres

    def act(self, p: Point, h: int) -> Point:
        return Point(p.orbit, self.pres.op(p.elem, h))

    def t_apply(self, p: Point, sign: int) -> Point:
        q = self._t_apply(p, sign)
        self._record(p, q, sign)
        return q

    def _record(self, p: Point, q: Point, sign: int) -> None:
        pass  # hook for RecordingGlobalization

    def _t_apply(self, p: Point, sign: int) -> Point:
        pres = self.pres
        if sign == +1:
            c, s = pres.decompose_pos(p.elem)
            if p.is_ambient():
                if (p.orbit, c) in self.base.tau:
                    return self.base.tau_eval(p)
                copy = ("+", p.orbit, c)
                return Point(GlobOrbit(copy, ((pres.identity, +1),)), pres.theta(s))
            return self._interior_step(p, c, pres.theta(s), +1)
        c, v = pres.decompose_neg(p.elem)
        if p.is_ambient():
            if (p.orbit, c) in self.base._inv:
                return self.base.tau_inv_eval(p)
            copy = ("-", p.orbit, c)
            return Point(GlobOrbit(copy, ((pres.identity, -1),)), pres.theta_inv(v))
        return self._interior_step(p, c, pres.theta_inv(v), -1)

    def _interior_step(self, p: Point, c: int, mapped: int, sign: int) -> Point:
        """One translation step inside a copy: push a syllable, or pop one
        (possibly exiting through the glued base orbit)."""
        pres = self.pres
        orbit: GlobOrbit = p.orbit
        word = orbit.word
        if c != pres.identity or word[-1][1] == sign:
            return Point(GlobOrbit(orbit.copy, word + ((c, sign),)), mapped)
        ck = word[-1][0]
        elem = pres.op(ck, mapped)
        if len(word) == 1:
            _, amb_orbit, rep = orbit.copy
            return Point(amb_orbit, pres.op(rep, elem))
        return Point(GlobOrbit(orbit.copy, word[:-1]), elem)

    def eval(self, x: Point, g: HnnNormalForm) -> Point:
        if g.pres != self.pres:
            raise GroupError("presentation mismatch")
        cur = x
        for c, e in g.syllables:
            cur = self.t_apply(self.act(cur, c), e)
        return self.act(cur, g.tail)

    def eval_word(self, x: Point, letters: list[Letter]) -> Point:
        cur = x
        for kind, v in letters:
            cur = self.act(cur, v) if kind == "h" else self.t_apply(cur, v)
        return cur

    def edge_in_core(self, edge) -> bool:
        sign, key = edge
        if not isinstance(key[0], int):
            return False
        return key in (self.base.tau if sign == "+" else self.base._inv)

    def path(self, x: Point, g: HnnNormalForm) -> PathInfo:
        """The reduced Bass-Serre path read off g's normal form at x."""
        if not g.syllables:
            raise PreActionError("path is defined only outside the base group")
        edges, points, in_core = [], [x], []
        cur = x
        for c, e in g.syllables:
            q = self.act(cur, c)
            if e == +1:
                edge = ("+", sigma_key(self.pres, q))
            else:
                edge = ("-", theta_key(self.pres, q))
            in_core.append(self.edge_in_core(edge))
            cur = self.t_apply(q, e)
            edges.append(edge)
            points.append(cur)
        return PathInfo(edges, points, in_core)

    def resolve_syllable(self, p: Point, edge) -> tuple[int, int]:
        """The unique syllable that traverses ``edge`` from p's vertex."""
        sign, (orbit, rep) = edge
        if orbit != p.orbit:
            raise PreActionError(f"edge {edge} does not start at {p}")
        if sign == "+":
            c, _ = self.pres.decompose_pos(self.pres.op(self.pres.inv(p.elem), rep))
            return (c, +1)
        c, _ = self.pres.decompose_neg(self.pres.op(self.pres.inv(p.elem), rep))
        return (c, -1)

    def window_graph(self, basepoints: list[Point], radius: int) -> graphs.Graph:
        """Induced subgraph on the orbits within ``radius`` edge steps."""
        reps: dict = {}
        dist: dict = {}
        queue: list = []
        for bp in basepoints:
            if bp.orbit not in reps:
                reps[bp.orbit] = bp
                dist[bp.orbit] = 0
                queue.append(bp.orbit)
        while queue:
            o = queue.pop(0)
            if dist[o] == radius:
                continue
            r = reps[o]
            for nb in self._neighbors(r):
                if nb.orbit not in reps:
                    reps[nb.orbit] = nb
                    dist[nb.orbit] = dist[o] + 1
                    queue.append(nb.orbit)
        vset = set(reps)
        source, target, antipode, positive = {}, {}, {}, set()
        for o in sorted(vset, key=orbit_sort_key):
            r = reps[o]
            for c in self.pres.reps_pos:
                q = self.act(r, c)
                img = self._t_apply(q, +1)
                if img.orbit not in vset:
                    continue
                pos = ("+", sigma_key(self.pres, q))
                neg = ("-", theta_key(self.pres, img))
                source[pos], target[pos] = o, img.orbit
                source[neg], target[neg] = img.orbit, o
                antipode[pos], antipode[neg] = neg, pos
                positive.add(pos)
        return graphs.Graph(tuple(sorted(vset, key=graphs.idsort)), source, target, antipode, frozenset(positive))

    def _neighbors(self, r: Point) -> list[Point]:
        out = []
        for c in self.pres.reps_pos:
            out.append(self._t_apply(self.act(r, c), +1))
        for c in self.pres.reps_neg:
            out.append(self._t_apply(self.act(r, c), -1))
        return out


class RecordingGlobalization(LazyGlobalization):
    """Globalization that logs every tau application it resolves.

    The log keeps (domain point, image point) pairs in application
    order, which is what round materialization replays into a new
    finite table.
    """

    def __init__(self, base: PreActionHnn):
        super().__init__(base)
        self.log: list[tuple[Point, Point]] = []

    def _record(self, p: Point, q: Point, sign: int) -> None:
        if sign == +1:
            self.log.append((p, q))
        else:
            self.log.append((q, p))


def globalize_eval(gl: LazyGlobalization, x: Point, g: HnnNormalForm) -> Point:
    return gl.eval(x, g)


def path_from_point(gl: LazyGlobalization, x: Point, g: HnnNormalForm) -> PathInfo:
    return gl.path(x, g)


def path_from_point_partial(p: PreActionHnn, x: Point, g: HnnNormalForm) -> PathInfo:
    """Path under the finite table alone; raises OutsideDomain when the
    evaluation leaves it."""
    edges, points, in_core = [], [x], []
    cur = x
    for c, e in g.syllables:
        q = p.act(cur, c)
        if e == +1:
            edge = ("+", sigma_key(p.pres, q))
            cur = p.tau_eval(q)
        else:
            edge = ("-", theta_key(p.pres, q))
            cur = p.tau_inv_eval(q)
        edges.append(edge)
        points.append(cur)
        in_core.append(True)
    return PathInfo(edges, points, in_core)


# serialization ------------------------------------------------------------

def serialize_preaction(p: PreActionHnn) -> str:
    lines = [f"preaction {p.pres.spec_string()}"]
    for o in sorted(p.orbits):
        lines.append(f"orbit {o} {p.provenance.get(o, 'core')}")
    for key in sorted(p.tau, key=lambda k: (orbit_sort_key(k[0]), k[1])):
        img = p.tau[key]
        lines.append(f"tau ({key[0]},{key[1]}) -> ({img.orbit},{img.elem})")
    return "\n".join(lines) + "\n"


def parse_point(text: str) -> Point:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise PreActionError(f"bad point syntax {text!r}")
    a, b = text[1:-1].split(",")
    return Point(int(a), int(b))


def parse_preaction(text: str) -> PreActionHnn:
    pres = None
    orbits: list[int] = []
    tau: dict = {}
    provenance: dict = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if parts[0] == "preaction":
            pres = parse_presentation(parts[1])
        elif parts[0] == "orbit":
            oid, prov = parts[1].split(None, 1)
            orbits.append(int(oid))
            provenance[int(oid)] = prov
        elif parts[0] == "tau":
            lhs, rhs = parts[1].split("->")
            kp = parse_point(lhs)
            tau[(kp.orbit, kp.elem)] = parse_point(rhs)
        else:
            raise PreActionError(f"unknown line {line!r}")
    if pres is None:
        raise PreActionError("missing presentation header")
    return PreActionHnn(pres, tuple(orbits), tau, provenance)
