"""Pre-actions of an amalgam and their lazy free globalization.

The two factors act freely on separate point sets; points are tagged
with their side, and combining a point with the wrong factor is a type
error.  The partial bijection tau goes from side 1 to side 2 and is
keyed, as in the HNN case, by one entry per shared-subgroup orbit.

Globalization hangs positive translation copies at uncovered domain
keys and negative ones at uncovered range keys.  Copy points are
addressed by (attachment key, alternating letter word); the side of an
address is determined by the copy sign and the word length parity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from . import graphs
from .groups import AmalgamPresentation, GroupError, parse_presentation
from .amalgam_words import AmalgamNormalForm

TauKey = tuple  # (side-1 orbit id, representative payload)


class PreActionError(Exception):
    pass


class OutsideDomain(PreActionError):
    pass


@dataclass(frozen=True)
class AmalgamGlobOrbit:
    """Factor orbit inside an attached translation copy.

    ``copy`` is ("+"|"-", orbit, representative); ``word`` the reduced
    alternating letter address.  For a "+" copy even word length means
    side 2; for a "-" copy it means side 1.
    """

    copy: tuple
    word: tuple

    @property
    def side(self) -> int:
        even = len(self.word) % 2 == 0
        if self.copy[0] == "+":
            return 2 if even else 1
        return 1 if even else 2

    def sort_key(self):
        return (self.copy, len(self.word), self.word)


class APoint:
    pass


@dataclass(frozen=True)
class Pt1(APoint):
    orbit: object
    elem: int

    side = 1

    def is_ambient(self) -> bool:
        return isinstance(self.orbit, int)

    def __str__(self) -> str:
        return f"1:({self.orbit},{self.elem})"


@dataclass(frozen=True)
class Pt2(APoint):
    orbit: object
    elem: int

    side = 2

    def is_ambient(self) -> bool:
        return isinstance(self.orbit, int)

    def __str__(self) -> str:
        return f"2:({self.orbit},{self.elem})"


def make_point(side: int, orbit, elem: int) -> APoint:
    return Pt1(orbit, elem) if side == 1 else Pt2(orbit, elem)


def orbit_sort_key(orbit) -> tuple:
    if isinstance(orbit, int):
        return (0, orbit)
    return (1, orbit.sort_key())


def skey1(pres: AmalgamPresentation, p: Pt1) -> TauKey:
    c, _ = pres.decompose(1, p.elem)
    return (p.orbit, c)


def skey2(pres: AmalgamPresentation, p: Pt2) -> TauKey:
    c, _ = pres.decompose(2, p.elem)
    return (p.orbit, c)


def check_entries(pres, orbits1, orbits2, entries) -> list[str]:
    problems: list[str] = []
    o1, o2 = set(orbits1), set(orbits2)
    seen_keys, seen_images = set(), set()
    for key, img in entries:
        orbit, rep = key
        if orbit not in o1:
            problems.append(f"key {key} names an unknown side-1 orbit")
        if rep not in pres.reps(1):
            problems.append(f"key {key} representative is not in the side-1 transversal")
        if key in seen_keys:
            problems.append(f"key {key} is assigned twice")
        seen_keys.add(key)
        if not isinstance(img, Pt2):
            problems.append(f"image of {key} is not a side-2 point")
            continue
        if img.orbit not in o2:
            problems.append(f"image {img} lies in an unknown side-2 orbit")
            continue
        ikey = skey2(pres, img)
        if ikey in seen_images:
            problems.append(f"images collide in the side-2 subgroup orbit {ikey}")
        seen_images.add(ikey)
    return problems


@dataclass(frozen=True)
class PreActionAmalgam:
    pres: AmalgamPresentation
    orbits1: tuple[int, ...]
    orbits2: tuple[int, ...]
    tau: dict
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        problems = self.check()
        if problems:
            raise PreActionError("; ".join(problems))
        inv = {}
        for key, img in self.tau.items():
            c2, s20 = self.pres.decompose(2, img.elem)
            inv[(img.orbit, c2)] = (key, s20)
        object.__setattr__(self, "_inv", inv)

    def check(self) -> list[str]:
        return check_entries(self.pres, self.orbits1, self.orbits2, self.tau.items())

    def act(self, p: APoint, side: int, g: int) -> APoint:
        if p.side != side:
            raise GroupError(f"factor {side} cannot act on a side-{p.side} point")
        return make_point(side, p.orbit, self.pres.op(side, p.elem, g))

    def tau_eval(self, p: Pt1) -> Pt2:
        c, s1 = self.pres.decompose(1, p.elem)
        img = self.tau.get((p.orbit, c))
        if img is None:
            raise OutsideDomain(f"{p} is outside the domain of tau")
        return Pt2(img.orbit, self.pres.op(2, img.elem, self.pres.theta(s1)))

    def tau_inv_eval(self, q: Pt2) -> Pt1:
        c2, s2 = self.pres.decompose(2, q.elem)
        hit = self._inv.get((q.orbit, c2))
        if hit is None:
            raise OutsideDomain(f"{q} is outside the range of tau")
        (orbit, rep), s20 = hit
        shift = self.pres.theta_inv(self.pres.op(2, self.pres.inv(2, s20), s2))
        return Pt1(orbit, self.pres.op(1, rep, shift))

    def uncovered_pos_keys(self) -> list[TauKey]:
        return sorted(
            ((o, c) for o in self.orbits1 for c in self.pres.reps(1) if (o, c) not in self.tau),
            key=lambda k: (orbit_sort_key(k[0]), k[1]),
        )

    def uncovered_neg_keys(self) -> list[TauKey]:
        return sorted(
            ((o, c) for o in self.orbits2 for c in self.pres.reps(2) if (o, c) not in self._inv),
            key=lambda k: (orbit_sort_key(k[0]), k[1]),
        )

    def graph(self, windows: tuple[Iterable[int], Iterable[int]] | None = None) -> graphs.Graph:
        return bass_serre_graph_amalgam(self, windows)


def check_preaction_amalgam(p: PreActionAmalgam) -> list[str]:
    return p.check()


def bass_serre_graph_amalgam(p: PreActionAmalgam, windows=None) -> graphs.Graph:
    """Two-sided quotient graph: side-tagged orbits as vertices, tau
    entries as positive edges from side 1 to side 2."""
    w1 = tuple(p.orbits1) if windows is None else tuple(windows[0])
    w2 = tuple(p.orbits2) if windows is None else tuple(windows[1])
    vset = {(1, o) for o in w1} | {(2, o) for o in w2}
    source, target, antipode, positive = {}, {}, {}, set()
    for key, img in p.tau.items():
        if (1, key[0]) not in vset or (2, img.orbit) not in vset:
            raise PreActionError(f"orbit window misses the entry at {key}")
        pos = ("+", key)
        neg = ("-", skey2(p.pres, img))
        source[pos], target[pos] = (1, key[0]), (2, img.orbit)
        source[neg], target[neg] = (2, img.orbit), (1, key[0])
        antipode[pos], antipode[neg] = neg, pos
        positive.add(pos)
    return graphs.Graph(tuple(sorted(vset, key=graphs.idsort)), source, target, antipode, frozenset(positive))


def action_eval_side1(p: PreActionAmalgam, x: Pt1, g: AmalgamNormalForm) -> Pt1 | None:
    """Induced side-1 evaluation of g at x; None when a tau step leaves
    the finite table.  Factor-1 letters act directly; factor-2 letters
    act conjugated through tau."""
    if g.pres != p.pres:
        raise GroupError("presentation mismatch")
    cur: Pt1 | None = x
    for side, c in g.syllables:
        if side == 1:
            cur = p.act(cur, 1, c)
            continue
        try:
            over = p.tau_eval(cur)
            cur = p.tau_inv_eval(p.act(over, 2, c))
        except OutsideDomain:
            return None
    return p.act(cur, 1, p.pres.inject(1, g.tail))


@dataclass
class PathInfo:
    edges: list
    points: list
    in_core: list

    def last_edge(self):
        return self.edges[-1]

    def copy_suffix(self) -> list:
        for i, flag in enumerate(self.in_core):
            if not flag:
                return self.edges[i:]
        return []


class LazyGlobalizationAmalgam:
    """Total evaluation of the free globalization of a finite amalgam
    pre-action."""

    def __init__(self, base: PreActionAmalgam):
        self.base = base
        self.pres = base.pres

    def act(self, p: APoint, side: int, g: int) -> APoint:
        if p.side != side:
            raise GroupError(f"factor {side} cannot act on a side-{p.side} point")
        return make_point(side, p.orbit, self.pres.op(side, p.elem, g))

    def t_apply(self, p: APoint, sign: int) -> APoint:
        q = self._t_apply(p, sign)
        self._record(p, q, sign)
        return q

    def _record(self, p: APoint, q: APoint, sign: int) -> None:
        pass

    def _t_apply(self, p: APoint, sign: int) -> APoint:
        pres = self.pres
        if sign == +1:
            if p.side != 1:
                raise GroupError("tau applies to side-1 points")
            c, s1 = pres.decompose(1, p.elem)
            mapped = pres.theta(s1)
            if p.is_ambient():
                if (p.orbit, c) in self.base.tau:
                    return self.base.tau_eval(p)
                copy = ("+", p.orbit, c)
                return Pt2(AmalgamGlobOrbit(copy, ()), mapped)
            return self._interior_step(p, c, mapped, +1)
        if p.side != 2:
            raise GroupError("inverse tau applies to side-2 points")
        c, s2 = pres.decompose(2, p.elem)
        mapped = pres.theta_inv(s2)
        if p.is_ambient():
            if (p.orbit, c) in self.base._inv:
                return self.base.tau_inv_eval(p)
            copy = ("-", p.orbit, c)
            return Pt1(AmalgamGlobOrbit(copy, ()), mapped)
        return self._interior_step(p, c, mapped, -1)

    def _interior_step(self, p: APoint, c: int, mapped: int, sign: int) -> APoint:
        """Push a letter deeper into the copy, or absorb a subgroup part
        into the previous letter (possibly exiting through the glue)."""
        pres = self.pres
        orbit: AmalgamGlobOrbit = p.orbit
        word = orbit.word
        new_side = 2 if sign == +1 else 1
        if c != 0:
            return make_point(new_side, AmalgamGlobOrbit(orbit.copy, word + (c,)), mapped)
        if not word:
            csign, amb_orbit, rep = orbit.copy
            # glue exit: "+" copies glue side 1, "-" copies glue side 2
            glue_side = 1 if csign == "+" else 2
            if new_side != glue_side:
                raise PreActionError("globalization step left the copy on the wrong side")
            return make_point(glue_side, amb_orbit, pres.op(glue_side, rep, mapped))
        last = word[-1]
        return make_point(new_side, AmalgamGlobOrbit(orbit.copy, word[:-1]), pres.op(new_side, last, mapped))

    def eval_side1(self, x: Pt1, g: AmalgamNormalForm) -> Pt1:
        if g.pres != self.pres:
            raise GroupError("presentation mismatch")
        cur = x
        for side, c in g.syllables:
            if side == 1:
                cur = self.act(cur, 1, c)
            else:
                over = self.t_apply(cur, +1)
                cur = self.t_apply(self.act(over, 2, c), -1)
        return self.act(cur, 1, self.pres.inject(1, g.tail))

    def eval_side2(self, x: Pt2, g: AmalgamNormalForm) -> Pt2:
        """Conjugate evaluation on side 2: factor-2 letters act directly,
        factor-1 letters through the inverse bijection."""
        if g.pres != self.pres:
            raise GroupError("presentation mismatch")
        cur = x
        for side, c in g.syllables:
            if side == 2:
                cur = self.act(cur, 2, c)
            else:
                under = self.t_apply(cur, -1)
                cur = self.t_apply(self.act(under, 1, c), +1)
        return self.act(cur, 2, self.pres.inject(2, g.tail))

    def edge_in_core(self, edge) -> bool:
        sign, key = edge
        if not isinstance(key[0], int):
            return False
        return key in (self.base.tau if sign == "+" else self.base._inv)

    def path_side1(self, x: Pt1, g: AmalgamNormalForm) -> PathInfo:
        """path of g at a side-1 point: first edge is x's own subgroup
        orbit, then one edge per letter."""
        if not g.syllables or g.syllables[0][0] != 2:
            raise PreActionError("path needs a normal form starting in factor 2")
        edges, points, in_core = [], [x], []
        e0 = ("+", skey1(self.pres, x))
        in_core.append(self.edge_in_core(e0))
        cur = self.t_apply(x, +1)
        edges.append(e0)
        points.append(cur)
        for side, c in g.syllables:
            q = self.act(cur, side, c)
            if side == 2:
                edge = ("-", skey2(self.pres, q))
                cur = self.t_apply(q, -1)
            else:
                edge = ("+", skey1(self.pres, q))
                cur = self.t_apply(q, +1)
            in_core.append(self.edge_in_core(edge))
            edges.append(edge)
            points.append(cur)
        return PathInfo(edges, points, in_core)

    def resolve_letter(self, p: APoint, edge) -> int:
        sign, (orbit, rep) = edge
        if orbit != p.orbit:
            raise PreActionError(f"edge {edge} does not start at {p}")
        side = 1 if sign == "+" else 2
        c, _ = self.pres.decompose(side, self.pres.op(side, self.pres.inv(side, p.elem), rep))
        return c

    def window_graph(self, basepoints: list[APoint], radius: int) -> graphs.Graph:
        reps: dict = {}
        dist: dict = {}
        queue: list = []
        for bp in basepoints:
            vid = (bp.side, bp.orbit)
            if vid not in reps:
                reps[vid] = bp
                dist[vid] = 0
                queue.append(vid)
        while queue:
            vid = queue.pop(0)
            if dist[vid] == radius:
                continue
            for nb in self._neighbors(reps[vid]):
                nvid = (nb.side, nb.orbit)
                if nvid not in reps:
                    reps[nvid] = nb
                    dist[nvid] = dist[vid] + 1
                    queue.append(nvid)
        vset = set(reps)
        source, target, antipode, positive = {}, {}, {}, set()
        for vid in sorted(vset, key=graphs.idsort):
            if vid[0] != 1:
                continue
            r = reps[vid]
            for c in self.pres.reps(1):
                q = self.act(r, 1, c)
                img = self._t_apply(q, +1)
                if (2, img.orbit) not in vset:
                    continue
                pos = ("+", skey1(self.pres, q))
                neg = ("-", skey2(self.pres, img))
                source[pos], target[pos] = vid, (2, img.orbit)
                source[neg], target[neg] = (2, img.orbit), vid
                antipode[pos], antipode[neg] = neg, pos
                positive.add(pos)
        return graphs.Graph(tuple(sorted(vset, key=graphs.idsort)), source, target, antipode, frozenset(positive))

    def _neighbors(self, r: APoint) -> list[APoint]:
        out = []
        if r.side == 1:
            for c in self.pres.reps(1):
                out.append(self._t_apply(self.act(r, 1, c), +1))
        else:
            for c in self.pres.reps(2):
                out.append(self._t_apply(self.act(r, 2, c), -1))
        return out


class RecordingGlobalizationAmalgam(LazyGlobalizationAmalgam):
    def __init__(self, base: PreActionAmalgam):
        super().__init__(base)
        self.log: list[tuple[Pt1, Pt2]] = []

    def _record(self, p: APoint, q: APoint, sign: int) -> None:
        if sign == +1:
            self.log.append((p, q))
        else:
            self.log.append((q, p))


def globalize_eval_amalgam(gl: LazyGlobalizationAmalgam, side: int, x: APoint, g: AmalgamNormalForm) -> APoint:
    if side != 1:
        raise PreActionError("only the side-1 induced action is exposed")
    return gl.eval_side1(x, g)


def path_from_point_amalgam(gl: LazyGlobalizationAmalgam, side: int, x: APoint, g: AmalgamNormalForm) -> PathInfo:
    if side != 1:
        raise PreActionError("only side-1 paths are exposed")
    return gl.path_side1(x, g)


# serialization ------------------------------------------------------------

def serialize_preaction_amalgam(p: PreActionAmalgam) -> str:
    lines = [f"preaction {p.pres.spec_string()}"]
    for o in sorted(p.orbits1):
        lines.append(f"orbit 1 {o} {p.provenance.get((1, o), 'core')}")
    for o in sorted(p.orbits2):
        lines.append(f"orbit 2 {o} {p.provenance.get((2, o), 'core')}")
    for key in sorted(p.tau, key=lambda k: (orbit_sort_key(k[0]), k[1])):
        img = p.tau[key]
        lines.append(f"tau ({key[0]},{key[1]}) -> ({img.orbit},{img.elem})")
    return "\n".join(lines) + "\n"


def parse_preaction_amalgam(text: str) -> PreActionAmalgam:
    pres = None
    orbits1: list[int] = []
    orbits2: list[int] = []
    tau: dict = {}
    provenance: dict = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "preaction":
            pres = parse_presentation(" ".join(parts[1:]))
        elif parts[0] == "orbit":
            side, oid = int(parts[1]), int(parts[2])
            (orbits1 if side == 1 else orbits2).append(oid)
            provenance[(side, oid)] = " ".join(parts[3:])
        elif parts[0] == "tau":
            body = " ".join(parts[1:])
            lhs, rhs = body.split("->")
            ko, kr = (int(v) for v in lhs.strip()[1:-1].split(","))
            io, ie = (int(v) for v in rhs.strip()[1:-1].split(","))
            tau[(ko, kr)] = Pt2(io, ie)
        else:
            raise PreActionError(f"unknown line {line!r}")
    if pres is None:
        raise PreActionError("missing presentation header")
    return PreActionAmalgam(pres, tuple(orbits1), tuple(orbits2), tau, provenance)
