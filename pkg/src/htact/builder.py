"""Round-based construction of certified finite action approximations.

Each round takes a transitivity demand (two tuples of pairwise distinct
points) against the current finite transitive pre-action and produces
an extended pre-action together with a group element mapping the first
tuple onto the second, plus a witness point moved by every element of a
fixed faithfulness schedule.  Both come with replayable certificates.

One round, for an HNN extension:

 1. grow a path-type element gamma until, from every demand point, the
    path it traces ends in a treeing edge (frontier and copy edges of
    the globalization always are; core edges are tested exactly on the
    finite graph);
 2. extend further so every such path leaves the finite core, and keep
    fixing colliding pairs until the end-edge half-trees are pairwise
    disjoint: nested half-trees are split by an alternative same-length
    extension, equal ones by a separation element conjugating the
    subgroup shift out of alignment;
 3. conceptually erase the bijection on the half-trees beyond the final
    edges (never materialized, so nothing is removed from the table),
    define tau afresh on those edges into brand-new orbits, and keep
    every table entry the paths used;
 4. re-verify every certificate ever issued against the new state.

The mapping element is gamma c t c- (gamma c t)^-1 for fixed transversal
elements c, c-; for amalgams it is gamma c1 c2 c1^-1 gamma^-1.  The
faithfulness witness is a point deep inside a fresh translation copy,
deeper than the longest scheduled element can reach back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import amalgam_words as aw
from . import graphs
from . import hnn_words as hw
from .groups import AmalgamPresentation, BsPresentation, GroupError, Presentation
from . import preaction_amalgam as pam
from . import preaction_hnn as phn
from .preaction_amalgam import (
    LazyGlobalizationAmalgam,
    PreActionAmalgam,
    Pt1,
    Pt2,
    RecordingGlobalizationAmalgam,
)
from .preaction_hnn import (
    LazyGlobalization,
    Point,
    PreActionHnn,
    RecordingGlobalization,
)


class BuilderError(Exception):
    pass


class PreconditionFailed(BuilderError):
    def __init__(self, report):
        super().__init__("; ".join(report.problems))
        self.report = report


class CapExceeded(BuilderError):
    def __init__(self, what: str, detail: str):
        super().__init__(f"{what} cap exceeded: {detail}")
        self.what = what
        self.detail = detail


@dataclass(frozen=True)
class Caps:
    separation: int = 12
    extension: int = 64
    pair_fixes: int = 64


@dataclass
class Report:
    ok: bool
    problems: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Demand:
    """Transitivity demand: map the tuple xs onto ys pointwise."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        if not self.xs or len(self.xs) != len(self.ys):
            raise BuilderError("demand tuples must be nonempty and of equal length")
        pts = list(self.xs) + list(self.ys)
        if len(set(pts)) != len(pts):
            raise BuilderError("demand points must be pairwise distinct")

    @property
    def k(self) -> int:
        return len(self.xs)


@dataclass
class Certificate:
    kind: str  # "map" | "moves"
    gamma: object = None  # normal form (map)
    pairs: tuple = ()  # ((x, y), ...) for map
    witness: object = None  # point (moves)
    moved: tuple = ()  # normal forms (moves)


@dataclass
class BuilderState:
    pres: Presentation
    core: object
    certificates: list = field(default_factory=list)
    transcript: list = field(default_factory=list)
    round_no: int = 0
    next_orbit: int = 0
    frozen: dict = field(default_factory=dict)  # tau snapshot of all past rounds
    cap_error: str | None = None

    def transcript_text(self) -> str:
        return "\n".join(self.transcript) + "\n"


def _is_hnn(pres: Presentation) -> bool:
    return isinstance(pres, BsPresentation)


def check_builder_preconditions(pres: Presentation) -> Report:
    """Admissibility of a presentation for the builder.

    HNN data must be non-ascending; Baumslag-Solitar parameters must
    additionally satisfy |m| != 1, |n| != 1 and |m| != |n| (otherwise
    the boundary action is not topologically free and the separation
    search cannot terminate).  Amalgams must be non-degenerate.
    """
    problems: list[str] = []
    warnings: list[str] = []
    if isinstance(pres, BsPresentation):
        if abs(pres.n) == 1 or abs(pres.m) == 1:
            problems.append(f"ascending HNN data: |m|={abs(pres.m)}, |n|={abs(pres.n)} (need both > 1)")
        if abs(pres.m) == abs(pres.n):
            problems.append(f"|m|=|n|={abs(pres.m)}: the boundary action is not topologically free")
    elif isinstance(pres, AmalgamPresentation):
        if not pres.nontrivial:
            problems.append("trivial amalgam: one factor equals the shared subgroup")
        elif not pres.nondegenerate:
            problems.append(f"degenerate amalgam: indices {pres.index(1)} and {pres.index(2)} are both 2")
        if len(pres.sigma1) > 1:
            warnings.append("nontrivial shared subgroup without a boundary-freeness certificate: the separation search may hit its cap")
    else:
        problems.append(f"unknown presentation type {type(pres).__name__}")
    return Report(ok=not problems, problems=problems, warnings=warnings)


# separation search ---------------------------------------------------------

def separation_search(pres: BsPresentation, sigma: int, cap: int = 12) -> hw.HnnNormalForm:
    """Shortest positive path-type element whose tree path from the base
    edge diverges from its left translate by ``sigma``.

    Walks the conjugate shift of sigma along candidate syllables; the
    paths diverge exactly when the shift leaves the subgroup the next
    crossing needs.  Visited (shift, sign) states are pruned, so a
    closed shift orbit (no separating element exists, e.g. a central
    subgroup) is detected and reported rather than searched forever.
    """
    if not pres.in_sigma(sigma) or sigma == pres.identity:
        raise GroupError(f"{sigma} is not a nontrivial subgroup element")
    if cap < 1:
        raise CapExceeded("separation", f"sigma={sigma}: depth cap {cap} forbids any candidate")
    start = (pres.theta(sigma), +1)
    prefix0 = ((pres.identity, +1),)
    seen = {start}
    layer = [(start, prefix0)]
    depth = 1
    while layer:
        depth += 1
        if depth > cap:
            raise CapExceeded("separation", f"sigma={sigma}: no divergence within depth {cap}")
        nxt = []
        for (shift, prev), prefix in layer:
            for c, e in hw.syllable_options(pres, prev):
                conj = pres.op(pres.op(pres.inv(c), shift), c)
                member = pres.in_sigma(conj) if e == +1 else pres.in_theta_sigma(conj)
                if not member:
                    found = hw.HnnNormalForm(pres, prefix + ((c, e),), pres.identity)
                    _check_separates(pres, sigma, found)
                    return found
                nshift = pres.theta(conj) if e == +1 else pres.theta_inv(conj)
                state = (nshift, e)
                if state not in seen:
                    seen.add(state)
                    nxt.append((state, prefix + ((c, e),)))
        if not nxt:
            raise CapExceeded("separation", f"sigma={sigma}: shift orbit closed, no separating element exists")
        layer = nxt


def _check_separates(pres, sigma: int, cand: hw.HnnNormalForm) -> None:
    """Independent re-check by normal forms: the conjugate of sigma by the
    candidate must leave the base group."""
    word = hw._invert_word(hw.nf_to_word(cand), pres) + [("h", sigma)] + hw.nf_to_word(cand)
    if hw.reduce_word(word, pres).in_base():
        raise BuilderError(f"separation candidate {cand} does not separate sigma={sigma}")


def separation_search_amalgam(pres: AmalgamPresentation, sigma1: int, cap: int = 12) -> aw.AmalgamNormalForm:
    """Amalgam mirror of the separation search; the shift alternates
    between the two factors through the twist."""
    if not pres.in_sigma(1, sigma1) or sigma1 == 0:
        raise GroupError(f"{sigma1} is not a nontrivial shared-subgroup element")
    if cap < 1:
        raise CapExceeded("separation", f"sigma={sigma1}: depth cap {cap} forbids any candidate")
    seen = {(1, sigma1)}
    layer = [((1, sigma1), ())]
    depth = 0
    while layer:
        depth += 1
        if depth > cap:
            raise CapExceeded("separation", f"sigma={sigma1}: no divergence within depth {cap}")
        nxt = []
        for (side, shift), prefix in layer:
            for _, c in aw.letter_options(pres, side):
                conj = pres.op(side, pres.op(side, pres.inv(side, c), shift), c)
                if not pres.in_sigma(side, conj):
                    found = aw.AmalgamNormalForm(pres, prefix + ((side, c),), 0)
                    _check_separates_amalgam(pres, sigma1, found)
                    return found
                other = 2 if side == 1 else 1
                nshift = pres.theta(conj) if side == 1 else pres.theta_inv(conj)
                state = (other, nshift)
                if state not in seen:
                    seen.add(state)
                    nxt.append((state, prefix + ((side, c),)))
        if not nxt:
            raise CapExceeded("separation", f"sigma={sigma1}: shift orbit closed, no separating element exists")
        layer = nxt


def _check_separates_amalgam(pres, sigma1: int, cand: aw.AmalgamNormalForm) -> None:
    word = (
        [(s, pres.inv(s, g)) for s, g in reversed(aw.nf_to_word_amalgam(cand))]
        + [(1, sigma1)]
        + aw.nf_to_word_amalgam(cand)
    )
    if aw.reduce_amalgam(word, pres).in_subgroup():
        raise BuilderError(f"separation candidate {cand} does not separate sigma={sigma1}")


# family operations ----------------------------------------------------------

class _HnnOps:
    """Per-family hooks the generic claim machinery drives (HNN side)."""

    def __init__(self, gl: LazyGlobalization):
        self.gl = gl
        self.pres = gl.pres

    def gamma0(self):
        return hw.HnnNormalForm(self.pres, ((self.pres.identity, +1),), self.pres.identity)

    def path(self, z, gamma):
        return self.gl.path(z, gamma)

    def eval(self, z, gamma):
        return self.gl.eval(z, gamma)

    def window(self):
        basepts = [Point(o, self.pres.identity) for o in self.gl.base.orbits]
        return self.gl.window_graph(basepts, 1)

    def append(self, gamma, chunk):
        return hw.HnnNormalForm(self.pres, gamma.syllables + tuple(chunk), self.pres.identity)

    def units_after(self, gamma_or_chunk_last):
        return hw.syllable_options(self.pres, gamma_or_chunk_last[1])

    def resolve_chunk(self, point, edges):
        chunk = []
        cur = point
        for edge in edges:
            c, e = self.gl.resolve_syllable(cur, edge)
            chunk.append((c, e))
            cur = self.gl.t_apply(self.gl.act(cur, c), e)
        return chunk, cur

    def is_path_type(self, gamma) -> bool:
        return hw.is_path_type(gamma)[0]

    def parity_pad(self, gamma):
        return gamma  # no parity constraint for HNN words

    def fix_equal(self, gamma, pz, pw, caps):
        c = self._c_pos()
        g1 = self.append(gamma, [(c, +1)])
        qz = self.gl.act(pz.points[-1], c)
        qw = self.gl.act(pw.points[-1], c)
        if phn.sigma_key(self.pres, qz) != phn.sigma_key(self.pres, qw):
            return g1
        sigma = self.pres.op(self.pres.inv(qz.elem), qw.elem)
        plus = separation_search(self.pres, sigma, caps.separation)
        return self.append(g1, plus.syllables[1:])

    def _c_pos(self) -> int:
        return next(c for c in self.pres.reps_pos if c != self.pres.identity)

    def _c_neg(self) -> int:
        return next(c for c in self.pres.reps_neg if c != self.pres.identity)


class _AmalgamOps:
    """Per-family hooks (amalgam side); paths are side-1 based."""

    def __init__(self, gl: LazyGlobalizationAmalgam):
        self.gl = gl
        self.pres = gl.pres

    def gamma0(self):
        c = next(c for c in self.pres.reps(2) if c != 0)
        return aw.AmalgamNormalForm(self.pres, ((2, c),), 0)

    def path(self, z, gamma):
        return self.gl.path_side1(z, gamma)

    def eval(self, z, gamma):
        return self.gl.eval_side1(z, gamma)

    def window(self):
        basepts = [Pt1(o, 0) for o in self.gl.base.orbits1]
        basepts += [Pt2(o, 0) for o in self.gl.base.orbits2]
        return self.gl.window_graph(basepts, 1)

    def append(self, gamma, chunk):
        return aw.AmalgamNormalForm(self.pres, gamma.syllables + tuple(chunk), 0)

    def units_after(self, last_unit):
        side = 2 if last_unit[0] == 1 else 1
        return aw.letter_options(self.pres, side)

    def resolve_chunk(self, point, edges):
        chunk = []
        cur = point
        for edge in edges:
            c = self.gl.resolve_letter(cur, edge)
            side = cur.side
            chunk.append((side, c))
            cur = self.gl.act(cur, side, c)
            cur = self.gl.t_apply(cur, +1 if side == 1 else -1)
        return chunk, cur

    def is_path_type(self, gamma) -> bool:
        return aw.is_path_type_amalgam(gamma, 1)

    def parity_pad(self, gamma):
        if len(gamma.syllables) % 2 == 1:
            return gamma
        side = 2 if gamma.syllables[-1][0] == 1 else 1
        return self.append(gamma, [aw.letter_options(self.pres, side)[0]])

    def fix_equal(self, gamma, pz, pw, caps):
        xe, ye = pz.points[-1], pw.points[-1]
        side = xe.side
        s = self.pres.op(side, self.pres.inv(side, xe.elem), ye.elem)
        sigma1 = self.pres.to_sigma1(side, s)
        star = separation_search_amalgam(self.pres, sigma1, caps.separation)
        return self.parity_pad(self.append(gamma, star.syllables))


def _ops_for(gl):
    if isinstance(gl, LazyGlobalization):
        return _HnnOps(gl)
    if isinstance(gl, LazyGlobalizationAmalgam):
        return _AmalgamOps(gl)
    raise BuilderError(f"no builder operations for {type(gl).__name__}")


# claim machinery ------------------------------------------------------------

def find_common_treeing_extension(gl, points, gamma=None, caps: Caps = Caps()):
    """Path-type element whose path from every given point ends in a
    treeing edge of the globalized Bass-Serre graph.

    Edges outside the finite core are treeing by construction; a path
    ending on a core edge is extended along the shortest reduced
    continuation to a treeing edge of the core-plus-frontier window.
    """
    ops = _ops_for(gl)
    gamma = gamma or ops.gamma0()
    window = ops.window()
    for z in points:
        info = ops.path(z, gamma)
        last = info.last_edge()
        if not gl.edge_in_core(last):
            continue
        if graphs.is_treeing_edge(window, last):
            continue
        extended = graphs.extend_to_treeing(window, tuple(info.edges))
        new_edges = extended[len(info.edges):]
        if len(new_edges) > caps.extension:
            raise CapExceeded("extension", f"treeing extension of length {len(new_edges)}")
        chunk, _ = ops.resolve_chunk(info.points[-1], new_edges)
        gamma = ops.append(gamma, chunk)
    return gamma


def _exit_core(gl, ops, points, gamma, caps: Caps):
    """Extend gamma until every path's final edge lies strictly inside an
    attached copy (address length at least 2), so its half-tree misses
    the core."""
    window = ops.window()
    for z in points:
        for _ in range(caps.extension):
            info = ops.path(z, gamma)
            suffix = info.copy_suffix()
            if len(suffix) >= 2:
                break
            if not suffix:
                # still inside the core: head for the nearest frontier edge
                targets = [e for e in window.source if not gl.edge_in_core(e)]
                ext = _shortest_to_targets(window, info.last_edge(), set(targets))
                chunk, _ = ops.resolve_chunk(info.points[-1], ext)
                gamma = ops.append(gamma, chunk)
            else:
                # on the frontier edge: one canonical step into the copy
                last_unit = gamma.syllables[-1]
                gamma = ops.append(gamma, [ops.units_after(last_unit)[0]])
        else:
            raise CapExceeded("extension", f"could not leave the core from {z}")
    return gamma


def _shortest_to_targets(g: graphs.Graph, start_edge, targets: set) -> tuple:
    """Shortest nonempty reduced continuation from a dart to any target
    dart, deterministic by identifier order."""
    parents = {start_edge: None}
    queue = [start_edge]
    while queue:
        cur = queue.pop(0)
        for f in graphs.reduced_successors(g, cur):
            if f in parents:
                continue
            parents[f] = cur
            if f in targets:
                out = []
                node = f
                while node != start_edge:
                    out.append(node)
                    node = parents[node]
                return tuple(reversed(out))
            queue.append(f)
    raise BuilderError("no reduced continuation reaches the frontier")


def _lex_chunks(ops, last_unit, depth: int):
    """Legal continuations of the given length, lexicographically."""

    def rec(prev_unit, d):
        if d == 0:
            yield ()
            return
        for unit in ops.units_after(prev_unit):
            for rest in rec(unit, d - 1):
                yield (unit,) + rest

    return rec(last_unit, depth)


def disjoin_half_trees(gl, points, gamma, caps: Caps = Caps()):
    """Extend gamma until the end-edge half-trees of all paths are
    pairwise disjoint and disjoint from the core graph.

    Collisions are read off half-tree addresses (the edge sequence from
    the frontier crossing on): equal addresses are split by a separation
    element, strictly nested ones by an alternative extension of the
    same length.
    """
    ops = _ops_for(gl)
    gamma = ops.parity_pad(_exit_core(gl, ops, points, gamma, caps))
    for _ in range(caps.pair_fixes):
        paths = [ops.path(z, gamma) for z in points]
        addrs = [tuple(p.copy_suffix()) for p in paths]
        hit = None
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                a, b = addrs[i], addrs[j]
                if a[: len(b)] == b or b[: len(a)] == a:
                    hit = (i, j)
                    break
            if hit:
                break
        if hit is None:
            return gamma
        i, j = hit
        if addrs[i] == addrs[j]:
            gamma = ops.fix_equal(gamma, paths[i], paths[j], caps)
            pa = tuple(ops.path(points[i], gamma).copy_suffix())
            pb = tuple(ops.path(points[j], gamma).copy_suffix())
            if pa[: len(pb)] == pb or pb[: len(pa)] == pa:
                raise CapExceeded("separation", "separation element failed to split equal half-trees")
        else:
            deep, shallow = (i, j) if len(addrs[i]) > len(addrs[j]) else (j, i)
            d = len(addrs[deep]) - len(addrs[shallow])
            tail_edges = addrs[deep][len(addrs[shallow]):]
            taken, _ = ops.resolve_chunk(paths[shallow].points[-1], tail_edges)
            taken = tuple(taken)
            alt = None
            for cand in _lex_chunks(ops, gamma.syllables[-1], d):
                if cand != taken:
                    alt = cand
                    break
            if alt is None:
                raise BuilderError("no alternative same-length extension exists")
            gamma = ops.append(gamma, alt)
    raise CapExceeded("pair_fixes", f"half-trees still collide after {caps.pair_fixes} fixes")


# round execution ------------------------------------------------------------

def _initial_core_hnn(pres) -> PreActionHnn:
    return PreActionHnn(pres, (0,), {}, {0: "core"})


def _initial_core_amalgam(pres) -> PreActionAmalgam:
    return PreActionAmalgam(pres, (0,), (0,), {(0, 0): Pt2(0, 0)}, {(1, 0): "core", (2, 0): "core"})


def initial_state(pres: Presentation) -> BuilderState:
    report = check_builder_preconditions(pres)
    if not report.ok:
        raise PreconditionFailed(report)
    if _is_hnn(pres):
        core = _initial_core_hnn(pres)
        nxt = 1
    else:
        core = _initial_core_amalgam(pres)
        nxt = 1
    return BuilderState(pres=pres, core=core, next_orbit=nxt)


def _attach_orbit_hnn(state: BuilderState, orbit_id: int) -> None:
    core: PreActionHnn = state.core
    pres = core.pres
    tau = dict(core.tau)
    prov = dict(core.provenance)
    prov[orbit_id] = f"attached round {state.round_no}"
    pos = core.uncovered_pos_keys()
    if pos:
        tau[pos[0]] = Point(orbit_id, pres.identity)
    else:
        neg = core.uncovered_neg_keys()
        tau[(orbit_id, pres.identity)] = Point(neg[0][0], neg[0][1])
    state.core = PreActionHnn(pres, core.orbits + (orbit_id,), tau, prov)


def _attach_orbit_amalgam(state: BuilderState, orbit_id: int) -> None:
    core: PreActionAmalgam = state.core
    pres = core.pres
    tau = dict(core.tau)
    prov = dict(core.provenance)
    prov[(1, orbit_id)] = f"attached round {state.round_no}"
    orbits2 = core.orbits2
    neg = core.uncovered_neg_keys()
    if neg:
        tau[(orbit_id, 0)] = Pt2(neg[0][0], neg[0][1])
    else:
        pos = core.uncovered_pos_keys()
        o2 = state.next_orbit
        state.next_orbit += 1
        prov[(2, o2)] = f"attached round {state.round_no}"
        c2 = next(c for c in pres.reps(2) if c != 0)
        tau[pos[0]] = Pt2(o2, 0)
        tau[(orbit_id, 0)] = Pt2(o2, c2)
        orbits2 = orbits2 + (o2,)
    state.core = PreActionAmalgam(pres, core.orbits1 + (orbit_id,), orbits2, tau, prov)


def _ensure_demand_orbits(state: BuilderState, demand: Demand) -> None:
    if _is_hnn(state.pres):
        known = set(state.core.orbits)
        for p in demand.xs + demand.ys:
            if not isinstance(p, Point) or not p.is_ambient():
                raise BuilderError(f"demand point {p} is not an ambient point")
        wanted = sorted({p.orbit for p in demand.xs + demand.ys if p.orbit not in known})
        for o in wanted:
            _attach_orbit_hnn(state, o)
            state.next_orbit = max(state.next_orbit, o + 1)
    else:
        known = set(state.core.orbits1)
        for p in demand.xs + demand.ys:
            if not isinstance(p, Pt1) or not p.is_ambient():
                raise BuilderError(f"demand point {p} is not an ambient side-1 point")
        wanted = sorted({p.orbit for p in demand.xs + demand.ys if p.orbit not in known})
        for o in wanted:
            _attach_orbit_amalgam(state, o)
            state.next_orbit = max(state.next_orbit, o + 1)


def _materialize_hnn(state: BuilderState, log, extra_defs, fresh_orbits, tag: str):
    """Fold recorded tau applications plus new definitions into the finite
    table, allocating ambient ids for copy orbits in first-touch order."""
    core: PreActionHnn = state.core
    pres = core.pres
    orbit_map: dict = {}
    orbits = list(core.orbits)
    prov = dict(core.provenance)
    for oid in fresh_orbits:
        orbits.append(oid)
        prov[oid] = f"{tag} fresh"

    def amb(orbit):
        if isinstance(orbit, int):
            return orbit
        if orbit not in orbit_map:
            oid = state.next_orbit
            state.next_orbit += 1
            orbit_map[orbit] = oid
            orbits.append(oid)
            prov[oid] = f"{tag} copy={orbit.copy[0]}({orbit.copy[1]},{orbit.copy[2]}) depth={len(orbit.word)}"
        return orbit_map[orbit]

    tau = dict(core.tau)
    for dom, img in log:
        # canonicalize to the keyed representative through equivariance
        c, s = pres.decompose_pos(dom.elem)
        akey = (amb(dom.orbit), c)
        aimg = Point(amb(img.orbit), pres.op(img.elem, pres.inv(pres.theta(s))))
        if akey in tau and tau[akey] != aimg:
            raise BuilderError(f"materialization clash at {akey}")
        tau[akey] = aimg
    for key, img in extra_defs:
        akey = (amb(key[0]), key[1])
        if akey in tau:
            raise BuilderError(f"redefinition of covered key {akey}")
        tau[akey] = img
    state.core = PreActionHnn(pres, tuple(orbits), tau, prov)
    return orbit_map


def _materialize_amalgam(state: BuilderState, log, extra_defs, fresh_orbits2, tag: str):
    core: PreActionAmalgam = state.core
    pres = core.pres
    orbit_map: dict = {}
    orbits1 = list(core.orbits1)
    orbits2 = list(core.orbits2)
    prov = dict(core.provenance)
    for oid in fresh_orbits2:
        orbits2.append(oid)
        prov[(2, oid)] = f"{tag} fresh"

    def amb(orbit, side):
        if isinstance(orbit, int):
            return orbit
        if orbit not in orbit_map:
            oid = state.next_orbit
            state.next_orbit += 1
            orbit_map[orbit] = oid
            (orbits1 if side == 1 else orbits2).append(oid)
            prov[(side, oid)] = f"{tag} copy={orbit.copy[0]}({orbit.copy[1]},{orbit.copy[2]}) depth={len(orbit.word)}"
        return orbit_map[orbit]

    tau = dict(core.tau)
    for dom, img in log:
        c, s1 = pres.decompose(1, dom.elem)
        akey = (amb(dom.orbit, 1), c)
        aimg = Pt2(amb(img.orbit, 2), pres.op(2, img.elem, pres.inv(2, pres.theta(s1))))
        if akey in tau and tau[akey] != aimg:
            raise BuilderError(f"materialization clash at {akey}")
        tau[akey] = aimg
    for key, img in extra_defs:
        akey = (amb(key[0], 1), key[1])
        if akey in tau:
            raise BuilderError(f"redefinition of covered key {akey}")
        tau[akey] = img
    state.core = PreActionAmalgam(pres, tuple(orbits1), tuple(orbits2), tau, prov)
    return orbit_map


def _round_hnn(state: BuilderState, demand: Demand, caps: Caps, faithful) -> None:
    pres = state.core.pres
    gl = LazyGlobalization(state.core)
    ops = _HnnOps(gl)
    pts = list(demand.xs) + list(demand.ys)

    gamma = find_common_treeing_extension(gl, pts, caps=caps)
    gamma = disjoin_half_trees(gl, pts, gamma, caps)
    c_pos = ops._c_pos()
    c_neg = ops._c_neg()

    # Record the tau entries the demand paths use.  The final edges of
    # the extended paths (the roots of the erased half-trees) are never
    # applied, so they stay uncovered and take the new definitions.
    rec = RecordingGlobalization(state.core)
    ends = {z: rec.eval(z, gamma) for z in pts}
    k = demand.k
    defs = []
    erased = []
    fresh = list(range(state.next_orbit, state.next_orbit + k))
    state.next_orbit += k
    for i in range(k):
        zx = rec.act(ends[demand.xs[i]], c_pos)
        zy = rec.act(ends[demand.ys[i]], c_pos)
        erased.append((phn.sigma_key(pres, zx), gl._t_apply(zx, +1)))
        erased.append((phn.sigma_key(pres, zy), gl._t_apply(zy, +1)))
        defs.append(_canon_def_hnn(pres, zx, Point(fresh[i], pres.identity)))
        defs.append(_canon_def_hnn(pres, zy, Point(fresh[i], c_neg)))

    orbit_map = _materialize_hnn(state, rec.log, defs, fresh, f"round{state.round_no}")
    for (key, old), (dkey, img) in zip(erased, defs):
        ak = (orbit_map.get(key[0], key[0]), key[1])
        state.transcript.append(f"ERASE ({ak[0]},{ak[1]}) lazy-depth={_lazy_depth(old)}")
        state.transcript.append(f"DEFINE ({ak[0]},{ak[1]}) -> ({img.orbit},{img.elem})")

    gamma_ct = hw.HnnNormalForm(pres, gamma.syllables + ((c_pos, +1),), pres.identity)
    middle = hw.HnnNormalForm(pres, (), c_neg)
    cert_elem = hw.multiply(hw.multiply(gamma_ct, middle), hw.invert(gamma_ct))
    pairs = tuple((x, y) for x, y in zip(demand.xs, demand.ys))
    cert = Certificate(kind="map", gamma=cert_elem, pairs=pairs)
    state.certificates.append(cert)
    state.transcript.append(f'GAMMA "{gamma}"')
    state.transcript.append(f'CERT map k={k} gamma="{cert_elem}" pairs="' + ";".join(f"{x}->{y}" for x, y in pairs) + '"')

    if faithful:
        _witness_hnn(state, faithful)

    _verify_all(state)


def _witness_hnn(state: BuilderState, faithful) -> None:
    """Witness point: deep enough inside a fresh copy that no scheduled
    element can walk back out, so each one visibly moves it."""
    rec2 = RecordingGlobalization(state.core)
    depth = max(g.syllable_count() for g in faithful) + 2
    pos = state.core.uncovered_pos_keys()
    if pos:
        key, sign = pos[0], +1
    else:
        key, sign = state.core.uncovered_neg_keys()[0], -1
    cur = Point(key[0], key[1])
    for _ in range(depth):
        cur = rec2.t_apply(cur, sign)
    v_glob = cur
    for g in faithful:
        if rec2.eval(v_glob, g) == v_glob:
            raise BuilderError(f"witness construction failed for {g}")
    omap = _materialize_hnn(state, rec2.log, [], [], f"round{state.round_no}w")
    v = Point(omap.get(v_glob.orbit, v_glob.orbit), v_glob.elem)
    state.certificates.append(Certificate(kind="moves", witness=v, moved=tuple(faithful)))
    state.transcript.append(f"CERT moves v={v} count={len(faithful)}")


def _round_amalgam(state: BuilderState, demand: Demand, caps: Caps, faithful) -> None:
    pres = state.core.pres
    gl = LazyGlobalizationAmalgam(state.core)
    pts = list(demand.xs) + list(demand.ys)

    gamma = find_common_treeing_extension(gl, pts, caps=caps)
    gamma = disjoin_half_trees(gl, pts, gamma, caps)
    c1 = next(c for c in pres.reps(1) if c != 0)
    c2 = next(c for c in pres.reps(2) if c != 0)

    rec = RecordingGlobalizationAmalgam(state.core)
    ends = {z: rec.eval_side1(z, gamma) for z in pts}
    k = demand.k
    defs = []
    erased = []
    fresh2 = list(range(state.next_orbit, state.next_orbit + k))
    state.next_orbit += k
    for i in range(k):
        zx = rec.act(ends[demand.xs[i]], 1, c1)
        zy = rec.act(ends[demand.ys[i]], 1, c1)
        erased.append((pam.skey1(pres, zx), gl._t_apply(zx, +1)))
        erased.append((pam.skey1(pres, zy), gl._t_apply(zy, +1)))
        defs.append(_canon_def_amalgam(pres, zx, Pt2(fresh2[i], 0)))
        defs.append(_canon_def_amalgam(pres, zy, Pt2(fresh2[i], c2)))

    orbit_map = _materialize_amalgam(state, rec.log, defs, fresh2, f"round{state.round_no}")
    for (key, old), (dkey, img) in zip(erased, defs):
        ak = (orbit_map.get(key[0], key[0]), key[1])
        state.transcript.append(f"ERASE ({ak[0]},{ak[1]}) lazy-depth={_lazy_depth(old)}")
        state.transcript.append(f"DEFINE ({ak[0]},{ak[1]}) -> ({img.orbit},{img.elem})")

    conj = aw.AmalgamNormalForm(pres, ((1, c1), (2, c2)), 0)
    c1_inv = aw.reduce_amalgam([(1, pres.inv(1, c1))], pres)
    cert_elem = aw.multiply_amalgam(
        aw.multiply_amalgam(aw.multiply_amalgam(gamma, conj), c1_inv), aw.invert_amalgam(gamma)
    )
    pairs = tuple((x, y) for x, y in zip(demand.xs, demand.ys))
    cert = Certificate(kind="map", gamma=cert_elem, pairs=pairs)
    state.certificates.append(cert)
    state.transcript.append(f'GAMMA "{gamma}"')
    state.transcript.append(f'CERT map k={k} gamma="{cert_elem}" pairs="' + ";".join(f"{x}->{y}" for x, y in pairs) + '"')

    if faithful:
        _witness_amalgam(state, faithful, c1, c2)

    _verify_all(state)


def _witness_amalgam(state: BuilderState, faithful, c1: int, c2: int) -> None:
    """Side-1 witness point deep inside a fresh copy; which copy sign is
    available depends on which frontier the round left uncovered."""
    rec2 = RecordingGlobalizationAmalgam(state.core)
    maxlen = max(g.syllable_count() for g in faithful)
    pos = state.core.uncovered_pos_keys()
    if pos:
        key = pos[0]
        cur = rec2.t_apply(Pt1(key[0], key[1]), +1)  # side-2 base of a + copy
        letters = 2 * maxlen + 3  # odd: the walk ends on side 1
    else:
        key = state.core.uncovered_neg_keys()[0]
        cur = rec2.t_apply(Pt2(key[0], key[1]), -1)  # side-1 base of a - copy
        letters = 2 * maxlen + 4  # even: the walk ends on side 1
    for _ in range(letters):
        if cur.side == 2:
            cur = rec2.t_apply(rec2.act(cur, 2, c2), -1)
        else:
            cur = rec2.t_apply(rec2.act(cur, 1, c1), +1)
    v_glob = cur
    if v_glob.side != 1:
        raise BuilderError("witness walk ended on the wrong side")
    for g in faithful:
        if rec2.eval_side1(v_glob, g) == v_glob:
            raise BuilderError(f"witness construction failed for {g}")
    omap = _materialize_amalgam(state, rec2.log, [], [], f"round{state.round_no}w")
    v = Pt1(omap.get(v_glob.orbit, v_glob.orbit), v_glob.elem)
    state.certificates.append(Certificate(kind="moves", witness=v, moved=tuple(faithful)))
    state.transcript.append(f"CERT moves v={v} count={len(faithful)}")


def _lazy_depth(point) -> int:
    orbit = point.orbit
    return len(orbit.word) if not isinstance(orbit, int) else 0


def _canon_def_hnn(pres, dom: Point, img: Point):
    """Definition 'dom maps to img', keyed by dom's orbit representative:
    the stored image absorbs the equivariance shift."""
    c, s = pres.decompose_pos(dom.elem)
    return (dom.orbit, c), Point(img.orbit, pres.op(img.elem, pres.inv(pres.theta(s))))


def _canon_def_amalgam(pres, dom: Pt1, img: Pt2):
    c, s1 = pres.decompose(1, dom.elem)
    return (dom.orbit, c), Pt2(img.orbit, pres.op(2, img.elem, pres.inv(2, pres.theta(s1))))


def verify_certificate(core, cert: Certificate) -> bool:
    """Pure replay of a certificate against a pre-action's globalization."""
    if isinstance(core, PreActionHnn):
        gl = LazyGlobalization(core)
        if cert.kind == "map":
            return all(gl.eval(x, cert.gamma) == y for x, y in cert.pairs)
        return all(gl.eval(cert.witness, g) != cert.witness for g in cert.moved)
    gl = LazyGlobalizationAmalgam(core)
    if cert.kind == "map":
        return all(gl.eval_side1(x, cert.gamma) == y for x, y in cert.pairs)
    return all(gl.eval_side1(cert.witness, g) != cert.witness for g in cert.moved)


def _verify_all(state: BuilderState) -> None:
    for i, cert in enumerate(state.certificates):
        if not verify_certificate(state.core, cert):
            raise BuilderError(f"certificate {i} no longer verifies after round {state.round_no}")


def _check_frozen(state: BuilderState) -> None:
    tau = state.core.tau
    for key, img in state.frozen.items():
        if key not in tau or tau[key] != img:
            raise BuilderError(f"frozen entry {key} changed")
    state.frozen = dict(tau)


def run_rounds(pres: Presentation, demands, rounds: int | None = None,
               caps: Caps = Caps(), faithful_count: int = 10,
               extra_moves=()) -> BuilderState:
    """Execute builder rounds over a demand schedule.

    Each round discharges one transitivity demand and re-witnesses the
    faithfulness schedule (the first ``faithful_count`` enumerated
    nontrivial elements plus any explicitly demanded ones).  On a cap
    error the state up to the last completed round is returned with
    ``cap_error`` set.
    """
    state = initial_state(pres)
    demands = list(demands)
    if rounds is None:
        rounds = len(demands)
    if rounds > len(demands):
        raise BuilderError(f"{rounds} rounds demanded but only {len(demands)} demands supplied")
    if _is_hnn(pres):
        faithful = hw.enumerate_nontrivial(pres, faithful_count) if faithful_count else []
    else:
        faithful = aw.enumerate_nontrivial_amalgam(pres, faithful_count) if faithful_count else []
    for g in extra_moves:
        if not any(g == f for f in faithful):
            faithful.append(g)
    state.transcript.append(f"PRESENTATION {pres.spec_string()}")
    state.transcript.append(f"SCHEDULE rounds={rounds} faithful={len(faithful)}")
    for i in range(rounds):
        demand = demands[i]
        state.round_no = i + 1
        state.transcript.append(
            f"ROUND {state.round_no} k={demand.k} xs=" + ";".join(map(str, demand.xs))
            + " ys=" + ";".join(map(str, demand.ys))
        )
        _ensure_demand_orbits(state, demand)
        try:
            if _is_hnn(pres):
                _round_hnn(state, demand, caps, faithful)
            else:
                _round_amalgam(state, demand, caps, faithful)
        except CapExceeded as exc:
            state.cap_error = str(exc)
            state.transcript.append(f"CAP {exc}")
            return state
        _check_frozen(state)
        state.transcript.append(f"FROZEN entries={len(state.core.tau)}")
    state.transcript.append(f"DONE rounds={rounds} certificates={len(state.certificates)}")
    return state


# certificate serialization ---------------------------------------------------

def serialize_certificates(state: BuilderState) -> str:
    lines = [f"presentation {state.pres.spec_string()}"]
    for cert in state.certificates:
        if cert.kind == "map":
            pairs = ";".join(f"{x}->{y}" for x, y in cert.pairs)
            lines.append(f'CERT map gamma="{cert.gamma}" pairs="{pairs}"')
        else:
            moved = ";".join(str(g) for g in cert.moved)
            lines.append(f'CERT moves v={cert.witness} moved="{moved}"')
    return "\n".join(lines) + "\n"


def _parse_hnn_point(text: str) -> Point:
    a, b = text.strip()[1:-1].split(",")
    return Point(int(a), int(b))


def _parse_am_point(text: str) -> Pt1:
    body = text.strip()
    if body.startswith("1:"):
        body = body[2:]
    a, b = body[1:-1].split(",")
    return Pt1(int(a), int(b))


def parse_certificates(text: str, pres: Presentation):
    """Parse a certificate file; returns (header presentation spec, certs)."""
    certs = []
    header = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("presentation "):
            header = line[len("presentation "):].strip()
            continue
        if not line.startswith("CERT "):
            raise BuilderError(f"unknown certificate line {line!r}")
        body = line[len("CERT "):]
        kind, rest = body.split(None, 1)
        fields = _parse_fields(rest)
        if kind == "map":
            gamma = (hw.reduce_text(fields["gamma"], pres) if _is_hnn(pres)
                     else aw.reduce_text_amalgam(fields["gamma"], pres))
            pairs = []
            for chunk in fields["pairs"].split(";"):
                xs, ys = chunk.split("->")
                if _is_hnn(pres):
                    pairs.append((_parse_hnn_point(xs), _parse_hnn_point(ys)))
                else:
                    pairs.append((_parse_am_point(xs), _parse_am_point(ys)))
            certs.append(Certificate(kind="map", gamma=gamma, pairs=tuple(pairs)))
        elif kind == "moves":
            if _is_hnn(pres):
                v = _parse_hnn_point(fields["v"])
                moved = tuple(hw.reduce_text(t, pres) for t in fields["moved"].split(";"))
            else:
                v = _parse_am_point(fields["v"])
                moved = tuple(aw.reduce_text_amalgam(t, pres) for t in fields["moved"].split(";"))
            certs.append(Certificate(kind="moves", witness=v, moved=moved))
        else:
            raise BuilderError(f"unknown certificate kind {kind!r}")
    return header, certs


def _parse_fields(text: str) -> dict:
    fields: dict = {}
    i = 0
    while i < len(text):
        while i < len(text) and text[i] == " ":
            i += 1
        if i >= len(text):
            break
        eq = text.index("=", i)
        key = text[i:eq]
        if text[eq + 1] == '"':
            end = text.index('"', eq + 2)
            fields[key] = text[eq + 2:end]
            i = end + 1
        else:
            end = text.find(" ", eq + 1)
            if end < 0:
                end = len(text)
            fields[key] = text[eq + 1:end]
            i = end
    return fields


# demand files ----------------------------------------------------------------

def parse_demands(text: str, pres: Presentation):
    """Demand file: ``map (o,e) ... -> (o,e) ...`` or ``moves "word"``."""
    maps: list[Demand] = []
    moves = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("map "):
            lhs, rhs = line[4:].split("->")
            if _is_hnn(pres):
                xs = tuple(_parse_hnn_point(t) for t in lhs.split())
                ys = tuple(_parse_hnn_point(t) for t in rhs.split())
            else:
                xs = tuple(_parse_am_point(t) for t in lhs.split())
                ys = tuple(_parse_am_point(t) for t in rhs.split())
            maps.append(Demand(xs=xs, ys=ys))
        elif line.startswith("moves "):
            word = line[6:].strip().strip('"')
            if _is_hnn(pres):
                moves.append(hw.reduce_text(word, pres))
            else:
                moves.append(aw.reduce_text_amalgam(word, pres))
        else:
            raise BuilderError(f"unknown demand line {line!r}")
    return maps, moves
