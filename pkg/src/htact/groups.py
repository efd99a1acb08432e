"""Base group data for HNN extensions and amalgams.

Two concrete group families ship with the toolkit: the integers (for
Baumslag-Solitar presentations) and finite cyclic groups (for amalgam
factors).  A presentation object bundles the base group(s) with the
distinguished subgroup data: membership predicates, the twisting
isomorphism between the subgroups, and coset transversals that pin the
normal forms down to a canonical choice.

All group payloads are canonical ints (for Z/p: the least non-negative
residue) and all operations are pure, so values are safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass


class GroupError(Exception):
    """Mixing elements of different groups, or a value outside a subgroup."""


class ParseError(Exception):
    """Malformed presentation or word text."""


@dataclass(frozen=True)
class ZGroup:
    """The integers under addition."""

    def canon(self, a: int) -> int:
        return int(a)

    def op(self, a: int, b: int) -> int:
        return a + b

    def inv(self, a: int) -> int:
        return -a

    @property
    def identity(self) -> int:
        return 0

    def elements(self):
        raise GroupError("Z is infinite")

    def __str__(self) -> str:
        return "Z"


@dataclass(frozen=True)
class ZModGroup:
    """The cyclic group Z/p under addition mod p."""

    p: int

    def __post_init__(self):
        if self.p < 1:
            raise GroupError(f"modulus must be positive, got {self.p}")

    def canon(self, a: int) -> int:
        return int(a) % self.p

    def op(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def inv(self, a: int) -> int:
        return (-a) % self.p

    @property
    def identity(self) -> int:
        return 0

    def elements(self):
        return range(self.p)

    def __str__(self) -> str:
        return f"Z/{self.p}"


Group = ZGroup | ZModGroup


@dataclass(frozen=True)
class GroupElement:
    """A group element tagged with its owning group.

    Elements of different groups never combine; attempting to do so is a
    GroupError, not a silent coercion.
    """

    group: Group
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.group.canon(self.value))

    def __mul__(self, other: GroupElement) -> GroupElement:
        if self.group != other.group:
            raise GroupError(f"cannot combine {self.group} and {other.group} elements")
        return GroupElement(self.group, self.group.op(self.value, other.value))

    def inverse(self) -> GroupElement:
        return GroupElement(self.group, self.group.inv(self.value))

    def is_identity(self) -> bool:
        return self.value == self.group.identity

    def __str__(self) -> str:
        return str(self.value)


def group_op(a: GroupElement, b: GroupElement) -> GroupElement:
    return a * b


@dataclass(frozen=True)
class BsPresentation:
    """HNN data for BS(m, n): base Z, subgroup nZ, twist nq -> mq.

    Coset representatives are the least non-negative residues, so
    decomposition is a modular reduction and normal forms are
    reproducible bit for bit.
    """

    m: int
    n: int

    def __post_init__(self):
        if self.m == 0 or self.n == 0:
            raise GroupError("BS(m, n) needs nonzero m and n")

    # base group -------------------------------------------------------
    @property
    def base(self) -> ZGroup:
        return ZGroup()

    def op(self, a: int, b: int) -> int:
        return a + b

    def inv(self, a: int) -> int:
        return -a

    @property
    def identity(self) -> int:
        return 0

    # subgroup data ----------------------------------------------------
    def in_sigma(self, h: int) -> bool:
        return h % abs(self.n) == 0

    def in_theta_sigma(self, h: int) -> bool:
        return h % abs(self.m) == 0

    def theta(self, s: int) -> int:
        if not self.in_sigma(s):
            raise GroupError(f"{s} is not in the domain subgroup {self.n}Z")
        return self.m * (s // self.n)

    def theta_inv(self, v: int) -> int:
        if not self.in_theta_sigma(v):
            raise GroupError(f"{v} is not in the image subgroup {self.m}Z")
        return self.n * (v // self.m)

    # transversals -----------------------------------------------------
    @property
    def reps_pos(self) -> tuple[int, ...]:
        return tuple(range(abs(self.n)))

    @property
    def reps_neg(self) -> tuple[int, ...]:
        return tuple(range(abs(self.m)))

    def decompose_pos(self, h: int) -> tuple[int, int]:
        c = h % abs(self.n)
        return c, h - c

    def decompose_neg(self, h: int) -> tuple[int, int]:
        c = h % abs(self.m)
        return c, h - c

    def rep_index_pos(self, c: int) -> int:
        return c

    def rep_index_neg(self, c: int) -> int:
        return c

    @property
    def ascending(self) -> bool:
        return len(self.reps_pos) == 1 or len(self.reps_neg) == 1

    def spec_string(self) -> str:
        return f"bs m={self.m} n={self.n}"

    def __str__(self) -> str:
        return f"BS({self.m},{self.n})"


HnnPresentation = BsPresentation


def make_bs_presentation(m: int, n: int) -> BsPresentation:
    """HNN data for BS(m, n); rejects zero parameters."""
    return BsPresentation(m, n)


@dataclass(frozen=True)
class AmalgamPresentation:
    """Amalgam data (factor1, factor2, shared subgroup, twist).

    The shared subgroup is carried in factor-1 coordinates; ``theta``
    translates to the factor-2 view.  ``sigma1`` lists the subgroup
    payloads inside factor 1 (and ``theta`` is defined exactly there).
    """

    factor1: ZModGroup
    factor2: ZModGroup
    sigma1: tuple[int, ...]
    sigma2: tuple[int, ...]
    theta_map: tuple[tuple[int, int], ...]  # pairs (s1, s2)
    reps1: tuple[int, ...]
    reps2: tuple[int, ...]
    label: str

    def __post_init__(self):
        if self.reps1[0] != 0 or self.reps2[0] != 0:
            raise GroupError("transversals must start with the identity")

    def op(self, side: int, a: int, b: int) -> int:
        return self._factor(side).op(a, b)

    def inv(self, side: int, a: int) -> int:
        return self._factor(side).inv(a)

    def identity(self, side: int) -> int:
        return 0

    def _factor(self, side: int) -> ZModGroup:
        if side == 1:
            return self.factor1
        if side == 2:
            return self.factor2
        raise GroupError(f"no factor {side}")

    def in_sigma(self, side: int, g: int) -> bool:
        return g in (self.sigma1 if side == 1 else self.sigma2)

    def theta(self, s1: int) -> int:
        for a, b in self.theta_map:
            if a == s1:
                return b
        raise GroupError(f"{s1} is not in the shared subgroup")

    def theta_inv(self, s2: int) -> int:
        for a, b in self.theta_map:
            if b == s2:
                return a
        raise GroupError(f"{s2} is not in the image of the shared subgroup")

    def inject(self, side: int, s1: int) -> int:
        """View a shared-subgroup payload (factor-1 coords) inside a factor."""
        return s1 if side == 1 else self.theta(s1)

    def to_sigma1(self, side: int, s: int) -> int:
        return s if side == 1 else self.theta_inv(s)

    def reps(self, side: int) -> tuple[int, ...]:
        return self.reps1 if side == 1 else self.reps2

    def decompose(self, side: int, g: int) -> tuple[int, int]:
        """g = c * s with c in the transversal and s in the subgroup."""
        fac = self._factor(side)
        sig = self.sigma1 if side == 1 else self.sigma2
        for c in self.reps(side):
            s = fac.op(fac.inv(c), g)
            if s in sig:
                return c, s
        raise GroupError(f"no coset representative found for {g} in factor {side}")

    def rep_index(self, side: int, c: int) -> int:
        return self.reps(side).index(c)

    def index(self, side: int) -> int:
        return len(self.reps(side))

    @property
    def nontrivial(self) -> bool:
        return self.index(1) >= 2 and self.index(2) >= 2

    @property
    def nondegenerate(self) -> bool:
        return self.nontrivial and (self.index(1) >= 3 or self.index(2) >= 3)

    def spec_string(self) -> str:
        return self.label

    def __str__(self) -> str:
        return self.label


def make_zmod_amalgam(p: int, q: int) -> AmalgamPresentation:
    """The free product Z/p * Z/q (trivial shared subgroup)."""
    if p < 2 or q < 2:
        raise GroupError("amalgam factors must have order at least 2")
    return AmalgamPresentation(
        factor1=ZModGroup(p),
        factor2=ZModGroup(q),
        sigma1=(0,),
        sigma2=(0,),
        theta_map=((0, 0),),
        reps1=tuple(range(p)),
        reps2=tuple(range(q)),
        label=f"amalgam zmod {p} {q}",
    )


def make_z4_amalgam_sigma2() -> AmalgamPresentation:
    """Z/4 joined to Z/4 along the order-2 subgroup, twist the identity map.

    Degenerate (both indices are 2): used to exercise nontrivial shared
    subgroup code paths in word arithmetic, never by the builder.
    """
    return AmalgamPresentation(
        factor1=ZModGroup(4),
        factor2=ZModGroup(4),
        sigma1=(0, 2),
        sigma2=(0, 2),
        theta_map=((0, 0), (2, 2)),
        reps1=(0, 1),
        reps2=(0, 1),
        label="amalgam z4 sigma2",
    )


Presentation = BsPresentation | AmalgamPresentation


def parse_presentation(text: str) -> Presentation:
    """Parse a declarative presentation config.

    Grammar: ``bs m=<int> n=<int>`` or ``amalgam zmod <p> <q>`` or
    ``amalgam z4 sigma2``.
    """
    parts = text.split()
    if not parts:
        raise ParseError("empty presentation spec")
    if parts[0] == "bs":
        kv = {}
        for p in parts[1:]:
            if "=" not in p:
                raise ParseError(f"expected key=value, got {p!r}")
            k, v = p.split("=", 1)
            try:
                kv[k] = int(v)
            except ValueError as exc:
                raise ParseError(f"bad integer in {p!r}") from exc
        if set(kv) != {"m", "n"}:
            raise ParseError("bs presentation needs exactly m= and n=")
        try:
            return make_bs_presentation(kv["m"], kv["n"])
        except GroupError as exc:
            raise ParseError(str(exc)) from exc
    if parts[0] == "amalgam":
        if len(parts) == 4 and parts[1] == "zmod":
            try:
                p, q = int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise ParseError("amalgam zmod needs two integers") from exc
            try:
                return make_zmod_amalgam(p, q)
            except GroupError as exc:
                raise ParseError(str(exc)) from exc
        if len(parts) == 3 and parts[1] == "z4" and parts[2] == "sigma2":
            return make_z4_amalgam_sigma2()
        raise ParseError(f"unknown amalgam family: {text!r}")
    raise ParseError(f"unknown presentation family: {parts[0]!r}")
