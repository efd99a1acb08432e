"""Words and normal forms in an amalgamated free product.

Every element outside the shared subgroup has a unique normal form
c_1 c_2 ... c_n s where the c_i are nonidentity coset representatives
alternating between the two factors and s lies in the shared subgroup
(carried in factor-1 coordinates).  Words are sequences of factor
letters (side, payload); reduction merges adjacent same-factor letters
and threads subgroup parts rightward into the tail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .groups import AmalgamPresentation, GroupError, ParseError

FactorLetter = tuple[int, int]  # (side 1|2, payload)
AmSyllable = tuple[int, int]  # (side, nonidentity representative payload)


@dataclass(frozen=True)
class AmalgamNormalForm:
    pres: AmalgamPresentation
    syllables: tuple[AmSyllable, ...]
    tail: int  # shared-subgroup payload in factor-1 coordinates

    def __post_init__(self):
        if not self.pres.in_sigma(1, self.tail):
            raise GroupError(f"tail {self.tail} is not in the shared subgroup")
        prev = 0
        for side, c in self.syllables:
            if side not in (1, 2):
                raise GroupError(f"bad factor {side}")
            if side == prev:
                raise GroupError("syllables must alternate between the factors")
            if c not in self.pres.reps(side) or c == 0:
                raise GroupError(f"{c} is not a nonidentity representative of factor {side}")
            prev = side

    def is_identity(self) -> bool:
        return not self.syllables and self.tail == 0

    def in_subgroup(self) -> bool:
        return not self.syllables

    def syllable_count(self) -> int:
        return len(self.syllables)

    def __mul__(self, other: AmalgamNormalForm) -> AmalgamNormalForm:
        return multiply_amalgam(self, other)

    def __str__(self) -> str:
        return to_text_amalgam(self)


def parse_word_amalgam(text: str, pres: AmalgamPresentation) -> list[FactorLetter]:
    """Parse factor-letter syntax ``1:<k>`` / ``2:<k>``; ``1`` is the identity."""
    letters: list[FactorLetter] = []
    for tok in text.split():
        if tok == "1" and ":" not in tok:
            continue
        if ":" not in tok:
            raise ParseError(f"unknown token {tok!r}")
        side_s, val_s = tok.split(":", 1)
        try:
            side, val = int(side_s), int(val_s)
        except ValueError as exc:
            raise ParseError(f"bad factor letter {tok!r}") from exc
        if side not in (1, 2):
            raise ParseError(f"factor must be 1 or 2, got {tok!r}")
        letters.append((side, pres._factor(side).canon(val)))
    return letters


def _merge_leftmost(word: list[FactorLetter], pres: AmalgamPresentation) -> list[FactorLetter]:
    out: list[FactorLetter] = []
    for side, g in word:
        if out and out[-1][0] == side:
            out[-1] = (side, pres.op(side, out[-1][1], g))
        else:
            out.append((side, g))
        if out and out[-1][1] == 0:
            out.pop()
    return out


def _merge_rightmost(word: list[FactorLetter], pres: AmalgamPresentation) -> list[FactorLetter]:
    w = [(s, g) for s, g in word if g != 0]
    while True:
        pos = -1
        for i in range(len(w) - 1):
            if w[i][0] == w[i + 1][0]:
                pos = i
        if pos < 0:
            return w
        merged = pres.op(w[pos][0], w[pos][1], w[pos + 1][1])
        mid: list[FactorLetter] = [] if merged == 0 else [(w[pos][0], merged)]
        w = w[:pos] + mid + w[pos + 2:]


def _carry_normalize(word: list[FactorLetter], pres: AmalgamPresentation) -> tuple[tuple[AmSyllable, ...], int]:
    """Thread subgroup parts rightward, producing alternating syllables."""
    out: list[AmSyllable] = []
    carry = 0  # factor-1 coordinates
    for side, g in word:
        val = pres.op(side, pres.inject(side, carry), g)
        if out and out[-1][0] == side:
            _, prev = out.pop()
            val = pres.op(side, prev, val)
        c, s = pres.decompose(side, val)
        carry = pres.to_sigma1(side, s)
        if c != 0:
            out.append((side, c))
    return tuple(out), carry


def reduce_amalgam(word: list[FactorLetter], pres: AmalgamPresentation, strategy: str = "leftmost") -> AmalgamNormalForm:
    """Normal form of a factor word; idempotent and merge-order independent."""
    if strategy == "leftmost":
        merged = _merge_leftmost(list(word), pres)
    elif strategy == "rightmost":
        merged = _merge_rightmost(list(word), pres)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    syllables, tail = _carry_normalize(merged, pres)
    return AmalgamNormalForm(pres, syllables, tail)


def reduce_text_amalgam(text: str, pres: AmalgamPresentation, strategy: str = "leftmost") -> AmalgamNormalForm:
    return reduce_amalgam(parse_word_amalgam(text, pres), pres, strategy)


def identity_nf_amalgam(pres: AmalgamPresentation) -> AmalgamNormalForm:
    return AmalgamNormalForm(pres, (), 0)


def nf_to_word_amalgam(a: AmalgamNormalForm) -> list[FactorLetter]:
    word: list[FactorLetter] = [(side, c) for side, c in a.syllables]
    if a.tail != 0:
        word.append((1, a.tail))
    return word


def multiply_amalgam(a: AmalgamNormalForm, b: AmalgamNormalForm) -> AmalgamNormalForm:
    if a.pres != b.pres:
        raise GroupError("presentation mismatch")
    return reduce_amalgam(nf_to_word_amalgam(a) + nf_to_word_amalgam(b), a.pres)


def invert_amalgam(a: AmalgamNormalForm) -> AmalgamNormalForm:
    word = [(side, a.pres.inv(side, g)) for side, g in reversed(nf_to_word_amalgam(a))]
    return reduce_amalgam(word, a.pres)


def equal_amalgam(a: AmalgamNormalForm, b: AmalgamNormalForm) -> bool:
    if a.pres != b.pres:
        raise GroupError("presentation mismatch")
    return a.syllables == b.syllables and a.tail == b.tail


def to_text_amalgam(a: AmalgamNormalForm) -> str:
    toks = [f"{side}:{c}" for side, c in a.syllables]
    if a.tail != 0:
        toks.append(f"1:{a.tail}")
    return " ".join(toks) if toks else "1"


def is_path_type_amalgam(a: AmalgamNormalForm, side: int) -> bool:
    """Path-type relative to a side: trivial tail, leading letter in the
    opposite factor, odd syllable count."""
    if side not in (1, 2):
        raise GroupError(f"bad side {side}")
    if not a.syllables or a.tail != 0:
        return False
    opposite = 2 if side == 1 else 1
    return a.syllables[0][0] == opposite and len(a.syllables) % 2 == 1


def letter_options(pres: AmalgamPresentation, side: int) -> list[AmSyllable]:
    """Nonidentity representatives of a factor, in transversal order."""
    return [(side, c) for c in pres.reps(side) if c != 0]


def path_type_extensions_amalgam(a: AmalgamNormalForm, side: int, depth: int) -> Iterator[AmalgamNormalForm]:
    """Path-type extensions by at most ``depth`` letter pairs, in
    (added length, lexicographic) order, starting with ``a`` itself."""
    if not is_path_type_amalgam(a, side):
        raise GroupError("not a path-type element")
    layer = [a.syllables]
    for _ in range(depth + 1):
        for sylls in layer:
            yield AmalgamNormalForm(a.pres, sylls, 0)
        nxt = []
        for sylls in layer:
            first_side = 2 if sylls[-1][0] == 1 else 1
            for opt1 in letter_options(a.pres, first_side):
                for opt2 in letter_options(a.pres, sylls[-1][0]):
                    nxt.append(sylls + (opt1, opt2))
        layer = nxt


def enumerate_nontrivial_amalgam(pres: AmalgamPresentation, count: int) -> list[AmalgamNormalForm]:
    """First ``count`` nontrivial elements by (word length, lexicographic)
    order over all nonidentity factor letters."""
    gens: list[FactorLetter] = [(1, v) for v in range(1, pres.factor1.p)]
    gens += [(2, v) for v in range(1, pres.factor2.p)]
    seen: set[tuple] = set()
    out: list[AmalgamNormalForm] = []
    layer: list[list[FactorLetter]] = [[]]
    while len(out) < count:
        layer = [w + [g] for w in layer for g in gens]
        for w in layer:
            nf = reduce_amalgam(w, pres)
            key = (nf.syllables, nf.tail)
            if nf.is_identity() or key in seen:
                continue
            seen.add(key)
            out.append(nf)
            if len(out) == count:
                break
    return out
