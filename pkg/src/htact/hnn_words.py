"""Words and Britton-style normal forms in an HNN extension.

The extension is generated by the base group together with a stable
letter t subject to t^-1 s t = theta(s) for s in the distinguished
subgroup.  Every element has a unique normal form

    c_1 t^(e_1) c_2 t^(e_2) ... c_n t^(e_n) h

where each c_i is a coset representative (positive transversal when
e_i = +1, negative when e_i = -1), h lies in the base group, and no
subword t^e 1 t^-e occurs.  We store a normal form as a tuple of
(representative, sign) syllables plus the base tail.

Reduction first eliminates pinches -- subwords t^-1 s t with s in the
subgroup and t v t^-1 with v in its twisted image -- and then pushes
base letters left to right into transversal shape.  Pinch elimination
order is configurable (leftmost or rightmost first) precisely so that
tests can confirm the result does not depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .groups import GroupError, HnnPresentation, ParseError

# A letter is ("h", payload) or ("t", +1 | -1).
Letter = tuple[str, int]
Syllable = tuple[int, int]  # (coset representative payload, sign)


@dataclass(frozen=True)
class HnnNormalForm:
    pres: HnnPresentation
    syllables: tuple[Syllable, ...]
    tail: int

    def __post_init__(self):
        if self.syllables and self.tail != self.pres.identity:
            pass  # any tail is fine; the constraint sits on the syllables
        for i, (c, e) in enumerate(self.syllables):
            if e not in (+1, -1):
                raise GroupError(f"bad sign {e}")
            reps = self.pres.reps_pos if e == +1 else self.pres.reps_neg
            if c not in reps:
                raise GroupError(f"{c} is not a transversal representative")
            if i > 0:
                pc, pe = self.syllables[i - 1]
                if e == -pe and c == self.pres.identity:
                    raise GroupError("forbidden subword t^e 1 t^-e")

    def is_identity(self) -> bool:
        return not self.syllables and self.tail == self.pres.identity

    def in_base(self) -> bool:
        return not self.syllables

    def syllable_count(self) -> int:
        return len(self.syllables)

    def __mul__(self, other: HnnNormalForm) -> HnnNormalForm:
        return multiply(self, other)

    def __str__(self) -> str:
        return to_text(self)


def parse_word(text: str, pres: HnnPresentation) -> list[Letter]:
    """Parse the compact word syntax: ``t``, ``T`` (inverse), ``h<k>``."""
    letters: list[Letter] = []
    for tok in text.split():
        if tok == "t":
            letters.append(("t", +1))
        elif tok == "T":
            letters.append(("t", -1))
        elif tok == "1":
            continue
        elif tok.startswith("h"):
            try:
                letters.append(("h", int(tok[1:])))
            except ValueError as exc:
                raise ParseError(f"bad base letter {tok!r}") from exc
        else:
            raise ParseError(f"unknown token {tok!r}")
    return letters


def _merge_base_letters(word: list[Letter], pres: HnnPresentation) -> list[Letter]:
    out: list[Letter] = []
    for kind, v in word:
        if kind == "h":
            if out and out[-1][0] == "h":
                out[-1] = ("h", pres.op(out[-1][1], v))
            else:
                out.append(("h", v))
            if out[-1][1] == pres.identity:
                out.pop()
        else:
            out.append((kind, v))
    return out


def _pinch_positions(word: list[Letter], pres: HnnPresentation) -> list[tuple[int, int]]:
    """Positions (start, span) of removable pinches in a merged word."""
    hits = []
    for i, (kind, e) in enumerate(word):
        if kind != "t":
            continue
        # t h t^-1 with h in theta(Sigma), or t^-1 h t with h in Sigma
        if i + 2 < len(word) and word[i + 1][0] == "h" and word[i + 2] == ("t", -e):
            v = word[i + 1][1]
            if (e == +1 and pres.in_theta_sigma(v)) or (e == -1 and pres.in_sigma(v)):
                hits.append((i, 3))
        # bare t t^-1 or t^-1 t
        if i + 1 < len(word) and word[i + 1] == ("t", -e):
            hits.append((i, 2))
    return hits


def _apply_pinch(word: list[Letter], pos: int, span: int, pres: HnnPresentation) -> list[Letter]:
    e = word[pos][1]
    v = word[pos + 1][1] if span == 3 else pres.identity
    mapped = pres.theta_inv(v) if e == +1 else pres.theta(v)
    mid: list[Letter] = [] if mapped == pres.identity else [("h", mapped)]
    return word[:pos] + mid + word[pos + span:]


def _britton(word: list[Letter], pres: HnnPresentation, strategy: str) -> list[Letter]:
    w = _merge_base_letters(word, pres)
    while True:
        hits = _pinch_positions(w, pres)
        if not hits:
            return w
        pos, span = hits[0] if strategy == "leftmost" else hits[-1]
        w = _merge_base_letters(_apply_pinch(w, pos, span, pres), pres)


def _normalize(word: list[Letter], pres: HnnPresentation) -> tuple[tuple[Syllable, ...], int]:
    """Transversal-normalize a pinch-free word into syllables plus tail."""
    syllables: list[Syllable] = []
    carry = pres.identity
    for kind, v in word:
        if kind == "h":
            carry = pres.op(carry, v)
            continue
        if v == +1:
            c, s = pres.decompose_pos(carry)
            syllables.append((c, +1))
            carry = pres.theta(s)
        else:
            c, s = pres.decompose_neg(carry)
            syllables.append((c, -1))
            carry = pres.theta_inv(s)
    return tuple(syllables), carry


def reduce_word(word: list[Letter], pres: HnnPresentation, strategy: str = "leftmost") -> HnnNormalForm:
    """Normal form of a word; idempotent and independent of pinch order."""
    if strategy not in ("leftmost", "rightmost"):
        raise ValueError(f"unknown strategy {strategy!r}")
    syllables, tail = _normalize(_britton(list(word), pres, strategy), pres)
    return HnnNormalForm(pres, syllables, tail)


def reduce_text(text: str, pres: HnnPresentation, strategy: str = "leftmost") -> HnnNormalForm:
    return reduce_word(parse_word(text, pres), pres, strategy)


def identity_nf(pres: HnnPresentation) -> HnnNormalForm:
    return HnnNormalForm(pres, (), pres.identity)


def nf_to_word(a: HnnNormalForm) -> list[Letter]:
    word: list[Letter] = []
    for c, e in a.syllables:
        if c != a.pres.identity:
            word.append(("h", c))
        word.append(("t", e))
    if a.tail != a.pres.identity:
        word.append(("h", a.tail))
    return word


def _invert_word(word: list[Letter], pres: HnnPresentation) -> list[Letter]:
    out: list[Letter] = []
    for kind, v in reversed(word):
        out.append(("h", pres.inv(v)) if kind == "h" else ("t", -v))
    return out


def multiply(a: HnnNormalForm, b: HnnNormalForm) -> HnnNormalForm:
    if a.pres != b.pres:
        raise GroupError("presentation mismatch")
    return reduce_word(nf_to_word(a) + nf_to_word(b), a.pres)


def invert(a: HnnNormalForm) -> HnnNormalForm:
    return reduce_word(_invert_word(nf_to_word(a), a.pres), a.pres)


def equal(a: HnnNormalForm, b: HnnNormalForm) -> bool:
    if a.pres != b.pres:
        raise GroupError("presentation mismatch")
    return a.syllables == b.syllables and a.tail == b.tail


def to_text(a: HnnNormalForm) -> str:
    toks = []
    for c, e in a.syllables:
        if c != a.pres.identity:
            toks.append(f"h{c}")
        toks.append("t" if e == +1 else "T")
    if a.tail != a.pres.identity:
        toks.append(f"h{a.tail}")
    return " ".join(toks) if toks else "1"


def is_path_type(a: HnnNormalForm) -> tuple[bool, int]:
    """Path-type: first representative and tail trivial, at least one syllable.

    Returns (flag, sign of the leading stable letter; 0 when not path-type).
    """
    if not a.syllables:
        return False, 0
    c1, e1 = a.syllables[0]
    if c1 != a.pres.identity or a.tail != a.pres.identity:
        return False, 0
    return True, e1


def syllable_options(pres: HnnPresentation, prev_sign: int) -> list[Syllable]:
    """Legal next syllables after a syllable of the given sign, in canonical
    order: positive-sign syllables by representative index, then negatives."""
    opts: list[Syllable] = []
    for c in pres.reps_pos:
        if not (prev_sign == -1 and c == pres.identity):
            opts.append((c, +1))
    for c in pres.reps_neg:
        if not (prev_sign == +1 and c == pres.identity):
            opts.append((c, -1))
    return opts


def path_type_extensions(a: HnnNormalForm, depth: int) -> Iterator[HnnNormalForm]:
    """All path-type extensions of ``a`` by at most ``depth`` syllables.

    Emitted in deterministic (added length, then lexicographic by
    representative index) order, starting with ``a`` itself.
    """
    ok, _ = is_path_type(a)
    if not ok:
        raise GroupError("not a path-type element")
    layer = [a.syllables]
    for _ in range(depth + 1):
        for sylls in layer:
            yield HnnNormalForm(a.pres, sylls, a.pres.identity)
        layer = [s + (opt,) for s in layer for opt in syllable_options(a.pres, s[-1][1])]


def generator_letters(pres: HnnPresentation) -> list[list[Letter]]:
    """Generating alphabet used for element enumeration, in canonical order."""
    return [[("h", 1)], [("h", -1)], [("t", +1)], [("t", -1)]]


def enumerate_nontrivial(pres: HnnPresentation, count: int) -> list[HnnNormalForm]:
    """First ``count`` nontrivial elements by (word length, lexicographic)
    order over the generating alphabet, deduplicated by normal form."""
    gens = generator_letters(pres)
    seen: set[tuple] = set()
    out: list[HnnNormalForm] = []
    layer: list[list[Letter]] = [[]]
    while len(out) < count:
        layer = [w + g for w in layer for g in gens]
        for w in layer:
            nf = reduce_word(w, pres)
            key = (nf.syllables, nf.tail)
            if nf.is_identity() or key in seen:
                continue
            seen.add(key)
            out.append(nf)
            if len(out) == count:
                break
    return out
