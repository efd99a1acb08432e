import random

import pytest

from htact import amalgam_words as aw
from htact.groups import GroupError, make_z4_amalgam_sigma2, make_zmod_amalgam
from helpers import random_amalgam_word

Z23 = make_zmod_amalgam(2, 3)
Z33 = make_zmod_amalgam(3, 3)
Z4S = make_z4_amalgam_sigma2()


def nf(text, pres=Z23):
    return aw.reduce_text_amalgam(text, pres)


def test_reduce_examples():
    assert nf("1:1 1:1").is_identity()
    assert str(nf("1:1 2:1 2:2")) == "1:1"
    a = nf("1:1 2:1")
    assert a.syllables == ((1, 1), (2, 1)) and a.tail == 0


def test_product_examples():
    ab = nf("1:1 2:1")
    assert aw.multiply_amalgam(ab, aw.invert_amalgam(ab)).is_identity()
    abab = aw.multiply_amalgam(ab, ab)
    assert abab.syllables == ((1, 1), (2, 1), (1, 1), (2, 1))


def test_uniqueness_across_strategies():
    rng = random.Random(2)
    for pres in (Z23, Z33, Z4S):
        for _ in range(400):
            w = random_amalgam_word(rng, pres)
            a = aw.reduce_amalgam(w, pres, "leftmost")
            b = aw.reduce_amalgam(w, pres, "rightmost")
            assert a.syllables == b.syllables and a.tail == b.tail


def test_inverse_law_random():
    rng = random.Random(4)
    for pres in (Z23, Z4S):
        for _ in range(200):
            a = aw.reduce_amalgam(random_amalgam_word(rng, pres), pres)
            assert aw.multiply_amalgam(a, aw.invert_amalgam(a)).is_identity()


def test_equal_across_bracketings():
    rng = random.Random(9)
    for _ in range(100):
        a = aw.reduce_amalgam(random_amalgam_word(rng, Z23, 8), Z23)
        b = aw.reduce_amalgam(random_amalgam_word(rng, Z23, 8), Z23)
        c = aw.reduce_amalgam(random_amalgam_word(rng, Z23, 8), Z23)
        left = aw.multiply_amalgam(aw.multiply_amalgam(a, b), c)
        right = aw.multiply_amalgam(a, aw.multiply_amalgam(b, c))
        assert aw.equal_amalgam(left, right)


def test_nontrivial_sigma_normal_forms():
    # in the synthetic instance the shared subgroup is {0, 2} inside Z/4
    a = nf("1:3", Z4S)
    assert a.syllables == ((1, 1),) and a.tail == 2
    b = nf("1:2", Z4S)
    assert b.in_subgroup() and b.tail == 2
    # subgroup parts thread through the twist to the other factor:
    # 2 * b = (2 + 1 in Z/4) = representative 1 with subgroup part 2
    c = nf("1:2 2:1", Z4S)
    assert c.syllables == ((2, 1),) and c.tail == 2


def test_presentation_mismatch():
    with pytest.raises(GroupError):
        aw.multiply_amalgam(nf("1:1"), nf("1:1", Z33))


def test_is_path_type_amalgam():
    assert aw.is_path_type_amalgam(nf("2:1"), 1)
    assert not aw.is_path_type_amalgam(nf("2:1 1:1"), 1)
    assert not aw.is_path_type_amalgam(aw.identity_nf_amalgam(Z23), 1)
    assert not aw.is_path_type_amalgam(nf("1:1"), 1)
    assert aw.is_path_type_amalgam(nf("1:1"), 2)
    assert aw.is_path_type_amalgam(nf("2:1 1:1 2:2"), 1)


def test_path_type_extensions_amalgam():
    base = nf("2:1")
    exts = list(aw.path_type_extensions_amalgam(base, 1, 1))
    # one letter pair appended: |C1 - 1| * |C2 - 1| = 1 * 2 combinations
    assert len(exts) == 1 + 1 * 2
    for e in exts:
        assert aw.is_path_type_amalgam(e, 1)
        assert e.syllables[:1] == base.syllables


def test_nondegeneracy_flags():
    assert Z23.nondegenerate and Z33.nondegenerate
    assert not Z4S.nondegenerate
    assert Z4S.nontrivial


def test_enumerate_nontrivial_amalgam():
    elems = aw.enumerate_nontrivial_amalgam(Z23, 6)
    assert [str(e) for e in elems][:3] == ["1:1", "2:1", "2:2"]
    assert len({(e.syllables, e.tail) for e in elems}) == 6


def test_text_round_trip():
    rng = random.Random(6)
    for pres in (Z23, Z4S):
        for _ in range(150):
            a = aw.reduce_amalgam(random_amalgam_word(rng, pres), pres)
            assert aw.equal_amalgam(aw.reduce_text_amalgam(str(a), pres), a)
