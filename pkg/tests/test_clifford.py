import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cliffpde.clifford import (CliffordError, Multivector, blade_product, embed_vector,
                               geometric_product, mask_to_indices, reflect, reversion,
                               scalar_part)

from helpers import multivectors, rationals


def word_product(a, b):
    """Reduce the concatenated generator word by adjacent swaps (test oracle)."""
    word = list(a) + list(b)
    sign = 1
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(word) - 1:
            if word[i] > word[i + 1]:
                word[i], word[i + 1] = word[i + 1], word[i]
                sign = -sign
                changed = True
            elif word[i] == word[i + 1]:
                del word[i:i + 2]
                sign = -sign
                changed = True
                continue
            i += 1
    return sign, tuple(word)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_blade_product_matches_word_reduction(m):
    for a, b in itertools.product(range(1 << m), repeat=2):
        sign, mask = blade_product(a, b)
        assert (sign, mask_to_indices(mask)) == word_product(mask_to_indices(a), mask_to_indices(b))


def test_generator_squares_to_minus_one():
    e1 = Multivector.basis(3, 1)
    assert e1 * e1 == Multivector.scalar(3, -1)
    assert scalar_part(e1 * e1) == -1


def test_sum_times_generator():
    e1, e2 = Multivector.basis(2, 1), Multivector.basis(2, 2)
    assert (e1 + e2) * e1 == Multivector.scalar(2, -1) - Multivector.basis(2, 1, 2)


@given(multivectors(3))
def test_unit_element(a):
    one = Multivector.scalar(3, 1)
    assert one * a == a and a * one == a


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_anticommutation(m):
    for i in range(1, m + 1):
        ei = Multivector.basis(m, i)
        assert ei * ei == Multivector.scalar(m, -1)
        for j in range(i + 1, m + 1):
            ej = Multivector.basis(m, j)
            assert not (ei * ej + ej * ei)


@given(multivectors(4), multivectors(4), multivectors(4))
def test_associativity(a, b, c):
    assert (a * b) * c == a * (b * c)


def test_reversion_examples():
    assert reversion(Multivector.basis(3, 1, 2, 3)) == -Multivector.basis(3, 1, 2, 3)
    assert reversion(Multivector.scalar(3, Fraction(5, 2))) == Multivector.scalar(3, Fraction(5, 2))


def test_reversion_anti_automorphism_on_all_basis_pairs():
    for a, b in itertools.product(range(8), repeat=2):
        ea, eb = Multivector(3, {a: 1}), Multivector(3, {b: 1})
        assert reversion(ea * eb) == reversion(eb) * reversion(ea)


@given(multivectors(4), multivectors(4))
def test_reversion_properties(a, b):
    assert reversion(reversion(a)) == a
    assert reversion(a * b) == reversion(b) * reversion(a)


def test_embed_vector_squares():
    assert embed_vector([1, 0, 0]) == Multivector.basis(3, 1)
    v = embed_vector([1, 1, 0])
    assert v * v == Multivector.scalar(3, -2)
    w = embed_vector([3, 4, 0])
    assert w * w == Multivector.scalar(3, -25)


@given(st.lists(rationals, min_size=4, max_size=4))
def test_vector_square_is_minus_norm(x):
    v = embed_vector(x)
    assert v * v == Multivector.scalar(4, -sum(c * c for c in x))


def test_reflect_examples():
    assert reflect((1, 0, 0), (1, 0, 0)) == (-1, 0, 0)
    assert reflect((1, 0, 0), (0, 1, 0)) == (0, 1, 0)
    # parallel part (e1 + e2)/2 flips, perpendicular part (e1 - e2)/2 stays
    s = 1 / math.sqrt(2)
    out = reflect((s, s, 0.0), (1.0, 0.0, 0.0))
    assert out == pytest.approx((0.0, -1.0, 0.0), abs=1e-15)


# rational unit vectors from Pythagorean quadruples
UNITS = [(Fraction(3, 5), Fraction(4, 5), 0), (Fraction(1, 3), Fraction(2, 3), Fraction(2, 3)),
         (Fraction(2, 7), Fraction(3, 7), Fraction(6, 7)), (0, 0, 1)]


@given(st.sampled_from(UNITS), st.lists(rationals, min_size=3, max_size=3))
def test_reflection_is_involution(a, x):
    assert reflect(a, reflect(a, x)) == tuple(Fraction(c) for c in x)


def test_reflect_rejects_non_unit():
    with pytest.raises(CliffordError):
        reflect((1, 1, 0), (1, 0, 0))


def test_scalar_part_examples():
    assert scalar_part(Multivector(3, {0: 3, 1: 1})) == 3
    assert scalar_part(Multivector.basis(3, 1, 2)) == 0


@given(multivectors(3))
def test_text_roundtrip(a):
    assert Multivector.from_text(3, a.to_text()) == a


def test_dimension_guards():
    with pytest.raises(CliffordError):
        Multivector(9)
    with pytest.raises(CliffordError):
        geometric_product(Multivector.basis(2, 1), Multivector.basis(3, 1))
    with pytest.raises(CliffordError):
        Multivector.basis(3, 4)
