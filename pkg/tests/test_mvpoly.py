from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cliffpde.clifford import Multivector
from cliffpde.mvpoly import (CPoly, HomogeneityError, Slot, dirac_left, dirac_right, laplacian,
                             mul_norm_u_sq, pairing_du_dx, pairing_u_dx, partial, poly_product)
from cliffpde.spaces import monogenic_basis

from helpers import cpolys, exact_value, rationals

X, U = Slot.X, Slot.U


def mono(m, x=None, u=None, c=1, blade=0):
    return CPoly.monomial(m, x, u, coeff=c, blade=blade)


def test_partial_examples():
    assert partial(mono(3, (2, 0, 0)), 1) == mono(3, (1, 0, 0), c=2)
    e1 = 0b001
    assert partial(mono(3, (1, 0, 0), (0, 1, 0), blade=e1), 2, U) == mono(3, (1, 0, 0), blade=e1)


@given(cpolys(3))
def test_mixed_partials_commute(p):
    assert partial(partial(p, 1), 2) == partial(partial(p, 2), 1)
    assert partial(partial(p, 1, U), 3) == partial(partial(p, 3), 1, U)


def test_dirac_of_position_vector():
    x = CPoly.vector(3, X)
    assert dirac_left(x) == CPoly.const(3, -3)
    assert dirac_right(x) == CPoly.const(3, -3)


@pytest.mark.parametrize("k", [1, 2])
def test_dirac_kills_monogenic_basis(k):
    for p in monogenic_basis(3, k).elements:
        assert dirac_left(p, U).is_zero()


@given(cpolys(3, x_degree=3))
def test_laplacian_factorises(p):
    assert laplacian(p) == -dirac_left(dirac_left(p))
    assert laplacian(p, U) == -dirac_left(dirac_left(p, U), U)
    assert laplacian(p) == -dirac_right(dirac_right(p))


@given(cpolys(3, clifford=False))
def test_right_equals_left_on_scalar_coefficients(p):
    # for scalar coefficients the blades e_j commute with the coefficient
    assert dirac_right(p) == dirac_left(p)


@given(cpolys(3))
def test_reversion_swaps_sides(p):
    assert dirac_right(p).reversion() == dirac_left(p.reversion())


@given(cpolys(3))
def test_left_and_right_dirac_commute(p):
    assert dirac_left(dirac_right(p)) == dirac_right(dirac_left(p))


def test_pairing_examples():
    assert pairing_u_dx(mono(3, (1, 0, 0))) == mono(3, u=(1, 0, 0))
    assert pairing_u_dx(mono(3, (1, 1, 0))) == mono(3, (0, 1, 0), (1, 0, 0)) + mono(3, (1, 0, 0), (0, 1, 0))
    assert pairing_du_dx(mono(3, (1, 0, 0), (1, 0, 0))) == CPoly.const(3, 1)
    assert pairing_du_dx(mono(3, (0, 1, 0), (1, 0, 0))).is_zero()


@given(st.integers(0, 4), st.integers(0, 10_000))
def test_euler_identity(d, seed):
    # <u, D_x> p with u := x returns d p for x-homogeneous p of degree d
    from cliffpde.samples import rng_for, x_exponent, rational
    rng = rng_for(seed, "euler", d)
    p = CPoly(3)
    for _ in range(3):
        e = x_exponent(rng, 3, d)
        e = (e[0] + d - sum(e),) + e[1:]
        p = p + mono(3, e, c=rational(rng), blade=rng.randrange(8))
    assert pairing_u_dx(p).restrict_u_to_x() == p.scale(d)


@given(cpolys(3, x_degree=3, u_degree=3))
def test_pairing_du_dx_expansion(p):
    # brute-force double application term by term
    twice = CPoly(3)
    for i in range(1, 4):
        for j in range(1, 4):
            twice = twice + partial(partial(partial(partial(p, i), i, U), j), j, U)
    assert pairing_du_dx(pairing_du_dx(p)) == twice


@given(cpolys(3), cpolys(3), rationals)
def test_operators_are_linear(p, q, c):
    for op in (dirac_left, laplacian, pairing_u_dx, pairing_du_dx, mul_norm_u_sq):
        assert op(p.scale(c) + q) == op(p).scale(c) + op(q)


def test_mul_norm_u_sq():
    p = mono(2, u=(1, 0))
    assert mul_norm_u_sq(p) == mono(2, u=(3, 0)) + mono(2, u=(1, 2))


def test_homogeneity_tag_is_enforced():
    CPoly(3, {((0, 0, 0), (1, 0, 0), 0): 1}, u_degree=1)
    with pytest.raises(HomogeneityError):
        CPoly(3, {((0, 0, 0), (2, 0, 0), 0): 1}, u_degree=1)


@given(cpolys(3))
def test_json_roundtrip(p):
    assert CPoly.from_json(p.to_json()) == p


def test_json_rejects_wrong_exponent_length():
    with pytest.raises(ValueError):
        CPoly.from_json({"m": 3, "terms": [{"x": [1, 0], "u": [0, 0, 0], "coeff": "1*e{}"}]})


@given(cpolys(3), st.lists(rationals, min_size=6, max_size=6))
def test_float_evaluation_matches_exact(p, pt):
    x, u = pt[:3], pt[3:]
    exact = exact_value(p, x, u)
    got = p.evaluate_mv(x=[float(c) for c in x], u=[float(c) for c in u])
    for blade in range(8):
        assert got.coeffs.get(blade, 0.0) == pytest.approx(float(exact.coeffs.get(blade, 0)), abs=1e-12)


@given(cpolys(3), cpolys(3), st.lists(rationals, min_size=6, max_size=6))
def test_product_is_pointwise(p, q, pt):
    x, u = pt[:3], pt[3:]
    assert exact_value(poly_product(p, q), x, u) == exact_value(p, x, u) * exact_value(q, x, u)


def test_swap_slots_exchanges_variables():
    p = mono(3, (1, 0, 0), (0, 2, 0), c=Fraction(1, 2))
    assert p.swap_slots() == mono(3, (0, 2, 0), (1, 0, 0), c=Fraction(1, 2))
