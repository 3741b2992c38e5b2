from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cliffpde.mvpoly import CPoly, Slot, monomials
from cliffpde.operators import (AdmissibilityError, DomainError, HigherSpinOp, OpName, Side,
                                apply, bosonic_laplacian, bosonic_null_basis, boundary_A,
                                maxwell, verify_connection)
from cliffpde.samples import harmonic_field, monogenic_field, rng_for, u_monogenic_field
from cliffpde.spaces import dim_harmonic, harmonic_basis, project_minus, project_plus

seeds = st.integers(0, 10 ** 6)
CONNECTION_GRID = [(m, k) for m in (3, 4, 5) for k in (1, 2, 3) if m + 2 * k != 4]


def field(m, k, seed, **kw):
    return harmonic_field(m, k, rng_for(seed, "ops", m, k), **kw)


def test_rk_kills_x_constants():
    for p in harmonic_basis(3, 2).elements:
        g = project_plus(p, 2)
        assert apply(HigherSpinOp(OpName.RK, 3, 2), g).is_zero()


@given(seed=seeds)
def test_dk_with_k1_is_maxwell(seed):
    f = field(3, 1, seed, x_degree=3, clifford=True)
    assert apply(HigherSpinOp(OpName.DK, 3, 1), f) == maxwell(f, 3)


@pytest.mark.parametrize("m", [3, 4, 6])
@settings(max_examples=8)
@given(seed=seeds)
def test_maxwell_reduction(m, seed):
    f = field(m, 1, seed, x_degree=2, n_terms=2, clifford=True)
    assert bosonic_laplacian(f, m, 1) == apply(HigherSpinOp(OpName.MAXWELL, m, 1), f)


@pytest.mark.parametrize("m,k", CONNECTION_GRID)
@settings(max_examples=5)
@given(seed=seeds)
def test_two_expressions_agree(m, k, seed):
    f = field(m, k, seed, x_degree=2, n_terms=2, clifford=True)
    assert apply(HigherSpinOp(OpName.DK, m, k), f) == apply(HigherSpinOp(OpName.DK_ALT, m, k), f)


@pytest.mark.parametrize("m,k", CONNECTION_GRID)
@settings(max_examples=5)
@given(seed=seeds)
def test_connection_identity(m, k, seed):
    f = field(m, k, seed, x_degree=3, n_terms=2, clifford=True)
    assert verify_connection(m, k, f).is_zero()


def test_connection_examples():
    assert verify_connection(3, 2, CPoly(3)).is_zero()
    x1sq = CPoly.monomial(3, x=(2, 0, 0))
    for y in harmonic_basis(3, 2).elements:
        assert verify_connection(3, 2, x1sq * y).is_zero()


@pytest.mark.parametrize("m,k", [(3, 1), (3, 2), (4, 2)])
@settings(max_examples=8)
@given(seed=seeds)
def test_codomains(m, k, seed):
    rng = rng_for(seed, "codomain", m, k)
    f = monogenic_field(m, k, rng, x_degree=2, clifford=True)
    g = u_monogenic_field(m, k, rng, x_degree=2, clifford=True)
    # apply() also asserts the codomain; check the projections directly here
    assert project_minus(apply(HigherSpinOp(OpName.RK, m, k), f), k).is_zero()
    assert project_plus(apply(HigherSpinOp(OpName.QK, m, k), g), k).is_zero()
    assert project_plus(apply(HigherSpinOp(OpName.TKSTAR, m, k), f), k).is_zero()
    assert project_minus(apply(HigherSpinOp(OpName.TK, m, k), g), k).is_zero()


RIGHT_OPS = [OpName.AK, OpName.BK, OpName.DK, OpName.DK_ALT]


@pytest.mark.parametrize("name", RIGHT_OPS)
@settings(max_examples=6)
@given(seed=seeds)
def test_right_left_duality(name, seed):
    m, k = 3, 2
    f = field(m, k, seed, x_degree=2, n_terms=2, clifford=True)
    right = apply(HigherSpinOp(name, m, k, Side.RIGHT), f)
    left = apply(HigherSpinOp(name, m, k, Side.LEFT), f.reversion())
    assert right == left.reversion()


@settings(max_examples=6)
@given(seed=seeds)
def test_right_rs_operators_duality(seed):
    rng = rng_for(seed, "rs-right")
    f = monogenic_field(3, 2, rng, x_degree=2, clifford=True).reversion()
    for name in (OpName.RK, OpName.TKSTAR):
        right = apply(HigherSpinOp(name, 3, 2, Side.RIGHT), f)
        left = apply(HigherSpinOp(name, 3, 2), f.reversion())
        assert right == left.reversion()


def test_admissibility():
    with pytest.raises(AdmissibilityError):
        HigherSpinOp(OpName.AK, 4, 0)
    with pytest.raises(AdmissibilityError):
        HigherSpinOp(OpName.DK, 2, 1)
    with pytest.raises(AdmissibilityError):
        HigherSpinOp(OpName.MAXWELL, 3, 2)
    with pytest.raises(AdmissibilityError):
        HigherSpinOp(OpName.QK, 3, 0)
    HigherSpinOp(OpName.DK, 4, 0)


def test_domain_errors_name_the_test():
    x1u1 = CPoly.monomial(3, x=(1, 0, 0), u=(1, 0, 0))
    with pytest.raises(DomainError, match="D_u"):
        apply(HigherSpinOp(OpName.RK, 3, 1), x1u1)
    with pytest.raises(DomainError, match="P_k"):
        apply(HigherSpinOp(OpName.QK, 3, 1), CPoly.monomial(3, u=(1, 0, 0)))
    with pytest.raises(DomainError, match="Delta_u"):
        apply(HigherSpinOp(OpName.DK, 3, 2), CPoly.monomial(3, u=(2, 0, 0)))
    with pytest.raises(DomainError, match="degree"):
        apply(HigherSpinOp(OpName.DK, 3, 2), x1u1)


def test_boundary_operator_examples():
    # x-constant and u-constant: every term vanishes
    assert boundary_A(CPoly.const(3, 5), 0).is_zero()
    # k = 0 is the normal derivative x . grad
    f = CPoly.monomial(3, x=(2, 1, 0))
    assert boundary_A(f, 0) == f.scale(3)
    # x1 u1 by hand: x.grad gives x1 u1, <D_u, D_x> gives 1
    x1u1 = CPoly.monomial(3, x=(1, 0, 0), u=(1, 0, 0))
    pair = sum((CPoly.monomial(3, x=e, u=e) for e in monomials(3, 1)), CPoly(3))
    assert boundary_A(x1u1, 1) == x1u1 - pair.scale(Fraction(4, 3))


def test_null_basis_small_cases():
    assert len(bosonic_null_basis(3, 2, 0)) == dim_harmonic(3, 2)
    # k = 0: harmonic polynomials in x of degree <= 2 (1 + 3 + 5)
    assert len(bosonic_null_basis(3, 0, 2)) == 9
    for p in bosonic_null_basis(3, 1, 2):
        assert bosonic_laplacian(p, 3, 1).is_zero()


def test_null_basis_rank_oracle():
    # numeric rank of the alternative expression applied to the same ansatz
    m, k, deg = 3, 1, 2
    harm = harmonic_basis(m, k).elements
    ansatz = [CPoly.monomial(m, x=a) * y for d in range(deg + 1)
              for a in monomials(m, d) for y in harm]
    alt = HigherSpinOp(OpName.DK_ALT, m, k)
    images = [alt(a) for a in ansatz]
    keys = sorted({key for img in images for key in img.terms})
    mat = np.array([[float(img.terms.get(key, 0)) for img in images] for key in keys])
    expected = len(ansatz) - np.linalg.matrix_rank(mat)
    assert expected == 27
    assert len(bosonic_null_basis(m, k, deg)) == expected


def test_k0_dk_is_laplacian():
    f = CPoly.monomial(4, x=(2, 0, 1, 0))
    assert apply(HigherSpinOp(OpName.DK, 4, 0), f) == f.laplacian(Slot.X)
