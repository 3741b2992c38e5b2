"""Shared strategies and exact evaluation helpers for the test suite."""
from fractions import Fraction

from hypothesis import strategies as st

from cliffpde.clifford import Multivector
from cliffpde.mvpoly import CPoly

rationals = st.builds(Fraction, st.integers(-3, 3), st.sampled_from([1, 2]))


@st.composite
def multivectors(draw, m, max_terms=4):
    n = draw(st.integers(0, max_terms))
    coeffs = {}
    for _ in range(n):
        coeffs[draw(st.integers(0, (1 << m) - 1))] = draw(rationals)
    return Multivector(m, coeffs)


@st.composite
def cpolys(draw, m, x_degree=2, u_degree=2, max_terms=4, clifford=True):
    out = CPoly(m)
    for _ in range(draw(st.integers(1, max_terms))):
        xe = tuple(draw(st.lists(st.integers(0, x_degree), min_size=m, max_size=m)))
        ue = tuple(draw(st.lists(st.integers(0, u_degree), min_size=m, max_size=m)))
        blade = draw(st.integers(0, (1 << m) - 1)) if clifford else 0
        out = out + CPoly.monomial(m, xe, ue, coeff=draw(rationals), blade=blade)
    return out


def exact_value(p: CPoly, x, u) -> Multivector:
    """p(x, u) with Fraction arithmetic (independent of the float evaluator)."""
    acc = {}
    for (xe, ue, b), c in p.terms.items():
        v = Fraction(c)
        for xi, a in zip(x, xe):
            v *= Fraction(xi) ** a
        for ui, a in zip(u, ue):
            v *= Fraction(ui) ** a
        acc[b] = acc.get(b, 0) + v
    return Multivector(p.m, acc)
