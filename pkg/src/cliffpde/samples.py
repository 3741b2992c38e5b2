"""Seeded random rational test fields.

Coefficients are drawn from {-3..3}/{1,2}.  A field is a short sum of terms
x^alpha * Y(u) * e_A with Y from a harmonic basis, so that products stay small
enough for exact integration.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .mvpoly import CPoly
from .spaces import harmonic_basis, project_minus, project_plus


def rng_for(seed: int, *tags) -> random.Random:
    return random.Random(repr((seed,) + tags))


def rational(rng: random.Random, allow_zero: bool = False) -> Fraction:
    while True:
        c = Fraction(rng.randint(-3, 3), rng.choice((1, 2)))
        if c or allow_zero:
            return c


def x_exponent(rng: random.Random, m: int, max_degree: int) -> tuple:
    e = [0] * m
    for _ in range(rng.randint(0, max_degree)):
        e[rng.randrange(m)] += 1
    return tuple(e)


def harmonic_field(m: int, k: int, rng: random.Random, *, x_degree: int = 2, n_terms: int = 3,
                   clifford: bool = False) -> CPoly:
    """Random H_k-valued polynomial field (scalar or Clifford coefficients)."""
    basis = harmonic_basis(m, k).elements
    out = CPoly(m)
    for _ in range(n_terms):
        blade = rng.randrange(1 << m) if clifford else 0
        mono = CPoly.monomial(m, x=x_exponent(rng, m, x_degree), coeff=rational(rng), blade=blade)
        out = out + mono * rng.choice(basis)
    if out.is_zero():
        return harmonic_field(m, k, rng, x_degree=x_degree, n_terms=n_terms, clifford=clifford)
    return out


def harmonic_u(m: int, k: int, rng: random.Random, *, n_terms: int = 3,
               clifford: bool = False) -> CPoly:
    """Random x-independent element of H_k."""
    return harmonic_field(m, k, rng, x_degree=0, n_terms=n_terms, clifford=clifford)


def monogenic_field(m: int, k: int, rng: random.Random, **kw) -> CPoly:
    """Random M_k-valued field: P_k^+ of a random Clifford harmonic field."""
    kw.setdefault("clifford", True)
    while True:
        p = project_plus(harmonic_field(m, k, rng, **kw), k)
        if not p.is_zero():
            return p


def u_monogenic_field(m: int, k: int, rng: random.Random, **kw) -> CPoly:
    """Random u M_{k-1}-valued field: P_k^- of a random Clifford harmonic field."""
    if k == 0:
        raise ValueError("u M_{-1} is empty")
    kw.setdefault("clifford", True)
    while True:
        p = project_minus(harmonic_field(m, k, rng, **kw), k)
        if not p.is_zero():
            return p
