"""Spaces H_k, M_k of homogeneous harmonic / monogenic polynomials in u.

Also the Almansi-Fischer projections  P_k^+ = 1 + u D_u/(m+2k-2)  and
P_k^- = 1 - P_k^+, acting from the left or (``*_right``) from the right.
"""
from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from . import linalg
from .clifford import Multivector
from .integrate import ExactScalar, integrate_product
from .mvpoly import CPoly, Slot, monomials


class Kind(enum.Enum):
    HARMONIC_SCALAR = "harmonic_scalar"
    HARMONIC_CLIFFORD = "harmonic_clifford"
    MONOGENIC = "monogenic"


class ProjectionError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceBasis:
    m: int
    k: int
    kind: Kind
    elements: tuple
    # coordinates of each element are read off at these (u-exponent, blade) slots
    pivots: tuple = field(default=(), repr=False)

    def __len__(self):
        return len(self.elements)

    @property
    def gram_rational(self) -> list[list[Fraction]]:
        """Gram matrix divided by omega_m (exact rationals)."""
        return _gram(self)

    @property
    def gram(self) -> list[list[ExactScalar]]:
        return [[ExactScalar.omega(1, q) for q in row] for row in self.gram_rational]

    def coordinates(self, p: CPoly) -> list[Fraction]:
        """Exact coordinates of a u-only polynomial in the span (scalar kinds).

        Raises ProjectionError if ``p`` is not in the span.
        """
        if self.kind is Kind.MONOGENIC:
            raise NotImplementedError("use the real span for module coordinates")
        z = (0,) * self.m
        coords = [p.terms.get((z, e, 0), Fraction(0)) for e in self.pivots]
        back = CPoly(self.m)
        for c, el in zip(coords, self.elements):
            back = back + el.scale(c)
        if back != p:
            raise ProjectionError("polynomial is not in the span of the basis")
        return coords

    def combine(self, coords) -> CPoly:
        out = CPoly(self.m)
        for c, el in zip(coords, self.elements):
            if c:
                out = out + el.scale(c)
        return out


_gram_cache: dict = {}
_lock = threading.Lock()


def _gram(basis: SpaceBasis):
    key = (basis.m, basis.k, basis.kind)
    with _lock:
        if key in _gram_cache:
            return _gram_cache[key]
    els = basis.elements
    n = len(els)
    out = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        left = els[i].conjugation() if basis.kind is Kind.MONOGENIC else els[i]
        for j in range(i, n):
            val = integrate_product(left, els[j], x_domain=None)
            q = val.scalar_part()
            q = q.terms.get(1, Fraction(0)) if q else Fraction(0)
            out[i][j] = out[j][i] = q
    with _lock:
        _gram_cache[key] = out
    return out


def dim_harmonic(m: int, k: int) -> int:
    if k < 0:
        return 0
    return comb(k + m - 1, m - 1) - (comb(k + m - 3, m - 1) if k >= 2 else 0)


def rank_monogenic(m: int, k: int) -> int:
    """Closed-form right-module rank of M_k(Cl_m)."""
    return comb(k + m - 2, m - 2) if k >= 0 else 0


_basis_cache: dict = {}


def harmonic_basis(m: int, k: int, kind: Kind = Kind.HARMONIC_SCALAR) -> SpaceBasis:
    """Rational basis of degree-k harmonics: the nullspace of Delta_u."""
    if m < 2 or k < 0:
        raise ValueError("need m >= 2 and k >= 0")
    key = ("H", m, k, kind)
    with _lock:
        if key in _basis_cache:
            return _basis_cache[key]
    cols = monomials(m, k)
    rows_idx = {e: i for i, e in enumerate(monomials(m, k - 2))} if k >= 2 else {}
    mat = [[Fraction(0)] * len(cols) for _ in rows_idx]
    for c, e in enumerate(cols):
        for j in range(m):
            if e[j] >= 2:
                t = list(e)
                t[j] -= 2
                mat[rows_idx[tuple(t)]][c] += e[j] * (e[j] - 1)
    null = linalg.nullspace(mat, len(cols))
    z = (0,) * m
    elements, pivots = [], []
    for vec in null:
        terms = {(z, e, 0): v for e, v in zip(cols, vec) if v}
        elements.append(CPoly(m, terms, u_degree=k))
        pivots.append(cols[next(i for i, v in enumerate(vec) if v == 1 and _is_free(null, vec, i))])
    out = SpaceBasis(m, k, kind, tuple(elements), tuple(pivots))
    with _lock:
        _basis_cache[key] = out
    return out


def _is_free(null, vec, i) -> bool:
    # free columns carry a 1 in exactly one nullspace vector and 0 elsewhere
    return all((other[i] == 0) for other in null if other is not vec)


def _denominator(m: int, k: int) -> int:
    d = m + 2 * k - 2
    if d == 0:
        raise ProjectionError(f"degenerate projection: m + 2k - 2 = 0 (m={m}, k={k})")
    return d


def _degree(h: CPoly, k: int | None) -> int:
    if k is not None:
        if h.terms and h.u_degree() != k:
            raise ProjectionError(f"expected u-degree {k}, got {h.u_degree()}")
        return k
    d = h.u_degree()
    return 0 if d is None else d


def project_plus(h: CPoly, k: int | None = None) -> CPoly:
    """P_k^+ h = h + u D_u h / (m + 2k - 2)."""
    k = _degree(h, k)
    d = _denominator(h.m, k)
    return h + h.dirac(Slot.U, "left").mul_vector(Slot.U, "left").scale(Fraction(1, d))


def project_minus(h: CPoly, k: int | None = None) -> CPoly:
    """P_k^- h = -u D_u h / (m + 2k - 2)."""
    k = _degree(h, k)
    d = _denominator(h.m, k)
    return h.dirac(Slot.U, "left").mul_vector(Slot.U, "left").scale(Fraction(-1, d))


def project_plus_right(h: CPoly, k: int | None = None) -> CPoly:
    """h P_{k,r}^+ = h + (h D_u) u / (m + 2k - 2)."""
    k = _degree(h, k)
    d = _denominator(h.m, k)
    return h + h.dirac(Slot.U, "right").mul_vector(Slot.U, "right").scale(Fraction(1, d))


def project_minus_right(h: CPoly, k: int | None = None) -> CPoly:
    k = _degree(h, k)
    d = _denominator(h.m, k)
    return h.dirac(Slot.U, "right").mul_vector(Slot.U, "right").scale(Fraction(-1, d))


def is_harmonic(h: CPoly) -> bool:
    return h.laplacian(Slot.U).is_zero()


def is_monogenic(h: CPoly, side: str = "left") -> bool:
    return h.dirac(Slot.U, side).is_zero()


def divide_by_norm_u_sq(s: CPoly) -> CPoly | None:
    """Exact quotient q with |u|^2 q = s, or None if |u|^2 does not divide s."""
    m = s.m
    rem = dict(s.terms)
    quot: dict = {}
    while True:
        key = next((kk for kk in rem if kk[1][0] >= 2), None)
        if key is None:
            break
        xe, ue, b = key
        c = rem[key]
        qe = (ue[0] - 2,) + ue[1:]
        qk = (xe, qe, b)
        quot[qk] = quot.get(qk, 0) + c
        for j in range(m):
            t = list(qe)
            t[j] += 2
            kk = (xe, tuple(t), b)
            v = rem.get(kk, 0) - c
            if v:
                rem[kk] = v
            else:
                rem.pop(kk, None)
    if any(rem.values()):
        return None
    return CPoly(m, quot)


def u_quotient(r: CPoly) -> CPoly | None:
    """q with u q = r exactly, or None."""
    # u u q = -|u|^2 q, so q = -(u r)/|u|^2
    s = -r.mul_vector(Slot.U, "left")
    q = divide_by_norm_u_sq(s)
    if q is None or q.mul_vector(Slot.U, "left") != r:
        return None
    return q


def in_u_monogenic(r: CPoly, k: int) -> bool:
    """Membership of r (degree k in u) in u * M_{k-1}."""
    if r.is_zero():
        return True
    q = u_quotient(r)
    return q is not None and is_monogenic(q) and (q.is_zero() or q.u_degree() == k - 1)


def almansi_split(h: CPoly, k: int | None = None) -> tuple[CPoly, CPoly]:
    """h = p_k + u p_{k-1} with p_k in M_k and p_{k-1} in M_{k-1}."""
    k = _degree(h, k)
    if not is_harmonic(h):
        raise ProjectionError("almansi_split: input is not harmonic in u")
    d = _denominator(h.m, k)
    pk = project_plus(h, k)
    # P_k^- h = u * (-D_u h / d); D_u h is monogenic because D_u^2 = -Delta_u
    pkm1 = h.dirac(Slot.U, "left").scale(Fraction(-1, d))
    if pkm1.mul_vector(Slot.U, "left") != project_minus(h, k) or not is_monogenic(pkm1):
        raise AssertionError("almansi_split: quotient check failed")
    return pk, pkm1


def _real_span_rows(p: CPoly, k: int):
    """Real coordinate vectors of p*e_A for every blade A."""
    m = p.m
    cols = [(e, b) for e in monomials(m, k) for b in range(1 << m)]
    index = {c: i for i, c in enumerate(cols)}
    rows = []
    for a in range(1 << m):
        q = p * Multivector(m, {a: 1})
        row = [0] * len(cols)
        for (xe, ue, b), c in q.terms.items():
            row[index[(ue, b)]] = c
        rows.append(row)
    return rows


def monogenic_basis(m: int, k: int) -> SpaceBasis:
    """Right Cl_m-module basis of M_k(Cl_m).

    Generators are P_k^+ applied to the scalar harmonic basis.  A generator
    is kept when the real span of {p e_A} grows by the full 2^m; the rank
    test runs over GF(p), which certifies independence over Q.
    """
    if m < 2 or k < 0:
        raise ValueError("need m >= 2 and k >= 0")
    key = ("M", m, k)
    with _lock:
        if key in _basis_cache:
            return _basis_cache[key]
    harm = harmonic_basis(m, k)
    ncols = len(monomials(m, k)) << m
    elim = linalg.ModpEliminator(ncols)
    chosen = []
    for h in harm.elements:
        p = project_plus(h, k)
        if p.is_zero():
            continue
        if not is_monogenic(p):
            raise AssertionError("P_k^+ produced a non-monogenic polynomial")
        if elim.try_add(_real_span_rows(p, k)):
            chosen.append(CPoly(m, p.terms, u_degree=k))
    out = SpaceBasis(m, k, Kind.MONOGENIC, tuple(chosen))
    with _lock:
        _basis_cache[key] = out
    return out


def module_rank(m: int, k: int) -> int:
    return len(monogenic_basis(m, k)) if k >= 0 else 0


def real_span(basis: SpaceBasis) -> list[CPoly]:
    """The real basis {p_j e_A} of a monogenic module basis."""
    m = basis.m
    return [p * Multivector(m, {a: 1}) for p in basis.elements for a in range(1 << m)]


def dims(m: int, k: int) -> dict:
    return {"m": m, "k": k, "dim_Hk": len(harmonic_basis(m, k)),
            "dim_Hk_formula": dim_harmonic(m, k), "rank_Mk": module_rank(m, k),
            "rank_Mk_formula": rank_monogenic(m, k)}
