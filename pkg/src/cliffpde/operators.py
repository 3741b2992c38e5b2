"""Higher-spin differential operators acting on CPoly fields f(x, u).

Left-acting operators (``Side.LEFT``) use the left Dirac operator D_x and the
left projections P_k^+-; right-acting ones use f D_x and f P_{k,r}^+-.  For a
right operator the composition order mirrors the left one, so that e.g.
``R_r(f) = (f D_x) P_{k,r}^+``.

Notation used in names below:

* ``c2 = m + 2k - 2`` and ``c4 = m + 2k - 4``
* R = P^+ D_x on M_k, T = P^+ D_x on u M_{k-1}, T* = P^- D_x on M_k,
  Q = P^- D_x on u M_{k-1}
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .mvpoly import CPoly, Slot, monomials
from .spaces import (ProjectionError, harmonic_basis, is_harmonic, project_minus,
                     project_minus_right, project_plus, project_plus_right)


class OpName(enum.Enum):
    RK = "RK"
    TK = "TK"
    TKSTAR = "TKSTAR"
    QK = "QK"
    AK = "AK"
    BK = "BK"
    DK = "DK"
    DK_ALT = "DK_ALT"
    MAXWELL = "MAXWELL"
    BOUNDARY_A = "BOUNDARY_A"


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class DomainError(ValueError):
    pass


class AdmissibilityError(ValueError):
    pass


_NEEDS_C4 = {OpName.AK, OpName.BK, OpName.DK_ALT}


@dataclass(frozen=True)
class HigherSpinOp:
    name: OpName
    m: int
    k: int
    side: Side = Side.LEFT
    check: bool = True

    def __post_init__(self):
        name, m, k = OpName(self.name), self.m, self.k
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "side", Side(self.side))
        if m < 2 or k < 0:
            raise AdmissibilityError(f"need m >= 2 and k >= 0, got m={m}, k={k}")
        if name is OpName.MAXWELL and k != 1:
            raise AdmissibilityError("the Maxwell operator acts on H_1-valued fields (k = 1)")
        if name in (OpName.TK, OpName.QK) and k == 0:
            raise AdmissibilityError(f"{name.value} needs k >= 1 (u M_{{k-1}} is empty)")
        if m + 2 * k - 2 == 0 and not (name is OpName.DK and k == 0):
            raise AdmissibilityError(f"m + 2k - 2 = 0 for m={m}, k={k}")
        c4_needed = name in _NEEDS_C4 or (name is OpName.DK and k >= 1)
        if c4_needed and m + 2 * k - 4 == 0:
            raise AdmissibilityError(f"m + 2k - 4 = 0 for m={m}, k={k}")

    @property
    def c2(self) -> int:
        return self.m + 2 * self.k - 2

    @property
    def c4(self) -> int:
        return self.m + 2 * self.k - 4

    def __call__(self, f: CPoly) -> CPoly:
        return apply(self, f)


# building blocks ------------------------------------------------------------

def _side(side) -> str:
    return Side(side).value


def dirac_x(f: CPoly, side=Side.LEFT) -> CPoly:
    return f.dirac(Slot.X, _side(side))


def p_plus(f: CPoly, k: int, side=Side.LEFT) -> CPoly:
    return project_plus(f, k) if Side(side) is Side.LEFT else project_plus_right(f, k)


def p_minus(f: CPoly, k: int, side=Side.LEFT) -> CPoly:
    return project_minus(f, k) if Side(side) is Side.LEFT else project_minus_right(f, k)


def rs_plus(f: CPoly, k: int, side=Side.LEFT) -> CPoly:
    """P^+ D_x (R_k on M_k, T_k on u M_{k-1})."""
    return p_plus(dirac_x(f, side), k, side)


def rs_minus(f: CPoly, k: int, side=Side.LEFT) -> CPoly:
    """P^- D_x (T_k^* on M_k, Q_k on u M_{k-1})."""
    return p_minus(dirac_x(f, side), k, side)


def is_monogenic_side(f: CPoly, side=Side.LEFT) -> bool:
    return f.dirac(Slot.U, _side(side)).is_zero()


def in_u_part(f: CPoly, k: int, side=Side.LEFT) -> bool:
    """Membership in u M_{k-1} (left) or M_{k-1} u (right) for harmonic f."""
    return is_harmonic(f) and p_plus(f, k, side).is_zero()


def _check_degree(f: CPoly, k: int, what: str):
    if f.terms and f.u_degrees() != {k}:
        raise DomainError(f"{what}: expected u-homogeneous degree {k}, got {sorted(f.u_degrees())}")


def bosonic_laplacian(f: CPoly, m: int, k: int) -> CPoly:
    """Delta_x - 4<u,D_x><D_u,D_x>/c2 + 4|u|^2 <D_u,D_x>^2/(c2 c4)."""
    lap = f.laplacian(Slot.X)
    if k == 0:
        return lap
    c2 = m + 2 * k - 2
    first = f.pairing_du_dx()
    out = lap - first.pairing_u_dx().scale(Fraction(4, c2))
    if k >= 2:
        c4 = m + 2 * k - 4
        out = out + first.pairing_du_dx().mul_norm_sq(Slot.U).scale(Fraction(4, c2 * c4))
    return out


def maxwell(f: CPoly, m: int) -> CPoly:
    """Delta_x - (4/m) <u,D_x><D_u,D_x>."""
    return f.laplacian(Slot.X) - f.pairing_du_dx().pairing_u_dx().scale(Fraction(4, m))


def boundary_A(f: CPoly, k: int) -> CPoly:
    """d/dn f - 4<u,n><D_u,D_x> f/(m+2k-2) with n = x on the unit sphere.

    The result is the polynomial whose restriction to |x| = 1 is Af.
    """
    m = f.m
    out = f.pairing_x_dx()
    if k == 0:
        return out
    return out - f.pairing_du_dx().pairing_u_x().scale(Fraction(4, m + 2 * k - 2))


def _first_expression(f: CPoly, k: int, side) -> CPoly:
    # -R^2 P+ + 2 R T P-/c4 - 2 Q T* P+/c4 - (m+2k) Q^2 P-/c4
    m = f.m
    c4 = m + 2 * k - 4
    fp, fm = p_plus(f, k, side), p_minus(f, k, side)
    r_fp = rs_plus(fp, k, side)
    t_fm = rs_plus(fm, k, side)
    ts_fp = rs_minus(fp, k, side)
    q_fm = rs_minus(fm, k, side)
    out = -rs_plus(r_fp, k, side)
    out = out + rs_plus(t_fm, k, side).scale(Fraction(2, c4))
    out = out - rs_minus(ts_fp, k, side).scale(Fraction(2, c4))
    out = out - rs_minus(q_fm, k, side).scale(Fraction(m + 2 * k, c4))
    return out


def _second_expression(f: CPoly, k: int, side) -> CPoly:
    # -R^2 P+ + 2 T* R P+/c4 - 2 T Q P-/c4 - (m+2k) Q^2 P-/c4
    m = f.m
    c4 = m + 2 * k - 4
    fp, fm = p_plus(f, k, side), p_minus(f, k, side)
    r_fp = rs_plus(fp, k, side)
    q_fm = rs_minus(fm, k, side)
    out = -rs_plus(r_fp, k, side)
    out = out + rs_minus(r_fp, k, side).scale(Fraction(2, c4))
    out = out - rs_plus(q_fm, k, side).scale(Fraction(2, c4))
    out = out - rs_minus(q_fm, k, side).scale(Fraction(m + 2 * k, c4))
    return out


def a_operator(f: CPoly, k: int, side=Side.LEFT) -> CPoly:
    """A_k f = -R P^+ f + 2 T P^- f / c4 (values in M_k)."""
    c4 = f.m + 2 * k - 4
    return -rs_plus(p_plus(f, k, side), k, side) + \
        rs_plus(p_minus(f, k, side), k, side).scale(Fraction(2, c4))


def b_operator(f: CPoly, k: int, side=Side.LEFT) -> CPoly:
    """B_k f = -2 T* P^+ f / c4 - (m+2k) Q P^- f / c4 (values in u M_{k-1})."""
    m = f.m
    c4 = m + 2 * k - 4
    return -rs_minus(p_plus(f, k, side), k, side).scale(Fraction(2, c4)) - \
        rs_minus(p_minus(f, k, side), k, side).scale(Fraction(m + 2 * k, c4))


# dispatch ------------------------------------------------------------------

def _check_domain(op: HigherSpinOp, f: CPoly):
    name, k, side = op.name, op.k, op.side
    if f.m != op.m:
        raise DomainError(f"dimension mismatch: operator m={op.m}, field m={f.m}")
    if name is OpName.BOUNDARY_A:
        return
    _check_degree(f, k, name.value)
    if name in (OpName.RK, OpName.TKSTAR):
        if not is_monogenic_side(f, side):
            raise DomainError(f"{name.value}: field is not in M_k (D_u test failed)")
    elif name in (OpName.TK, OpName.QK):
        if not in_u_part(f, k, side):
            raise DomainError(f"{name.value}: field is not in u M_(k-1) (P_k^+ f != 0)")
    elif not is_harmonic(f):
        raise DomainError(f"{name.value}: field is not H_k-valued (Delta_u test failed)")


def _check_codomain(op: HigherSpinOp, g: CPoly):
    name, k, side = op.name, op.k, op.side
    if name in (OpName.RK, OpName.TK, OpName.AK):
        ok = is_monogenic_side(g, side)
        test = "D_u"
    elif name in (OpName.TKSTAR, OpName.QK, OpName.BK):
        ok = in_u_part(g, k, side)
        test = "P_k^+"
    elif name is OpName.BOUNDARY_A:
        return
    else:
        ok = is_harmonic(g)
        test = "Delta_u"
    if not ok:
        raise AssertionError(f"{name.value}: result failed the {test} codomain test")


def apply(op: HigherSpinOp, f: CPoly) -> CPoly:
    if op.check:
        _check_domain(op, f)
    name, k, side = op.name, op.k, op.side
    if name in (OpName.RK, OpName.TK):
        out = rs_plus(f, k, side)
    elif name in (OpName.TKSTAR, OpName.QK):
        out = rs_minus(f, k, side)
    elif name is OpName.AK:
        out = a_operator(f, k, side)
    elif name is OpName.BK:
        out = b_operator(f, k, side)
    elif name is OpName.DK:
        if side is Side.LEFT or k == 0:
            out = bosonic_laplacian(f, op.m, k)
        else:
            out = _first_expression(f, k, side)
    elif name is OpName.DK_ALT:
        out = _second_expression(f, k, side)
    elif name is OpName.MAXWELL:
        out = maxwell(f, op.m)
    else:
        out = boundary_A(f, k)
    if op.check:
        _check_codomain(op, out)
    return out


def first_expression(f: CPoly, k: int, side=Side.LEFT) -> CPoly:
    """The Rarita-Schwinger factorisation of D_k (R^2, RT, QT*, Q^2 terms)."""
    return _first_expression(f, k, side)


def verify_connection(m: int, k: int, f: CPoly) -> CPoly:
    """Residual D_k f - (R_k A_k f + Q_k B_k f); identically zero."""
    HigherSpinOp(OpName.AK, m, k)
    lhs = bosonic_laplacian(f, m, k)
    rhs = rs_plus(a_operator(f, k), k) + rs_minus(b_operator(f, k), k)
    return lhs - rhs


def bosonic_null_basis(m: int, k: int, deg: int) -> list[CPoly]:
    """Basis of the polynomial null solutions of D_k with x-degree <= deg.

    The ansatz is x^alpha * Y_i(u) over a scalar harmonic basis Y_i; the null
    space of the linear map is computed exactly.
    """
    if deg < 0:
        raise ValueError("deg must be >= 0")
    HigherSpinOp(OpName.DK, m, k)
    harm = harmonic_basis(m, k).elements
    ansatz = []
    for d in range(deg + 1):
        for alpha in monomials(m, d):
            xm = CPoly.monomial(m, x=alpha)
            ansatz.extend(xm * y for y in harm)
    images = [bosonic_laplacian(a, m, k) for a in ansatz]
    keys = sorted({key for img in images for key in img.terms})
    index = {key: i for i, key in enumerate(keys)}
    rows = [[Fraction(0)] * len(ansatz) for _ in keys]
    for j, img in enumerate(images):
        for key, c in img.terms.items():
            rows[index[key]][j] = Fraction(c)
    null = linalg.nullspace(rows, len(ansatz))
    out = []
    for vec in null:
        p = CPoly(m)
        for c, a in zip(vec, ansatz):
            if c:
                p = p + a.scale(c)
        out.append(p)
    return out


__all__ = [
    "OpName", "Side", "HigherSpinOp", "DomainError", "AdmissibilityError", "ProjectionError",
    "apply", "verify_connection", "boundary_A", "bosonic_null_basis", "bosonic_laplacian",
    "maxwell", "a_operator", "b_operator", "rs_plus", "rs_minus", "p_plus", "p_minus",
    "first_expression", "dirac_x",
]
