"""Polynomials f(x, u) in two vector variables with Clifford coefficients.

A :class:`CPoly` is stored flat: ``terms[(xexp, uexp, blade)] = coefficient``
with exponent tuples of length m and a blade bitmask (see
:mod:`cliffpde.clifford`).  Coefficients are exact (``Fraction``/``int``).
"""
from __future__ import annotations

import enum
import json
from collections import defaultdict
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Mapping

import numpy as np

from .clifford import Multivector, blade_product, reversion_sign, conjugation_sign


class Slot(enum.Enum):
    X = "x"
    U = "u"


class HomogeneityError(ValueError):
    pass


def _bump(e: tuple, j: int, d: int) -> tuple:
    lst = list(e)
    lst[j] += d
    return tuple(lst)


def monomials(m: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of total degree ``degree``, in a fixed order."""
    out = []
    for combo in combinations_with_replacement(range(m), degree):
        e = [0] * m
        for j in combo:
            e[j] += 1
        out.append(tuple(e))
    return out


class CPoly:
    __slots__ = ("m", "terms")

    def __init__(self, m: int, terms: Mapping | None = None, *, u_degree: int | None = None):
        self.m = m
        self.terms = {k: c for k, c in (terms or {}).items() if c != 0}
        if u_degree is not None:
            bad = [k for k in self.terms if sum(k[1]) != u_degree]
            if bad:
                raise HomogeneityError(
                    f"term with u-exponent {bad[0][1]} violates u-degree {u_degree}")

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, m: int) -> "CPoly":
        return cls(m)

    @classmethod
    def const(cls, m: int, c=1) -> "CPoly":
        z = (0,) * m
        if isinstance(c, Multivector):
            return cls(m, {(z, z, k): v for k, v in c.coeffs.items()})
        return cls(m, {(z, z, 0): c})

    @classmethod
    def monomial(cls, m: int, x=None, u=None, coeff=1, blade: int = 0) -> "CPoly":
        z = (0,) * m
        x = tuple(x) if x is not None else z
        u = tuple(u) if u is not None else z
        if isinstance(coeff, Multivector):
            return cls(m, {(x, u, k): v for k, v in coeff.coeffs.items()})
        return cls(m, {(x, u, blade): coeff})

    @classmethod
    def var(cls, m: int, j: int, slot: Slot = Slot.X) -> "CPoly":
        """The coordinate x_j or u_j (1-based)."""
        e = tuple(int(i == j - 1) for i in range(m))
        return cls.monomial(m, x=e) if slot is Slot.X else cls.monomial(m, u=e)

    @classmethod
    def vector(cls, m: int, slot: Slot = Slot.X) -> "CPoly":
        """The 1-vector sum_j x_j e_j (or u)."""
        z = (0,) * m
        terms = {}
        for j in range(m):
            e = tuple(int(i == j) for i in range(m))
            key = (e, z, 1 << j) if slot is Slot.X else (z, e, 1 << j)
            terms[key] = Fraction(1)
        return cls(m, terms)

    # basic arithmetic ---------------------------------------------------
    def _check(self, other):
        if other.m != self.m:
            raise ValueError(f"dimension mismatch {self.m} vs {other.m}")

    def copy(self) -> "CPoly":
        return CPoly(self.m, dict(self.terms))

    def __add__(self, other):
        if not isinstance(other, CPoly):
            other = CPoly.const(self.m, other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return CPoly(self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return CPoly(self.m, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "CPoly":
        if c == 0:
            return CPoly(self.m)
        return CPoly(self.m, {k: v * c for k, v in self.terms.items()})

    def __truediv__(self, c):
        return self.scale(1 / Fraction(c))

    def __mul__(self, other):
        if isinstance(other, CPoly):
            return poly_product(self, other)
        if isinstance(other, Multivector):
            return poly_product(self, CPoly.const(self.m, other))
        return self.scale(other)

    def __rmul__(self, other):
        if isinstance(other, Multivector):
            return poly_product(CPoly.const(self.m, other), self)
        return self.scale(other)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and other == 0:
            return not self.terms
        if not isinstance(other, CPoly):
            return NotImplemented
        return self.m == other.m and not (self - other).terms

    def __hash__(self):
        return hash((self.m, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # structure ----------------------------------------------------------
    def coefficient(self, xexp, uexp) -> Multivector:
        xexp, uexp = tuple(xexp), tuple(uexp)
        return Multivector(self.m, {b: c for (xe, ue, b), c in self.terms.items()
                                    if xe == xexp and ue == uexp})

    def grouped(self) -> dict[tuple, Multivector]:
        """Map (xexp, uexp) -> Multivector coefficient."""
        acc: dict[tuple, dict] = defaultdict(dict)
        for (xe, ue, b), c in self.terms.items():
            acc[(xe, ue)][b] = c
        return {k: Multivector(self.m, v) for k, v in acc.items()}

    def by_x(self) -> dict[tuple, "CPoly"]:
        """Split as sum_alpha x^alpha P_alpha(u); returns alpha -> P_alpha."""
        z = (0,) * self.m
        acc: dict[tuple, dict] = defaultdict(dict)
        for (xe, ue, b), c in self.terms.items():
            acc[xe][(z, ue, b)] = c
        return {k: CPoly(self.m, v) for k, v in acc.items()}

    def u_degrees(self) -> set[int]:
        return {sum(k[1]) for k in self.terms}

    def x_degrees(self) -> set[int]:
        return {sum(k[0]) for k in self.terms}

    def x_degree(self) -> int:
        return max(self.x_degrees(), default=-1)

    def u_degree(self) -> int | None:
        """Common u-degree, ``None`` for the zero polynomial."""
        degs = self.u_degrees()
        if not degs:
            return None
        if len(degs) > 1:
            raise HomogeneityError(f"not u-homogeneous: degrees {sorted(degs)}")
        return degs.pop()

    def blades(self) -> set[int]:
        return {k[2] for k in self.terms}

    def is_scalar_valued(self) -> bool:
        return all(k[2] == 0 for k in self.terms)

    def depends_on(self, slot: Slot) -> bool:
        i = 0 if slot is Slot.X else 1
        return any(any(k[i]) for k in self.terms)

    def map_coeffs(self, fn) -> "CPoly":
        return CPoly(self.m, {k: fn(c) for k, c in self.terms.items()})

    def reversion(self) -> "CPoly":
        return CPoly(self.m, {k: c * reversion_sign(k[2]) for k, c in self.terms.items()})

    def conjugation(self) -> "CPoly":
        return CPoly(self.m, {k: c * conjugation_sign(k[2]) for k, c in self.terms.items()})

    def swap_slots(self) -> "CPoly":
        return CPoly(self.m, {(ue, xe, b): c for (xe, ue, b), c in self.terms.items()})

    def blade_part(self, blade: int) -> "CPoly":
        """Scalar-valued polynomial multiplying e_blade."""
        return CPoly(self.m, {(xe, ue, 0): c for (xe, ue, b), c in self.terms.items() if b == blade})

    def restrict_u_to_x(self) -> "CPoly":
        """Substitute u := x."""
        z = (0,) * self.m
        out: dict = {}
        for (xe, ue, b), c in self.terms.items():
            k = (tuple(a + b2 for a, b2 in zip(xe, ue)), z, b)
            out[k] = out[k] + c if k in out else c
        return CPoly(self.m, out)

    # differential operators --------------------------------------------
    def partial(self, j: int, slot: Slot = Slot.X) -> "CPoly":
        """Formal partial derivative in x_j or u_j (``j`` is 1-based)."""
        if not 1 <= j <= self.m:
            raise IndexError(f"partial index {j} outside 1..{self.m}")
        return self._partial0(j - 1, slot)

    def _partial0(self, j: int, slot: Slot) -> "CPoly":
        out: dict = {}
        if slot is Slot.X:
            for (xe, ue, b), c in self.terms.items():
                a = xe[j]
                if a:
                    out[(_bump(xe, j, -1), ue, b)] = c * a
        else:
            for (xe, ue, b), c in self.terms.items():
                a = ue[j]
                if a:
                    out[(xe, _bump(ue, j, -1), b)] = c * a
        return CPoly(self.m, out)

    def dirac(self, slot: Slot = Slot.X, side: str = "left") -> "CPoly":
        idx = 0 if slot is Slot.X else 1
        out: dict = {}
        left = side == "left"
        for key, c in self.terms.items():
            e, b = key[idx], key[2]
            for j in range(self.m):
                a = e[j]
                if not a:
                    continue
                ej = 1 << j
                sign, nb = blade_product(ej, b) if left else blade_product(b, ej)
                ne = _bump(e, j, -1)
                nk = (ne, key[1], nb) if idx == 0 else (key[0], ne, nb)
                v = c * a if sign > 0 else -(c * a)
                out[nk] = out[nk] + v if nk in out else v
        return CPoly(self.m, out)

    def laplacian(self, slot: Slot = Slot.X) -> "CPoly":
        idx = 0 if slot is Slot.X else 1
        out: dict = {}
        for key, c in self.terms.items():
            e = key[idx]
            for j in range(self.m):
                a = e[j]
                if a >= 2:
                    ne = _bump(e, j, -2)
                    nk = (ne, key[1], key[2]) if idx == 0 else (key[0], ne, key[2])
                    v = c * (a * (a - 1))
                    out[nk] = out[nk] + v if nk in out else v
        return CPoly(self.m, out)

    def mul_vector(self, slot: Slot = Slot.U, side: str = "left") -> "CPoly":
        """Multiply by the 1-vector x (or u) from the left or the right."""
        idx = 0 if slot is Slot.X else 1
        out: dict = {}
        left = side == "left"
        for key, c in self.terms.items():
            e, b = key[idx], key[2]
            for j in range(self.m):
                ej = 1 << j
                sign, nb = blade_product(ej, b) if left else blade_product(b, ej)
                ne = _bump(e, j, 1)
                nk = (ne, key[1], nb) if idx == 0 else (key[0], ne, nb)
                v = c if sign > 0 else -c
                out[nk] = out[nk] + v if nk in out else v
        return CPoly(self.m, out)

    def mul_var(self, j: int, slot: Slot, power: int = 1) -> "CPoly":
        """Multiply by x_j**power or u_j**power (``j`` 0-based, internal)."""
        if slot is Slot.X:
            return CPoly(self.m, {(_bump(xe, j, power), ue, b): c for (xe, ue, b), c in self.terms.items()})
        return CPoly(self.m, {(xe, _bump(ue, j, power), b): c for (xe, ue, b), c in self.terms.items()})

    def pairing_u_dx(self) -> "CPoly":
        """<u, D_x> = sum_j u_j d/dx_j."""
        out = CPoly(self.m)
        for j in range(self.m):
            out = out + self._partial0(j, Slot.X).mul_var(j, Slot.U)
        return out

    def pairing_du_dx(self) -> "CPoly":
        """<D_u, D_x> = sum_j d/du_j d/dx_j."""
        out: dict = {}
        for (xe, ue, b), c in self.terms.items():
            for j in range(self.m):
                a, bb = xe[j], ue[j]
                if a and bb:
                    nk = (_bump(xe, j, -1), _bump(ue, j, -1), b)
                    v = c * (a * bb)
                    out[nk] = out[nk] + v if nk in out else v
        return CPoly(self.m, out)

    def mul_norm_sq(self, slot: Slot = Slot.U) -> "CPoly":
        out = CPoly(self.m)
        for j in range(self.m):
            out = out + self.mul_var(j, slot, 2)
        return out

    def pairing_x_dx(self) -> "CPoly":
        """Radial derivative sum_j x_j d/dx_j (normal derivative on |x| = 1)."""
        out: dict = {}
        for (xe, ue, b), c in self.terms.items():
            d = sum(xe)
            if d:
                out[(xe, ue, b)] = c * d
        return CPoly(self.m, out)

    def pairing_u_x(self) -> "CPoly":
        """Multiply by <u, x>."""
        out = CPoly(self.m)
        for j in range(self.m):
            out = out + self.mul_var(j, Slot.X).mul_var(j, Slot.U)
        return out

    # numerics -----------------------------------------------------------
    def to_arrays(self, blade: int = 0):
        """(x-exponents, u-exponents, float coefficients) for one blade."""
        items = [(k, c) for k, c in self.terms.items() if k[2] == blade]
        if not items:
            return (np.zeros((0, self.m), int), np.zeros((0, self.m), int), np.zeros(0))
        xe = np.array([k[0] for k, _ in items], dtype=int)
        ue = np.array([k[1] for k, _ in items], dtype=int)
        cf = np.array([float(c) for _, c in items])
        return xe, ue, cf

    def evaluate(self, x=None, u=None, blade: int = 0) -> np.ndarray:
        """Float values of the e_blade component at points (broadcast over rows)."""
        xe, ue, cf = self.to_arrays(blade)
        x = np.zeros((1, self.m)) if x is None else np.atleast_2d(np.asarray(x, float))
        u = np.zeros((1, self.m)) if u is None else np.atleast_2d(np.asarray(u, float))
        vx = _powers(x, xe) if len(cf) else None
        vu = _powers(u, ue) if len(cf) else None
        if not len(cf):
            return np.zeros(max(len(x), len(u)))
        return (vx * vu) @ cf

    def evaluate_mv(self, x=None, u=None) -> Multivector:
        """Float Multivector value at a single point."""
        return Multivector(self.m, {b: float(self.evaluate(x, u, b)[0]) for b in self.blades()})

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        terms = []
        for (xe, ue), mv in sorted(self.grouped().items()):
            terms.append({"x": list(xe), "u": list(ue), "coeff": mv.to_text()})
        return {"m": self.m, "terms": terms}

    @classmethod
    def from_json(cls, data) -> "CPoly":
        if isinstance(data, str):
            data = json.loads(data)
        m = int(data["m"])
        out = cls(m)
        for t in data["terms"]:
            if len(t["x"]) != m or len(t["u"]) != m:
                raise ValueError("exponent length does not match m")
            mv = Multivector.from_text(m, t["coeff"])
            out = out + cls.monomial(m, t["x"], t["u"], coeff=mv)
        return out

    def __repr__(self):
        return f"CPoly(m={self.m}, terms={len(self.terms)})"

    def __str__(self):
        parts = []
        for (xe, ue), mv in sorted(self.grouped().items()):
            mono = "".join(f"x{j+1}^{a}" for j, a in enumerate(xe) if a)
            mono += "".join(f"u{j+1}^{a}" for j, a in enumerate(ue) if a)
            parts.append(f"({mv.to_text()}){mono}")
        return " + ".join(parts) if parts else "0"


def _powers(pts: np.ndarray, exps: np.ndarray) -> np.ndarray:
    # pts (N, m), exps (T, m) -> (N, T)
    out = np.ones((pts.shape[0], exps.shape[0]))
    for j in range(pts.shape[1]):
        col = exps[:, j]
        if col.any():
            out *= pts[:, j:j + 1] ** col[None, :]
    return out


def poly_product(a: CPoly, b: CPoly) -> CPoly:
    """Product a*b with Clifford coefficient multiplication (a on the left)."""
    a._check(b)
    out: dict = {}
    for (xa, ua, ba), ca in a.terms.items():
        for (xb, ub, bb), cb in b.terms.items():
            sign, blade = blade_product(ba, bb)
            k = (tuple(i + j for i, j in zip(xa, xb)), tuple(i + j for i, j in zip(ua, ub)), blade)
            v = ca * cb if sign > 0 else -(ca * cb)
            out[k] = out[k] + v if k in out else v
    return CPoly(a.m, out)


# module-level operator names ---------------------------------------------

def partial(p: CPoly, j: int, slot: Slot = Slot.X) -> CPoly:
    return p.partial(j, slot)


def dirac_left(p: CPoly, slot: Slot = Slot.X) -> CPoly:
    """sum_j e_j (d_j p)."""
    return p.dirac(slot, "left")


def dirac_right(p: CPoly, slot: Slot = Slot.X) -> CPoly:
    """sum_j (d_j p) e_j."""
    return p.dirac(slot, "right")


def laplacian(p: CPoly, slot: Slot = Slot.X) -> CPoly:
    return p.laplacian(slot)


def pairing_u_dx(p: CPoly) -> CPoly:
    return p.pairing_u_dx()


def pairing_du_dx(p: CPoly) -> CPoly:
    return p.pairing_du_dx()


def mul_norm_u_sq(p: CPoly) -> CPoly:
    return p.mul_norm_sq(Slot.U)


def sum_polys(m: int, polys: Iterable[CPoly]) -> CPoly:
    out: dict = {}
    for p in polys:
        for k, c in p.terms.items():
            out[k] = out[k] + c if k in out else c
    return CPoly(m, out)
