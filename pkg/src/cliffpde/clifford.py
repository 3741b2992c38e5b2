"""Real Clifford algebra Cl_m with e_i e_j + e_j e_i = -2 delta_ij.

Basis blades e_A are stored as bitmasks: bit ``i - 1`` set means e_i is a
factor, factors kept in increasing index order.  Coefficients live in any
commutative scalar ring supporting ``+``, ``*`` and comparison with ``0``
(``Fraction``, ``int``, ``float``, :class:`cliffpde.integrate.ExactScalar`).
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

MAX_DIM = 8

_TERM_RE = re.compile(r"\s*([^*+][^*]*?)\s*\*\s*e\{([0-9,\s]*)\}\s*")


class CliffordError(ValueError):
    pass


@lru_cache(maxsize=None)
def blade_product(a: int, b: int) -> tuple[int, int]:
    """Return ``(sign, mask)`` such that ``e_a e_b = sign * e_mask``."""
    swaps = 0
    t = a >> 1
    while t:
        swaps += (t & b).bit_count()
        t >>= 1
    # every repeated generator contributes e_i e_i = -1
    swaps += (a & b).bit_count()
    return (-1 if swaps & 1 else 1), a ^ b


def mask_to_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def indices_to_mask(indices: Iterable[int]) -> tuple[int, int]:
    """Reduce the word e_{i1} e_{i2} ... to ``(sign, mask)``."""
    sign, mask = 1, 0
    for i in indices:
        s, mask = blade_product(mask, 1 << (i - 1))
        sign *= s
    return sign, mask


def reversion_sign(mask: int) -> int:
    r = mask.bit_count()
    return -1 if (r * (r - 1) // 2) % 2 else 1


def conjugation_sign(mask: int) -> int:
    r = mask.bit_count()
    return -1 if (r * (r + 1) // 2) % 2 else 1


def _is_zero(c) -> bool:
    return c == 0


class Multivector:
    """Element of Cl_m as a sparse map from blade mask to coefficient.

    Instances are treated as immutable values.
    """

    __slots__ = ("m", "coeffs")

    def __init__(self, m: int, coeffs: Mapping[int, object] | None = None):
        if not 1 <= m <= MAX_DIM:
            raise CliffordError(f"dimension m={m} outside 1..{MAX_DIM}")
        self.m = m
        full = (1 << m) - 1
        clean = {}
        for mask, c in (coeffs or {}).items():
            if mask & ~full:
                raise CliffordError(f"blade {mask_to_indices(mask)} not in Cl_{m}")
            if not _is_zero(c):
                clean[mask] = c
        self.coeffs = clean

    # constructors -------------------------------------------------------
    @classmethod
    def scalar(cls, m: int, c=1) -> "Multivector":
        return cls(m, {0: c})

    @classmethod
    def basis(cls, m: int, *indices: int, coeff=1) -> "Multivector":
        for i in indices:
            if not 1 <= i <= m:
                raise CliffordError(f"generator e{i} not in Cl_{m}")
        sign, mask = indices_to_mask(indices)
        return cls(m, {mask: sign * coeff})

    @classmethod
    def zero(cls, m: int) -> "Multivector":
        return cls(m)

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "Multivector"):
        if other.m != self.m:
            raise CliffordError(f"dimension mismatch: Cl_{self.m} vs Cl_{other.m}")

    def __add__(self, other):
        if not isinstance(other, Multivector):
            other = Multivector.scalar(self.m, other)
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return Multivector(self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return Multivector(self.m, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Multivector):
            return Multivector(self.m, {k: c * other for k, c in self.coeffs.items()})
        return geometric_product(self, other)

    def __rmul__(self, other):
        return Multivector(self.m, {k: other * c for k, c in self.coeffs.items()})

    def __truediv__(self, other):
        if isinstance(other, int):
            other = Fraction(other)
        return Multivector(self.m, {k: c / other for k, c in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            other = Multivector.scalar(self.m, other) if self.m else other
        if other.m != self.m:
            return False
        diff = (self - other).coeffs
        return not diff

    def __hash__(self):
        return hash((self.m, frozenset(self.coeffs.items())))

    def __bool__(self):
        return bool(self.coeffs)

    # structure ----------------------------------------------------------
    def reversion(self) -> "Multivector":
        return Multivector(self.m, {k: c * reversion_sign(k) for k, c in self.coeffs.items()})

    def conjugation(self) -> "Multivector":
        return Multivector(self.m, {k: c * conjugation_sign(k) for k, c in self.coeffs.items()})

    def scalar_part(self):
        return self.coeffs.get(0, 0)

    def grade(self, r: int) -> "Multivector":
        return Multivector(self.m, {k: c for k, c in self.coeffs.items() if k.bit_count() == r})

    def grades(self) -> set[int]:
        return {k.bit_count() for k in self.coeffs}

    def vector_part(self) -> tuple:
        return tuple(self.coeffs.get(1 << i, 0) for i in range(self.m))

    def map(self, fn) -> "Multivector":
        return Multivector(self.m, {k: fn(c) for k, c in self.coeffs.items()})

    # text form ----------------------------------------------------------
    def to_text(self) -> str:
        if not self.coeffs:
            return "0*e{}"
        parts = []
        for mask in sorted(self.coeffs, key=lambda k: (k.bit_count(), mask_to_indices(k))):
            idx = ",".join(str(i) for i in mask_to_indices(mask))
            parts.append(f"{self.coeffs[mask]}*e{{{idx}}}")
        return " + ".join(parts)

    @classmethod
    def from_text(cls, m: int, text: str, scalar=Fraction) -> "Multivector":
        out = Multivector(m)
        for chunk in text.split("+"):
            if not chunk.strip():
                continue
            match = _TERM_RE.fullmatch(chunk)
            if match is None:
                raise CliffordError(f"cannot parse multivector term {chunk!r}")
            coeff = scalar(match.group(1).strip())
            idx = [int(s) for s in match.group(2).replace(" ", "").split(",") if s]
            out = out + cls.basis(m, *idx, coeff=coeff)
        return out

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"Multivector({self.m}, {self.to_text()!r})"


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    a._check(b)
    out: dict[int, object] = {}
    for ka, ca in a.coeffs.items():
        for kb, cb in b.coeffs.items():
            sign, k = blade_product(ka, kb)
            term = ca * cb if sign > 0 else -(ca * cb)
            out[k] = out[k] + term if k in out else term
    return Multivector(a.m, out)


def reversion(a: Multivector) -> Multivector:
    return a.reversion()


def scalar_part(a: Multivector):
    return a.scalar_part()


def embed_vector(x: Sequence) -> Multivector:
    """Map (x_1, ..., x_m) to sum_j x_j e_j."""
    m = len(x)
    return Multivector(m, {1 << j: c for j, c in enumerate(x)})


def reflect(a: Sequence, x: Sequence) -> tuple:
    """Return the vector a x a for a unit vector a (reflection along a)."""
    if len(a) != len(x):
        raise CliffordError("reflect: dimension mismatch")
    norm2 = sum(c * c for c in a)
    if any(isinstance(c, float) for c in list(a) + list(x)):
        if abs(norm2 - 1.0) > 1e-12:
            raise CliffordError(f"reflect: |a|^2 = {norm2}, expected 1")
    elif norm2 != 1:
        raise CliffordError(f"reflect: |a|^2 = {norm2}, expected 1")
    av = embed_vector(a)
    out = av * embed_vector(x) * av
    rest = [c for k, c in out.coeffs.items() if k.bit_count() != 1]
    scale = max((abs(c) for c in x), default=0)
    if any(abs(c) > 1e-12 * max(scale, 1) if isinstance(c, float) else c != 0 for c in rest):
        raise AssertionError("reflection produced a non-vector component")
    return out.vector_part()


def norm_sq(x: Sequence):
    return sum(c * c for c in x)


def omega(m: int) -> float:
    """Surface measure of the unit sphere S^{m-1}."""
    return 2.0 * math.pi ** (m / 2) / math.gamma(m / 2)
