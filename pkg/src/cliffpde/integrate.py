"""Exact sphere/ball integration of polynomials and numeric cubature rules.

Exact values are kept as rational multiples of powers of omega_m (the area
of S^{m-1}), so both sides of an integral identity live in the same ring and
compare with zero tolerance.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .clifford import Multivector, blade_product, omega
from .mvpoly import CPoly, Slot, monomials

MAX_SPHERE_DEGREE = 20


class ExactScalar:
    """Finite sum  sum_p q_p * omega_m**p  with rational q_p."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        if isinstance(terms, ExactScalar):
            terms = terms.terms
        elif terms is None:
            terms = {}
        elif not isinstance(terms, dict):
            terms = {0: Fraction(terms)}
        self.terms = {int(p): Fraction(q) for p, q in terms.items() if q != 0}

    @classmethod
    def omega(cls, power: int = 1, coeff=1) -> "ExactScalar":
        return cls({power: coeff})

    @staticmethod
    def _lift(x) -> "ExactScalar":
        return x if isinstance(x, ExactScalar) else ExactScalar(x)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for p, q in other.terms.items():
            out[p] = out.get(p, 0) + q
        return ExactScalar(out)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar({p: -q for p, q in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out: dict = {}
        for p, q in self.terms.items():
            for p2, q2 in other.terms.items():
                out[p + p2] = out.get(p + p2, 0) + q * q2
        return ExactScalar(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ExactScalar):
            if len(other.terms) != 1:
                raise ZeroDivisionError("can only divide by a single omega power")
            (p, q), = other.terms.items()
            return ExactScalar({k - p: v / q for k, v in self.terms.items()})
        return ExactScalar({k: v / Fraction(other) for k, v in self.terms.items()})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, ExactScalar)):
            return not (self - other).terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def value(self, m: int) -> float:
        w = omega(m)
        return float(sum(float(q) * w ** p for p, q in self.terms.items()))

    def to_json(self) -> list:
        return [{"omega_pow": p, "rational": str(q)} for p, q in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, data) -> "ExactScalar":
        return cls({t["omega_pow"]: Fraction(t["rational"]) for t in data})

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{q}*w^{p}" if p else str(q) for p, q in sorted(self.terms.items()))

    __str__ = __repr__


# exact moments -----------------------------------------------------------

def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@lru_cache(maxsize=None)
def sphere_moment(alpha: tuple) -> Fraction:
    """Coefficient of omega_m in the integral of u^alpha over S^{m-1}."""
    if any(a % 2 for a in alpha):
        return Fraction(0)
    m = len(alpha)
    num = 1
    for a in alpha:
        num *= _double_factorial(a - 1)
    den = 1
    for j in range(sum(alpha) // 2):
        den *= m + 2 * j
    return Fraction(num, den)


@lru_cache(maxsize=None)
def ball_moment(alpha: tuple) -> Fraction:
    """Coefficient of omega_m in the integral of x^alpha over the unit ball."""
    s = sphere_moment(alpha)
    return s / (sum(alpha) + len(alpha)) if s else s


def _moment(domain: str | None):
    if domain is None:
        return None
    if domain == "sphere":
        return sphere_moment
    if domain == "ball":
        return ball_moment
    raise ValueError(f"unknown domain {domain!r}")


def integrate_exact(p: CPoly, x_domain: str | None = "ball", u_sphere: bool = True) -> Multivector:
    """Integrate over x in the unit ball/sphere and u over S^{m-1}.

    A variable whose domain is ``None`` must not occur in ``p``.
    """
    xmom, power = _moment(x_domain), 0
    power += x_domain is not None
    power += bool(u_sphere)
    if x_domain is None and p.depends_on(Slot.X):
        raise ValueError("integrand depends on x but no x-domain given")
    if not u_sphere and p.depends_on(Slot.U):
        raise ValueError("integrand depends on u but u is not integrated")
    acc: dict = defaultdict(Fraction)
    for (xe, ue, b), c in p.terms.items():
        v = c
        if xmom is not None:
            v = v * xmom(xe)
            if not v:
                continue
        if u_sphere:
            v = v * sphere_moment(ue)
        if v:
            acc[b] += v
    return Multivector(p.m, {b: ExactScalar.omega(power, q) for b, q in acc.items() if q})


def integrate_u(p: CPoly) -> CPoly:
    """Integrate over u in S^{m-1} only; returns the omega_m-coefficient as a CPoly in x."""
    z = (0,) * p.m
    acc: dict = defaultdict(Fraction)
    for (xe, ue, b), c in p.terms.items():
        mu = sphere_moment(ue)
        if mu:
            acc[(xe, z, b)] += c * mu
    return CPoly(p.m, acc)


def sphere_integral_exact(p: CPoly) -> Multivector:
    """Integral over u in S^{m-1} of a u-only polynomial."""
    return integrate_exact(p, x_domain=None, u_sphere=True)


def ball_integral_exact(p: CPoly) -> Multivector:
    """Integral over x in the unit ball of an x-only polynomial."""
    return integrate_exact(p, x_domain="ball", u_sphere=False)


def _parity(e: tuple) -> int:
    out = 0
    for i, a in enumerate(e):
        if a & 1:
            out |= 1 << i
    return out


def _unit_moment(alpha: tuple) -> int:
    return 1


def integrate_product(f: CPoly, g: CPoly, x_domain: str = "ball", u_sphere: bool = True,
                      insert_normal: bool = False) -> Multivector:
    """Exact integral of f*g (or f*x*g when ``insert_normal``) without expanding.

    ``insert_normal`` places the Clifford surface element n_x = x between the
    factors, as in  integral of f dsigma_x g  over the unit sphere.
    """
    f._check(g)
    m = f.m
    xmom = _moment(x_domain)
    power = int(x_domain is not None) + int(bool(u_sphere))
    umom = sphere_moment if u_sphere else None
    if not u_sphere and (f.depends_on(Slot.U) or g.depends_on(Slot.U)):
        raise ValueError("integrand depends on u but u is not integrated")
    if xmom is None:
        if insert_normal or f.depends_on(Slot.X) or g.depends_on(Slot.X):
            raise ValueError("integrand depends on x but no x-domain given")
        xmom = _unit_moment
    # bucket g by exponent parities: only matching parities give nonzero moments
    buckets: dict = defaultdict(list)
    for (xe, ue, b), c in g.terms.items():
        buckets[(_parity(xe), _parity(ue))].append((xe, ue, b, c))
    lefts = []
    for (xe, ue, b), c in f.terms.items():
        if insert_normal:
            for j in range(m):
                sign, nb = blade_product(b, 1 << j)
                xj = list(xe)
                xj[j] += 1
                lefts.append((tuple(xj), ue, nb, c if sign > 0 else -c))
        else:
            lefts.append((xe, ue, b, c))
    acc: dict = defaultdict(Fraction)
    for xa, ua, ba, ca in lefts:
        bucket = buckets.get((_parity(xa), _parity(ua)))
        if not bucket:
            continue
        for xb, ub, bb, cb in bucket:
            mx = xmom(tuple(i + j for i, j in zip(xa, xb)))
            if not mx:
                continue
            if umom is not None:
                mu = umom(tuple(i + j for i, j in zip(ua, ub)))
                if not mu:
                    continue
                mx = mx * mu
            sign, blade = blade_product(ba, bb)
            v = ca * cb * mx
            acc[blade] += v if sign > 0 else -v
    return Multivector(m, {b: ExactScalar.omega(power, q) for b, q in acc.items() if q})


def boundary_integral_exact(f: CPoly, g: CPoly, mode: str = "SCALAR_DS",
                            integrate_u: bool = False) -> Multivector:
    """Integral over the unit sphere in x of f g dsigma or f dsigma_x g.

    ``mode`` is ``"SCALAR_DS"`` or ``"CLIFFORD_DSIGMA"`` (dsigma_x = x dsigma).
    With ``integrate_u`` the u-variable is integrated over S^{m-1} as well.
    """
    if mode not in ("SCALAR_DS", "CLIFFORD_DSIGMA"):
        raise ValueError(f"unknown mode {mode!r}")
    return integrate_product(f, g, "sphere", u_sphere=integrate_u,
                             insert_normal=mode == "CLIFFORD_DSIGMA")


def volume_integral_exact(f: CPoly, g: CPoly | None = None) -> Multivector:
    """Integral over the unit ball in x and S^{m-1} in u of f (or f*g)."""
    if g is None:
        return integrate_exact(f, "ball", True)
    return integrate_product(f, g, "ball", True)


def is_exact_zero(mv: Multivector) -> bool:
    return not mv.coeffs


# numeric rules -----------------------------------------------------------

@dataclass
class QuadratureRule:
    domain: str  # "SPHERE", "BALL" or "RADIAL_SHELL"
    m: int
    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int
    center: np.ndarray = field(default=None)
    radius: float = 1.0

    def __post_init__(self):
        if self.center is None:
            self.center = np.zeros(self.m)

    def __len__(self):
        return len(self.weights)

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]):
        """Apply the rule to a vectorised integrand fn(nodes)."""
        vals = np.asarray(fn(self.nodes))
        return np.tensordot(self.weights, vals, axes=(0, 0))

    def measure(self) -> float:
        if self.domain == "SPHERE":
            return omega(self.m) * self.radius ** (self.m - 1)
        return omega(self.m) / self.m * self.radius ** self.m

    def to_json(self) -> dict:
        return {"domain": self.domain, "m": self.m, "exact_degree": self.exact_degree,
                "nodes": self.nodes.tolist(), "weights": self.weights.tolist()}

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _cross_rule(m: int):
    nodes = np.vstack([np.eye(m), -np.eye(m)])
    return nodes, np.full(2 * m, omega(m) / (2 * m))


def _product_rule(n: int, degree: int):
    """Tensor Gauss-Gegenbauer rule on S^{n-1}, exact through ``degree``."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        k = degree + 1
        th = 2 * np.pi * (np.arange(k) + 0.5) / k
        return np.column_stack([np.cos(th), np.sin(th)]), np.full(k, 2 * np.pi / k)
    q = degree // 2 + 1
    a = (n - 3) / 2
    t, wt = roots_jacobi(q, a, a)
    sub_nodes, sub_w = _product_rule(n - 1, degree)
    s = np.sqrt(1 - t ** 2)
    nodes = np.concatenate([np.column_stack([np.full(len(sub_w), ti), si * sub_nodes])
                            for ti, si in zip(t, s)])
    weights = np.concatenate([wi * sub_w for wi in wt])
    return nodes, weights


def _random_rule(m: int, degree: int, n_nodes: int, seed: int):
    rng = np.random.default_rng(seed)
    nodes = rng.standard_normal((n_nodes, m))
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    monos = [e for d in range(degree + 1) for e in monomials(m, d)]
    vander = np.stack([np.prod(nodes ** np.array(e), axis=1) for e in monos])
    target = np.array([float(sphere_moment(e)) * omega(m) for e in monos])
    weights, *_ = np.linalg.lstsq(vander, target, rcond=None)
    return nodes, weights


def _weighted_moments(pts: np.ndarray, weights: np.ndarray, degree: int, chunk: int = 4096):
    """sum_n w_n x_n^e for every exponent e with |e| <= degree.

    Monomials in the first m-1 coordinates are built incrementally per node
    chunk; the last coordinate is folded in with one matrix product.
    Returns (exponents of the first m-1 coordinates, array[n_first, degree+1]).
    """
    m = pts.shape[1]
    heads = [()]
    for j in range(m - 1):
        heads = [h + (a,) for h in heads for a in range(degree + 1 - sum(h))]
    out = np.zeros((len(heads), degree + 1))
    for lo in range(0, len(weights), chunk):
        p = pts[lo:lo + chunk]
        w = weights[lo:lo + chunk]
        pw = [p[:, j][None, :] ** np.arange(degree + 1)[:, None] for j in range(m)]
        rows = w[None, :]
        layer = [()]
        for j in range(m - 1):
            new_rows, new_layer = [], []
            for idx, h in enumerate(layer):
                top = degree - sum(h)
                new_rows.append(rows[idx][None, :] * pw[j][:top + 1])
                new_layer.extend(h + (a,) for a in range(top + 1))
            rows = np.concatenate(new_rows)
            layer = new_layer
        out += rows @ pw[m - 1].T
    return heads, out


def moment_errors(rule: QuadratureRule, degree: int | None = None) -> float:
    """Largest relative moment error over all monomials up to ``degree``."""
    degree = rule.exact_degree if degree is None else degree
    m = rule.m
    pts = (rule.nodes - rule.center) / rule.radius
    jac = rule.radius ** (m - 1 if rule.domain == "SPHERE" else m)
    exact_fn = sphere_moment if rule.domain == "SPHERE" else ball_moment
    heads, got = _weighted_moments(pts, np.asarray(rule.weights) / jac, degree)
    w = omega(m)
    scale = rule.measure() / jac
    worst = 0.0
    for h, row in zip(heads, got):
        for a in range(degree + 1 - sum(h)):
            want = float(exact_fn(h + (a,))) * w
            worst = max(worst, abs(row[a] - want) / scale)
    return worst


@lru_cache(maxsize=None)
def _sphere_rule_cached(m: int, degree: int, method: str, n_nodes: int, seed: int):
    if method == "product":
        if degree <= 3:
            nodes, weights = _cross_rule(m)
        else:
            nodes, weights = _product_rule(m, degree)
    elif method == "random":
        nodes, weights = _random_rule(m, degree, n_nodes or 4 * len(monomials(m, degree)), seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    rule = QuadratureRule("SPHERE", m, nodes, weights, degree)
    err = moment_errors(rule)
    if err > 1e-12:
        raise ValueError(
            f"sphere rule m={m} degree={degree} has moment error {err:.2e}; "
            "increase the node budget")
    rule.nodes.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def build_sphere_rule(m: int, degree: int, *, max_degree: int = MAX_SPHERE_DEGREE,
                      method: str = "product", n_nodes: int = 0, seed: int = 0) -> QuadratureRule:
    """Cubature on S^{m-1} exact for all monomials of total degree <= degree.

    Degrees up to 3 use the 2m axis points; higher degrees a tensor
    Gauss-Gegenbauer rule.  ``method="random"`` fits weights on random nodes
    by least squares instead.  Every rule is checked against the exact
    moments before it is returned.
    """
    if degree > max_degree:
        raise ValueError(f"degree {degree} exceeds configured maximum {max_degree}")
    return _sphere_rule_cached(m, max(degree, 0), method, n_nodes, seed)


def build_ball_rule(m: int, degree: int, center=None, radius: float = 1.0,
                    max_degree: int = MAX_SPHERE_DEGREE) -> QuadratureRule:
    """Polar rule on a ball, exact for polynomials of degree <= ``degree``."""
    sph = build_sphere_rule(m, degree, max_degree=max_degree)
    n = degree // 2 + 1
    t, wt = roots_jacobi(n, 0.0, m - 1.0)
    r = (1 + t) / 2
    wr = wt / 2 ** m
    center = np.zeros(m) if center is None else np.asarray(center, float)
    nodes = (center[None, None, :] + radius * r[:, None, None] * sph.nodes[None, :, :]).reshape(-1, m)
    weights = (radius ** m * wr[:, None] * sph.weights[None, :]).reshape(-1)
    return QuadratureRule("BALL", m, nodes, weights, degree, center, radius)


def singular_ball_rule(y, radius: float, radial_nodes: int, sphere_rule: QuadratureRule,
                       panels: int = 1) -> QuadratureRule:
    """Polar rule on the ball |x - y| < radius centred on the singular point.

    Radial direction: composite Gauss-Legendre with ``panels`` equal panels.
    The weights carry the Jacobian r^{m-1}, which cancels |y - x|^{2-m}.
    """
    y = np.asarray(y, float)
    m = len(y)
    t, wt = np.polynomial.legendre.leggauss(radial_nodes)
    h = radius / panels
    r = np.concatenate([h * (i + (t + 1) / 2) for i in range(panels)])
    wr = np.concatenate([wt * h / 2 for _ in range(panels)]) * r ** (m - 1)
    nodes = (y[None, None, :] + r[:, None, None] * sphere_rule.nodes[None, :, :]).reshape(-1, m)
    weights = (wr[:, None] * sphere_rule.weights[None, :]).reshape(-1)
    exact = min(sphere_rule.exact_degree, 2 * radial_nodes - m)
    return QuadratureRule("BALL", m, nodes, weights, exact, y, radius)


def clipped_polar_rule(y, center, radius: float, radial_nodes: int,
                       sphere_rule: QuadratureRule) -> QuadratureRule:
    """Polar rule about y restricted, ray by ray, to the ball B(center, radius).

    Every ray from y is integrated exactly over the segment where it meets
    the ball, so integrands of the form |y-x|^{2-m} * poly(x) * 1_ball are
    handled without a kink in r.  The rule is not polynomially exact on a
    fixed domain (``exact_degree = -1``); the remaining error comes from
    the angular rule alone and decays spectrally.
    """
    y = np.asarray(y, float)
    c = np.asarray(center, float)
    m = len(y)
    d = y - c
    th = sphere_rule.nodes
    b = th @ d
    disc = b ** 2 - (d @ d - radius ** 2)
    ok = disc > 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    r_lo = np.clip(-b - sq, 0.0, None)
    r_hi = np.clip(-b + sq, 0.0, None)
    ok &= r_hi > r_lo
    t, wt = np.polynomial.legendre.leggauss(radial_nodes)
    span = np.where(ok, r_hi - r_lo, 0.0)
    r = r_lo[:, None] + span[:, None] * (t[None, :] + 1) / 2
    wr = span[:, None] * wt[None, :] / 2 * r ** (m - 1)
    nodes = y[None, None, :] + r[:, :, None] * th[:, None, :]
    weights = wr * sphere_rule.weights[:, None]
    return QuadratureRule("BALL", m, nodes.reshape(-1, m), weights.reshape(-1), -1, c, radius)
