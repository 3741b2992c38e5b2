"""Reproducing kernels and fundamental solutions.

A :class:`Kernel` stores the polynomial part of Z_k or Z_k^1 as a CPoly with
the first sphere variable u in slot U and the second variable v in slot X;
the value is ``omega_m ** omega_pow`` times that polynomial.
"""
from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import linalg
from .clifford import Multivector, embed_vector, omega
from .integrate import ExactScalar, integrate_u
from .mvpoly import CPoly, Slot, poly_product
from .spaces import harmonic_basis, project_plus, project_plus_right

CALIBRATION_FILE = Path(__file__).with_name("calibration.json")


class SingularityError(ValueError):
    pass


class UncalibratedError(LookupError):
    pass


@dataclass(frozen=True)
class Kernel:
    m: int
    k: int
    kind: str  # "zk" or "zk1"
    poly: CPoly
    omega_pow: int = -1

    def reproduce(self, p: CPoly) -> CPoly:
        """Exact value of  v -> integral over S^{m-1} of K(u, v) p(u) dS(u).

        ``p`` is a polynomial in u (slot U); the result is returned in slot U
        too, so reproduction means ``kernel.reproduce(p) == p``.
        """
        if self.omega_pow != -1:
            raise ValueError("reproduce needs a kernel carrying omega_m^-1")
        if p.depends_on(Slot.X):
            raise ValueError("reproduce expects a polynomial in u only")
        return integrate_u(poly_product(self.poly, p)).swap_slots()

    def swapped(self) -> CPoly:
        """K(v, u) in the same slot convention."""
        return self.poly.swap_slots()

    def evaluate(self, u, v) -> Multivector:
        """Float value K(u, v) at single points."""
        val = self.poly.evaluate_mv(x=v, u=u)
        scale = omega(self.m) ** self.omega_pow
        return val.map(lambda c: c * scale)

    def evaluate_scalar(self, u, v) -> np.ndarray:
        """Scalar part of K at broadcast rows of u and v."""
        return self.poly.evaluate(x=v, u=u) * omega(self.m) ** self.omega_pow

    def to_json(self) -> dict:
        return {"kind": self.kind, "m": self.m, "k": self.k, "omega_pow": self.omega_pow,
                "slots": {"u": "u", "v": "x"}, "poly": self.poly.to_json()}


_cache: dict = {}
_lock = threading.Lock()


def _cached(key, build):
    with _lock:
        if key in _cache:
            return _cache[key]
    val = build()
    with _lock:
        _cache.setdefault(key, val)
        return _cache[key]


def zonal_harmonic(m: int, k: int) -> Kernel:
    """Z_k(u, v) = sum_ij (G^-1)_ij Y_i(u) Y_j(v) over a scalar harmonic basis."""
    if m < 3 or k < 0:
        raise ValueError("zonal_harmonic needs m >= 3 and k >= 0")

    def build():
        basis = harmonic_basis(m, k)
        ginv = linalg.inverse(basis.gram_rational)
        els = basis.elements
        vs = [y.swap_slots() for y in els]
        out = CPoly(m)
        for i, yi in enumerate(els):
            row = CPoly(m)
            for j, vj in enumerate(vs):
                if ginv[i][j]:
                    row = row + vj.scale(ginv[i][j])
            out = out + poly_product(yi, row)
        return Kernel(m, k, "zk", out, -1)

    return _cached(("zk", m, k), build)


def monogenic_kernel(m: int, k: int) -> Kernel:
    """Z_k^1 = P_k^+ in v applied to Z_k P_{k,r}^+ in u.

    For p in M_k the u-projection moves onto p (the right projection is the
    adjoint of the left one under the sphere pairing), and the v-projection
    fixes p(v); the result is left monogenic in v and right monogenic in u.
    """
    if m < 3 or k < 0:
        raise ValueError("monogenic_kernel needs m >= 3 and k >= 0")

    def build():
        z = zonal_harmonic(m, k).poly
        if k == 0:
            return Kernel(m, 0, "zk1", z, -1)
        right_u = project_plus_right(z, k)
        both = project_plus(right_u.swap_slots(), k).swap_slots()
        return Kernel(m, k, "zk1", both, -1)

    return _cached(("zk1", m, k), build)


def gegenbauer_zonal(m: int, k: int, u, v) -> np.ndarray:
    """Closed-form zonal harmonic on unit vectors (numeric oracle)."""
    from scipy.special import eval_gegenbauer
    lam = (m - 2) / 2
    t = np.sum(np.atleast_2d(u) * np.atleast_2d(v), axis=-1)
    return (k + lam) / (lam * omega(m)) * eval_gegenbauer(k, lam, t)


# reflections ---------------------------------------------------------------

def reflect_rows(w: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Rows of w u w / |w|^2 = u - 2 <u, w> w / |w|^2 (broadcast over rows)."""
    w = np.atleast_2d(w)
    u = np.atleast_2d(u)
    n2 = np.sum(w * w, axis=-1, keepdims=True)
    return u - 2 * np.sum(u * w, axis=-1, keepdims=True) * w / n2


def _reflect_mv(w, u) -> Multivector:
    """w u w / |w|^2 through Clifford products (single points)."""
    wv = embed_vector([float(c) for c in w])
    uv = embed_vector([float(c) for c in u])
    n2 = float(np.dot(w, w))
    return (wv * uv * wv).map(lambda c: c / n2)


def _separation(x, y) -> np.ndarray:
    w = np.asarray(y, float) - np.asarray(x, float)
    if not np.linalg.norm(w) > 0:
        raise SingularityError("kernel evaluated at x = y")
    return w


def eval_E_k(m: int, k: int, x, y, u, v) -> Multivector:
    """Fundamental solution of R_k at float points."""
    w = _separation(x, y)
    r = float(np.linalg.norm(w))
    ref = _reflect_mv(w, u).vector_part()
    z1 = monogenic_kernel(m, k).evaluate(ref, v)
    pref = (m + 2 * k - 2) / ((m - 2) * omega(m) * r ** m)
    return (embed_vector(list(w)) * z1).map(lambda c: pref * c)


def eval_F_k(m: int, k: int, x, y, u, v) -> Multivector:
    """Fundamental solution of Q_k at float points (k >= 1)."""
    if k < 1:
        raise ValueError("F_k needs k >= 1")
    w = _separation(x, y)
    r = float(np.linalg.norm(w))
    ref = _reflect_mv(w, u).vector_part()
    z1 = monogenic_kernel(m, k - 1).evaluate(ref, v)
    pref = (m + 2 * k - 2) / ((2 - m) * omega(m) * r ** m)
    uu, vv = embed_vector([float(c) for c in u]), embed_vector([float(c) for c in v])
    return (uu * embed_vector(list(w)) * z1 * vv).map(lambda c: pref * c)


def eval_H_k(m: int, k: int, x, y, u, v, c: float | None = None) -> float:
    """Fundamental solution of D_k: c_{m,k} |y-x|^{2-m} Z_k(w u w/|w|^2, v)."""
    w = _separation(x, y)
    c = calibrated_constant(m, k) if c is None else c
    r = float(np.linalg.norm(w))
    ref = reflect_rows(w, np.asarray(u, float))
    return float(c * r ** (2 - m) * zonal_harmonic(m, k).evaluate_scalar(ref, v)[0])


# calibration ---------------------------------------------------------------

def newtonian_constant(m: int) -> ExactScalar:
    """c_{m,0} = 1/((2-m) omega_m), exactly."""
    return ExactScalar.omega(-1, Fraction(1, 2 - m))


def _calibration_path() -> Path:
    env = os.environ.get("CLIFFPDE_CALIBRATION")
    return Path(env) if env else CALIBRATION_FILE


def load_calibration(path: Path | None = None) -> dict:
    path = _calibration_path() if path is None else Path(path)
    if not path.exists():
        return {}
    with open(path) as fh:
        return json.load(fh)


def store_calibration(m: int, k: int, value: float, info: dict | None = None,
                      path: Path | None = None) -> Path:
    """Atomically record c_{m,k} under the key "m,k"."""
    path = _calibration_path() if path is None else Path(path)
    data = load_calibration(path)
    data[f"{m},{k}"] = {"c": value, "c_times_omega": value * omega(m), **(info or {})}
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
    os.replace(tmp, path)
    return path


def calibrated_constant(m: int, k: int) -> float:
    if k == 0:
        return newtonian_constant(m).value(m)
    entry = load_calibration().get(f"{m},{k}")
    if entry is None:
        raise UncalibratedError(f"c_{{{m},{k}}} is not calibrated; run calibrate_c({m}, {k})")
    return float(entry["c"])


def calibrate_c(m: int, k: int, **kw):
    """Calibrate c_{m,k} from the Poisson residual; see poisson.calibrate."""
    from .poisson import calibrate
    return calibrate(m, k, **kw)


def homogeneity_ratio(fn, m: int, k: int, x, y, u, v, t: float = 2.0) -> float:
    """|K(x, x + t w)| / |K(x, x + w)| for a kernel evaluator ``fn``."""
    x = np.asarray(x, float)
    w = np.asarray(y, float) - x
    a = fn(m, k, x, x + w, u, v)
    b = fn(m, k, x, x + t * w, u, v)
    na = math.sqrt(sum(float(c) ** 2 for c in a.coeffs.values())) if isinstance(a, Multivector) else abs(a)
    nb = math.sqrt(sum(float(c) ** 2 for c in b.coeffs.values())) if isinstance(b, Multivector) else abs(b)
    return nb / na
