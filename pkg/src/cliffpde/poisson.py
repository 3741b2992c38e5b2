"""Integral solution of D_k Phi = f for compactly supported H_k-valued sources.

The inner sphere integral is removed analytically: for f(x, u) = chi(x) h(u),

    Phi(y, v) = c_{m,k} * integral |y-x|^{2-m} chi(x) h(rho_{y-x} v) dx,

where rho_w v = w v w / |w|^2 is the reflection along w.  Since h o rho is
again a degree-k harmonic, Phi(y, .) is stored by its coordinates over a
fixed harmonic basis.  Directions of a polar rule about y are shared by all
evaluation points, so the maps h -> h o rho_theta are computed once.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .clifford import omega
from .integrate import build_ball_rule, build_sphere_rule, clipped_polar_rule, singular_ball_rule
from .kernels import calibrated_constant, reflect_rows, zonal_harmonic
from .mvpoly import CPoly, Slot, _powers
from .operators import HigherSpinOp, OpName, bosonic_laplacian, boundary_A
from .spaces import harmonic_basis


class GridError(ValueError):
    pass


class CalibrationError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    pass


REDUCTION_TOL = 1e-6


# harmonic coordinates -------------------------------------------------------

class HarmonicFrame:
    """Float evaluation and coordinate maps for the scalar basis of H_k."""

    def __init__(self, m: int, k: int, n_samples: int | None = None, seed: int = 12345):
        self.m, self.k = m, k
        self.basis = harmonic_basis(m, k)
        self.d = len(self.basis)
        self._arrays = [el.to_arrays(0) for el in self.basis.elements]
        rng = np.random.default_rng(seed)
        n = n_samples or max(3 * self.d, 12)
        pts = rng.standard_normal((n, m))
        self.samples = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        self._pinv = np.linalg.pinv(self.values(self.samples))
        g = np.array([[float(q) for q in row] for row in self.basis.gram_rational])
        self.gram = g * omega(m)
        self.labels = [str(el) for el in self.basis.elements]

    def values(self, pts) -> np.ndarray:
        """Y_j(pts) as an array of shape (..., d)."""
        pts = np.asarray(pts, float)
        flat = pts.reshape(-1, self.m)
        out = np.empty((flat.shape[0], self.d))
        for j, (_, ue, cf) in enumerate(self._arrays):
            out[:, j] = _powers(flat, ue) @ cf
        return out.reshape(pts.shape[:-1] + (self.d,))

    def fit(self, vals: np.ndarray) -> np.ndarray:
        """Coordinates from values at ``self.samples`` (last axis = samples)."""
        return vals @ self._pinv.T

    def reflection_maps(self, dirs: np.ndarray) -> np.ndarray:
        """M[n] with  coords(h o rho_{dirs[n]}) = M[n] @ coords(h)."""
        dirs = np.atleast_2d(dirs)
        refl = self.samples[None, :, :] - 2 * (dirs @ self.samples.T)[:, :, None] * dirs[:, None, :] \
            / np.sum(dirs * dirs, axis=1)[:, None, None]
        vals = self.values(refl)  # (N, S, d): vals[n, s, j] = Y_j(rho_n v_s)
        return np.einsum("is,nsj->nij", self._pinv, vals)

    def l2_norm(self, coords: np.ndarray) -> np.ndarray:
        coords = np.atleast_2d(coords)
        return np.sqrt(np.einsum("ni,ij,nj->n", coords, self.gram, coords))

    @property
    def dk_tensor(self) -> np.ndarray:
        return _dk_tensor(self.m, self.k)


@lru_cache(maxsize=None)
def harmonic_frame(m: int, k: int) -> HarmonicFrame:
    return HarmonicFrame(m, k)


@lru_cache(maxsize=None)
def _dk_tensor(m: int, k: int) -> np.ndarray:
    """T[j, a, b, i] with  coords(D_k Phi)_i = sum_jab Hess_ab(phi_j) T[j, a, b, i].

    Built from the exact operator:  D_k(x_a x_b Y_j) = sum_cd Hess_cd W_jcd,
    so half of it is the symmetric part of W_jab.
    """
    basis = harmonic_basis(m, k)
    d = len(basis)
    out = np.zeros((d, m, m, d))
    for j, y in enumerate(basis.elements):
        for a in range(m):
            for b in range(a, m):
                field_ = y.mul_var(a, Slot.X).mul_var(b, Slot.X)
                img = bosonic_laplacian(field_, m, k)
                if img.depends_on(Slot.X):
                    raise AssertionError("D_k of a quadratic field must be x-constant")
                coords = basis.coordinates(img)
                vals = np.array([float(c) / 2 for c in coords])
                out[j, a, b] = vals
                out[j, b, a] = vals
    return out


# sources and fields ---------------------------------------------------------

@dataclass(frozen=True)
class BumpSource:
    """f(x, u) = (1 - |x - center|^2 / radius^2)^s * sum_i coords_i Y_i(u), cut at the ball."""
    m: int
    k: int
    center: tuple
    radius: float
    s: int
    coords: tuple

    def __post_init__(self):
        if len(self.center) != self.m:
            raise ValueError("center has wrong dimension")
        if self.s < 3:
            raise ValueError("smoothness s >= 3 is required for a C^2 source")
        if len(self.coords) != len(harmonic_basis(self.m, self.k)):
            raise ValueError("coords must match dim H_k")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    @property
    def coord_array(self) -> np.ndarray:
        return np.asarray(self.coords)

    def chi(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        t = 1 - np.sum((x - np.asarray(self.center)) ** 2, axis=-1) / self.radius ** 2
        return np.where(t > 0, np.clip(t, 0, None) ** self.s, 0.0)

    def u_poly(self) -> CPoly:
        out = CPoly(self.m)
        for c, el in zip(self.coords, harmonic_basis(self.m, self.k).elements):
            out = out + el.scale(Fraction(c).limit_denominator(10 ** 12))
        return out

    def coords_at(self, x) -> np.ndarray:
        return self.chi(x)[..., None] * self.coord_array

    def evaluate(self, x, u) -> np.ndarray:
        frame = harmonic_frame(self.m, self.k)
        return self.chi(x) * (frame.values(u) @ self.coord_array)

    def max_abs(self) -> float:
        """max |f| = max over the unit sphere of |h| (chi peaks at 1)."""
        frame = harmonic_frame(self.m, self.k)
        rule = build_sphere_rule(self.m, 20 if self.m <= 4 else 12)
        rng = np.random.default_rng(7)
        extra = rng.standard_normal((4000, self.m))
        pts = np.vstack([rule.nodes, extra / np.linalg.norm(extra, axis=1, keepdims=True)])
        return float(np.max(np.abs(frame.values(pts) @ self.coord_array)))


def parse_bump(m: int, k: int, bump: str, upart: str | None) -> BumpSource:
    """Parse the CLI forms  'cx,cy,...;R;s'  and  'i:c,j:c'."""
    parts = bump.split(";")
    if len(parts) != 3:
        raise ValueError("bump must look like 'c1,...,cm;R;s'")
    center = tuple(float(t) for t in parts[0].split(","))
    d = len(harmonic_basis(m, k))
    coords = [0.0] * d
    if upart:
        for item in upart.split(","):
            i, c = item.split(":")
            coords[int(i)] = float(Fraction(c))
    else:
        coords[0] = 1.0
    return BumpSource(m, k, center, float(parts[1]), int(parts[2]), tuple(coords))


@dataclass
class PotentialField:
    m: int
    k: int
    points: np.ndarray
    coords: np.ndarray
    labels: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def values(self, v) -> np.ndarray:
        """Phi(y_n, v) for every stored y_n."""
        return self.coords @ harmonic_frame(self.m, self.k).values(np.asarray(v, float))

    def lookup(self, pts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Row indices of ``pts`` in the stored grid (GridError if missing)."""
        scale = max(1.0, float(np.max(np.abs(self.points)))) if len(self.points) else 1.0
        keys = {tuple(np.round(p / (tol * scale)).astype(np.int64)): i for i, p in enumerate(self.points)}
        out = []
        for p in np.atleast_2d(pts):
            key = tuple(np.round(p / (tol * scale)).astype(np.int64))
            if key not in keys:
                raise GridError(f"stencil point {p.tolist()} not in the sampled grid")
            out.append(keys[key])
        return np.array(out, dtype=int)

    def to_json(self) -> dict:
        return {"m": self.m, "k": self.k, "basis": self.labels,
                "points": self.points.tolist(), "coords": self.coords.tolist(), **self.meta}


@dataclass(frozen=True)
class PoissonConfig:
    sphere_degree: int = 20
    radial_nodes: int = 0          # 0: s + 1, exact for the clipped rule
    mode: str = "clipped"          # "clipped" or "panels"
    panels: int = 8
    panel_nodes: int = 2
    outside_degree: int = 16
    c: float | None = None         # None: calibrated constant
    check_reduction: bool = True   # compare with direct double quadrature first
    workers: int = 0               # 0: CLIFFPDE_THREADS or the CPU count
    outer_radius: float | None = None  # panel mode: fixed polar radius about every y

    def constant(self, m: int, k: int) -> float:
        return calibrated_constant(m, k) if self.c is None else self.c


# solver ---------------------------------------------------------------------

class _Solver:
    def __init__(self, src: BumpSource, cfg: PoissonConfig):
        HigherSpinOp(OpName.DK, src.m, src.k)
        if src.m + 2 * src.k <= 4:
            raise ValueError("the Poisson solver needs m + 2k > 4")
        self.src, self.cfg = src, cfg
        self.m, self.k = src.m, src.k
        self.frame = harmonic_frame(self.m, self.k)
        self.const = cfg.constant(self.m, self.k)
        self.sphere = build_sphere_rule(self.m, cfg.sphere_degree, max_degree=max(40, cfg.sphere_degree))
        dirs = self.sphere.nodes
        self.mh = self.frame.reflection_maps(dirs) @ src.coord_array  # (N, d)
        # the ray integrand r * chi(y + r theta) has degree 2s + 1 in r
        self.n_radial = cfg.radial_nodes or src.s + 1

    def _polar(self, y: np.ndarray, rule, dir_major: bool) -> np.ndarray:
        """Sum over a polar rule about y, grouped by direction."""
        n_dir = len(self.sphere.nodes)
        dist = np.linalg.norm(rule.nodes - y[None, :], axis=1)
        vals = rule.weights * np.where(dist > 0, dist, 1.0) ** (2 - self.m) * self.src.chi(rule.nodes)
        per_dir = vals.reshape(n_dir, -1).sum(axis=1) if dir_major else vals.reshape(-1, n_dir).sum(axis=0)
        return self.const * (per_dir @ self.mh)

    def _inside_clipped(self, y: np.ndarray) -> np.ndarray:
        rule = clipped_polar_rule(y, self.src.center, self.src.radius, self.n_radial, self.sphere)
        return self._polar(y, rule, True)

    def _panels(self, y: np.ndarray) -> np.ndarray:
        big = self.cfg.outer_radius
        if big is None:
            big = float(np.linalg.norm(y - np.asarray(self.src.center))) + self.src.radius
        rule = singular_ball_rule(y, big, self.cfg.panel_nodes, self.sphere, self.cfg.panels)
        return self._polar(y, rule, False)

    def _outside(self, y: np.ndarray) -> np.ndarray:
        src, m = self.src, self.m
        rule = build_ball_rule(m, self.cfg.outside_degree, src.center, src.radius,
                               max_degree=max(40, self.cfg.outside_degree))
        w = y[None, :] - rule.nodes
        dist = np.linalg.norm(w, axis=1)
        maps = self.frame.reflection_maps(w) @ src.coord_array
        vals = rule.weights * dist ** (2 - m) * src.chi(rule.nodes)
        return self.const * (vals @ maps)

    def coords(self, y) -> np.ndarray:
        y = np.asarray(y, float)
        inside = np.linalg.norm(y - np.asarray(self.src.center)) < self.src.radius
        if self.cfg.mode == "panels":
            return self._panels(y)
        if inside:
            return self._inside_clipped(y)
        return self._outside(y)

    def nodes_for(self, y) -> tuple[np.ndarray, np.ndarray]:
        """x-nodes and weights (including |y-x|^{2-m} chi) used at an inside point."""
        rule = clipped_polar_rule(y, self.src.center, self.src.radius, self.n_radial, self.sphere)
        dist = np.linalg.norm(rule.nodes - y[None, :], axis=1)
        w = rule.weights * np.where(dist > 0, dist, 1.0) ** (2 - self.m) * self.src.chi(rule.nodes)
        return rule.nodes, w


def _worker_count(cfg: PoissonConfig) -> int:
    if cfg.workers:
        return cfg.workers
    env = os.environ.get("CLIFFPDE_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def _solve_chunk(src: BumpSource, cfg: PoissonConfig, pts: np.ndarray) -> np.ndarray:
    solver = _Solver(src, cfg)
    return np.array([solver.coords(y) for y in pts])


def solve_poisson(src: BumpSource, points, config: PoissonConfig | None = None) -> PotentialField:
    """Phi at each point, as coordinates over harmonic_basis(m, k) in v.

    In panel mode one polar radius covering the support from every point is
    used for the whole grid, so the rule moves rigidly with y.
    """
    cfg = config or PoissonConfig()
    pts = np.atleast_2d(np.asarray(points, float))
    if cfg.mode == "panels" and cfg.outer_radius is None:
        reach = float(np.max(np.linalg.norm(pts - np.asarray(src.center), axis=1))) + src.radius
        cfg = PoissonConfig(**{**cfg.__dict__, "outer_radius": reach})
    frame = harmonic_frame(src.m, src.k)
    if not np.any(src.coord_array):
        return PotentialField(src.m, src.k, pts, np.zeros((len(pts), frame.d)), frame.labels)
    if cfg.check_reduction:
        check_reduction(src, cfg)
    workers = min(_worker_count(cfg), max(1, len(pts) // 64))
    if workers > 1:
        chunks = np.array_split(pts, workers)
        with ProcessPoolExecutor(workers) as pool:
            coords = np.vstack(list(pool.map(_solve_chunk, [src] * workers, [cfg] * workers, chunks)))
    else:
        coords = _solve_chunk(src, cfg, pts)
    meta = {"constant": cfg.constant(src.m, src.k), "sphere_degree": cfg.sphere_degree,
            "mode": cfg.mode}
    return PotentialField(src.m, src.k, pts, coords, frame.labels, meta)


@lru_cache(maxsize=64)
def check_reduction(src: BumpSource, cfg: PoissonConfig, n_points: int = 3) -> float:
    """Analytic u-reduction vs direct double quadrature at seeded points.

    Raises QuadratureError above REDUCTION_TOL relative; returns the worst error.
    """
    # both sides share the clipped x-rule, so only the u-reduction is tested
    base = PoissonConfig(**{**cfg.__dict__, "check_reduction": False, "workers": 1,
                            "mode": "clipped"})
    rng = np.random.default_rng(2024)
    solver = _Solver(src, base)
    worst = 0.0
    for _ in range(n_points):
        d = rng.standard_normal(src.m)
        y = np.asarray(src.center) + 0.6 * src.radius * rng.uniform(0.2, 1) * d / np.linalg.norm(d)
        v = rng.standard_normal(src.m)
        v /= np.linalg.norm(v)
        reduced = float(solver.coords(y) @ solver.frame.values(v))
        direct = direct_double_quadrature(src, y, v, base)
        scale = max(abs(direct), float(np.max(np.abs(solver.coords(y)))), 1e-300)
        worst = max(worst, abs(reduced - direct) / scale)
    if worst > REDUCTION_TOL:
        raise QuadratureError(f"u-reduction disagrees with direct quadrature: {worst:.2e}")
    return worst


def direct_double_quadrature(src: BumpSource, y, v, config: PoissonConfig | None = None,
                             u_degree: int | None = None) -> float:
    """Phi(y, v) with the u-integral done by cubature on Z_k (no reduction).

    Uses the same x-nodes as the reduced solver; the u-rule is exact for the
    degree-2k polynomial integrand.
    """
    cfg = config or PoissonConfig()
    solver = _Solver(src, cfg)
    y = np.asarray(y, float)
    if np.linalg.norm(y - np.asarray(src.center)) >= src.radius:
        raise ValueError("direct quadrature oracle is implemented for points inside the support")
    x, w = solver.nodes_for(y)
    urule = build_sphere_rule(src.m, max(2 * src.k, 2))
    z = zonal_harmonic(src.m, src.k)
    hu = solver.frame.values(urule.nodes) @ src.coord_array
    v = np.asarray(v, float)
    total = 0.0
    chunk = 2048
    for lo in range(0, len(w), chunk):
        wx = y[None, :] - x[lo:lo + chunk]
        ref = reflect_rows(wx[:, None, :], urule.nodes[None, :, :])  # (B, U, m)
        zv = z.evaluate_scalar(ref.reshape(-1, src.m), v).reshape(ref.shape[:2])
        total += float(w[lo:lo + chunk] @ (zv @ (urule.weights * hu)))
    return solver.const * total


def newtonian_radial_oracle(src: BumpSource, y) -> float:
    """Phi for k = 0 by the shell theorem (1-d integrals, exact in closed form).

    For a radial density g(s) about the centre,
    Phi(r) = c omega_m [ r^{2-m} int_0^r g s^{m-1} ds + int_r^R g s ds ].
    """
    if src.k != 0:
        raise ValueError("shell-theorem oracle is for k = 0")
    m, R, s = src.m, src.radius, src.s
    r = float(np.linalg.norm(np.asarray(y, float) - np.asarray(src.center)))
    # g(t) = (1 - t^2/R^2)^s = sum_j binom(s,j) (-1)^j t^{2j} / R^{2j}
    coef = [math.comb(s, j) * (-1) ** j / R ** (2 * j) for j in range(s + 1)]
    a = min(r, R)

    def mom(p, lo, hi):  # int_lo^hi t^p g(t) dt
        return sum(c * (hi ** (2 * j + p + 1) - lo ** (2 * j + p + 1)) / (2 * j + p + 1)
                   for j, c in enumerate(coef))

    inner = mom(m - 1, 0.0, a) * r ** (2 - m) if r > 0 else 0.0
    outer = mom(1, a, R) if a < R else 0.0
    c = 1 / ((2 - m) * omega(m))
    return c * omega(m) * (inner + outer) * src.coord_array[0]


# finite differences ---------------------------------------------------------

def fd_weights(order: int, deriv: int) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference offsets and weights of accuracy ``order`` (even)."""
    if order % 2 or order < 2:
        raise ValueError("order must be an even integer >= 2")
    p = order // 2
    offs = np.arange(-p, p + 1)
    mat = np.vander(offs, increasing=True).T.astype(float)
    rhs = np.zeros(len(offs))
    rhs[deriv] = math.factorial(deriv)
    w = np.linalg.solve(mat, rhs)
    keep = np.abs(w) > 1e-14
    return offs[keep], w[keep]


def stencil(m: int, order: int):
    """Offsets (in units of h) and per-(a,b) weight lists for the Hessian."""
    o1, w1 = fd_weights(order, 1)
    o2, w2 = fd_weights(order, 2)
    offsets = {tuple([0] * m): 0}
    terms = {}

    def idx(vec):
        key = tuple(vec)
        if key not in offsets:
            offsets[key] = len(offsets)
        return offsets[key]

    for a in range(m):
        lst = []
        for o, w in zip(o2, w2):
            vec = [0] * m
            vec[a] = int(o)
            lst.append((idx(vec), w))
        terms[(a, a)] = lst
        for b in range(a + 1, m):
            lst = []
            for oa, wa in zip(o1, w1):
                for ob, wb in zip(o1, w1):
                    vec = [0] * m
                    vec[a], vec[b] = int(oa), int(ob)
                    lst.append((idx(vec), wa * wb))
            terms[(a, b)] = lst
    offs = np.zeros((len(offsets), m))
    for key, i in offsets.items():
        offs[i] = key
    return offs, terms


def stencil_points(check_points, h: float, order: int = 2) -> np.ndarray:
    check_points = np.atleast_2d(np.asarray(check_points, float))
    offs, _ = stencil(check_points.shape[1], order)
    return (check_points[:, None, :] + h * offs[None, :, :]).reshape(-1, check_points.shape[1])


def hessians(field_: PotentialField, check_points, h: float, order: int = 2) -> np.ndarray:
    """Hess[n, a, b, j] of the coordinate functions at the check points."""
    check_points = np.atleast_2d(np.asarray(check_points, float))
    m = field_.m
    offs, terms = stencil(m, order)
    out = np.zeros((len(check_points), m, m, field_.coords.shape[1]))
    for n, y in enumerate(check_points):
        rows = field_.lookup(y[None, :] + h * offs)
        vals = field_.coords[rows]
        for (a, b), lst in terms.items():
            acc = sum(w * vals[i] for i, w in lst) / h ** 2
            out[n, a, b] = acc
            out[n, b, a] = acc
    return out


def dk_coords(field_: PotentialField, check_points, h: float, order: int = 2) -> np.ndarray:
    """Coordinates of D_k Phi at the check points."""
    hess = hessians(field_, check_points, h, order)
    return np.einsum("nabj,jabi->ni", hess, _dk_tensor(field_.m, field_.k))


def sup_on_sphere(m: int, k: int, coords: np.ndarray) -> np.ndarray:
    """max over sampled unit v of |sum_i coords_i Y_i(v)| (row-wise)."""
    frame = harmonic_frame(m, k)
    rng = np.random.default_rng(11)
    pts = rng.standard_normal((3000, m))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return np.max(np.abs(np.atleast_2d(coords) @ frame.values(pts).T), axis=1)


def residual_Dk(field_: PotentialField, src: BumpSource, h_step: float, check_points=None,
                order: int = 2) -> dict:
    """max over check points of sup_v |D_k Phi - f|, with relative size.

    The field must hold every stencil point of every check point
    (see :func:`stencil_points`), otherwise GridError is raised.
    """
    if check_points is None:
        check_points = check_points_for(src)
    check_points = np.atleast_2d(np.asarray(check_points, float))
    got = dk_coords(field_, check_points, h_step, order)
    want = src.coords_at(check_points)
    per_point = sup_on_sphere(src.m, src.k, got - want)
    fmax = src.max_abs()
    return {"residual": float(np.max(per_point)), "max_f": fmax,
            "relative": float(np.max(per_point) / fmax), "per_point": per_point.tolist()}


def check_points_for(src: BumpSource, n: int = 5, frac: float = 0.5, seed: int = 3) -> np.ndarray:
    """n interior points with |y - center| <= frac * radius."""
    rng = np.random.default_rng(seed)
    c = np.asarray(src.center)
    out = [c.copy()]
    while len(out) < n:
        d = rng.standard_normal(src.m)
        d *= frac * src.radius * rng.uniform(0.3, 1.0) / np.linalg.norm(d)
        out.append(c + d)
    return np.array(out)


def residual_study(src: BumpSource, check_points, h_step: float, order: int = 2,
                   config: PoissonConfig | None = None) -> dict:
    """Solve on the stencil grid and report the D_k residual."""
    pts = stencil_points(check_points, h_step, order)
    fld = solve_poisson(src, pts, config)
    return residual_Dk(fld, src, h_step, check_points, order)


def panel_convergence(src: BumpSource, check_points, h_step: float, panels=(1, 2, 4, 8, 16),
                      order: int = 2, panel_nodes: int = 2, sphere_degree: int = 16,
                      c: float | None = None) -> dict:
    """Residual of the composite-panel rule as the radial step is halved.

    The floor is the residual of the radially exact clipped rule at the same
    finite-difference step.  A halving step is accepted when it divides the
    residual by at least 2 or lands within 1.5x of the floor.
    """
    rows = []
    for p in panels:
        cfg = PoissonConfig(sphere_degree=sphere_degree, mode="panels", panels=p,
                            panel_nodes=panel_nodes, c=c)
        res = residual_study(src, check_points, h_step, order, cfg)
        rows.append({"panels": p, "relative": res["relative"]})
    floor = residual_study(src, check_points, h_step, order,
                           PoissonConfig(sphere_degree=sphere_degree, c=c))["relative"]
    steps = []
    for a, b in zip(rows, rows[1:]):
        ratio = a["relative"] / b["relative"] if b["relative"] else math.inf
        steps.append({"from": a["panels"], "to": b["panels"], "ratio": ratio,
                      "ok": ratio >= 2 or b["relative"] <= 1.5 * floor})
    return {"rows": rows, "floor": floor, "steps": steps,
            "converged": all(s["ok"] for s in steps) and rows[-1]["relative"] <= 1.5 * floor}


def decay_profile(src: BumpSource, direction, radii, config: PoissonConfig | None = None) -> dict:
    """sup_v |Phi| at y = center + r * direction for radii beyond the support."""
    direction = np.asarray(direction, float)
    direction = direction / np.linalg.norm(direction)
    radii = np.asarray(radii, float)
    if np.any(radii <= src.radius):
        raise ValueError("decay radii must lie outside the support")
    pts = np.asarray(src.center)[None, :] + radii[:, None] * direction[None, :]
    fld = solve_poisson(src, pts, config)
    sup = sup_on_sphere(src.m, src.k, fld.coords)
    return {"radii": radii.tolist(), "sup": sup.tolist(),
            "monotone": bool(np.all(np.diff(sup) < 0))}


# calibration ----------------------------------------------------------------

@dataclass
class CalibrationResult:
    m: int
    k: int
    c: float
    ratios: list
    spread: float
    points: list

    def to_json(self) -> dict:
        return {"m": self.m, "k": self.k, "c": self.c, "c_times_omega": self.c * omega(self.m),
                "ratios": self.ratios, "spread": self.spread}


def default_source(m: int, k: int, variant: int = 0) -> BumpSource:
    d = len(harmonic_basis(m, k))
    rng = np.random.default_rng(100 + variant)
    coords = np.zeros(d)
    coords[0] = 1.0
    if d > 1:
        coords[1:] = 0.5 * rng.uniform(-1, 1, d - 1)
    center = tuple(0.1 * variant * np.ones(m) / math.sqrt(m))
    radius, s = (1.0, 3) if variant == 0 else (0.8, 4)
    return BumpSource(m, k, center, radius, s, tuple(coords))


def calibrate(m: int, k: int, source: BumpSource | None = None, n_points: int = 5,
              h: float | None = None, order: int = 6, sphere_degree: int = 20,
              frac: float = 0.25, tol: float = 0.01, seed: int = 5) -> CalibrationResult:
    """c_{m,k} = f(y0, v0) / (D_k Phi_1)(y0, v0), Phi_1 built with constant 1."""
    if m + 2 * k <= 4:
        raise ValueError("calibration needs m + 2k > 4")
    src = source or default_source(m, k)
    pts = check_points_for(src, n_points, frac, seed)
    h = 0.04 * src.radius if h is None else h
    cfg = PoissonConfig(sphere_degree=sphere_degree, c=1.0)
    fld = solve_poisson(src, stencil_points(pts, h, order), cfg)
    got = dk_coords(fld, pts, h, order)
    frame = harmonic_frame(m, k)
    rng = np.random.default_rng(seed)
    ratios, used = [], []
    for n, y in enumerate(pts):
        cand = rng.standard_normal((64, m))
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        fv = src.chi(y) * (frame.values(cand) @ src.coord_array)
        best = int(np.argmax(np.abs(fv)))
        dv = frame.values(cand[best]) @ got[n]
        ratios.append(float(fv[best] / dv))
        used.append((y.tolist(), cand[best].tolist()))
    c = float(np.mean(ratios))
    spread = float((max(ratios) - min(ratios)) / abs(c))
    if spread > tol:
        raise CalibrationError(f"calibration ratios vary by {spread:.2%} (> {tol:.0%})")
    return CalibrationResult(m, k, c, ratios, spread, used)


# representation formula -----------------------------------------------------

def compare_solutions(a: PotentialField, b: PotentialField, tol: float = 1e-6):
    """Is b - a independent of y?  Returns (flag, mean coordinates h)."""
    if a.coords.shape != b.coords.shape or not np.allclose(a.points, b.points):
        raise GridError("fields live on different grids")
    diff = b.coords - a.coords
    mean = diff.mean(axis=0)
    scale = max(float(np.max(np.abs(a.coords))), float(np.max(np.abs(b.coords))), 1e-300)
    variation = float(np.max(np.abs(diff - mean))) if len(diff) else 0.0
    return variation <= tol * scale, mean


def add_constant(fld: PotentialField, h_coords) -> PotentialField:
    return PotentialField(fld.m, fld.k, fld.points.copy(), fld.coords + np.asarray(h_coords, float),
                          list(fld.labels), dict(fld.meta))


def add_field(fld: PotentialField, fn) -> PotentialField:
    """fld + (y -> fn(y) coordinates)."""
    extra = np.array([fn(y) for y in fld.points])
    return PotentialField(fld.m, fld.k, fld.points.copy(), fld.coords + extra,
                          list(fld.labels), dict(fld.meta))


# Green reconstruction -------------------------------------------------------

def greens_reconstruct(f: CPoly, k: int, y, **kw) -> np.ndarray:
    """Coordinates of f(y, .) recovered from boundary data on the unit sphere.

    Computes  integral over |x| = 1 and u in S^{m-1} of f (A H_k) - (A f) H_k
    (``signs="derived"``; ``"printed"`` gives the opposite overall sign).
    Exact in u via a cubature rule of degree 2k + 2; the x-derivatives of
    H_k are central differences with step ``fd_step``.
    """
    return greens_reconstruct_many([f], k, y, **kw)[0]


def greens_reconstruct_many(fs, k: int, y, *, c: float | None = None, x_degree: int = 16,
                            fd_step: float = 1e-4, signs: str = "derived") -> np.ndarray:
    """greens_reconstruct for several fields sharing one kernel evaluation."""
    if signs not in ("derived", "printed"):
        raise ValueError("signs must be 'derived' or 'printed'")
    fs = list(fs)
    m = fs[0].m
    y = np.asarray(y, float)
    dist = 1 - float(np.linalg.norm(y))
    if dist <= 0:
        raise ValueError("y must lie inside the unit ball")
    if dist < 0.1:
        warnings.warn("y is within 0.1 of the boundary: quadrature degrades", RuntimeWarning)
    const = calibrated_constant(m, k) if c is None else c
    frame = harmonic_frame(m, k)
    xrule = build_sphere_rule(m, x_degree, max_degree=max(40, x_degree))
    urule = build_sphere_rule(m, 2 * k + 2)
    kern, a_kern = _green_kernel_data(m, k, y, const, xrule.nodes, urule.nodes, frame.samples,
                                      fd_step)
    out = []
    for f in fs:
        fv = f.evaluate(x=np.repeat(xrule.nodes, len(urule.nodes), axis=0),
                        u=np.tile(urule.nodes, (len(xrule.nodes), 1))).reshape(kern.shape[:2])
        afv = boundary_A(f, k).evaluate(x=np.repeat(xrule.nodes, len(urule.nodes), axis=0),
                                        u=np.tile(urule.nodes, (len(xrule.nodes), 1)))
        afv = afv.reshape(kern.shape[:2])
        integrand = fv[:, :, None] * a_kern - afv[:, :, None] * kern
        total = np.einsum("x,u,xus->s", xrule.weights, urule.weights, integrand)
        out.append(frame.fit(-total if signs == "printed" else total))
    return np.array(out)


def _green_kernel_data(m, k, y, const, xs, us, vs, step):
    """H_k and A H_k on (x node, u node, v sample), shape (X, U, S) each."""
    z = zonal_harmonic(m, k)
    grads = [z.poly.partial(l + 1, Slot.U) for l in range(m)]
    n_u, n_v = len(us), len(vs)

    def scaled(poly, xp):
        # |y-x|^{2-m} poly(rho_{y-x} u, v) / omega for every x row
        w = y[None, :] - xp
        r = np.linalg.norm(w, axis=1)
        ref = reflect_rows(w[:, None, :], us[None, :, :])  # (X, U, m)
        rows_u = np.repeat(ref.reshape(-1, m), n_v, axis=0)
        rows_v = np.tile(vs, (len(xp) * n_u, 1))
        vals = poly.evaluate(x=rows_v, u=rows_u).reshape(len(xp), n_u, n_v)
        return const * (r ** (2 - m))[:, None, None] * vals / omega(m), w / r[:, None]

    def kern(xp):
        return scaled(z.poly, xp)[0]

    def kern_du(xp, j):
        # chain rule: d/du_j Z(rho u) = sum_l (d_l Z)(rho u) rho_lj
        acc = 0
        for l in range(m):
            vals, wh = scaled(grads[l], xp)
            rho = (l == j) - 2 * wh[:, l] * wh[:, j]
            acc = acc + rho[:, None, None] * vals
        return acc

    hval = kern(xs)
    normal = xs
    dn = (kern(xs + step * normal) - kern(xs - step * normal)) / (2 * step)
    if k == 0:
        return hval, dn
    mixed = 0
    for j in range(m):
        e = np.zeros(m)
        e[j] = step
        mixed = mixed + (kern_du(xs + e, j) - kern_du(xs - e, j)) / (2 * step)
    u_dot_n = normal @ us.T  # (X, U)
    return hval, dn - 4 * u_dot_n[:, :, None] * mixed / (m + 2 * k - 2)


def exact_coords_at(f: CPoly, k: int, y) -> np.ndarray:
    """Coordinates of u -> f(y, u) over the harmonic basis."""
    frame = harmonic_frame(f.m, k)
    vals = f.evaluate(x=np.asarray(y, float), u=frame.samples)
    return frame.fit(vals)
