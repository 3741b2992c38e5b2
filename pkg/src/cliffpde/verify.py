"""Exact checks of the Green formulas for bosonic Laplacians on the unit ball.

Every integrand is polynomial, so each side is a Multivector over
:class:`ExactScalar` and a case passes only when the residual is identically
zero.  The boundary of the unit ball has n_x = x, so the Clifford surface
element is d sigma_x = x d sigma.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .clifford import Multivector
from .integrate import ExactScalar, integrate_product, integrate_u
from .mvpoly import CPoly, Slot, poly_product
from .operators import (HigherSpinOp, OpName, Side, bosonic_laplacian, boundary_A, p_minus,
                        p_plus, rs_minus, rs_plus)


class Signs(enum.Enum):
    DERIVED = "derived"
    PRINTED = "printed"


@dataclass
class GreenCase:
    label: str
    lhs: Multivector
    rhs: Multivector
    residual: Multivector
    passed: bool
    exact: bool = True
    note: str = ""

    def to_json(self) -> dict:
        return {"label": self.label, "lhs": mv_to_json(self.lhs), "rhs": mv_to_json(self.rhs),
                "residual": mv_to_json(self.residual), "pass": self.passed,
                "exact": self.exact, "note": self.note}


@dataclass
class GreenReport:
    suite: str
    params: dict
    cases: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def add(self, case: GreenCase) -> GreenCase:
        self.cases.append(case)
        return case

    def extend(self, other: "GreenReport"):
        self.cases.extend(other.cases)

    def to_json(self) -> dict:
        return {"suite": self.suite, "params": self.params, "pass": self.passed,
                "cases": [c.to_json() for c in self.cases]}


def mv_to_json(mv: Multivector) -> list:
    from .clifford import mask_to_indices
    out = []
    for blade in sorted(mv.coeffs, key=lambda b: (b.bit_count(), mask_to_indices(b))):
        c = mv.coeffs[blade]
        val = c.to_json() if isinstance(c, ExactScalar) else ExactScalar(c).to_json()
        out.append({"blade": list(mask_to_indices(blade)), "value": val})
    return out


def _case(label: str, lhs: Multivector, rhs: Multivector, expect_zero: bool = True,
          note: str = "") -> GreenCase:
    res = lhs - rhs
    ok = (not res.coeffs) if expect_zero else bool(res.coeffs)
    return GreenCase(label, lhs, rhs, res, ok, True, note)


def _vol(f: CPoly, g: CPoly) -> Multivector:
    return integrate_product(f, g, "ball", True)


def _bdry(f: CPoly, g: CPoly, clifford: bool = False) -> Multivector:
    return integrate_product(f, g, "sphere", True, insert_normal=clifford)


# scalar version ------------------------------------------------------------

def greens_scalar_sides(m: int, k: int, f: CPoly, g: CPoly) -> tuple[Multivector, Multivector]:
    """(volume side, boundary side) of the scalar Green formula."""
    if not (f.is_scalar_valued() and g.is_scalar_valued()):
        raise ValueError("greens_scalar needs scalar-valued fields")
    HigherSpinOp(OpName.DK, m, k)
    lhs = _vol(bosonic_laplacian(f, m, k), g) - _vol(f, bosonic_laplacian(g, m, k))
    rhs = _bdry(boundary_A(f, k), g) - _bdry(f, boundary_A(g, k))
    return lhs, rhs


def greens_scalar(m: int, k: int, f: CPoly, g: CPoly, label: str = "case") -> GreenReport:
    rep = GreenReport("green-scalar", {"m": m, "k": k})
    lhs, rhs = greens_scalar_sides(m, k, f, g)
    rep.add(_case(label, lhs, rhs))
    return rep


def bump_squared(m: int) -> CPoly:
    """(1 - |x|^2)^2, vanishing to first order on the unit sphere."""
    one = CPoly.const(m, 1)
    w = one - one.mul_norm_sq(Slot.X)
    return poly_product(w, w)


def self_adjoint_check(m: int, k: int, f0: CPoly, g0: CPoly, label: str = "case") -> GreenReport:
    """<D_k f | g> = <f | D_k g> for f, g carrying the factor (1 - |x|^2)^2."""
    rep = GreenReport("self-adjoint", {"m": m, "k": k})
    w = bump_squared(m)
    f, g = poly_product(w, f0), poly_product(w, g0)
    lhs = _vol(bosonic_laplacian(f, m, k), g)
    rhs = _vol(f, bosonic_laplacian(g, m, k))
    rep.add(_case(label, lhs, rhs))
    bdry = _bdry(boundary_A(f, k), g) - _bdry(f, boundary_A(g, k))
    rep.add(_case(label + ":boundary-vanishes", bdry, Multivector(m)))
    return rep


def orthogonality_check(m: int, k: int, f: CPoly, g: CPoly, label: str = "case") -> GreenReport:
    """Pointwise in x: integral over S^{m-1} of (<D_u,D_x>^2 f) g vanishes."""
    rep = GreenReport("orthogonality", {"m": m, "k": k})
    low = f.pairing_du_dx().pairing_du_dx()
    prod = integrate_u(poly_product(low, g))
    lhs = Multivector(m, {0: ExactScalar(len(prod.terms))})
    rep.add(_case(label, lhs, Multivector(m), note="number of surviving x-monomials"))
    return rep


# Clifford version ----------------------------------------------------------

@dataclass
class CliffordTerms:
    lhs: Multivector
    volume: Multivector
    boundary: list


def _boundary_terms(f: CPoly, g: CPoly, k: int, signs: Signs, f_side: Side) -> list:
    m = f.m
    c4 = m + 2 * k - 4
    # the derivation gives +R P^+ g in the first term and -f P^+_r R_r in the third
    lead = 1 if signs is Signs.DERIVED else -1
    fp, fm = p_plus(f, k, f_side), p_minus(f, k, f_side)
    gp, gm = p_plus(g, k), p_minus(g, k)
    r_gp, q_gm = rs_plus(gp, k), rs_minus(gm, k)
    t1 = _bdry(fp, r_gp.scale(lead) + q_gm.scale(Fraction(2, c4)), True)
    t2 = _bdry(fm, r_gp.scale(Fraction(-2, c4)) + q_gm.scale(Fraction(m + 2 * k, c4)), True)
    fp_r, fm_t = rs_plus(fp, k, f_side), rs_plus(fm, k, f_side)
    fp_ts, fm_q = rs_minus(fp, k, f_side), rs_minus(fm, k, f_side)
    t3 = _bdry(fp_r.scale(-lead) + fm_t.scale(Fraction(2, c4)), gp, True)
    t4 = _bdry(fp_ts.scale(Fraction(-2, c4)) - fm_q.scale(Fraction(m + 2 * k, c4)), gm, True)
    return [t1, t2, t3, t4]


def clifford_terms(m: int, k: int, f: CPoly, g: CPoly, signs: Signs = Signs.DERIVED,
                   f_side: Side = Side.RIGHT) -> CliffordTerms:
    """All six integrals of the Clifford-valued Green formula.

    ``f_side`` selects how operators act on f: RIGHT (as in the derivation) or
    LEFT (the naive reading, kept as a negative control).
    """
    HigherSpinOp(OpName.DK_ALT, m, k)
    df = HigherSpinOp(OpName.DK, m, k, f_side, check=False)(f)
    dg = HigherSpinOp(OpName.DK_ALT, m, k, Side.LEFT, check=False)(g)
    return CliffordTerms(_vol(df, g), _vol(f, dg), _boundary_terms(f, g, k, Signs(signs), f_side))


def greens_clifford(m: int, k: int, f: CPoly, g: CPoly, *, signs: Signs = Signs.DERIVED,
                    f_side: Side = Side.RIGHT, label: str = "case",
                    expect_zero: bool = True) -> GreenReport:
    rep = GreenReport("green-clifford", {"m": m, "k": k, "signs": Signs(signs).value,
                                         "f_side": Side(f_side).value})
    t = clifford_terms(m, k, f, g, signs, f_side)
    rhs = t.volume
    for b in t.boundary:
        rhs = rhs + b
    rep.add(_case(label, t.lhs, rhs, expect_zero=expect_zero))
    return rep


def stokes_rs_check(m: int, k: int, f: CPoly, g: CPoly, *, project: bool = True,
                    label: str = "case", expect_zero: bool = True) -> GreenReport:
    """Stokes identity for R_k with projections around dsigma_x.

    Volume side: integral of (f P^+_r) R_{k,r} P^+ g + f P^+_r R_k P^+ g.
    Boundary side: integral of f P^+_r dsigma_x P^+ g; with ``project=False``
    the bare f dsigma_x g is used instead (negative control).
    """
    rep = GreenReport("stokes", {"m": m, "k": k, "project": project})
    fp, gp = p_plus(f, k, Side.RIGHT), p_plus(g, k)
    lhs = _vol(rs_plus(fp, k, Side.RIGHT), gp) + _vol(fp, rs_plus(gp, k))
    rhs = _bdry(fp, gp, True) if project else _bdry(f, g, True)
    rep.add(_case(label, lhs, rhs, expect_zero=expect_zero))
    return rep


# seeded suites ---------------------------------------------------------------

SUITES = ("connection", "maxwell", "green-scalar", "self-adjoint", "orthogonality",
          "green-clifford", "stokes")

DEFAULT_CASES = {"connection": 25, "maxwell": 50, "green-scalar": 25, "self-adjoint": 10,
                 "orthogonality": 10, "green-clifford": 10, "stokes": 5}


def _poly_case(label: str, residual: CPoly, expect_zero: bool = True) -> GreenCase:
    """A polynomial identity case; lhs counts the surviving residual monomials."""
    count = Multivector(residual.m, {0: ExactScalar(len(residual.terms))}) if residual.terms \
        else Multivector(residual.m)
    return _case(label, count, Multivector(residual.m), expect_zero,
                 note="number of nonzero residual monomials")


def suite_case(suite: str, m: int, k: int, seed: int, index: int) -> list:
    """The cases generated for one seeded input (pure; safe to run in a worker)."""
    from .operators import maxwell as maxwell_op, verify_connection
    from .samples import harmonic_field, monogenic_field, rng_for

    rng = rng_for(seed, suite, m, k, index)
    label = f"{suite}[{index}]"
    if suite == "connection":
        f = harmonic_field(m, k, rng, x_degree=3, clifford=True)
        dk = HigherSpinOp(OpName.DK, m, k)(f)
        alt = HigherSpinOp(OpName.DK_ALT, m, k)(f)
        return [_poly_case(label + ":RA+QB", verify_connection(m, k, f)),
                _poly_case(label + ":second-expression", dk - alt)]
    if suite == "maxwell":
        f = harmonic_field(m, 1, rng, x_degree=3)
        return [_poly_case(label, bosonic_laplacian(f, m, 1) - maxwell_op(f, m))]
    if suite == "green-scalar":
        f = harmonic_field(m, k, rng, x_degree=3)
        g = harmonic_field(m, k, rng, x_degree=3)
        return greens_scalar(m, k, f, g, label).cases
    if suite == "self-adjoint":
        f = harmonic_field(m, k, rng, x_degree=1, n_terms=2)
        g = harmonic_field(m, k, rng, x_degree=1, n_terms=2)
        return self_adjoint_check(m, k, f, g, label).cases
    if suite == "orthogonality":
        f = harmonic_field(m, k, rng, x_degree=3)
        g = harmonic_field(m, k, rng, x_degree=0)
        return orthogonality_check(m, k, f, g, label).cases
    if suite == "green-clifford":
        f = harmonic_field(m, k, rng, x_degree=2, clifford=True)
        g = harmonic_field(m, k, rng, x_degree=2, clifford=True)
        cases = greens_clifford(m, k, f, g, label=label).cases
        if index == 0:
            cases += greens_clifford(m, k, f, g, f_side=Side.LEFT, label=label + ":left-acting-on-f",
                                     expect_zero=False).cases
        return cases
    if suite == "stokes":
        f = monogenic_field(m, k, rng, x_degree=2)
        g = monogenic_field(m, k, rng, x_degree=2)
        cases = stokes_rs_check(m, k, f, g, label=label).cases
        # at k = 0 the projections are the identity, so the control is vacuous
        if index == 0 and k >= 1:
            cases += stokes_rs_check(m, k, f, g, project=False, label=label + ":no-projection",
                                     expect_zero=False).cases
        return cases
    raise ValueError(f"unknown suite {suite!r}")


def suite_applies(suite: str, m: int, k: int) -> bool:
    """Is (m, k) admissible for the suite?"""
    try:
        if suite == "connection":
            HigherSpinOp(OpName.AK, m, k)
            HigherSpinOp(OpName.DK_ALT, m, k)
        elif suite == "maxwell":
            return m >= 3
        elif suite in ("green-clifford",):
            HigherSpinOp(OpName.DK_ALT, m, k)
        elif suite == "stokes":
            HigherSpinOp(OpName.RK, m, k)
        else:
            HigherSpinOp(OpName.DK, m, k)
    except ValueError:
        return False
    return True


def run_suite(suite: str, m: int, k: int, seed: int = 0, n_cases: int | None = None,
              executor=None) -> GreenReport:
    """Run every seeded case of a suite; ``executor`` (optional) maps cases in parallel."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    n = DEFAULT_CASES[suite] if n_cases is None else n_cases
    params = {"m": m, "k": 1 if suite == "maxwell" else k, "seed": seed, "cases": n}
    rep = GreenReport(suite, params)
    args = [(suite, m, params["k"], seed, i) for i in range(n)]
    if executor is None:
        results = [suite_case(*a) for a in args]
    else:
        results = list(executor.map(suite_case, *zip(*args))) if args else []
    for cases in results:
        rep.cases.extend(cases)
    return rep
