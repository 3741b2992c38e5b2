import math
import warnings

import numpy as np
import pytest

from cliffpde.kernels import load_calibration
from cliffpde.clifford import omega
from cliffpde.mvpoly import CPoly
from cliffpde.operators import bosonic_laplacian, bosonic_null_basis
from cliffpde.poisson import (BumpSource, CalibrationError, GridError, PoissonConfig,
                              add_constant, add_field, calibrate, check_points_for,
                              check_reduction, compare_solutions, decay_profile, default_source,
                              direct_double_quadrature, exact_coords_at, fd_weights,
                              greens_reconstruct, greens_reconstruct_many, harmonic_frame,
                              newtonian_radial_oracle, parse_bump, residual_Dk, residual_study,
                              solve_poisson, stencil_points, sup_on_sphere)
from cliffpde.spaces import harmonic_basis

NEWTON = BumpSource(5, 0, (0.0,) * 5, 1.0, 3, (1.0,))
FAST = PoissonConfig(sphere_degree=12)


def test_fd_weights_textbook():
    offs, w = fd_weights(2, 2)
    assert offs.tolist() == [-1, 0, 1] and np.allclose(w, [1, -2, 1])
    offs, w = fd_weights(4, 1)
    assert offs.tolist() == [-2, -1, 1, 2]
    assert np.allclose(w, [1 / 12, -2 / 3, 2 / 3, -1 / 12])
    with pytest.raises(ValueError):
        fd_weights(3, 2)


def test_parse_bump():
    src = parse_bump(3, 1, "0,0,0.5;0.8;4", "0:1,2:-1/2")
    assert src.center == (0.0, 0.0, 0.5) and src.radius == 0.8 and src.s == 4
    assert src.coords == (1.0, 0.0, -0.5)
    assert parse_bump(3, 2, "0,0,0;1;3", None).coords[0] == 1.0
    with pytest.raises(ValueError):
        parse_bump(3, 1, "0,0,0;1", None)
    with pytest.raises(ValueError):
        parse_bump(3, 1, "0,0,0;1;2", None)


def test_zero_source_gives_zero_field():
    src = BumpSource(3, 1, (0, 0, 0), 1.0, 3, (0.0, 0.0, 0.0))
    fld = solve_poisson(src, np.array([[0.1, 0.2, 0.0], [2.0, 0.0, 0.0]]), FAST)
    assert np.all(fld.coords == 0)


def test_solver_rejects_degenerate_parameters():
    with pytest.raises(ValueError):
        solve_poisson(BumpSource(3, 0, (0, 0, 0), 1.0, 3, (1.0,)), np.zeros((1, 3)), FAST)


def test_newtonian_potential_inside_support():
    pts = np.array([[0.0] * 5, [0.2, 0.1, 0, 0, 0], [0.5, 0.3, 0.1, -0.2, 0.0]])
    fld = solve_poisson(NEWTON, pts, FAST)
    for row, y in zip(fld.coords, pts):
        want = newtonian_radial_oracle(NEWTON, y)
        assert abs(row[0] - want) <= 1e-6 * abs(want)


def test_newtonian_potential_outside_support():
    y = np.array([1.5, 0, 0, 0, 0])
    fld = solve_poisson(NEWTON, y[None, :], PoissonConfig(sphere_degree=8))
    want = newtonian_radial_oracle(NEWTON, y)
    assert abs(fld.coords[0, 0] - want) <= 1e-4 * abs(want)


def test_reduction_matches_direct_double_quadrature():
    src = default_source(5, 1)
    assert check_reduction(src, FAST) <= 1e-6
    y = np.array([0.1, -0.2, 0.1, 0.0, 0.2])
    v = np.array([0.6, 0.0, 0.8, 0.0, 0.0])
    fld = solve_poisson(src, y[None, :], PoissonConfig(sphere_degree=12, check_reduction=False))
    reduced = float(fld.values(v)[0])
    assert math.isclose(reduced, direct_double_quadrature(src, y, v, FAST), rel_tol=1e-9)


def test_residual_small_and_grid_checked():
    src = default_source(3, 1)
    pts = check_points_for(src)
    res = residual_study(src, pts, 0.05, 2, PoissonConfig(sphere_degree=16))
    assert res["relative"] <= 0.05 and len(res["per_point"]) == 5
    fld = solve_poisson(src, pts, FAST)
    with pytest.raises(GridError):
        residual_Dk(fld, src, 0.05, pts)


def test_residual_sees_added_polynomials():
    # second-order stencils are exact on quadratics, so adding a D_k-null
    # quadratic leaves the residual unchanged and x1^2 Y shifts it by D_k(x1^2 Y)
    src = default_source(3, 1)
    pts = check_points_for(src, n=3)
    grid = stencil_points(pts, 0.05)
    fld = solve_poisson(src, grid, PoissonConfig(sphere_degree=16))
    base = residual_Dk(fld, src, 0.05, pts)
    null = [p for p in bosonic_null_basis(3, 1, 2) if p.x_degrees() == {2}][0]
    shifted = add_field(fld, lambda y: exact_coords_at(null, 1, y))
    again = residual_Dk(shifted, src, 0.05, pts)
    assert np.allclose(again["per_point"], base["per_point"], rtol=1e-6, atol=1e-9)
    y1 = harmonic_basis(3, 1).elements[0]
    bump = CPoly.monomial(3, x=(2, 0, 0)) * y1
    image = bosonic_laplacian(bump, 3, 1)
    big = add_field(fld, lambda y: 100 * exact_coords_at(bump, 1, y))
    moved = residual_Dk(big, src, 0.05, pts)["residual"]
    shift = 100 * float(sup_on_sphere(3, 1, exact_coords_at(image, 1, np.zeros(3)))[0])
    assert abs(moved - shift) <= base["residual"] + 1e-6 * shift


def test_compare_solutions_detects_constants_only():
    src = default_source(3, 1)
    pts = check_points_for(src, n=4)
    fld = solve_poisson(src, pts, FAST)
    h = np.array([0.3, -0.1, 0.2])
    same, mean = compare_solutions(fld, add_constant(fld, h))
    assert same and np.allclose(mean, h)
    moved = add_field(fld, lambda y: y[0] * h)
    assert not compare_solutions(fld, moved)[0]
    with pytest.raises(GridError):
        compare_solutions(fld, solve_poisson(src, pts[:2], FAST))


@pytest.mark.slow
def test_decay_outside_support():
    prof = decay_profile(default_source(5, 1), [1, 0, 0, 0, 0], [1.5, 2.0, 3.0, 5.0], FAST)
    assert prof["monotone"] and prof["sup"][-1] < 0.1 * prof["sup"][0]


def test_calibration_small_case_matches_shipped_value():
    res = calibrate(3, 1, order=8)
    assert res.spread < 0.01
    assert math.isclose(res.c, load_calibration()["3,1"]["c"], rel_tol=1e-8)
    assert math.isclose(res.c * omega(3), 1.0, rel_tol=1e-6)


def test_calibration_fails_where_kernel_is_not_fundamental():
    with pytest.raises(CalibrationError):
        calibrate(4, 1, order=4, sphere_degree=12)


class TestReconstruction:
    null = bosonic_null_basis(3, 1, 2)

    def test_constant_k0(self):
        got = greens_reconstruct(CPoly.const(3, 1), 0, np.zeros(3))
        assert abs(got[0] - 1.0) < 1e-4

    def test_null_solutions_at_origin(self):
        got = greens_reconstruct_many(self.null, 1, np.zeros(3))
        want = np.array([exact_coords_at(f, 1, np.zeros(3)) for f in self.null])
        assert np.max(np.abs(got - want)) < 1e-3

    def test_off_centre_point(self):
        y = np.array([0.2, -0.1, 0.3])
        got = greens_reconstruct_many(self.null[:6], 1, y)
        want = np.array([exact_coords_at(f, 1, y) for f in self.null[:6]])
        assert np.max(np.abs(got - want)) < 1e-3

    def test_linearity(self):
        a, b = self.null[3], self.null[7]
        y = np.array([0.1, 0.0, -0.2])
        combo = greens_reconstruct(a.scale(2) + b.scale(-3), 1, y)
        parts = 2 * greens_reconstruct(a, 1, y) - 3 * greens_reconstruct(b, 1, y)
        assert np.max(np.abs(combo - parts)) < 1e-10

    def test_printed_sign_fails(self):
        f = next(p for p in self.null if p.x_degrees() == {0})
        got = greens_reconstruct(f, 1, np.zeros(3), signs="printed")
        want = exact_coords_at(f, 1, np.zeros(3))
        assert np.max(np.abs(got - want)) > 0.5 * np.max(np.abs(want))

    def test_boundary_guards(self):
        with pytest.warns(RuntimeWarning):
            greens_reconstruct(self.null[0], 1, np.array([0.95, 0, 0]))
        with pytest.raises(ValueError):
            greens_reconstruct(self.null[0], 1, np.array([1.2, 0, 0]))


def test_field_json_and_lookup():
    src = default_source(3, 1)
    pts = check_points_for(src, n=3)
    fld = solve_poisson(src, pts, FAST)
    assert fld.lookup(pts[::-1]).tolist() == [2, 1, 0]
    data = fld.to_json()
    assert data["m"] == 3 and len(data["coords"]) == 3 and len(data["basis"]) == 3
