"""Nested volume equations: self-weights, the dense operator contract and
the flat-scene composition identity (where the exact answer is known)."""

import numpy as np
import pytest
import scipy.integrate

from layered_scatter.errors import AccuracyError, SingularityError
from layered_scatter.geometry import SceneGeometry, build_region_mesh
from layered_scatter.layered_green import MediumParams, PlanarGreen, SourceSpec
from layered_scatter.ls_volume import (
    DenseOperator,
    assemble_B1_operator,
    assemble_B2_operator,
    cell_self_weight,
    extend_stage1_many,
    extend_stage2,
    extend_stage2_many,
    green_arc,
    log_integral_square,
    planar_field_column,
    planar_green_matrix,
    planar_scattered_matrix,
    solve_stage1,
    solve_stage2,
)
from layered_scatter.specfun import fundamental_solution

SRC = SourceSpec("monopole", (0.3, 1.2))


# ---------------------------------------------------------------------------
# Singular self-weight
# ---------------------------------------------------------------------------
def test_log_integral_square_against_quadrature():
    h = 0.37

    def f(y, x):
        return np.log(np.hypot(x, y))

    # quarter-square symmetry keeps the quadrature nodes off the origin
    ref = 4.0 * scipy.integrate.dblquad(f, 0.0, h / 2, 0.0, h / 2,
                                        epsabs=1e-12)[0]
    assert log_integral_square(h) == pytest.approx(ref, abs=1e-10)


def test_cell_self_weight_against_quadrature():
    kappa, h = 1.5, 0.2

    def reference(half):
        def part(real):
            def f(y, x):
                v = fundamental_solution(kappa, (x, y), (0.0, 0.0))
                return v.real if real else v.imag
            # quarter-square symmetry keeps nodes off the singularity
            return 4.0 * scipy.integrate.dblquad(f, 0.0, half, 0.0, half,
                                                 epsabs=1e-11)[0]
        return part(True) + 1j * part(False)

    ref = reference(h / 2)
    got = cell_self_weight(kappa, h * h)
    # midpoint treatment of the smooth factor leaves an O(h^2) gap
    assert abs(got - ref) < 5e-3 * abs(ref)
    ref_fine = reference(h / 8)
    got_fine = cell_self_weight(kappa, (h / 4) ** 2)
    assert abs(got_fine - ref_fine) / abs(ref_fine) \
        < abs(got - ref) / abs(ref)


# ---------------------------------------------------------------------------
# Kernel matrices
# ---------------------------------------------------------------------------
def test_scattered_matrix_matches_scalar(green):
    X = np.array([[0.3, 0.6], [-0.5, -0.4]])
    Y = np.array([[0.0, 1.1], [0.7, -0.9]])
    mat = planar_scattered_matrix(green, X, Y)
    for i, x in enumerate(X):
        for j, y in enumerate(Y):
            assert mat[i, j] == pytest.approx(green.scattered(x, y),
                                              abs=1e-12)


def test_green_matrix_adds_free_space_same_side(green, medium):
    X = np.array([[0.3, 0.6]])
    Y = np.array([[0.0, 1.1], [0.7, -0.9]])
    mat = planar_green_matrix(green, X, Y)
    assert mat[0, 0] == pytest.approx(green.total(X[0], Y[0]), abs=1e-12)
    # cross side: scattered part is already the transmitted total
    assert mat[0, 1] == pytest.approx(green.scattered(X[0], Y[1]), abs=1e-12)


def test_green_matrix_coincident_needs_weights(green):
    X = np.array([[0.3, -0.6]])
    with pytest.raises(SingularityError):
        planar_green_matrix(green, X, X)
    w = np.array([0.01])
    val = planar_green_matrix(green, X, X, w)[0, 0]
    assert np.isfinite(val)


def test_field_column_matches_scalar(green):
    X = np.array([[0.4, 0.7], [-0.6, -0.5], [0.3, 1.2]])
    # last point far from the source; all same-side or cross values
    col = planar_field_column(green, SRC, X, total=False)
    for i, x in enumerate(X):
        assert col[i] == pytest.approx(green.scattered(x, SRC.position),
                                       abs=1e-12)


def test_field_column_source_on_mesh_point(green):
    X = np.array([list(SRC.position)])
    with pytest.raises(SingularityError):
        planar_field_column(green, SRC, X, total=True)
    val = planar_field_column(green, SRC, X, total=True,
                              x_weights=np.array([0.01]))[0]
    assert np.isfinite(val)
    dip = SourceSpec("dipole", SRC.position, 2)
    with pytest.raises(SingularityError):
        planar_field_column(green, dip, X, total=True,
                            x_weights=np.array([0.01]))


# ---------------------------------------------------------------------------
# Dense operator
# ---------------------------------------------------------------------------
def test_dense_operator_solves(rng):
    A = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12)) \
        + 12.0 * np.eye(12)
    op = DenseOperator(A)
    x = rng.normal(size=12) + 1j * rng.normal(size=12)
    got = op.solve(A @ x)
    assert np.max(np.abs(got - x)) < 1e-10
    assert op.last_residual < 1e-12


def test_dense_operator_rejects_bad_residual():
    # numerically singular matrix: the residual contract must trip
    A = np.ones((4, 4), dtype=complex) + 1e-15 * np.eye(4)
    op = DenseOperator(A)
    with pytest.raises((AccuracyError, Exception)):
        op.solve(np.array([1.0, 2.0, 3.0, 4.0], dtype=complex))


def test_dense_operator_multiple_rhs(rng):
    A = rng.normal(size=(8, 8)) + 8.0 * np.eye(8) + 0.0j
    op = DenseOperator(A)
    B = rng.normal(size=(8, 3)) + 0.0j
    X = op.solve(B)
    assert np.max(np.abs(A @ X - B)) < 1e-10


# ---------------------------------------------------------------------------
# Stage 1 and stage 2 on the flat scene (exact answer known)
# ---------------------------------------------------------------------------
def test_stage1_extension_returns_solved_values_at_centers(flat_b2, medium):
    op1 = flat_b2.stage1
    sol = solve_stage1(SRC, op1, op1.mesh, medium)
    sub = op1.mesh.centers[::17]
    vals = extend_stage1_many(sol, sub, medium, op1.green)
    idx = np.arange(op1.mesh.n)[::17]
    assert np.max(np.abs(vals - sol.values[idx])) == 0.0


def test_flat_scene_composition_identity(flat_b2, medium):
    """With f = 0 the rough interface *is* the flat one: the two nested
    stages must reproduce the planar kernel wherever we look."""
    sol = solve_stage2(SRC, flat_b2, flat_b2.mesh, medium)
    green = flat_b2.green
    pts = np.array([[0.4, 0.8], [-1.3, 0.5], [0.9, -0.7], [2.0, 1.5]])
    got = extend_stage2_many(sol, pts, medium, flat_b2)
    for p, v in zip(pts, got):
        exact = green.total(p, SRC.position)
        assert abs(v - exact) / abs(exact) < 5e-3


def test_flat_scene_scattered_part(flat_b2, medium):
    sol = solve_stage2(SRC, flat_b2, flat_b2.mesh, medium)
    green = flat_b2.green
    p = np.array([[0.4, 0.8]])
    us = extend_stage2_many(sol, p, medium, flat_b2, total=False)[0]
    exact = green.scattered(p[0], SRC.position)
    assert abs(us - exact) / abs(exact) < 5e-3
    # total minus incident equals scattered algebraically
    tot = extend_stage2_many(sol, p, medium, flat_b2, total=True)[0]
    inc = fundamental_solution(medium.kappa1, p[0], SRC.position)
    assert abs((tot - inc) - us) < 1e-12


def test_scattered_finite_at_source_position(flat_b2, medium):
    sol = solve_stage2(SRC, flat_b2, flat_b2.mesh, medium)
    val = extend_stage2_many(sol, np.array([list(SRC.position)]),
                             medium, flat_b2, total=False)[0]
    assert np.isfinite(val)


def test_green_arc_reciprocity(flat_b2, medium):
    op1 = flat_b2.stage1
    x, y = (0.4, 0.6), (-0.7, 0.9)
    a = green_arc(x, y, medium, op1)
    b = green_arc(y, x, medium, op1)
    assert abs(a - b) / abs(a) < 1e-4


def test_zero_contrast_operators_are_identity(flat_scene):
    degenerate = MediumParams(1.5, 1.5)
    m1 = build_region_mesh("B1", flat_scene, 0.25)
    m2 = build_region_mesh("B2", flat_scene, 0.25)
    op1 = assemble_B1_operator(m1, degenerate)
    assert np.array_equal(op1.entries, np.eye(m1.n))
    b2 = assemble_B2_operator(m2, degenerate, op1)
    sol = solve_stage2(SRC, b2, m2, degenerate)
    # extension reduces to the planar field, which is free space here
    p = (0.5, 0.7)
    got = extend_stage2(sol, p, degenerate, b2)
    free = fundamental_solution(1.5, p, SRC.position)
    assert abs(got - free) < 1e-8
