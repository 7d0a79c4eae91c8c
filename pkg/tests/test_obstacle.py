"""Boundary integral machinery: the log-singular rule, circle eigenvalue
oracles, and the free-space obstacle solves against the separation-of-
variables series."""

import numpy as np
import pytest
from scipy.special import hankel1, jv

from layered_scatter.errors import ConfigurationError
from layered_scatter.geometry import ObstacleCurve, obstacle_nodes
from layered_scatter.layered_green import MediumParams, SourceSpec
from layered_scatter.obstacle import (
    PenetrableMedium,
    boundary_total_field,
    kress_log_weights,
    layer_matrices,
    solve_density,
)
from layered_scatter.specfun import fundamental_solution
from layered_scatter.verify import mie_interior_circle, mie_series_circle

CIRCLE = ObstacleCurve("circle", (0.0, -2.0), 0.5)
KAPPA = 2.0
SRC = (2.0, -2.0)  # distance 2 from the circle center, off the flat line


@pytest.fixture(scope="module")
def nodes():
    return obstacle_nodes(CIRCLE, 24)


# ---------------------------------------------------------------------------
# Log-singular quadrature rule
# ---------------------------------------------------------------------------
def test_kress_rule_exact_on_trig_polynomials(nodes):
    """int_0^2pi ln(4 sin^2((t-tau)/2)) cos(m tau) dtau = -(2pi/m) cos(mt)
    for 1 <= m <= M-1, and 0 for m = 0."""
    R = kress_log_weights(nodes.t, nodes.t)
    M = nodes.n // 2
    for m in (0, 1, 3, M - 1):
        vals = R @ np.cos(m * nodes.t)
        exact = np.zeros(nodes.n) if m == 0 \
            else -(2.0 * np.pi / m) * np.cos(m * nodes.t)
        assert np.max(np.abs(vals - exact)) < 1e-12


def test_kress_rule_off_node_evaluation(nodes):
    t = np.array([0.123, 2.9])
    R = kress_log_weights(t, nodes.t)
    vals = R @ np.cos(3.0 * nodes.t)
    exact = -(2.0 * np.pi / 3.0) * np.cos(3.0 * t)
    assert np.max(np.abs(vals - exact)) < 1e-12


# ---------------------------------------------------------------------------
# Circle eigenvalue oracle for the single-layer operator
# ---------------------------------------------------------------------------
def test_single_layer_circle_eigenvalues(nodes):
    """S e^{imt} = i pi a J_m(ka) H_m(ka) e^{imt} on the circle (with the
    factor-2 scaling of the discrete operator)."""
    a = CIRCLE.radius
    S, _K = layer_matrices(nodes, KAPPA)
    for m in (0, 1, 2, 5):
        phi = np.exp(1j * m * nodes.t)
        lam = 1j * np.pi * a * jv(m, KAPPA * a) * hankel1(m, KAPPA * a)
        assert np.max(np.abs(S @ phi - lam * phi)) < 1e-12


def test_layer_matrices_spectral_accuracy():
    """Doubling the node count should leave the eigenvalue errors at
    rounding level: the rule is spectrally accurate."""
    a = CIRCLE.radius
    for M in (12, 24):
        nd = obstacle_nodes(CIRCLE, M)
        S, _ = layer_matrices(nd, KAPPA)
        phi = np.exp(1j * 3 * nd.t)
        lam = 1j * np.pi * a * jv(3, KAPPA * a) * hankel1(3, KAPPA * a)
        assert np.max(np.abs(S @ phi - lam * phi)) < 1e-10


# ---------------------------------------------------------------------------
# Free-space obstacle solves vs the series oracle
# ---------------------------------------------------------------------------
def _exterior_points():
    th = np.linspace(0.0, 2.0 * np.pi, 9)[:-1]
    return np.stack([CIRCLE.center[0] + 1.4 * np.cos(th),
                     CIRCLE.center[1] + 1.4 * np.sin(th)], axis=-1)


def test_sound_soft_circle_matches_series(free_circle_solver):
    ev = free_circle_solver.solve(SourceSpec("monopole", SRC))
    pts = _exterior_points()
    got = ev.scattered(pts)
    for p, v in zip(pts, got):
        ref = mie_series_circle("sound_soft", CIRCLE.radius, KAPPA, SRC,
                                tuple(p), center=CIRCLE.center)
        assert abs(v - ref) < 1e-6 * max(1.0, abs(ref))


def test_sound_soft_boundary_trace_off_nodes(free_circle_solver):
    solver = free_circle_solver
    ev = solver.solve(SourceSpec("monopole", SRC))
    t = np.linspace(0.0, 2.0 * np.pi, 17)[:-1] + 0.05
    X = CIRCLE.point(t)
    bg = np.array([fundamental_solution(KAPPA, x, SRC) for x in X])
    total = boundary_total_field(ev._correction, t, bg)
    assert np.max(np.abs(total)) < 1e-6 * np.max(np.abs(bg))


def test_neumann_circle_matches_series(free_circle_solver):
    from layered_scatter.forward import ObstacleSpec, SceneConfig, ForwardSolver
    config = SceneConfig(
        medium=MediumParams(KAPPA, KAPPA), arc_radius=1.0, cell_size=0.25,
        obstacle=ObstacleSpec(curve=CIRCLE, condition="neumann",
                              boundary_M=32))
    ev = ForwardSolver(config).solve(SourceSpec("monopole", SRC))
    pts = _exterior_points()
    got = ev.scattered(pts)
    for p, v in zip(pts, got):
        ref = mie_series_circle("neumann", CIRCLE.radius, KAPPA, SRC,
                                tuple(p), center=CIRCLE.center)
        assert abs(v - ref) < 1e-5 * max(1.0, abs(ref))


def test_penetrable_circle_matches_series():
    from layered_scatter.forward import ObstacleSpec, SceneConfig, ForwardSolver
    n = 1.5 + 0.1j
    config = SceneConfig(
        medium=MediumParams(KAPPA, KAPPA), arc_radius=1.0, cell_size=0.25,
        obstacle=ObstacleSpec(curve=CIRCLE, condition="penetrable", n=n,
                              cell_size=0.05))
    ev = ForwardSolver(config).solve(SourceSpec("monopole", SRC))
    # exterior scattered field
    p = (1.4, -2.0)
    ref = mie_series_circle("penetrable", CIRCLE.radius, KAPPA, SRC, p,
                            n=n, center=CIRCLE.center)
    assert abs(ev.scattered(p) - ref) < 2e-3
    # interior total field
    q = (0.2, -1.9)
    ref_in = mie_interior_circle(CIRCLE.radius, KAPPA, n, SRC, q,
                                 center=CIRCLE.center)
    assert abs(ev.total(q) - ref_in) < 2e-3


def test_impedance_reduces_to_neumann_as_lam_vanishes():
    from layered_scatter.forward import ObstacleSpec, SceneConfig, ForwardSolver

    def solve(condition, lam=0.0):
        config = SceneConfig(
            medium=MediumParams(KAPPA, KAPPA), arc_radius=1.0,
            cell_size=0.25,
            obstacle=ObstacleSpec(curve=CIRCLE, condition=condition,
                                  lam=lam, boundary_M=24))
        return ForwardSolver(config).solve(SourceSpec("monopole", SRC))

    p = (1.2, -2.4)
    neu = solve("neumann").scattered(p)
    imp = solve("impedance", lam=1e-6).scattered(p)
    assert abs(neu - imp) < 1e-5 * abs(neu)


def test_impedance_differs_at_finite_lam():
    from layered_scatter.forward import ObstacleSpec, SceneConfig, ForwardSolver
    config = SceneConfig(
        medium=MediumParams(KAPPA, KAPPA), arc_radius=1.0, cell_size=0.25,
        obstacle=ObstacleSpec(curve=CIRCLE, condition="impedance", lam=2.0,
                              boundary_M=24))
    ev = ForwardSolver(config).solve(SourceSpec("monopole", SRC))
    p = (1.2, -2.4)
    ref = mie_series_circle("neumann", CIRCLE.radius, KAPPA, SRC, p,
                            center=CIRCLE.center)
    assert abs(ev.scattered(p) - ref) > 1e-2 * abs(ref)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------
def test_penetrable_medium_validation(flat_scene):
    from layered_scatter.geometry import (SceneGeometry, ArcInterface,
                                          build_region_mesh)
    scene = SceneGeometry(flat_scene.profile, ArcInterface(1.0),
                          obstacle=ObstacleCurve("circle", (0.0, -0.6), 0.2))
    mesh = build_region_mesh("D_penetrable", scene, 0.05)
    PenetrableMedium(mesh, 1.5 + 0.1j)
    with pytest.raises(ConfigurationError):
        PenetrableMedium(mesh, -1.0 + 0.0j)
    with pytest.raises(ConfigurationError):
        PenetrableMedium(mesh, 1.5 - 0.1j)


def test_boundary_above_interface_rejected(flat_b2, medium):
    from layered_scatter.obstacle import assemble_bie
    nodes_up = obstacle_nodes(ObstacleCurve("circle", (0.0, 0.5), 0.2), 8)
    with pytest.raises(ConfigurationError):
        assemble_bie(nodes_up, medium, flat_b2)


def test_neumann_rejects_negative_impedance(free_circle_solver):
    from layered_scatter.obstacle import neumann_impedance_solve
    solver = free_circle_solver
    nd = solver.nodes
    with pytest.raises(ConfigurationError):
        neumann_impedance_solve(nd, solver.medium, solver.b2,
                                np.zeros(nd.n), np.zeros(nd.n), lam=-1.0,
                                kernel_ctx=solver.kernel_ctx)
