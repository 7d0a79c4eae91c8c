"""Flat-interface two-layer kernels: branch choice, limits, reciprocity,
dipole/monopole consistency and the governing equation itself."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layered_scatter.errors import GeometryError, SingularityError
from layered_scatter.layered_green import (
    MediumParams,
    PlanarGreen,
    SourceSpec,
    beta,
    dipole_planar_scattered,
    green_planar_scattered,
    green_planar_total,
)
from layered_scatter.specfun import fundamental_solution
from layered_scatter.verify import stencil_convergence_ratio


def test_beta_identity_and_branch(rng):
    xi = rng.uniform(-6.0, 6.0, 1000)
    for kappa in (1.0, 1.5):
        b = beta(xi, kappa)
        assert np.max(np.abs(b * b - (kappa * kappa - xi * xi))) < 1e-13
        assert np.min(b.real) >= 0.0 and np.min(b.imag) >= 0.0
        # propagating band is purely real, evanescent band purely imaginary
        prop = np.abs(xi) < kappa
        assert np.max(np.abs(b.imag[prop])) == 0.0
        assert np.max(np.abs(b.real[~prop])) == 0.0


def test_medium_params_contrast():
    med = MediumParams(1.0, 1.5)
    assert med.eta == pytest.approx(1.25)
    assert med.kappa_at(0.5) == 1.0 and med.kappa_at(-0.5) == 1.5
    with pytest.raises(ValueError):
        MediumParams(0.0, 1.0)


def test_trivial_contrast_collapse():
    g = PlanarGreen(MediumParams(1.5, 1.5), 1e-10)
    # same side: reflection coefficient vanishes identically
    assert abs(g.scattered((0.4, 0.9), (-0.3, 1.2))) < 1e-10
    # cross side: the transmitted field is the free-space field
    val = g.scattered((0.4, -0.9), (-0.3, 1.2))
    free = fundamental_solution(1.5, (0.4, -0.9), (-0.3, 1.2))
    assert abs(val - free) < 1e-8


def test_scattered_reciprocity(green):
    x, xs = (0.3, 0.7), (-0.2, 1.1)
    a = green.scattered(x, xs)
    assert abs(a - green.scattered(xs, x)) / abs(a) < 1e-9
    # cross-side reciprocity too
    xl = (0.5, -0.8)
    b = green.scattered(xl, xs)
    assert abs(b - green.scattered(xs, xl)) / abs(b) < 1e-9


def test_total_reciprocity_both_lower(green):
    x, xs = (0.3, -0.7), (-0.4, -1.1)
    a = green.total(x, xs)
    assert abs(a - green.total(xs, x)) / abs(a) < 1e-9


def test_interface_continuity_by_extrapolation(green):
    """Richardson extrapolation of x2 -> 0+ and 0- agree."""
    xs = (-0.2, 1.1)
    for x1 in (-1.0, 0.0, 0.5, 1.3, 2.0):
        up = [green.total((x1, e), xs) for e in (1e-3, 5e-4)]
        dn = [green.total((x1, -e), xs) for e in (1e-3, 5e-4)]
        lim_up = 2.0 * up[1] - up[0]
        lim_dn = 2.0 * dn[1] - dn[0]
        assert abs(lim_up - lim_dn) / abs(lim_up) < 1e-6


def test_points_on_interface_rejected(green):
    with pytest.raises(GeometryError):
        green.scattered((0.3, 0.0), (0.0, 1.0))
    with pytest.raises(GeometryError):
        green.scattered((0.3, 1.0), (0.0, 0.0))


def test_total_at_source_rejected(green):
    with pytest.raises(SingularityError):
        green.total((0.3, 0.7), (0.3, 0.7))


def test_cross_side_needs_separation(green):
    with pytest.raises(GeometryError):
        green.scattered((0.3, 1e-9), (0.0, -1e-9))


@pytest.mark.parametrize("ell", [1, 2])
@pytest.mark.parametrize("x,xs", [
    ((0.3, 0.7), (-0.2, 1.1)),    # both upper
    ((0.3, -0.7), (-0.2, 1.1)),   # cross side
    ((0.3, -0.7), (-0.2, -1.1)),  # both lower
])
def test_dipole_is_source_derivative_of_monopole(green, ell, x, xs):
    """U^s equals minus the xs_ell-derivative of G^s."""
    h = 1e-4
    e = (h, 0.0) if ell == 1 else (0.0, h)
    fd = -(green.scattered(x, (xs[0] + e[0], xs[1] + e[1]))
           - green.scattered(x, (xs[0] - e[0], xs[1] - e[1]))) / (2.0 * h)
    us = green.dipole_scattered(x, xs, ell)
    assert abs(us - fd) / abs(us) < 1e-5


def test_dipole_direction_validated(green):
    with pytest.raises(ValueError):
        green.dipole_scattered((0.3, 0.7), (0.0, 1.0), 3)
    with pytest.raises(ValueError):
        SourceSpec("dipole", (0.0, 1.0), 0)
    with pytest.raises(ValueError):
        SourceSpec("monopole", (0.0, 1.0), 1)
    with pytest.raises(ValueError):
        SourceSpec("quadrupole", (0.0, 1.0))


@pytest.mark.parametrize("center,kappa_sel", [
    ((0.4, 1.5), "kappa1"),    # upper medium
    ((0.4, -1.5), "kappa2"),   # lower medium
])
def test_total_field_solves_helmholtz(green, medium, center, kappa_sel):
    """5-point stencil residual ratio ~4 confirms the PDE in both media."""
    xs = (-0.6, 0.9)
    kappa = getattr(medium, kappa_sel)
    ratio = stencil_convergence_ratio(lambda p: green.total(p, xs),
                                      center, 1e-2, kappa)
    assert 3.0 < ratio < 5.0


def test_batch_matches_scalar(green):
    offsets = np.array([-1.2, 0.0, 0.7, 2.5])
    vals = green.scattered_batch("monopole", 0, 0.6, 1.1, offsets)
    for d, v in zip(offsets, vals):
        assert v == pytest.approx(green.scattered((d, 0.6), (0.0, 1.1)),
                                  abs=1e-12)


def test_source_total_dispatch(green):
    mono = SourceSpec("monopole", (0.0, 1.0))
    dip = SourceSpec("dipole", (0.0, 1.0), 2)
    x = (0.4, 0.8)
    assert green.source_total(mono, x) == pytest.approx(
        green.total(x, (0.0, 1.0)), abs=1e-12)
    assert green.source_total(dip, x) == pytest.approx(
        green.dipole_total(x, (0.0, 1.0), 2), abs=1e-12)
    assert green.source_scattered(dip, x) == pytest.approx(
        green.dipole_scattered(x, (0.0, 1.0), 2), abs=1e-12)


def test_functional_wrappers(medium):
    x, xs = (0.3, 0.7), (-0.2, 1.1)
    g = PlanarGreen(medium, 1e-8)
    assert green_planar_scattered(x, xs, medium) == pytest.approx(
        g.scattered(x, xs), abs=1e-12)
    assert green_planar_total(x, xs, medium) == pytest.approx(
        g.total(x, xs), abs=1e-12)
    assert dipole_planar_scattered(x, xs, 1, medium) == pytest.approx(
        g.dipole_scattered(x, xs, 1), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(xi=st.floats(-10.0, 10.0), kappa=st.floats(0.1, 5.0))
def test_beta_branch_property(xi, kappa):
    b = beta(np.array([xi]), kappa)[0]
    assert b.real >= 0.0 and b.imag >= 0.0
    assert abs(b * b - (kappa * kappa - xi * xi)) < 1e-10
