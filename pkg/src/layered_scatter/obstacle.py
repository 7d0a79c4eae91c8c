"""Embedded-obstacle solvers on top of the rough-interface Green's function.

Impenetrable obstacles use a combined double/single-layer ansatz
w(x) = int_dD (dG/dnu(y) - i G(x,y)) psi(y) ds(y) leading to the
second-kind system (I + K - iS) psi = -2*U on the boundary for the
sound-soft case, and a single-layer ansatz with the adjoint double-layer
operator for Neumann/impedance conditions.

The kernel splits as G(x,y;rough) = Phi_k2(x,y) + smooth remainder: the
free-space part is discretized with the spectrally accurate log-singular
trigonometric rule on 2M equispaced parameter nodes, the remainder (a
composition of the nested volume solves, smooth near D) with the periodic
trapezoid rule.  Normal derivatives of the remainder come from central
finite differences of shifted nested solves.

Penetrable obstacles use one more Lippmann-Schwinger equation, this time
over a mesh of D with contrast m = 1 - n and kernel G(.,.;rough).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import AccuracyError, ConfigurationError
from .geometry import ObstacleNodes, RegionMesh
from .layered_green import MediumParams, SourceSpec
from .ls_volume import (
    DenseOperator,
    GridSolution,
    cell_self_weight,
    planar_field_column,
    planar_green_matrix,
    planar_scattered_matrix,
)
from .specfun import bessel_j0j1_y0y1_arrays, phi_matrix, EULER_GAMMA

_FD_STEP_FACTOR = 1e-4  # times diam(D), for smooth-remainder normal derivatives


# ---------------------------------------------------------------------------
# Rough-interface kernel columns
# ---------------------------------------------------------------------------
class RoughKernel:
    """Evaluator for G(x, y; rough) with a fixed set of source points y.

    One stage-1 and one stage-2 column solve per source, all sharing the
    two LU factorizations held by the B2 operator.
    """

    def __init__(self, b2_operator, medium: MediumParams, sources: np.ndarray):
        self.b2 = b2_operator
        self.medium = medium
        self.sources = np.asarray(sources, float)
        green = b2_operator.green
        if medium.eta == 0.0:
            self.g = None
            self.q = None
        else:
            mesh1 = b2_operator.stage1.mesh
            mesh2 = b2_operator.mesh
            # sources may land exactly on mesh centers; average over the
            # coinciding cell (the sources themselves carry no cells)
            rhs1 = planar_green_matrix(green, mesh1.centers, self.sources,
                                       x_weights=mesh1.weights)
            self.g = b2_operator.stage1.solve(rhs1)
            rhs2 = planar_green_matrix(green, mesh2.centers, self.sources,
                                       x_weights=mesh2.weights) \
                - medium.eta * (b2_operator.cross_matrix
                                * mesh1.weights[None, :]) @ self.g
            self.q = b2_operator.solve(rhs2)

    def smooth_part(self, X: np.ndarray) -> np.ndarray:
        """G(x_i, y_j; rough) - Phi_k2(x_i, y_j): finite on the diagonal.

        Meaningful when evaluation points share the lower medium with the
        sources, so the subtracted free-space part is the local singularity.
        """
        X = np.asarray(X, float)
        green = self.b2.green
        out = planar_scattered_matrix(green, X, self.sources)
        if self.medium.eta == 0.0:
            return out
        mesh1 = self.b2.stage1.mesh
        mesh2 = self.b2.mesh
        row1 = planar_green_matrix(green, X, mesh1.centers, mesh1.weights)
        row2 = planar_green_matrix(green, X, mesh2.centers, mesh2.weights)
        gr_row = row2 - self.medium.eta * (row1 * mesh1.weights[None, :]) \
            @ self.b2.stage1_columns
        out = out - self.medium.eta * (row1 * mesh1.weights[None, :]) @ self.g \
            + self.medium.eta * (gr_row * mesh2.weights[None, :]) @ self.q
        return out

    def full(self, X: np.ndarray,
             y_weights: Optional[np.ndarray] = None) -> np.ndarray:
        """G(x_i, y_j; rough) including the free-space part (same side).

        Coincident pairs are cell-averaged when y_weights is given.
        """
        X = np.asarray(X, float)
        out = self.smooth_part(X)
        dx = X[:, 0][:, None] - self.sources[None, :, 0]
        dy = X[:, 1][:, None] - self.sources[None, :, 1]
        r = np.hypot(dx, dy)
        same = (X[:, 1] > 0.0)[:, None] == (self.sources[:, 1] > 0.0)[None, :]
        coin = r < 1e-12
        kappa2 = self.medium.kappa2
        m = same & ~coin
        if np.any(m):
            out[m] += phi_matrix(kappa2, r[m])
        ci, cj = np.nonzero(coin)
        for i, j in zip(ci, cj):
            if y_weights is None:
                raise AccuracyError("kernel evaluated at a source point")
            out[i, j] += cell_self_weight(kappa2, y_weights[j]) / y_weights[j]
        return out


# ---------------------------------------------------------------------------
# Log-singular trigonometric quadrature
# ---------------------------------------------------------------------------
def kress_log_weights(t: np.ndarray, nodes_t: np.ndarray) -> np.ndarray:
    """Quadrature weights for int_0^2pi ln(4 sin^2((t-tau)/2)) f(tau) dtau
    on 2M equispaced nodes, exact for trigonometric polynomials.

    Rows correspond to evaluation parameters t (which need not be nodes).
    """
    M = len(nodes_t) // 2
    s = t[:, None] - nodes_t[None, :]
    m = np.arange(1, M)
    out = -(2.0 * np.pi / M) * np.tensordot(
        np.cos(np.multiply.outer(s, m)), 1.0 / m, axes=([2], [0]))
    out -= (np.pi / M ** 2) * np.cos(M * s)
    return out


def _phi_layer_blocks(nodes: ObstacleNodes, kappa: float, t: np.ndarray,
                      adjoint: bool = False):
    """Split single/double-layer free-space kernels at parameters t.

    Returns (M1, M2, L1, L2): the log-factor and smooth parts of the
    single-layer kernel 2*Phi*|x'| and the double-layer kernel
    2*dPhi/dnu(y)*|x'| (or its adjoint with the normal at x).
    """
    xt = nodes.curve.point(t)
    y = nodes.positions
    dx = xt[:, None, :] - y[None, :, :]
    r = np.hypot(dx[..., 0], dx[..., 1])
    diag = r < 1e-14
    r_safe = np.where(diag, 1.0, r)
    j0, j1, y0, y1 = bessel_j0j1_y0y1_arrays(kappa * r_safe)
    jac = nodes.jacobians

    M1 = -(1.0 / (2.0 * np.pi)) * j0 * jac[None, :]
    h0 = j0 + 1j * y0
    log_term = np.log(4.0 * np.sin(0.5 * (t[:, None] - nodes.t[None, :]))
                      ** 2 + np.where(diag, 1.0, 0.0))
    M2 = 0.5j * h0 * jac[None, :] - M1 * log_term

    if adjoint:
        nu = nodes.curve.dpoint(t)
        nu = np.stack([nu[..., 1], -nu[..., 0]], axis=-1)
        nu /= np.hypot(nu[..., 0], nu[..., 1])[..., None]
        dot = np.einsum("ijk,ik->ij", dx, nu)
        sign = -1.0
    else:
        dot = np.einsum("ijk,jk->ij", dx, nodes.normals)
        sign = 1.0
    h1 = j1 + 1j * y1
    L1 = sign * -(kappa / (2.0 * np.pi)) * j1 * dot / r_safe * jac[None, :]
    Lfull = sign * 0.5j * kappa * h1 * dot / r_safe * jac[None, :]
    L2 = Lfull - L1 * log_term

    if np.any(diag):
        di, dj = np.nonzero(diag)
        tj = nodes.t[dj]
        xp = nodes.tangents[dj]
        xpp = nodes.second[dj]
        M1[di, dj] = -(1.0 / (2.0 * np.pi)) * jac[dj]
        M2[di, dj] = (0.5j - EULER_GAMMA / np.pi
                      - np.log(0.5 * kappa * jac[dj]) / np.pi) * jac[dj]
        L1[di, dj] = 0.0
        # K and its adjoint share the curvature diagonal
        L2[di, dj] = (xpp[:, 0] * xp[:, 1] - xpp[:, 1] * xp[:, 0]) \
            / (2.0 * np.pi * jac[dj] ** 2)
    return M1, M2, L1, L2


def layer_matrices(nodes: ObstacleNodes, kappa: float,
                   t: Optional[np.ndarray] = None, adjoint: bool = False):
    """Discrete free-space single- and double-layer operators (S, K).

    Rows are evaluation parameters (the nodes by default), columns the 2M
    quadrature nodes; S approximates 2*int Phi psi ds and K approximates
    2*int dPhi/dnu(y) psi ds (adjoint=True swaps the normal to x).
    """
    if t is None:
        t = nodes.t
    M = nodes.n // 2
    R = kress_log_weights(t, nodes.t)
    M1, M2, L1, L2 = _phi_layer_blocks(nodes, kappa, t, adjoint=adjoint)
    S = R * M1 + (np.pi / M) * M2
    K = R * L1 + (np.pi / M) * L2
    return S, K


# ---------------------------------------------------------------------------
# Impenetrable obstacle
# ---------------------------------------------------------------------------
@dataclass
class BoundaryDensity:
    """Solved boundary density with everything needed to radiate it."""

    nodes: ObstacleNodes
    psi: np.ndarray
    operator: DenseOperator
    ansatz: str                      # "combined" or "single"
    impedance: Optional[np.ndarray] = None


def _remainder_blocks(nodes: ObstacleNodes, kernel_ctx):
    """Smooth-remainder values and normal-derivative values at node pairs.

    kernel_ctx holds three RoughKernel column sets: at the nodes and at the
    nodes shifted by +/- delta along the outward normals.
    """
    center, plus, minus, delta = kernel_ctx
    X = nodes.positions
    rho = center.smooth_part(X)
    drho = (plus.smooth_part(X) - minus.smooth_part(X)) / (2.0 * delta)
    return rho, drho


def build_rough_kernel_context(nodes: ObstacleNodes, b2_operator,
                               medium: MediumParams):
    """Column solves for sources on the boundary and its normal shifts."""
    delta = _FD_STEP_FACTOR * nodes.curve.diameter()
    P = nodes.positions
    nu = nodes.normals
    center = RoughKernel(b2_operator, medium, P)
    plus = RoughKernel(b2_operator, medium, P + delta * nu)
    minus = RoughKernel(b2_operator, medium, P - delta * nu)
    return (center, plus, minus, delta)


def assemble_bie(nodes: ObstacleNodes, medium: MediumParams, b2_operator,
                 kernel_ctx=None) -> DenseOperator:
    """Collocation matrix of I + K - iS for the sound-soft condition.

    The free-space parts of S and K use the log-singular rule; the smooth
    remainder of the rough-interface kernel enters through the periodic
    trapezoid rule, with finite-difference normal derivatives for K.
    """
    if np.any(nodes.positions[:, 1] >= 0.0):
        raise ConfigurationError("obstacle boundary must lie in the lower "
                                 "half-plane")
    if kernel_ctx is None:
        kernel_ctx = build_rough_kernel_context(nodes, b2_operator, medium)
    S, K = layer_matrices(nodes, medium.kappa2)
    rho, drho = _remainder_blocks(nodes, kernel_ctx)
    M = nodes.n // 2
    trap = (np.pi / M) * nodes.jacobians[None, :]
    # dG/dnu(y) differentiates in the source point: the FD shift moved y
    S = S + 2.0 * rho * trap
    K = K + 2.0 * drho * trap
    op = DenseOperator(np.eye(nodes.n, dtype=complex) + K - 1j * S)
    op.nodes = nodes
    op.kernel_ctx = kernel_ctx
    op.medium = medium
    op.b2 = b2_operator
    op.ansatz = "combined"
    return op


def solve_density(operator: DenseOperator,
                  incident: np.ndarray) -> BoundaryDensity:
    """Solve (I + K - iS) psi = -2 * incident for the sound-soft density."""
    psi = operator.solve(-2.0 * np.asarray(incident, complex))
    return BoundaryDensity(nodes=operator.nodes, psi=psi, operator=operator,
                           ansatz="combined")


def neumann_impedance_solve(nodes: ObstacleNodes,
                            medium: MediumParams, b2_operator,
                            incident: np.ndarray,
                            incident_normal: np.ndarray,
                            lam: Union[float, np.ndarray] = 0.0,
                            kernel_ctx=None) -> BoundaryDensity:
    """Single-layer solve of (I - K' - i*lam*S) psi = 2(dU/dnu + i*lam*U).

    lam = 0 is the Neumann condition; lam > 0 the impedance condition.
    """
    lam = np.broadcast_to(np.asarray(lam, float), (nodes.n,))
    if np.any(lam < 0.0):
        raise ConfigurationError("impedance must be nonnegative")
    if kernel_ctx is None:
        kernel_ctx = build_rough_kernel_context(nodes, b2_operator, medium)
    S, Kp = layer_matrices(nodes, medium.kappa2, adjoint=True)
    rho, _ = _remainder_blocks(nodes, kernel_ctx)
    # adjoint double layer differentiates in the evaluation point: shift x
    center, plus, minus, delta = kernel_ctx
    nu = nodes.normals
    drho_x = (center.smooth_part(nodes.positions + delta * nu)
              - center.smooth_part(nodes.positions - delta * nu)) \
        / (2.0 * delta)
    M = nodes.n // 2
    trap = (np.pi / M) * nodes.jacobians[None, :]
    S = S + 2.0 * rho * trap
    Kp = Kp + 2.0 * drho_x * trap
    op = DenseOperator(np.eye(nodes.n, dtype=complex) - Kp
                       - 1j * lam[:, None] * S)
    op.nodes = nodes
    op.kernel_ctx = kernel_ctx
    op.medium = medium
    op.b2 = b2_operator
    op.ansatz = "single"
    rhs = 2.0 * (np.asarray(incident_normal, complex)
                 + 1j * lam * np.asarray(incident, complex))
    psi = op.solve(rhs)
    return BoundaryDensity(nodes=nodes, psi=psi, operator=op,
                           ansatz="single", impedance=lam)


def scattered_from_density(density: BoundaryDensity,
                           X: np.ndarray) -> np.ndarray:
    """Radiated field of a boundary density at points X away from dD.

    Combined ansatz: w = int (dG/dnu(y) - iG) psi ds; single-layer ansatz:
    w = int G psi ds.  Points closer to dD than the node spacing trigger an
    accuracy warning (the trapezoid rule degrades there).
    """
    X = np.atleast_2d(np.asarray(X, float))
    nodes = density.nodes
    op = density.operator
    center, plus, minus, delta = op.kernel_ctx
    d = np.hypot(X[:, 0][:, None] - nodes.positions[None, :, 0],
                 X[:, 1][:, None] - nodes.positions[None, :, 1])
    if np.min(d) < nodes.spacing:
        warnings.warn("evaluation point within one node spacing of the "
                      "obstacle boundary; quadrature accuracy degrades",
                      stacklevel=2)
    G = center.full(X)
    M = nodes.n // 2
    wts = (np.pi / M) * nodes.jacobians * density.psi
    if density.ansatz == "single":
        return G @ wts
    dG = (plus.full(X) - minus.full(X)) / (2.0 * delta)
    return (dG - 1j * G) @ wts


def boundary_total_field(density: BoundaryDensity, t: np.ndarray,
                         background: np.ndarray) -> np.ndarray:
    """Total field on dD at off-node parameters t (sound-soft check).

    Uses the boundary limit of the combined potential: the singular rule
    evaluated at arbitrary t plus the trigonometrically interpolated jump
    term psi(t)/2.
    """
    t = np.asarray(t, float)
    nodes = density.nodes
    op = density.operator
    medium = op.medium
    center, plus, minus, delta = op.kernel_ctx
    S, K = layer_matrices(nodes, medium.kappa2, t=t)
    X = nodes.curve.point(t)
    rho = center.smooth_part(X)
    drho = (plus.smooth_part(X) - minus.smooth_part(X)) / (2.0 * delta)
    M = nodes.n // 2
    trap = (np.pi / M) * nodes.jacobians[None, :]
    S = S + 2.0 * rho * trap
    K = K + 2.0 * drho * trap
    # trigonometric interpolation of the density at t
    coeffs = np.fft.fft(density.psi) / nodes.n
    k = np.fft.fftfreq(nodes.n, d=1.0 / nodes.n)
    interp = (np.exp(1j * np.outer(t, k)) @ coeffs)
    w = 0.5 * (K - 1j * S) @ density.psi + 0.5 * interp
    return np.asarray(background, complex) + w


# ---------------------------------------------------------------------------
# Penetrable obstacle
# ---------------------------------------------------------------------------
@dataclass
class PenetrableMedium:
    """Refractive-index profile supported on the obstacle mesh."""

    mesh: RegionMesh
    n: Union[complex, np.ndarray]

    def __post_init__(self):
        n = np.broadcast_to(np.asarray(self.n, complex), (self.mesh.n,))
        if np.any(n.real <= 0.0) or np.any(n.imag < 0.0):
            raise ConfigurationError("need Re(n) > 0 and Im(n) >= 0")
        object.__setattr__(self, "n_values", n)

    @property
    def m_values(self) -> np.ndarray:
        return 1.0 - self.n_values


def solve_penetrable(medium: MediumParams, pen: PenetrableMedium,
                     source: SourceSpec, b2_operator) -> GridSolution:
    """Solve u + k2^2 int_D G(x,y;rough) m(y) u(y) dy = U(x,xs;rough) on D.

    The kernel's local singularity on D is the free-space k2 kernel, so the
    diagonal uses the same log-extracted cell average as the volume stages.
    """
    mesh = pen.mesh
    kernel = RoughKernel(b2_operator, medium, mesh.centers)
    G = kernel.full(mesh.centers, y_weights=mesh.weights)
    kap2 = medium.kappa2 ** 2
    A = np.eye(mesh.n, dtype=complex) \
        + kap2 * G * (pen.m_values * mesh.weights)[None, :]
    op = DenseOperator(A)
    from .ls_volume import solve_stage2, extend_stage2_many
    sol_bg = solve_stage2(source, b2_operator, b2_operator.mesh, medium)
    rhs = extend_stage2_many(sol_bg, mesh.centers, medium, b2_operator)
    values = op.solve(rhs)
    return GridSolution(mesh=mesh, values=values, source=source,
                        stage="rough", aux={"kernel": kernel, "pen": pen,
                                            "background": sol_bg,
                                            "medium": medium,
                                            "b2": b2_operator})


def penetrable_field(sol: GridSolution, X: np.ndarray,
                     total: bool = True) -> np.ndarray:
    """Field of the penetrable solve at arbitrary points.

    total=False subtracts the free-space incident wave (same side as the
    source), giving the scattered part.
    """
    from .ls_volume import extend_stage2_many
    X = np.atleast_2d(np.asarray(X, float))
    pen = sol.aux["pen"]
    medium = sol.aux["medium"]
    kernel = sol.aux["kernel"]
    G = kernel.full(X, y_weights=pen.mesh.weights)
    bg = extend_stage2_many(sol.aux["background"], X, medium, sol.aux["b2"],
                            total=total)
    kap2 = medium.kappa2 ** 2
    return bg - kap2 * G @ (pen.m_values * pen.mesh.weights * sol.values)
