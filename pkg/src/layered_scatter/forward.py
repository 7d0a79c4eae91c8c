"""End-to-end forward solver: background field through the nested volume
stages, obstacle correction, near-field data synthesis on the receiver
line, and the singular-source experiments.

A ForwardSolver builds every mesh, factorization and kernel-column set for
a scene exactly once; solving for additional sources then reuses them.
Dataset synthesis distributes independent sources over a thread pool and
merges the rows in source order, so the output is deterministic regardless
of the worker count.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, GeometryError
from .geometry import (
    ArcInterface,
    InterfaceProfile,
    ObstacleCurve,
    ReceiverLine,
    RegionMesh,
    SceneGeometry,
    build_region_mesh,
    default_arc_radius,
    obstacle_nodes,
)
from .layered_green import MediumParams, PlanarGreen, SourceSpec
from .ls_volume import (
    assemble_B1_operator,
    assemble_B2_operator,
    extend_stage2_many,
    solve_stage2,
)
from .obstacle import (
    PenetrableMedium,
    assemble_bie,
    build_rough_kernel_context,
    neumann_impedance_solve,
    penetrable_field,
    scattered_from_density,
    solve_density,
    solve_penetrable,
)
from .specfun import fundamental_solution, fundamental_solution_grad

_FD_STEP = 1e-4          # first derivatives of smooth evaluated fields
_TRAPEZOID_POINTS = 64   # nodes on the small circle of the reciprocity check


def default_thread_count() -> int:
    """Worker count from LAYERED_SCATTER_THREADS, defaulting to 1."""
    raw = os.environ.get("LAYERED_SCATTER_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


# ---------------------------------------------------------------------------
# Scene configuration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ObstacleSpec:
    """Obstacle shape plus boundary/transmission condition.

    condition is one of "sound_soft", "neumann", "impedance" (with lam > 0)
    or "penetrable" (with index n); boundary_M controls the 2M boundary
    nodes, cell_size the penetrable volume mesh.
    """

    curve: ObstacleCurve
    condition: str = "sound_soft"
    lam: float = 0.0
    n: Optional[complex] = None
    boundary_M: int = 32
    cell_size: float = 0.05

    def __post_init__(self):
        if self.condition not in ("sound_soft", "neumann", "impedance",
                                  "penetrable"):
            raise ConfigurationError(
                f"unknown obstacle condition {self.condition!r}")
        if self.condition == "impedance" and not self.lam > 0.0:
            raise ConfigurationError("impedance condition needs lam > 0")
        if self.condition == "penetrable" and self.n is None:
            raise ConfigurationError("penetrable condition needs an index n")


@dataclass(frozen=True)
class SceneConfig:
    """Everything that defines one forward problem except the sources."""

    medium: MediumParams
    profile: InterfaceProfile = field(default_factory=InterfaceProfile)
    arc_radius: Optional[float] = None
    obstacle: Optional[ObstacleSpec] = None
    receivers: Optional[ReceiverLine] = None
    cell_size: float = 0.1
    subsample: int = 4
    quad_tol: float = 1e-8

    def arc(self) -> ArcInterface:
        R = self.arc_radius
        if R is None:
            R = default_arc_radius(self.profile)
        return ArcInterface(R)

    def geometry(self) -> SceneGeometry:
        curve = self.obstacle.curve if self.obstacle is not None else None
        return SceneGeometry(profile=self.profile, arc=self.arc(),
                             obstacle=curve, receivers=self.receivers)


@dataclass(frozen=True)
class NearFieldRecord:
    """One synthesized scattered-field sample u^s(x, xs)."""

    source_index: int
    source_position: Tuple[float, float]
    receiver: Tuple[float, float]
    value: complex


# ---------------------------------------------------------------------------
# Field evaluator
# ---------------------------------------------------------------------------
class FieldEvaluator:
    """Total and scattered fields of one solved forward problem.

    Both evaluators accept a single point or an (n, 2) array.  The
    scattered field subtracts the free-space incident wave of the source,
    so in the upper medium it is the outgoing part measured by receivers.
    """

    def __init__(self, solver: "ForwardSolver", source: SourceSpec,
                 background, correction):
        self._solver = solver
        self.source = source
        self._background = background
        self._correction = correction

    def _as_points(self, X):
        X = np.asarray(X, float)
        single = X.ndim == 1
        return np.atleast_2d(X), single

    def total(self, X) -> Union[complex, np.ndarray]:
        """Total field u = background + obstacle correction."""
        pts, single = self._as_points(X)
        s = self._solver
        if s.config.obstacle is not None \
                and s.config.obstacle.condition == "penetrable":
            out = penetrable_field(self._correction, pts)
        else:
            out = extend_stage2_many(self._background, pts, s.medium, s.b2)
            if self._correction is not None:
                out = out + scattered_from_density(self._correction, pts)
        return complex(out[0]) if single else out

    def incident(self, X) -> Union[complex, np.ndarray]:
        """Free-space incident wave of the source (upper wavenumber)."""
        pts, single = self._as_points(X)
        kappa = self._solver.medium.kappa_at(self.source.position[1])
        out = np.array([self.source.incident(p, kappa) for p in pts])
        return complex(out[0]) if single else out

    def scattered(self, X) -> Union[complex, np.ndarray]:
        """u^s = u - u^inc, with the free-space wave cancelled inside the
        extension formulas so points on the source position stay finite."""
        pts, single = self._as_points(X)
        s = self._solver
        if s.config.obstacle is not None \
                and s.config.obstacle.condition == "penetrable":
            out = penetrable_field(self._correction, pts, total=False)
        else:
            out = extend_stage2_many(self._background, pts, s.medium, s.b2,
                                     total=False)
            if self._correction is not None:
                out = out + scattered_from_density(self._correction, pts)
        return complex(out[0]) if single else out


# ---------------------------------------------------------------------------
# Forward solver
# ---------------------------------------------------------------------------
class ForwardSolver:
    """Scene-level state: meshes, factorizations, kernel columns.

    Building one is the expensive step; solve() per source reuses all of
    it.  All held state is immutable after construction, so concurrent
    solve() calls are safe.
    """

    def __init__(self, config: SceneConfig):
        self.config = config
        self.medium = config.medium
        self.scene = config.geometry()
        self.green = PlanarGreen(self.medium, config.quad_tol)
        self.mesh_B1 = build_region_mesh("B1", self.scene, config.cell_size,
                                         config.subsample)
        self.mesh_B2 = build_region_mesh("B2", self.scene, config.cell_size,
                                         config.subsample)
        self.stage1 = assemble_B1_operator(self.mesh_B1, self.medium,
                                           tol=config.quad_tol,
                                           green=self.green)
        self.b2 = assemble_B2_operator(self.mesh_B2, self.medium, self.stage1)
        self.stage1.factorize()
        self.b2.factorize()

        self.nodes = None
        self.kernel_ctx = None
        self.bie_operator = None
        self.pen = None
        spec = config.obstacle
        if spec is not None and spec.condition != "penetrable":
            self.nodes = obstacle_nodes(spec.curve, spec.boundary_M)
            self.kernel_ctx = build_rough_kernel_context(
                self.nodes, self.b2, self.medium)
            if spec.condition == "sound_soft":
                self.bie_operator = assemble_bie(
                    self.nodes, self.medium, self.b2,
                    kernel_ctx=self.kernel_ctx)
                self.bie_operator.factorize()
        elif spec is not None:
            mesh_D = build_region_mesh("D_penetrable", self.scene,
                                       spec.cell_size, config.subsample)
            self.pen = PenetrableMedium(mesh_D, spec.n)

    # -- per-source solve ---------------------------------------------------
    def solve(self, source: SourceSpec) -> FieldEvaluator:
        """Background stages plus obstacle correction for one source."""
        spec = self.config.obstacle
        if spec is not None and spec.condition == "penetrable":
            sol = solve_penetrable(self.medium, self.pen, source, self.b2)
            return FieldEvaluator(self, source, sol.aux["background"], sol)

        background = solve_stage2(source, self.b2, self.mesh_B2, self.medium)
        correction = None
        if spec is not None:
            P = self.nodes.positions
            inc = extend_stage2_many(background, P, self.medium, self.b2)
            if spec.condition == "sound_soft":
                correction = solve_density(self.bie_operator, inc)
            else:
                nu = self.nodes.normals
                h = _FD_STEP * spec.curve.diameter()
                up = extend_stage2_many(background, P + h * nu,
                                        self.medium, self.b2)
                um = extend_stage2_many(background, P - h * nu,
                                        self.medium, self.b2)
                dinc = (up - um) / (2.0 * h)
                lam = spec.lam if spec.condition == "impedance" else 0.0
                correction = neumann_impedance_solve(
                    self.nodes, self.medium, self.b2, inc, dinc, lam=lam,
                    kernel_ctx=self.kernel_ctx)
        return FieldEvaluator(self, source, background, correction)


def forward_solve(config: SceneConfig, source: SourceSpec):
    """One-shot convenience wrapper: (evaluator, near-field records).

    Records are produced only when the scene has a receiver line.
    """
    solver = ForwardSolver(config)
    evaluator = solver.solve(source)
    records = []
    if config.receivers is not None:
        pts = config.receivers.points()
        us = evaluator.scattered(pts)
        records = [NearFieldRecord(0, source.position,
                                   (float(p[0]), float(p[1])), complex(v))
                   for p, v in zip(pts, us)]
    return evaluator, records


def synthesize_dataset(config: SceneConfig, sources: Sequence[SourceSpec],
                       receivers: Optional[ReceiverLine] = None,
                       threads: Optional[int] = None,
                       solver: Optional[ForwardSolver] = None):
    """Scattered-field table over all (source, receiver) pairs.

    Rows are source-major: all receivers of source 0, then source 1, and so
    on, independent of the worker count.
    """
    if receivers is None:
        receivers = config.receivers
    if receivers is None:
        raise ConfigurationError("dataset synthesis needs a receiver line")
    if solver is None:
        solver = ForwardSolver(config)
    pts = receivers.points()
    if threads is None:
        threads = default_thread_count()

    def one(source):
        return solver.solve(source).scattered(pts)

    if threads > 1 and len(sources) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            columns = list(pool.map(one, sources))
    else:
        columns = [one(s) for s in sources]

    records = []
    for i, (source, us) in enumerate(zip(sources, columns)):
        for p, v in zip(pts, us):
            records.append(NearFieldRecord(i, source.position,
                                           (float(p[0]), float(p[1])),
                                           complex(v)))
    return records


# ---------------------------------------------------------------------------
# Singular-source blow-up experiment
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class BlowupSequenceConfig:
    """Source sequence marching onto an interface point z*.

    z_n = z* + (delta0/n) nu(z*) with nu the upward unit normal of the
    interface graph; the monitored quantity is the squared L^2 norm over
    D' = B_eps0(z*) ∩ {below the interface} of the nu-directional
    derivative of the free-space kernel centered at z_n.
    """

    z_star: Tuple[float, float]
    delta0: float = 0.1
    eps0: float = 0.5
    n_max: int = 64
    min_cell: Optional[float] = None   # finest cell near z*; default derived

    def __post_init__(self):
        if not (self.delta0 > 0.0 and self.eps0 > 0.0):
            raise ConfigurationError("delta0 and eps0 must be positive")
        if self.n_max < 4:
            raise ConfigurationError("need n_max >= 4")
        if self.delta0 >= self.eps0:
            raise ConfigurationError(
                "delta0 must be below eps0 so every z_n stays inside the ball")


def _graded_cells(z_star, eps0, min_cell):
    """Quadtree cells of the square around z*, graded toward the center.

    A cell is split while its size exceeds both min_cell and a fixed
    fraction of its distance to z*; returns (centers, sizes).
    """
    z = np.asarray(z_star, float)
    out_c, out_s = [], []
    stack = [(z[0] - eps0, z[1] - eps0, 2.0 * eps0)]
    while stack:
        x, y, s = stack.pop()
        c = np.array([x + 0.5 * s, y + 0.5 * s])
        dist = np.hypot(c[0] - z[0], c[1] - z[1])
        if s > min_cell and s > 0.5 * max(dist - 0.7 * s, 0.0):
            h = 0.5 * s
            stack.extend([(x, y, h), (x + h, y, h),
                          (x, y + h, h), (x + h, y + h, h)])
        else:
            out_c.append(c)
            out_s.append(s)
    return np.array(out_c), np.array(out_s)


def blowup_mesh(profile: InterfaceProfile, cfg: BlowupSequenceConfig,
                subsample: int = 4) -> RegionMesh:
    """Graded midpoint mesh of D' = B_eps0(z*) ∩ {x2 < f(x1)}."""
    min_cell = cfg.min_cell
    if min_cell is None:
        min_cell = (cfg.delta0 / cfg.n_max) / 4.0
    centers, sizes = _graded_cells(cfg.z_star, cfg.eps0, min_cell)
    z = np.asarray(cfg.z_star, float)

    def inside(pts):
        r = np.hypot(pts[..., 0] - z[0], pts[..., 1] - z[1])
        return (r < cfg.eps0) & (pts[..., 1] < profile(pts[..., 0]))

    keep = inside(centers)
    centers, sizes = centers[keep], sizes[keep]
    off = (np.arange(subsample) + 0.5) / subsample - 0.5
    OX, OY = np.meshgrid(off, off, indexing="ij")
    sub = centers[:, None, :] + sizes[:, None, None] \
        * np.stack([OX.ravel(), OY.ravel()], axis=-1)[None, :, :]
    frac = np.mean(inside(sub), axis=1)
    weights = sizes ** 2 * frac
    pos = weights > 0.0
    return RegionMesh(region_tag="D_prime", cell_size=float(np.min(sizes)),
                      origin=(z[0] - cfg.eps0, z[1] - cfg.eps0),
                      centers=centers[pos], weights=weights[pos])


def blowup_experiment(config: SceneConfig, cfg: BlowupSequenceConfig,
                      mesh: Optional[RegionMesh] = None) -> dict:
    """Norms N_n of the nu-directional kernel derivative as z_n -> z*.

    Returns {"rows": [(n, N_n), ...], "exponent": fitted log-log slope,
    "ratio": N_{n_max}/N_4}.  Divergence is reported, not asserted.
    """
    profile = config.profile
    z = np.asarray(cfg.z_star, float)
    f_at = profile(z[0])
    if abs(z[1] - f_at) > 1e-9:
        raise GeometryError("z* must lie on the interface graph")
    nu = np.asarray(profile.upward_normal(z[0]))
    if mesh is None:
        mesh = blowup_mesh(profile, cfg, subsample=config.subsample)
    kappa1 = config.medium.kappa1

    from .specfun import grad_phi_matrix
    rows = []
    min_size_near = mesh.cell_size
    for n in range(1, cfg.n_max + 1):
        zn = z + (cfg.delta0 / n) * nu
        dx = mesh.centers - zn[None, :]
        r = np.hypot(dx[:, 0], dx[:, 1])
        if np.min(r) < 2.0 * min_size_near:
            warnings.warn("blow-up source z_%d is within two finest cells "
                          "of the quadrature mesh; refine min_cell" % n,
                          stacklevel=2)
        grad = grad_phi_matrix(kappa1, dx, r)
        vals = grad[:, 0] * nu[0] + grad[:, 1] * nu[1]
        rows.append((n, float(np.sum(mesh.weights * np.abs(vals) ** 2))))

    ns = np.array([r[0] for r in rows], float)
    Ns = np.array([r[1] for r in rows], float)
    tail = ns >= max(4, cfg.n_max // 4)
    slope = np.polyfit(np.log(ns[tail]), np.log(Ns[tail]), 1)[0]
    n4 = Ns[3] if cfg.n_max >= 4 else Ns[0]
    return {"rows": rows, "exponent": float(slope),
            "ratio": float(Ns[-1] / n4), "mesh_cells": mesh.n}


# ---------------------------------------------------------------------------
# Mixed reciprocity check
# ---------------------------------------------------------------------------
def _grad_kernel_derivative(kappa: float, y, c, ell: int) -> np.ndarray:
    """Gradient in y of the direction-ell derivative of the free-space
    kernel centered at c (closed form, no finite differences)."""
    from .specfun import hankel1_0, hankel1_1
    d = np.asarray(y, float) - np.asarray(c, float)
    r = float(np.hypot(d[0], d[1]))
    z = kappa * r
    h1 = hankel1_1(z)
    h1p = hankel1_0(z) - h1 / z
    e = np.zeros(2)
    e[ell - 1] = 1.0
    return -0.25j * kappa * (kappa * h1p * (d[ell - 1] / r) * (d / r)
                             + h1 * (e / r - d[ell - 1] * d / r ** 3))


def mixed_reciprocity_check(config: SceneConfig, xs1, xs2, ell: int,
                            eps: float = 1e-2,
                            solver: Optional[ForwardSolver] = None) -> dict:
    """Both sides of the monopole/dipole reciprocity identity.

    Left: total field at xs1 of the direction-ell dipole at xs2.  Right:
    trapezoid quadrature over the circle of radius eps around xs2 of
    d(u~inc)/dnu * u - du/dnu * u~inc, with u the total monopole field of
    the source at xs1 and finite-difference normal derivatives of u.
    """
    xs1 = np.asarray(xs1, float)
    xs2 = np.asarray(xs2, float)
    if np.hypot(*(xs1 - xs2)) <= 2.0 * eps:
        raise GeometryError("source points closer than the quadrature circle")
    if solver is None:
        solver = ForwardSolver(config)
    profile = config.profile
    gap = abs(xs2[1] - profile(xs2[0]))
    if gap <= eps:
        raise GeometryError("quadrature circle intersects the interface")
    if config.obstacle is not None:
        t = np.linspace(0.0, 2.0 * np.pi, 129)[:-1]
        bd = config.obstacle.curve.point(t)
        if np.min(np.hypot(bd[:, 0] - xs2[0], bd[:, 1] - xs2[1])) <= eps:
            raise GeometryError("quadrature circle intersects the obstacle")

    kappa1 = config.medium.kappa1
    dip = SourceSpec("dipole", (float(xs2[0]), float(xs2[1])), ell)
    left = solver.solve(dip).total(xs1)

    mono = solver.solve(SourceSpec("monopole", (float(xs1[0]), float(xs1[1]))))
    th = np.arange(_TRAPEZOID_POINTS) * (2.0 * np.pi / _TRAPEZOID_POINTS)
    # normal of the excised ball, pointing into it (outward for the domain)
    nu = -np.stack([np.cos(th), np.sin(th)], axis=-1)
    Y = xs2[None, :] - eps * nu

    u = mono.total(Y)
    h = _FD_STEP
    du = (mono.total(Y + h * nu) - mono.total(Y - h * nu)) / (2.0 * h)
    uinc_t = np.array([fundamental_solution_grad(kappa1, y, xs2, ell)
                       for y in Y])
    duinc_t = np.array([
        _grad_kernel_derivative(kappa1, y, xs2, ell) @ n_
        for y, n_ in zip(Y, nu)])
    ds = eps * (2.0 * np.pi / _TRAPEZOID_POINTS)
    right = complex(np.sum((duinc_t * u - du * uinc_t) * ds))
    mismatch = abs(left - right) / max(abs(left), abs(right), 1e-300)
    return {"left": complex(left), "right": right, "mismatch": float(mismatch)}
