#!/usr/bin/env python3
"""Compare the solver chain against its independent oracles and print a
small report: series-solution agreement for a circle in free space,
the flat-scene composition identity, and reciprocity at three levels.

All comparisons here are also enforced (with tolerances) by the test
suite; this script exists to eyeball the actual numbers.
"""

import sys

import numpy as np

from layered_scatter.forward import ForwardSolver, ObstacleSpec, SceneConfig
from layered_scatter.geometry import ObstacleCurve, ReceiverLine
from layered_scatter.layered_green import (
    MediumParams,
    PlanarGreen,
    SourceSpec,
    green_planar_scattered,
)
from layered_scatter.ls_volume import green_arc, green_rough_columns
from layered_scatter.verify import mie_series_circle


def mie_comparison() -> None:
    circle = ObstacleCurve("circle", (0.0, -2.0), 0.5)
    src = (2.0, -2.0)
    for condition in ("sound_soft", "neumann"):
        config = SceneConfig(
            medium=MediumParams(2.0, 2.0), arc_radius=1.0, cell_size=0.25,
            obstacle=ObstacleSpec(curve=circle, condition=condition,
                                  boundary_M=32))
        ev = ForwardSolver(config).solve(SourceSpec("monopole", src))
        th = np.linspace(0.0, 2.0 * np.pi, 9)[:-1]
        pts = np.stack([1.4 * np.cos(th), -2.0 + 1.4 * np.sin(th)], axis=-1)
        errs = [abs(v - mie_series_circle(condition, 0.5, 2.0, src,
                                          tuple(p), center=(0.0, -2.0)))
                for p, v in zip(pts, ev.scattered(pts))]
        print("circle %-11s vs series: max error %.2e"
              % (condition, max(errs)))


def composition_identity() -> None:
    medium = MediumParams(1.0, 1.5)
    src = SourceSpec("monopole", (0.3, 1.2))
    config = SceneConfig(medium=medium, arc_radius=1.0, cell_size=0.05,
                         receivers=ReceiverLine(2.0, 3.0, 11))
    ev = ForwardSolver(config).solve(src)
    pts = config.receivers.points()
    errs = [abs(v - green_planar_scattered(tuple(p), src.position, medium))
            for p, v in zip(pts, ev.scattered(pts))]
    print("flat-scene composition identity: max error %.2e" % max(errs))


def reciprocity() -> None:
    medium = MediumParams(1.0, 1.5)
    green = PlanarGreen(medium, 1e-10)
    x, y = (0.3, 0.7), (-0.2, 1.1)
    a = green.scattered(x, y)
    print("planar reciprocity defect: %.2e"
          % (abs(a - green.scattered(y, x)) / abs(a)))

    from layered_scatter.geometry import InterfaceProfile
    config = SceneConfig(medium=medium,
                         profile=InterfaceProfile(((0.0, 1.0, 0.3),)),
                         arc_radius=2.6, cell_size=0.2)
    solver = ForwardSolver(config)
    a = green_arc((0.4, 0.6), (-0.7, 0.9), medium, solver.stage1)
    b = green_arc((-0.7, 0.9), (0.4, 0.6), medium, solver.stage1)
    print("arc-level reciprocity defect: %.2e" % (abs(a - b) / abs(a)))

    p, q = np.array([[0.43, 1.07]]), np.array([[-0.81, 0.63]])
    a = green_rough_columns(p, solver.b2, medium, q)[0, 0]
    b = green_rough_columns(q, solver.b2, medium, p)[0, 0]
    print("rough-interface reciprocity defect: %.2e" % (abs(a - b) / abs(a)))


def main() -> int:
    mie_comparison()
    composition_identity()
    reciprocity()
    return 0


if __name__ == "__main__":
    sys.exit(main())
