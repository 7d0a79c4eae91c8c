"""Acoustic point-source scattering in a two-layered medium with a locally
rough interface and an optional embedded obstacle.

The solver chain is: planar-interface Sommerfeld integrals -> volume integral
equation transferring the planar interface to a circular-arc interface ->
second volume equation transferring the arc to the rough interface ->
boundary/volume equation for the embedded obstacle.
"""

from .errors import (
    AccuracyError,
    ConfigurationError,
    GeometryError,
    SingularityError,
    SolverError,
)
from .geometry import (
    ArcInterface,
    InterfaceProfile,
    ObstacleCurve,
    ReceiverLine,
    RegionMesh,
    SceneGeometry,
    build_region_mesh,
    classify_point,
    obstacle_nodes,
)
from .layered_green import MediumParams, PlanarGreen, SourceSpec, beta
from .ls_volume import (
    DenseOperator,
    GridSolution,
    assemble_B1_operator,
    assemble_B2_operator,
    extend_stage1,
    extend_stage1_many,
    extend_stage2,
    extend_stage2_many,
    green_arc,
    green_rough_columns,
    solve_stage1,
    solve_stage2,
)
from .obstacle import (
    BoundaryDensity,
    PenetrableMedium,
    RoughKernel,
    assemble_bie,
    boundary_total_field,
    layer_matrices,
    neumann_impedance_solve,
    penetrable_field,
    scattered_from_density,
    solve_density,
    solve_penetrable,
)
from .forward import (
    BlowupSequenceConfig,
    FieldEvaluator,
    ForwardSolver,
    NearFieldRecord,
    ObstacleSpec,
    SceneConfig,
    blowup_experiment,
    forward_solve,
    mixed_reciprocity_check,
    synthesize_dataset,
)
from .verify import (
    StencilProbe,
    helmholtz_residual,
    mie_interior_circle,
    mie_series_circle,
    radiation_probe,
    stencil_convergence_ratio,
)

__all__ = [
    "AccuracyError",
    "ConfigurationError",
    "GeometryError",
    "SingularityError",
    "SolverError",
    "ArcInterface",
    "InterfaceProfile",
    "ObstacleCurve",
    "ReceiverLine",
    "RegionMesh",
    "SceneGeometry",
    "build_region_mesh",
    "classify_point",
    "obstacle_nodes",
    "MediumParams",
    "PlanarGreen",
    "SourceSpec",
    "beta",
    "DenseOperator",
    "GridSolution",
    "assemble_B1_operator",
    "assemble_B2_operator",
    "extend_stage1",
    "extend_stage1_many",
    "extend_stage2",
    "extend_stage2_many",
    "green_arc",
    "green_rough_columns",
    "solve_stage1",
    "solve_stage2",
    "BoundaryDensity",
    "PenetrableMedium",
    "RoughKernel",
    "assemble_bie",
    "boundary_total_field",
    "layer_matrices",
    "neumann_impedance_solve",
    "penetrable_field",
    "scattered_from_density",
    "solve_density",
    "solve_penetrable",
    "BlowupSequenceConfig",
    "FieldEvaluator",
    "ForwardSolver",
    "NearFieldRecord",
    "ObstacleSpec",
    "SceneConfig",
    "blowup_experiment",
    "forward_solve",
    "mixed_reciprocity_check",
    "synthesize_dataset",
    "StencilProbe",
    "helmholtz_residual",
    "mie_interior_circle",
    "mie_series_circle",
    "radiation_probe",
    "stencil_convergence_ratio",
]
