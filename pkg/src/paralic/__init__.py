"""Finite element toolkit for paralic confinement in a two-chamber lagoon.

Computes the confinement field (renewal time of marine water) on a two-disk
domain joined by a narrow channel, and quantifies the error made by
truncating the domain at the channel interface and replacing the removed
chamber by a modeled exchange flux.
"""

__version__ = "0.1.0"

from .decomposition import (
    ChamberMeshes,
    ErrorStats,
    ReferenceRun,
    TruncatedRun,
    build_chamber_meshes,
    entrance_nodes,
    interface_flux_data,
    interface_nodes,
    linf_error,
    main_run,
    pointwise_interface_flux,
    reference_run,
    seg_run,
    truncation_error,
    variational_interface_flux,
)
from .elliptic import (
    FluxData,
    PhysicalParams,
    PotentialSolution,
    build_entrance_flux,
    solve_potential,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    PipelineResult,
    load_config,
    run_all,
    run_full_pipeline,
    run_table_c,
    run_table_diffusivity,
    run_table_uc,
    write_results_csv,
)
from .geometry import (
    ALL_PROFILES,
    GAMMA_IN,
    GAMMA_INTERFACE,
    GAMMA_ZERO,
    PROFILE_CONSTANT,
    PROFILE_EXACT_POINTWISE,
    PROFILE_EXACT_VARIATIONAL,
    PROFILE_POISEUILLE,
    REGION_MAIN,
    REGION_SEG,
    GeometryError,
    GeometryParams,
    InterfaceProfile,
    LagoonGeometry,
    analytic_areas,
    build_lagoon,
    equal_area_params,
    profile_weight,
)
from .meshing import (
    SEAM,
    MeshError,
    TriMesh,
    extract_submesh,
    quality_report,
    rectangle_mesh,
    triangulate,
)
from .sparselinalg import SolverError, SolveInfo
from .transport import (
    TransportConfig,
    TransportResult,
    max_cell_peclet,
    run_confinement,
)
from .vtkio import write_vtk
