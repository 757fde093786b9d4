"""Mixed finite-element solver for elastic interior transmission eigenvalues.

The package computes the eigenfrequencies at which two elastic media with a
common stress law but different mass densities admit fields with matching
Cauchy data, using a lowest-order mixed discretization, a zero-shift Krylov
eigensolver, and an analytic Bessel-determinant oracle on disks.
"""

from .assembly import (
    BlockSystem,
    DensityPair,
    DofMap,
    ElasticParams,
    assemble_block_system,
    assemble_operator,
    local_mass,
    local_stiffness,
    solve_source_problem,
)
from .eigensolve import (
    EigenPair,
    SolverOptions,
    arnoldi_dominant,
    dense_reference_eigs,
    reconstruct_uv,
    solve_transmission_eigs,
    sparse_lu_factor,
)
from .mesh import Mesh, make_lattice_mesh, make_mesh, mesh_quality, refine_uniform
from .oracle import (
    DiskProblem,
    Z0Map,
    bessel_j,
    bessel_j1_prime,
    find_real_roots,
    z0,
    z0_magnitude_map,
)
from .study import (
    ConvergenceTable,
    StudyConfig,
    convergence_statistics,
    match_eigenvalues,
    run_level,
    run_study,
)

__version__ = "0.1.0"

__all__ = [
    "BlockSystem",
    "ConvergenceTable",
    "DensityPair",
    "DiskProblem",
    "DofMap",
    "EigenPair",
    "ElasticParams",
    "Mesh",
    "SolverOptions",
    "StudyConfig",
    "Z0Map",
    "arnoldi_dominant",
    "assemble_block_system",
    "assemble_operator",
    "bessel_j",
    "bessel_j1_prime",
    "convergence_statistics",
    "dense_reference_eigs",
    "find_real_roots",
    "local_mass",
    "local_stiffness",
    "make_lattice_mesh",
    "make_mesh",
    "match_eigenvalues",
    "mesh_quality",
    "reconstruct_uv",
    "refine_uniform",
    "run_level",
    "run_study",
    "solve_source_problem",
    "solve_transmission_eigs",
    "sparse_lu_factor",
    "z0",
    "z0_magnitude_map",
]
