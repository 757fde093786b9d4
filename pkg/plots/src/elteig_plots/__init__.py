"""Figure rendering for elteig export files."""

from .io import (
    EigenpairData,
    MapData,
    MeshData,
    SchemaError,
    TableData,
    read_eigenpair,
    read_map,
    read_mesh,
    read_table,
    sha256_of,
)
from .render import plot_convergence, plot_eigenfunction, plot_z0_contour

__version__ = "0.1.0"

__all__ = [
    "EigenpairData",
    "MapData",
    "MeshData",
    "SchemaError",
    "TableData",
    "read_eigenpair",
    "read_map",
    "read_mesh",
    "read_table",
    "sha256_of",
    "plot_convergence",
    "plot_eigenfunction",
    "plot_z0_contour",
    "__version__",
]
