"""Matrix assembly for the mixed eigenvalue formulation.

The discrete problem couples a displacement-difference field ``w`` (vanishing
on the boundary) with an auxiliary field ``p`` (free on the boundary), both in
the lowest-order vector Lagrange space.  The generalized eigenproblem reads
``A x = omega^2 B x`` for ``x = [w; p]`` with the block layout

    A = [[ K (all x int),  M_drho (all x all) ],
         [ 0,              K^T   (int x all)  ]]

    B = [[ M_rho0 (all x int),  0                  ],
         [ 0,                   M_rho1 (int x all) ]]

where ``K`` carries the elastic bilinear form and ``M_c`` a mass form with
coefficient ``c``.  Rows are tests against the full space (first block) and
against the boundary-constrained subspace (second block).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh

# dof order within one element: (v1x, v1y, v2x, v2y, v3x, v3y)
_MASS_SCALAR = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


@dataclass(frozen=True)
class ElasticParams:
    """Lame parameters of the isotropic stress law ``2 mu eps + lam tr(eps) I``."""

    mu: float
    lam: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("shear modulus mu must be positive")
        if not self.lam + self.mu > 0:
            raise ValueError("lam + mu must be positive")


@dataclass(frozen=True)
class DensityPair:
    """Constant mass densities of the background (rho0) and the scatterer (rho1).

    The optional bounds ``(q, Q)`` for rho0 and ``(qstar, Qstar)`` for rho1
    default to the constants themselves.  A non-intersecting condition
    (``Q <= 1 <= qstar`` or ``Qstar <= 1 <= q``) is checked and produces a
    warning — not an error — when violated, since the solver itself is
    sign-agnostic in ``rho0 - rho1``.
    """

    rho0: float
    rho1: float
    q: float = None
    Q: float = None
    qstar: float = None
    Qstar: float = None

    def __post_init__(self):
        if not (self.rho0 > 0 and self.rho1 > 0):
            raise ValueError("densities must be positive")
        if self.rho0 == self.rho1:
            raise ValueError("rho0 and rho1 must differ")
        for name, default in (
            ("q", self.rho0),
            ("Q", self.rho0),
            ("qstar", self.rho1),
            ("Qstar", self.rho1),
        ):
            if getattr(self, name) is None:
                object.__setattr__(self, name, default)
        ok = (self.Q <= 1.0 <= self.qstar) or (self.Qstar <= 1.0 <= self.q)
        if not ok:
            warnings.warn(
                "density bounds do not satisfy the non-intersecting condition; "
                "results remain valid but the standard theory does not apply",
                stacklevel=2,
            )


@dataclass(frozen=True)
class DofMap:
    """Bookkeeping between full and boundary-constrained vector dofs.

    Dofs are component-interleaved per vertex: vertex ``i`` owns dofs ``2i``
    (x component) and ``2i + 1`` (y component).
    """

    n_all: int
    n_interior: int
    all_to_interior: np.ndarray  # length n_all, -1 on boundary dofs
    interior_to_all: np.ndarray  # length n_interior

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> "DofMap":
        n_all = 2 * mesh.num_vertices
        interior_mask = np.ones(n_all, dtype=bool)
        interior_mask[2 * mesh.boundary_vertices] = False
        interior_mask[2 * mesh.boundary_vertices + 1] = False
        interior_to_all = np.flatnonzero(interior_mask)
        all_to_interior = np.full(n_all, -1, dtype=int)
        all_to_interior[interior_to_all] = np.arange(len(interior_to_all))
        return cls(n_all, len(interior_to_all), all_to_interior, interior_to_all)


@dataclass
class BlockSystem:
    """The assembled sparse pair (A, B) plus dof bookkeeping."""

    A: sp.csr_matrix
    B: sp.csr_matrix
    n_w: int  # number of w unknowns (interior dofs)
    n_p: int  # number of p unknowns (all dofs)
    dof_map: DofMap
    _factorization: object = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.n_w + self.n_p

    def factorization(self):
        """Sparse LU factorization of A, computed once and cached."""
        if self._factorization is None:
            from .eigensolve import sparse_lu_factor

            self._factorization = sparse_lu_factor(self.A)
        return self._factorization


def _element_geometry(coords: np.ndarray):
    """Return (area, grads) where grads[i] is the gradient of basis i."""
    coords = np.asarray(coords, dtype=float)
    d1 = coords[1] - coords[0]
    d2 = coords[2] - coords[0]
    det = d1[0] * d2[1] - d1[1] * d2[0]
    area = 0.5 * det
    if not area > 0:
        raise ValueError("triangle has non-positive area")
    # gradients of the barycentric basis functions
    g = np.array(
        [
            [coords[1, 1] - coords[2, 1], coords[2, 0] - coords[1, 0]],
            [coords[2, 1] - coords[0, 1], coords[0, 0] - coords[2, 0]],
            [coords[0, 1] - coords[1, 1], coords[1, 0] - coords[0, 0]],
        ]
    ) / det
    return area, g


def local_stiffness(coords, params: ElasticParams) -> np.ndarray:
    """Element matrix of ``2 mu (eps(w), eps(v)) + lam (div w, div v)``.

    Exact for linear elements (the integrand is constant); symmetric with the
    three rigid-body nodal fields spanning its kernel.
    """
    area, g = _element_geometry(coords)
    # strain-displacement matrix: rows (e_xx, e_yy, 2 e_xy)
    Bm = np.zeros((3, 6))
    for i in range(3):
        Bm[0, 2 * i] = g[i, 0]
        Bm[1, 2 * i + 1] = g[i, 1]
        Bm[2, 2 * i] = g[i, 1]
        Bm[2, 2 * i + 1] = g[i, 0]
    d = np.zeros(6)
    for i in range(3):
        d[2 * i] = g[i, 0]
        d[2 * i + 1] = g[i, 1]
    W = np.diag([2.0, 2.0, 1.0])  # 2 mu (exx^2 + eyy^2 + 2 exy^2)
    K = area * (params.mu * Bm.T @ W @ Bm + params.lam * np.outer(d, d))
    return 0.5 * (K + K.T)


def local_mass(coords, rho: float) -> np.ndarray:
    """Element mass matrix with constant density, block-diagonal per component."""
    area, _ = _element_geometry(coords)
    M = np.zeros((6, 6))
    M[0::2, 0::2] = rho * area * _MASS_SCALAR
    M[1::2, 1::2] = rho * area * _MASS_SCALAR
    return M


def _element_dofs(tri: np.ndarray) -> np.ndarray:
    dofs = np.empty(6, dtype=int)
    dofs[0::2] = 2 * tri
    dofs[1::2] = 2 * tri + 1
    return dofs


def assemble_operator(
    mesh: Mesh,
    kind: str,
    *,
    params: ElasticParams = None,
    rho=None,
    test_space: str = "all",
    trial_space: str = "all",
) -> sp.csr_matrix:
    """Assemble a global stiffness or mass matrix on restricted spaces.

    Parameters
    ----------
    kind : {"stiffness", "mass"}
        Which bilinear form to assemble; ``stiffness`` requires ``params``,
        ``mass`` requires ``rho`` (a constant or a callable evaluated at
        element centroids).
    test_space, trial_space : {"all", "interior"}
        Row / column restriction to the full space or the subspace of dofs
        away from the boundary.
    """
    if kind not in ("stiffness", "mass"):
        raise ValueError(f"unknown operator kind {kind!r}")
    if kind == "stiffness" and params is None:
        raise ValueError("stiffness assembly requires params")
    if kind == "mass" and rho is None:
        raise ValueError("mass assembly requires rho")
    for name, space in (("test_space", test_space), ("trial_space", trial_space)):
        if space not in ("all", "interior"):
            raise ValueError(f"{name} must be 'all' or 'interior'")

    dof_map = DofMap.from_mesh(mesh)
    rows, cols, vals = [], [], []
    for tri in mesh.triangles:
        coords = mesh.vertices[tri]
        if kind == "stiffness":
            ke = local_stiffness(coords, params)
        else:
            r = rho(coords.mean(axis=0)) if callable(rho) else rho
            ke = local_mass(coords, r)
        dofs = _element_dofs(tri)
        rdofs = dofs if test_space == "all" else dof_map.all_to_interior[dofs]
        cdofs = dofs if trial_space == "all" else dof_map.all_to_interior[dofs]
        for a in range(6):
            if rdofs[a] < 0:
                continue
            for b in range(6):
                if cdofs[b] < 0:
                    continue
                rows.append(rdofs[a])
                cols.append(cdofs[b])
                vals.append(ke[a, b])
    nrow = dof_map.n_all if test_space == "all" else dof_map.n_interior
    ncol = dof_map.n_all if trial_space == "all" else dof_map.n_interior
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(nrow, ncol)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble_block_system(
    mesh: Mesh, params: ElasticParams, densities: DensityPair
) -> BlockSystem:
    """Assemble the generalized eigenproblem ``A x = omega^2 B x``."""
    dof_map = DofMap.from_mesh(mesh)
    K_ai = assemble_operator(
        mesh, "stiffness", params=params, test_space="all", trial_space="interior"
    )
    M_drho = assemble_operator(mesh, "mass", rho=densities.rho0 - densities.rho1)
    M0_ai = assemble_operator(
        mesh, "mass", rho=densities.rho0, test_space="all", trial_space="interior"
    )
    M1_ia = assemble_operator(
        mesh, "mass", rho=densities.rho1, test_space="interior", trial_space="all"
    )
    A = sp.bmat([[K_ai, M_drho], [None, K_ai.T]], format="csr")
    B = sp.bmat([[M0_ai, None], [None, M1_ia]], format="csr")
    A.sort_indices()
    B.sort_indices()
    return BlockSystem(A=A, B=B, n_w=dof_map.n_interior, n_p=dof_map.n_all, dof_map=dof_map)


def solve_source_problem(system: BlockSystem, f: np.ndarray, g: np.ndarray):
    """Solve the discrete source problem for right-hand side fields (f, g).

    ``f`` is a nodal field on the interior dofs, ``g`` one on all dofs; the
    right-hand side is ``B [f; g]``.  Returns the unique solution ``(w, p)``.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != (system.n_w,) or g.shape != (system.n_p,):
        raise ValueError("right-hand side fields have wrong lengths")
    rhs = system.B @ np.concatenate([f, g])
    x = system.factorization().solve(rhs)
    return x[: system.n_w], x[system.n_w :]


def dump_matrix(matrix, path) -> None:
    """Write a sparse matrix as 0-based ``row col value`` triplets."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")
