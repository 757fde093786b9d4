"""Triangulations of the unit square, the L-shaped domain, and a disk.

All generators are deterministic: vertex numbering, triangle orientation and
refinement order are fully reproducible, so downstream matrix assembly is
bit-stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DOMAINS = ("unit_square", "l_shape", "disk")

DISK_RADIUS = 0.5


@dataclass(frozen=True)
class Mesh:
    """A conforming, positively oriented triangulation.

    Parameters
    ----------
    vertices : (nv, 2) float array
        Vertex coordinates.
    triangles : (nt, 3) int array
        Vertex indices per triangle, counter-clockwise.
    boundary_vertices : (nb,) int array
        Sorted indices of vertices on the domain boundary.
    boundary_edges : (ne, 2) int array
        Vertex index pairs of boundary edges.
    domain : str
        One of ``unit_square``, ``l_shape``, ``disk``.
    level : int
        Number of uniform refinements applied since generation.
    h : float
        Longest edge length.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertices: np.ndarray
    boundary_edges: np.ndarray
    domain: str
    level: int
    h: float

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]


def triangle_areas(mesh: Mesh) -> np.ndarray:
    """Signed area of every triangle (positive for CCW orientation)."""
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _edge_counts(triangles: np.ndarray) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            counts[key] = counts.get(key, 0) + 1
    return counts


def _boundary_from_triangles(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    counts = _edge_counts(triangles)
    edges = sorted(e for e, c in counts.items() if c == 1)
    bedges = np.array(edges, dtype=int).reshape(-1, 2)
    bverts = np.unique(bedges)
    return bverts, bedges


def _orient_ccw(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    out = triangles.copy()
    p = vertices[out]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(np.abs(area2) < 1e-15):
        raise ValueError("degenerate triangle in generated mesh")
    flip = area2 < 0
    out[flip] = out[flip][:, [0, 2, 1]]
    return out


def _max_edge_length(vertices: np.ndarray, triangles: np.ndarray) -> float:
    p = vertices[triangles]
    lengths = [
        np.hypot(*(p[:, i] - p[:, j]).T) for i, j in ((0, 1), (1, 2), (2, 0))
    ]
    return float(max(L.max() for L in lengths))


def _finish(vertices, triangles, domain, level, h=None) -> Mesh:
    triangles = _orient_ccw(vertices, np.asarray(triangles, dtype=int))
    bverts, bedges = _boundary_from_triangles(triangles)
    if h is None:
        h = _max_edge_length(vertices, triangles)
    return Mesh(
        vertices=np.asarray(vertices, dtype=float),
        triangles=triangles,
        boundary_vertices=bverts,
        boundary_edges=bedges,
        domain=domain,
        level=level,
        h=float(h),
    )


def _square_grid(n: int):
    """Tensor grid on the unit square, numbered lexicographically by (y, x)."""
    xs = np.arange(n + 1) / n
    X, Y = np.meshgrid(xs, xs)
    return np.column_stack([X.ravel(), Y.ravel()])


def _split_cell(i: int, j: int, n: int):
    """Two triangles of cell (i, j), diagonal from lower-left to upper-right."""
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    return (v00, v10, v11), (v00, v11, v01)


def make_mesh(domain: str, n: int) -> Mesh:
    """Build the level-0 structured mesh of a supported domain.

    ``unit_square`` and ``l_shape`` use an n x n grid of cells, each split
    along the lower-left to upper-right diagonal.  ``disk`` builds a fan of
    concentric vertex rings with all boundary vertices exactly on the circle
    of radius 1/2; its edge lengths are roughly 1/n.
    """
    if domain not in DOMAINS:
        raise ValueError(f"unknown domain {domain!r}, expected one of {DOMAINS}")
    if n < 1:
        raise ValueError("n must be >= 1")

    if domain == "unit_square":
        vertices = _square_grid(n)
        triangles = []
        for j in range(n):
            for i in range(n):
                triangles.extend(_split_cell(i, j, n))
        return _finish(vertices, triangles, domain, 0, h=np.sqrt(2.0) / n)

    if domain == "l_shape":
        if n % 2 != 0:
            raise ValueError("l_shape requires even n so (1/2, 1/2) is a vertex")
        grid = _square_grid(n)
        keep_cell = [
            (i, j)
            for j in range(n)
            for i in range(n)
            if not (i >= n // 2 and j >= n // 2)
        ]
        used = sorted(
            {v for i, j in keep_cell for tri in _split_cell(i, j, n) for v in tri}
        )
        renumber = {old: new for new, old in enumerate(used)}
        vertices = grid[used]
        triangles = [
            tuple(renumber[v] for v in tri)
            for i, j in keep_cell
            for tri in _split_cell(i, j, n)
        ]
        return _finish(vertices, triangles, domain, 0, h=np.sqrt(2.0) / n)

    # disk: center vertex plus rings of 6m vertices at radius R*m/M
    R = DISK_RADIUS
    M = max(1, round(R * n))
    points = [(0.0, 0.0)]
    rings: list[list[int]] = [[0]]
    for m in range(1, M + 1):
        r = R * m / M
        ring = []
        for s in range(6 * m):
            ang = 2.0 * np.pi * s / (6 * m)
            ring.append(len(points))
            points.append((r * np.cos(ang), r * np.sin(ang)))
        rings.append(ring)
    triangles = []
    for m in range(1, M + 1):
        inner, outer = rings[m - 1], rings[m]
        if m == 1:
            for s in range(6):
                triangles.append((0, outer[s], outer[(s + 1) % 6]))
            continue
        ni, no = len(inner), len(outer)
        for s in range(6):  # one sector per hexagon side
            for t in range(m):
                o1 = outer[(s * m + t) % no]
                o2 = outer[(s * m + t + 1) % no]
                i1 = inner[(s * (m - 1) + t) % ni]
                triangles.append((o1, o2, i1))
                if t < m - 1:
                    i2 = inner[(s * (m - 1) + t + 1) % ni]
                    triangles.append((i1, o2, i2))
    mesh = _finish(np.array(points), triangles, domain, 0)
    # snap boundary vertices exactly onto the circle (guards rounding)
    verts = mesh.vertices.copy()
    bnd = mesh.boundary_vertices
    norms = np.hypot(verts[bnd, 0], verts[bnd, 1])
    verts[bnd] *= (R / norms)[:, None]
    return replace(mesh, vertices=verts)


def make_lattice_mesh(n: int) -> Mesh:
    """Offset-row triangular lattice on the unit square with spacing 1/n.

    Alternating rows are shifted by half a spacing, producing near-equilateral
    triangles away from the left/right edges.  This family has a noticeably
    smaller eigenvalue-error constant than the diagonal-split grid of
    :func:`make_mesh` at equal spacing, and is the generator used by the
    bundled convergence-study configurations.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rows: list[list[int]] = []
    points: list[tuple[float, float]] = []
    for j in range(n + 1):
        y = j / n
        if j % 2 == 0:
            xs = [i / n for i in range(n + 1)]
        else:
            xs = [0.0] + [(i + 0.5) / n for i in range(n)] + [1.0]
        rows.append(list(range(len(points), len(points) + len(xs))))
        points.extend((x, y) for x in xs)
    triangles = []
    for j in range(n):
        b, t = rows[j], rows[j + 1]
        if j % 2 == 0:  # bottom row has n+1 points, top row n+2
            triangles.append((b[0], t[1], t[0]))
            for i in range(n):
                triangles.append((b[i], b[i + 1], t[i + 1]))
            for i in range(1, n):
                triangles.append((b[i], t[i + 1], t[i]))
            triangles.append((b[n], t[n + 1], t[n]))
        else:  # mirrored strip
            triangles.append((b[0], b[1], t[0]))
            for i in range(n):
                triangles.append((t[i], b[i + 1], t[i + 1]))
            for i in range(n - 1):
                triangles.append((b[i + 1], b[i + 2], t[i + 1]))
            triangles.append((b[n], b[n + 1], t[n]))
    return _finish(np.array(points), triangles, "unit_square", 0)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: split every triangle into 4 via edge midpoints.

    For the disk, midpoints of boundary edges are projected radially back
    onto the circle of radius 1/2.  Parent vertices keep their indices;
    midpoints are appended in deterministic (triangle-loop) order.
    """
    vertices = list(map(tuple, mesh.vertices))
    midpoint: dict[tuple[int, int], int] = {}
    boundary_edge_set = {
        (min(a, b), max(a, b)) for a, b in mesh.boundary_edges
    }

    def mid(u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        idx = midpoint.get(key)
        if idx is None:
            x = 0.5 * (mesh.vertices[u] + mesh.vertices[v])
            if mesh.domain == "disk" and key in boundary_edge_set:
                x = x * (DISK_RADIUS / np.hypot(x[0], x[1]))
            idx = len(vertices)
            vertices.append((x[0], x[1]))
            midpoint[key] = idx
        return idx

    triangles = []
    for a, b, c in mesh.triangles:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        triangles.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])

    h = None if mesh.domain == "disk" else mesh.h / 2.0
    return _finish(np.array(vertices), triangles, mesh.domain, mesh.level + 1, h=h)


def mesh_quality(mesh: Mesh) -> tuple[float, float]:
    """Return ``(h_max, min_angle)`` with the angle in radians."""
    p = mesh.vertices[mesh.triangles]
    min_angle = np.inf
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cosang = (u * v).sum(axis=1) / (
            np.hypot(u[:, 0], u[:, 1]) * np.hypot(v[:, 0], v[:, 1])
        )
        min_angle = min(min_angle, np.arccos(np.clip(cosang, -1.0, 1.0)).min())
    return _max_edge_length(mesh.vertices, mesh.triangles), float(min_angle)


def save_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text mesh format.

    Header line ``nv nt nb``, then one ``x y boundary_flag`` line per vertex,
    then one ``i j k`` line per triangle (0-based indices).
    """
    flags = np.zeros(mesh.num_vertices, dtype=int)
    flags[mesh.boundary_vertices] = 1
    with open(path, "w") as f:
        f.write(f"{mesh.num_vertices} {mesh.num_triangles} {len(mesh.boundary_vertices)}\n")
        for (x, y), flag in zip(mesh.vertices, flags):
            f.write(f"{x:.17g} {y:.17g} {flag}\n")
        for a, b, c in mesh.triangles:
            f.write(f"{a} {b} {c}\n")


def load_mesh(path, domain: str = "unit_square", level: int = 0) -> Mesh:
    """Read the plain-text mesh format written by :func:`save_mesh`."""
    with open(path) as f:
        nv, nt, nb = map(int, f.readline().split())
        vertices = np.empty((nv, 2))
        flags = np.empty(nv, dtype=int)
        for i in range(nv):
            x, y, flag = f.readline().split()
            vertices[i] = (float(x), float(y))
            flags[i] = int(flag)
        triangles = np.array(
            [list(map(int, f.readline().split())) for _ in range(nt)], dtype=int
        )
    if flags.sum() != nb:
        raise ValueError("mesh file header inconsistent with boundary flags")
    mesh = _finish(vertices, triangles, domain, level)
    if not np.array_equal(mesh.boundary_vertices, np.flatnonzero(flags)):
        raise ValueError("boundary flags do not match mesh topology")
    return mesh
