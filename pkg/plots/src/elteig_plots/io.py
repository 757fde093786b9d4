"""Readers for the solver's exported file formats.

This package is strictly downstream of the solver: everything it renders
comes from these four text formats, and nothing is ever recomputed.

* mesh export: header ``nv nt nb``, then ``x y flag`` per vertex, then
  ``i j k`` per triangle (0-based).
* eigenpair export: header ``omega_re omega_im residual``, then per vertex
  ``x y u1_re u1_im u2_re u2_im``.
* convergence table CSV: ``branch,level,h,omega_re,omega_im,rel_error,order,class``.
* dispersion map CSV: ``re,im,absz0``, row-major over an im x re grid.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np


class SchemaError(ValueError):
    """An input file does not conform to the documented schema."""


@dataclass
class MeshData:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3) int
    boundary_flags: np.ndarray  # (nv,) bool


@dataclass
class EigenpairData:
    omega: complex
    residual: float
    vertices: np.ndarray  # (nv, 2)
    u1: np.ndarray  # (nv,) complex
    u2: np.ndarray  # (nv,) complex


@dataclass
class TableData:
    # per branch index: list of dict rows in level order
    branches: dict = field(default_factory=dict)


@dataclass
class MapData:
    re: np.ndarray
    im: np.ndarray
    absz0: np.ndarray  # (n_im, n_re)


def sha256_of(*paths) -> str:
    """Comma-joined ``name:hexdigest`` summary of the input files."""
    parts = []
    for p in paths:
        h = hashlib.sha256()
        with open(p, "rb") as f:
            h.update(f.read())
        parts.append(f"{getattr(p, 'name', str(p)).rsplit('/', 1)[-1]}:{h.hexdigest()}")
    return ",".join(parts)


def read_mesh(path) -> MeshData:
    with open(path) as f:
        lines = [ln.split() for ln in f.read().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 3:
        raise SchemaError(f"{path}: expected 'nv nt nb' header")
    try:
        nv, nt, nb = (int(x) for x in lines[0])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-integer mesh header") from exc
    if len(lines) != 1 + nv + nt:
        raise SchemaError(f"{path}: expected {1 + nv + nt} lines, found {len(lines)}")
    verts = np.array([[float(l[0]), float(l[1])] for l in lines[1 : 1 + nv]])
    flags = np.array([int(l[2]) != 0 for l in lines[1 : 1 + nv]])
    tris = np.array([[int(x) for x in l] for l in lines[1 + nv :]], dtype=int)
    if tris.shape != (nt, 3) or tris.min() < 0 or tris.max() >= nv:
        raise SchemaError(f"{path}: triangle indices out of range")
    if flags.sum() != nb:
        raise SchemaError(f"{path}: boundary flag count does not match header")
    return MeshData(vertices=verts, triangles=tris, boundary_flags=flags)


def read_eigenpair(path) -> EigenpairData:
    with open(path) as f:
        lines = [ln.split() for ln in f.read().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 3:
        raise SchemaError(f"{path}: expected 'omega_re omega_im residual' header")
    omega = complex(float(lines[0][0]), float(lines[0][1]))
    residual = float(lines[0][2])
    body = lines[1:]
    if not body or any(len(l) != 6 for l in body):
        raise SchemaError(f"{path}: expected 6 columns per vertex line")
    arr = np.array([[float(x) for x in l] for l in body])
    return EigenpairData(
        omega=omega,
        residual=residual,
        vertices=arr[:, :2],
        u1=arr[:, 2] + 1j * arr[:, 3],
        u2=arr[:, 4] + 1j * arr[:, 5],
    )


TABLE_COLUMNS = ["branch", "level", "h", "omega_re", "omega_im", "rel_error", "order", "class"]


def read_table(path) -> TableData:
    with open(path) as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != TABLE_COLUMNS:
            raise SchemaError(f"{path}: expected columns {TABLE_COLUMNS}")
        table = TableData()
        for raw in reader:
            row = {
                "level": int(raw["level"]),
                "h": float(raw["h"]),
                "omega": complex(float(raw["omega_re"]), float(raw["omega_im"])),
                "rel_error": float(raw["rel_error"]) if raw["rel_error"] else None,
                "order": float(raw["order"]) if raw["order"] else None,
                "class": raw["class"],
            }
            table.branches.setdefault(int(raw["branch"]), []).append(row)
    if not table.branches:
        raise SchemaError(f"{path}: table has no data rows")
    return table


def read_map(path) -> MapData:
    with open(path) as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["re", "im", "absz0"]:
            raise SchemaError(f"{path}: expected header 're,im,absz0'")
        rows = [(float(a), float(b), float(c)) for a, b, c in reader]
    if not rows:
        raise SchemaError(f"{path}: map has no data rows")
    re = np.unique([r[0] for r in rows])
    im = np.unique([r[1] for r in rows])
    if len(re) * len(im) != len(rows):
        raise SchemaError(f"{path}: rows do not form a full re x im grid")
    grid = np.full((len(im), len(re)), np.nan)
    re_idx = {v: i for i, v in enumerate(re)}
    im_idx = {v: i for i, v in enumerate(im)}
    for a, b, c in rows:
        grid[im_idx[b], re_idx[a]] = c
    if np.isnan(grid).any():
        raise SchemaError(f"{path}: grid has missing points")
    return MapData(re=re, im=im, absz0=grid)
