"""Figure rendering for solver exports.

All three entry points return ``(figure, extras)`` and optionally save to
disk; saved images embed a SHA-256 summary of their input files in the PNG
metadata so any figure can be traced back to the exact data it shows.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import matplotlib.tri as mtri
import numpy as np

from .io import read_eigenpair, read_map, read_mesh, read_table, sha256_of, SchemaError


def _save(fig, out_path, input_paths):
    if out_path is None:
        return
    metadata = None
    if str(out_path).lower().endswith(".png"):
        metadata = {"elteig-inputs": sha256_of(*input_paths)}
    fig.savefig(out_path, dpi=150, bbox_inches="tight", metadata=metadata)


def plot_convergence(table_csv, out_path=None):
    """Log-log relative error vs h per branch, with a slope-2 reference.

    Returns ``(figure, slopes)`` where ``slopes`` maps branch index to the
    least-squares slope of log E against log h.  Branches with fewer than two
    error values cannot be plotted; if none qualify this raises SchemaError.
    """
    table = read_table(table_csv)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    slopes = {}
    for index, rows in sorted(table.branches.items()):
        pts = [(r["h"], r["rel_error"]) for r in rows if r["rel_error"]]
        if len(pts) < 2:
            continue
        h = np.array([p[0] for p in pts])
        e = np.array([p[1] for p in pts])
        slope = np.polyfit(np.log(h), np.log(e), 1)[0]
        slopes[index] = float(slope)
        ax.loglog(h, e, "o-", label=f"branch {index} (slope {slope:.2f})")
    if not slopes:
        raise SchemaError("no branch has two or more error values; nothing to plot")
    h_ref = np.array(ax.get_xlim())
    e0 = min(min(r["rel_error"] for r in rows if r["rel_error"])
             for rows in table.branches.values()
             if any(r["rel_error"] for r in rows))
    ax.loglog(h_ref, e0 * (h_ref / h_ref[0]) ** 2, "k--", lw=1, label="slope 2")
    ax.set_xlabel("h")
    ax.set_ylabel("relative error")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, out_path, [table_csv])
    return fig, slopes


def plot_eigenfunction(mesh_path, eigenpair_path, out_path=None):
    """Three-panel heatmap of an exported eigenfunction: u1, u2, |u|.

    The component panels show real parts; the right panel shows the pointwise
    modulus of the vector field.  The mesh and eigenpair exports must agree
    on the vertex count.
    """
    mesh = read_mesh(mesh_path)
    pair = read_eigenpair(eigenpair_path)
    if len(pair.u1) != len(mesh.vertices):
        raise SchemaError(
            f"vertex count mismatch: mesh has {len(mesh.vertices)}, "
            f"eigenpair has {len(pair.u1)}"
        )
    tri = mtri.Triangulation(
        mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles
    )
    fields = [
        (pair.u1.real, "$u_1$"),
        (pair.u2.real, "$u_2$"),
        (np.hypot(np.abs(pair.u1), np.abs(pair.u2)), "$|u|$"),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for ax, (values, title) in zip(axes, fields):
        im = ax.tripcolor(tri, values, shading="gouraud")
        ax.set_title(title)
        ax.set_aspect("equal")
        fig.colorbar(im, ax=ax, shrink=0.85)
    omega = pair.omega
    fig.suptitle(f"omega = {omega.real:.6f}{omega.imag:+.6f}i")
    _save(fig, out_path, [mesh_path, eigenpair_path])
    return fig, pair


def plot_z0_contour(map_csv, out_path=None):
    """Contour plot of the dispersion-determinant magnitude over complex omega."""
    data = read_map(map_csv)
    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    with np.errstate(divide="ignore"):
        logmag = np.log10(np.maximum(data.absz0, 1e-300))
    cs = ax.contourf(data.re, data.im, logmag, levels=30)
    ax.contour(data.re, data.im, logmag, levels=10, colors="k", linewidths=0.3)
    fig.colorbar(cs, ax=ax, label=r"$\log_{10} |Z_0|$")
    ax.set_xlabel(r"Re $\omega$")
    ax.set_ylabel(r"Im $\omega$")
    _save(fig, out_path, [map_csv])
    return fig, data
