"""Command-line interface: mesh inspection, solves, studies, oracle queries.

Every run writes a ``manifest.json`` next to its outputs recording the
subcommand, the fully resolved configuration, the tool version, the wall
time, and the produced files, so results are reproducible from the manifest
alone.

Exit codes: 0 success, 2 argument/configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .assembly import DensityPair, ElasticParams, assemble_block_system
from .eigensolve import (
    NumericalError,
    SolverOptions,
    export_eigenpair,
    solve_transmission_eigs,
)
from . import mesh as meshmod
from .oracle import DiskProblem, find_real_roots, save_roots, save_z0_map, z0_magnitude_map
from .study import (
    ConfigError,
    StudyAborted,
    StudyConfig,
    run_study,
    save_table_csv,
    save_table_text,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _write_manifest(out_dir: Path, subcommand: str, resolved: dict, outputs, t0: float):
    manifest = {
        "subcommand": subcommand,
        "configuration": resolved,
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return path


def _params_from_args(args) -> tuple[ElasticParams, DensityPair]:
    params = ElasticParams(args.mu, getattr(args, "lam"))
    densities = DensityPair(args.rho0, args.rho1)
    return params, densities


def _add_material_args(p: argparse.ArgumentParser):
    p.add_argument("--mu", type=float, default=0.0625, help="shear modulus (> 0)")
    p.add_argument(
        "--lambda", dest="lam", type=float, default=0.25, help="first Lame parameter"
    )
    p.add_argument("--rho0", type=float, default=1.0, help="background density")
    p.add_argument("--rho1", type=float, default=4.0, help="scatterer density")


def cmd_mesh(args) -> int:
    t0 = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mesh = meshmod.make_mesh(args.domain, args.n)
    outputs = []
    for level in range(1, args.levels + 1):
        if level > 1:
            mesh = meshmod.refine_uniform(mesh)
        h_max, min_angle = meshmod.mesh_quality(mesh)
        path = out / f"mesh_level{level}.txt"
        meshmod.save_mesh(mesh, path)
        outputs.append(path)
        print(
            f"level {level}: {mesh.num_vertices} vertices, "
            f"{mesh.num_triangles} triangles, h = {h_max:.6g}, "
            f"min angle = {min_angle:.6g} rad"
        )
    resolved = {"domain": args.domain, "n": args.n, "levels": args.levels, "out": str(out)}
    _write_manifest(out, "mesh", resolved, outputs, t0)
    return EXIT_OK


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params, densities = _params_from_args(args)
    if args.mesh_family == "lattice":
        if args.domain != "unit_square":
            raise ConfigError("mesh_family: lattice is only defined on unit_square")
        mesh = meshmod.make_lattice_mesh(args.n)
    else:
        mesh = meshmod.make_mesh(args.domain, args.n)
    for _ in range(args.level - 1):
        mesh = meshmod.refine_uniform(mesh)
    system = assemble_block_system(mesh, params, densities)
    opts = SolverOptions(k=args.k, tol=args.tol)
    eigs = solve_transmission_eigs(system, opts)
    print(f"{'omega':>28} {'|omega^2|':>12} {'residual':>10}")
    for e in eigs:
        val = f"{e.omega.real:.6f}{e.omega.imag:+.6f}i"
        print(f"{val:>28} {abs(e.omega_sq):>12.6f} {e.residual:>10.2e}")
    outputs = []
    mesh_path = out / "mesh.txt"
    meshmod.save_mesh(mesh, mesh_path)
    outputs.append(mesh_path)
    for i, e in enumerate(eigs):
        path = out / f"eigenpair_{i:02d}.txt"
        export_eigenpair(e, mesh, path)
        outputs.append(path)
    resolved = {
        "domain": args.domain,
        "n": args.n,
        "level": args.level,
        "mesh_family": args.mesh_family,
        "mu": params.mu,
        "lambda": params.lam,
        "rho0": densities.rho0,
        "rho1": densities.rho1,
        "k": args.k,
        "tol": args.tol,
        "out": str(out),
    }
    _write_manifest(out, "solve", resolved, outputs, t0)
    return EXIT_OK


def cmd_study(args) -> int:
    t0 = time.perf_counter()
    config = StudyConfig.from_json(args.config)
    if args.out is not None:
        config = StudyConfig.from_dict({**config.resolved(), "out_dir": args.out})
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "table.csv"
    txt_path = out / "table.txt"
    try:
        table = run_study(config)
    except StudyAborted as exc:
        # dump what was computed before the failing level
        save_table_csv(exc.partial, out / "table_partial.csv")
        save_table_text(exc.partial, out / "table_partial.txt")
        print(f"study aborted; partial results in {out}", file=sys.stderr)
        raise
    save_table_csv(table, csv_path)
    save_table_text(table, txt_path)
    with open(txt_path) as f:
        print(f.read(), end="")
    _write_manifest(out, "study", config.resolved(), [csv_path, txt_path], t0)
    return EXIT_OK


def cmd_z0(args) -> int:
    t0 = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = ElasticParams(args.mu, args.lam)
    resolved = {
        "mu": params.mu,
        "lambda": params.lam,
        "rho0": args.rho0,
        "rho1": args.rho1,
        "R": args.R,
        "mode": args.mode,
        "omega_max": args.omega_max,
        "step": args.step,
        "re": [args.re_min, args.re_max],
        "im": [args.im_min, args.im_max],
        "resolution": [args.nre, args.nim],
        "out": str(out),
    }
    if args.rho0 == args.rho1:
        print(
            "degenerate case rho0 == rho1: the dispersion determinant vanishes "
            "identically and has no isolated roots"
        )
        _write_manifest(out, "z0", resolved | {"degenerate": True}, [], t0)
        return EXIT_OK
    problem = DiskProblem(params=params, rho0=args.rho0, rho1=args.rho1, R=args.R)
    outputs = []
    if args.mode == "roots":
        roots = find_real_roots(problem, args.omega_max, step=args.step)
        path = out / "roots.txt"
        save_roots(roots, path)
        outputs.append(path)
        for r in roots:
            print(f"{r:.12g}")
    else:
        zmap = z0_magnitude_map(
            problem,
            (args.re_min, args.re_max),
            (args.im_min, args.im_max),
            (args.nre, args.nim),
        )
        path = out / "z0_map.csv"
        save_z0_map(zmap, path)
        outputs.append(path)
        print(f"wrote {args.nre * args.nim} grid values to {path}")
    _write_manifest(out, "z0", resolved, outputs, t0)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elteig",
        description="Elastic interior transmission eigenvalues by a mixed finite-element method",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="internal parallelism hint (results are identical for any value)",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("mesh", help="generate and inspect meshes")
    p.add_argument("--domain", choices=meshmod.DOMAINS, required=True)
    p.add_argument("--n", type=int, required=True, help="subdivisions per unit length")
    p.add_argument("--levels", type=int, default=1, help="number of levels to write")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("solve", help="solve one eigenvalue problem")
    p.add_argument("--domain", choices=meshmod.DOMAINS, default="unit_square")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--mesh-family", choices=("structured", "lattice"), default="structured")
    _add_material_args(p)
    p.add_argument("-k", type=int, default=6, help="number of eigenvalues")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("study", help="run a convergence study from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the config's out_dir")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("z0", help="analytic disk dispersion relation")
    _add_material_args(p)
    p.add_argument("--R", type=float, default=0.5, help="disk radius")
    p.add_argument("--mode", choices=("roots", "map"), default="roots")
    p.add_argument("--omega-max", type=float, default=5.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--re-min", type=float, default=0.0)
    p.add_argument("--re-max", type=float, default=6.0)
    p.add_argument("--im-min", type=float, default=-1.0)
    p.add_argument("--im-max", type=float, default=1.0)
    p.add_argument("--nre", type=int, default=300)
    p.add_argument("--nim", type=int, default=100)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_z0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
