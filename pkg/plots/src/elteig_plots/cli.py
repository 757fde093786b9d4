"""Command-line interface: render figures from solver export files."""

from __future__ import annotations

import argparse
import sys

from .io import SchemaError
from .render import plot_convergence, plot_eigenfunction, plot_z0_contour

EXIT_OK = 0
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elteig-plots",
        description="Render convergence curves, eigenfunction heatmaps, and "
        "dispersion contours from elteig export files",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("convergence", help="log-log error-vs-h curves from a table CSV")
    p.add_argument("table_csv")
    p.add_argument("--out", default="convergence.png")

    p = sub.add_parser("eigenfunction", help="3-panel u1/u2/|u| heatmap")
    p.add_argument("mesh")
    p.add_argument("eigenpair")
    p.add_argument("--out", default="eigenfunction.png")

    p = sub.add_parser("z0", help="contour plot of |Z0| from a map CSV")
    p.add_argument("map_csv")
    p.add_argument("--out", default="z0_contour.png")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "convergence":
            _, slopes = plot_convergence(args.table_csv, out_path=args.out)
            for index, slope in sorted(slopes.items()):
                print(f"branch {index}: fitted slope {slope:.4f}")
        elif args.subcommand == "eigenfunction":
            _, pair = plot_eigenfunction(args.mesh, args.eigenpair, out_path=args.out)
            print(
                f"rendered omega = {pair.omega.real:.6f}{pair.omega.imag:+.6f}i "
                f"(residual {pair.residual:.2e})"
            )
        else:
            plot_z0_contour(args.map_csv, out_path=args.out)
        print(f"wrote {args.out}")
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
