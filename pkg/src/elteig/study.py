"""Multi-level convergence studies with cross-level eigenvalue tracking.

A study solves the eigenproblem on a sequence of uniformly refined meshes,
matches eigenvalues between consecutive levels (greedy nearest-neighbor in
the complex plane, class-preserving), and reports per-branch relative errors

    E_{i+1} = |L_{i+1} - L_i| / |L_i|

and observed orders ``log2(E_{i+1} / E_{i+2})`` for the tracked frequencies
``L = omega``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import mesh as meshmod
from .assembly import DensityPair, ElasticParams, assemble_block_system
from .eigensolve import EigenPair, NumericalError, SolverOptions, solve_transmission_eigs

REAL_CLASS_TOL = 1e-6
MESH_FAMILIES = ("structured", "lattice")


class ConfigError(ValueError):
    """A study configuration is malformed; the message names the key."""


@dataclass(frozen=True)
class StudyConfig:
    """Configuration of a convergence study.

    ``n0`` is the subdivision count of the level-1 mesh; level ``i`` uses the
    base mesh refined ``i - 1`` times, so its nominal spacing is
    ``(1/n0) / 2^(i-1)``.  ``mesh_family`` selects the generator on the unit
    square: ``structured`` (diagonal-split grid) or ``lattice`` (offset-row
    triangular lattice, used by the bundled table configurations).
    """

    domain: str = "unit_square"
    params: ElasticParams = field(default_factory=lambda: ElasticParams(0.0625, 0.25))
    densities: DensityPair = field(default_factory=lambda: DensityPair(1.0, 4.0))
    levels: tuple = (1, 2, 3, 4)
    n0: int = 10
    mesh_family: str = "structured"
    num_eigs: int = 10
    solver: SolverOptions = None
    out_dir: str = "out"

    def __post_init__(self):
        if list(self.levels) != sorted(set(self.levels)) or self.levels[0] < 1:
            raise ConfigError("levels: must be an ascending list of integers >= 1")
        if self.num_eigs < 1:
            raise ConfigError("num_eigs: must be >= 1")
        if self.mesh_family not in MESH_FAMILIES:
            raise ConfigError(f"mesh_family: must be one of {MESH_FAMILIES}")
        if self.domain not in meshmod.DOMAINS:
            raise ConfigError(f"domain: must be one of {meshmod.DOMAINS}")
        if self.mesh_family == "lattice" and self.domain != "unit_square":
            raise ConfigError("mesh_family: lattice is only defined on unit_square")
        if self.solver is None:
            object.__setattr__(self, "solver", SolverOptions(k=self.num_eigs))

    @property
    def h1(self) -> float:
        return 1.0 / self.n0

    def nominal_h(self, level: int) -> float:
        return self.h1 / 2 ** (level - 1)

    def base_mesh(self) -> meshmod.Mesh:
        if self.mesh_family == "lattice":
            return meshmod.make_lattice_mesh(self.n0)
        return meshmod.make_mesh(self.domain, self.n0)

    @classmethod
    def from_json(cls, path) -> "StudyConfig":
        try:
            with open(path) as f:
                raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "StudyConfig":
        known = {
            "domain", "mu", "lambda", "rho0", "rho1", "levels", "n0",
            "mesh_family", "num_eigs", "tol", "theta_cutoff", "krylov_dim",
            "max_restarts", "out_dir",
        }
        for key in raw:
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
        for key in ("mu", "lambda", "rho0", "rho1"):
            if key not in raw:
                raise ConfigError(f"missing configuration key {key!r}")
        try:
            params = ElasticParams(float(raw["mu"]), float(raw["lambda"]))
            densities = DensityPair(float(raw["rho0"]), float(raw["rho1"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        num_eigs = int(raw.get("num_eigs", 10))
        solver = SolverOptions(
            k=num_eigs,
            m=raw.get("krylov_dim"),
            tol=float(raw.get("tol", 1e-9)),
            max_restarts=int(raw.get("max_restarts", 200)),
            theta_cutoff=float(raw.get("theta_cutoff", 1e-10)),
        )
        return cls(
            domain=raw.get("domain", "unit_square"),
            params=params,
            densities=densities,
            levels=tuple(raw.get("levels", (1, 2, 3, 4))),
            n0=int(raw.get("n0", 10)),
            mesh_family=raw.get("mesh_family", "structured"),
            num_eigs=num_eigs,
            solver=solver,
            out_dir=raw.get("out_dir", "out"),
        )

    def resolved(self) -> dict:
        """All settings with defaults materialized (for run manifests)."""
        return {
            "domain": self.domain,
            "mu": self.params.mu,
            "lambda": self.params.lam,
            "rho0": self.densities.rho0,
            "rho1": self.densities.rho1,
            "levels": list(self.levels),
            "n0": self.n0,
            "mesh_family": self.mesh_family,
            "num_eigs": self.num_eigs,
            "tol": self.solver.tol,
            "theta_cutoff": self.solver.theta_cutoff,
            "krylov_dim": self.solver.m,
            "max_restarts": self.solver.max_restarts,
            "out_dir": self.out_dir,
        }


@dataclass
class ConvergenceRow:
    level: int
    h: float
    value: complex
    rel_error: float = None  # undefined at a branch's first level
    order: float = None  # undefined at the first two levels
    cls: str = "real"


@dataclass
class Branch:
    index: int
    cls: str
    start_level: int
    rows: list


@dataclass
class ConvergenceTable:
    config: StudyConfig
    branches: list

    def branch_values(self, index: int) -> list[complex]:
        return [r.value for r in self.branches[index].rows]


def classify(value: complex) -> str:
    return "real" if abs(value.imag) <= REAL_CLASS_TOL * abs(value) else "complex"


def run_level(config: StudyConfig, level: int, _mesh=None) -> list[EigenPair]:
    """Solve one refinement level; returns eigenpairs sorted by |omega^2|."""
    mesh = _mesh if _mesh is not None else _mesh_at_level(config, level)
    system = assemble_block_system(mesh, config.params, config.densities)
    return solve_transmission_eigs(system, config.solver)


def _mesh_at_level(config: StudyConfig, level: int) -> meshmod.Mesh:
    mesh = config.base_mesh()
    for _ in range(level - 1):
        mesh = meshmod.refine_uniform(mesh)
    return mesh


def match_eigenvalues(previous, current):
    """Greedy nearest-neighbor matching between two eigenvalue lists.

    Pairs are formed in ascending order of complex distance, restricted to
    equal classification (real with real, complex with complex); each value is
    used at most once.  Returns ``(pairs, unmatched_previous)`` with pairs as
    (previous_index, current_index).
    """
    if not len(previous) or not len(current):
        raise ValueError("both eigenvalue lists must be nonempty")
    candidates = sorted(
        (
            (abs(p - c), i, j)
            for i, p in enumerate(previous)
            for j, c in enumerate(current)
            if classify(p) == classify(c)
        ),
        key=lambda t: (t[0], t[1], t[2]),
    )
    used_prev, used_curr = set(), set()
    pairs = []
    for _, i, j in candidates:
        if i in used_prev or j in used_curr:
            continue
        pairs.append((i, j))
        used_prev.add(i)
        used_curr.add(j)
    pairs.sort()
    unmatched = [i for i in range(len(previous)) if i not in used_prev]
    return pairs, unmatched


def convergence_statistics(branch):
    """Relative errors and observed orders of one eigenvalue branch.

    ``E[i] = |L[i+1] - L[i]| / |L[i]|`` and
    ``order[i] = log2(E[i] / E[i+1])``; an order is ``None`` when the later
    error vanishes.
    """
    values = [complex(v) for v in branch]
    errors = [abs(values[i + 1] - values[i]) / abs(values[i]) for i in range(len(values) - 1)]
    orders = []
    for i in range(len(errors) - 1):
        if errors[i + 1] == 0:
            orders.append(None)
        elif errors[i] == 0:
            orders.append(None)
        else:
            orders.append(math.log2(errors[i] / errors[i + 1]))
    return errors, orders


def richardson_extrapolate(values, order: float = 2.0) -> complex:
    """Extrapolated limit of the last two levels assuming the given order."""
    if len(values) < 2:
        raise ValueError("need at least two levels to extrapolate")
    a, b = complex(values[-2]), complex(values[-1])
    r = 2.0**order
    return b + (b - a) / (r - 1.0)


def run_study(config: StudyConfig, on_level=None) -> ConvergenceTable:
    """Run all levels, track branches, and attach statistics.

    ``on_level`` is an optional callback ``(level, eigenpairs, mesh)`` invoked
    after each level (used by the CLI for exports).  If a level fails, the
    partial table built so far is attached to the raised error.
    """
    branches: list[Branch] = []
    open_branches: list[Branch] = []  # branches still tracked, last level
    prev_values: list[complex] = []
    mesh = None
    try:
        for level in config.levels:
            if mesh is None:
                mesh = _mesh_at_level(config, config.levels[0])
            eigs = run_level(config, level, _mesh=mesh)
            values = [e.omega for e in eigs]
            h = config.nominal_h(level)
            if not open_branches:
                for v in values:
                    b = Branch(len(branches), classify(v), level, [ConvergenceRow(level, h, v, cls=classify(v))])
                    branches.append(b)
                    open_branches.append(b)
            else:
                pairs, unmatched = match_eigenvalues(prev_values, values)
                still_open = []
                matched_curr = set()
                for i, j in pairs:
                    b = open_branches[i]
                    b.rows.append(ConvergenceRow(level, h, values[j], cls=b.cls))
                    still_open.append(b)
                    matched_curr.add(j)
                for j, v in enumerate(values):
                    if j not in matched_curr:
                        b = Branch(len(branches), classify(v), level, [ConvergenceRow(level, h, v, cls=classify(v))])
                        branches.append(b)
                        still_open.append(b)
                # keep the pairing between open_branches and prev_values aligned
                still_open.sort(
                    key=lambda b: (
                        abs(b.rows[-1].value),
                        b.rows[-1].value.imag,
                        b.rows[-1].value.real,
                    )
                )
                open_branches = still_open
            prev_values = [b.rows[-1].value for b in open_branches]
            if on_level is not None:
                on_level(level, eigs, mesh)
            if level != config.levels[-1]:
                target = config.levels[config.levels.index(level) + 1]
                for _ in range(target - level):
                    mesh = meshmod.refine_uniform(mesh)
    except NumericalError as exc:
        _attach_statistics(branches)
        raise StudyAborted(ConvergenceTable(config, branches)) from exc
    _attach_statistics(branches)
    return ConvergenceTable(config, branches)


class StudyAborted(NumericalError):
    """A level failed mid-study; carries the partial table for dumping."""

    def __init__(self, partial: ConvergenceTable):
        super().__init__("study aborted at an intermediate level")
        self.partial = partial


def _attach_statistics(branches) -> None:
    for b in branches:
        errors, orders = convergence_statistics([r.value for r in b.rows])
        for i, row in enumerate(b.rows):
            row.rel_error = errors[i - 1] if i >= 1 else None
            row.order = orders[i - 2] if i >= 2 else None


def save_table_csv(table: ConvergenceTable, path) -> None:
    """CSV schema: ``branch,level,h,omega_re,omega_im,rel_error,order,class``."""
    with open(path, "w") as f:
        f.write("branch,level,h,omega_re,omega_im,rel_error,order,class\n")
        for b in table.branches:
            for row in b.rows:
                e = "" if row.rel_error is None else f"{row.rel_error:.10g}"
                o = "" if row.order is None else f"{row.order:.6f}"
                f.write(
                    f"{b.index},{row.level},{row.h:.10g},{row.value.real:.10g},"
                    f"{row.value.imag:.10g},{e},{o},{row.cls}\n"
                )


def save_table_text(table: ConvergenceTable, path) -> None:
    """Human-readable table, one block per tracked branch."""
    with open(path, "w") as f:
        cfg = table.config
        f.write(
            f"domain={cfg.domain} family={cfg.mesh_family} n0={cfg.n0} "
            f"mu={cfg.params.mu} lambda={cfg.params.lam} "
            f"rho0={cfg.densities.rho0} rho1={cfg.densities.rho1}\n"
        )
        for b in table.branches:
            f.write(f"\nbranch {b.index} ({b.cls}, from level {b.start_level})\n")
            f.write(f"{'level':>5} {'h':>10} {'omega':>28} {'rel_err':>12} {'order':>9}\n")
            for row in b.rows:
                if row.cls == "real":
                    val = f"{row.value.real:.6f}"
                else:
                    val = f"{row.value.real:.6f}{row.value.imag:+.6f}i"
                e = "" if row.rel_error is None else f"{row.rel_error:.4e}"
                o = "" if row.order is None else f"{row.order:.6f}"
                f.write(f"{row.level:>5} {row.h:>10.6g} {val:>28} {e:>12} {o:>9}\n")
