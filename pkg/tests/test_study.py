import csv
import json
import math

import numpy as np
import pytest

from elteig.eigensolve import SolverOptions
from elteig.study import (
    Branch,
    ConfigError,
    ConvergenceRow,
    ConvergenceTable,
    StudyAborted,
    StudyConfig,
    classify,
    convergence_statistics,
    match_eigenvalues,
    richardson_extrapolate,
    run_level,
    run_study,
    save_table_csv,
    save_table_text,
)

# eigenvalue column of the published structured-square table, first real branch
TABLE_REAL_BRANCH = [1.547133, 1.428624, 1.402599, 1.396056, 1.394419]


def lattice_config(**overrides):
    raw = {
        "domain": "unit_square",
        "mesh_family": "lattice",
        "n0": 15,
        "mu": 0.0625,
        "lambda": 0.25,
        "rho0": 1.0,
        "rho1": 4.0,
        "num_eigs": 6,
    }
    raw.update(overrides)
    return StudyConfig.from_dict(raw)


class TestConfig:
    def test_defaults(self):
        cfg = StudyConfig()
        assert cfg.levels == (1, 2, 3, 4)
        assert cfg.n0 == 10
        assert cfg.h1 == 0.1
        assert cfg.nominal_h(3) == pytest.approx(0.025)
        assert cfg.solver.k == cfg.num_eigs

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="mesh_size"):
            StudyConfig.from_dict(
                {"mu": 1, "lambda": 1, "rho0": 1, "rho1": 4, "mesh_size": 0.1}
            )

    def test_missing_key_named(self):
        with pytest.raises(ConfigError, match="rho1"):
            StudyConfig.from_dict({"mu": 1, "lambda": 1, "rho0": 1})

    def test_invalid_physics_rejected(self):
        with pytest.raises(ConfigError):
            StudyConfig.from_dict({"mu": -1, "lambda": 1, "rho0": 1, "rho1": 4})

    def test_levels_must_ascend(self):
        with pytest.raises(ConfigError, match="levels"):
            StudyConfig(levels=(2, 1))

    def test_lattice_only_on_square(self):
        with pytest.raises(ConfigError, match="mesh_family"):
            StudyConfig(domain="disk", mesh_family="lattice")

    def test_from_json_and_resolved(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(
            json.dumps({"mu": 0.0625, "lambda": 0.25, "rho0": 1, "rho1": 4, "n0": 5})
        )
        cfg = StudyConfig.from_json(path)
        r = cfg.resolved()
        assert r["n0"] == 5
        assert r["tol"] == 1e-9
        assert r["levels"] == [1, 2, 3, 4]

    def test_invalid_json_is_config_error(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            StudyConfig.from_json(path)


class TestClassify:
    def test_real_and_complex(self):
        assert classify(1.5 + 0j) == "real"
        assert classify(1.5 + 1e-8j) == "real"
        assert classify(1.5 + 0.3j) == "complex"


class TestMatching:
    def test_nearest(self):
        pairs, unmatched = match_eigenvalues([1.5], [1.43, 1.66])
        assert pairs == [(0, 0)] and unmatched == []

    def test_conjugate_member_preferred(self):
        pairs, _ = match_eigenvalues([2 - 0.3j], [1.9 - 0.29j, 1.9 + 0.29j])
        assert pairs == [(0, 0)]

    def test_identity(self):
        vals = [1.0, 2.0 - 0.5j, 2.0 + 0.5j]
        pairs, unmatched = match_eigenvalues(vals, list(vals))
        assert pairs == [(0, 0), (1, 1), (2, 2)] and unmatched == []

    def test_class_preserving(self):
        # a complex value never matches a real one, however close
        pairs, unmatched = match_eigenvalues([2.0 + 0.3j], [2.0])
        assert pairs == [] and unmatched == [0]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            match_eigenvalues([], [1.0])


class TestStatistics:
    def test_published_column_orders(self):
        _, orders = convergence_statistics(TABLE_REAL_BRANCH)
        assert np.allclose(orders, [2.072056, 1.965350, 1.992152], atol=1e-5)

    def test_constant_branch(self):
        errors, orders = convergence_statistics([3.0, 3.0, 3.0])
        assert errors == [0.0, 0.0]
        assert orders == [None]

    def test_exact_geometric_sequence(self):
        # errors shrink by exactly 4 per level -> order exactly 2
        values = [1.0]
        for e in (0.16, 0.04, 0.01):
            values.append(values[-1] * (1.0 + e))
        _, orders = convergence_statistics(values)
        assert all(abs(o - 2.0) < 1e-10 for o in orders)

    def test_complex_branch_uses_moduli(self):
        values = [2 + 1j, 2.1 + 1.1j, 2.12 + 1.12j]
        errors, _ = convergence_statistics(values)
        assert errors[0] == pytest.approx(
            abs((2.1 + 1.1j) - (2 + 1j)) / abs(2 + 1j)
        )


class TestRichardson:
    def test_exact_order_two_model(self):
        # values c + a h^2 with h halving: extrapolation recovers c exactly
        c, a = 1.394, 0.37
        values = [c + a * (0.1 / 2**i) ** 2 for i in range(3)]
        assert richardson_extrapolate(values) == pytest.approx(c, abs=1e-14)

    def test_needs_two_values(self):
        with pytest.raises(ValueError):
            richardson_extrapolate([1.0])


class TestRunLevel:
    def test_square_level1_leading_real(self):
        eigs = run_level(lattice_config(), 1)
        real = [e for e in eigs if classify(e.omega) == "real"]
        assert abs(real[0].omega.real - 1.547133) / 1.547133 < 0.01

    def test_square_level1_parameter_set2(self):
        cfg = lattice_config(mu=0.25, rho0=0.05, rho1=3.0)
        eigs = run_level(cfg, 1)
        real = [e for e in eigs if classify(e.omega) == "real"]
        assert abs(real[0].omega.real - 2.943315) / 2.943315 < 0.01

    def test_count_and_ordering(self):
        cfg = StudyConfig.from_dict(
            {"mu": 0.0625, "lambda": 0.25, "rho0": 1, "rho1": 4, "n0": 4,
             "num_eigs": 5}
        )
        eigs = run_level(cfg, 1)
        # exactly k values, or k-1 when a conjugate pair straddles the cut
        assert len(eigs) in (4, 5)
        mags = [abs(e.omega_sq) for e in eigs]
        assert mags == sorted(mags)


@pytest.fixture(scope="module")
def small_table():
    cfg = StudyConfig.from_dict(
        {"mu": 0.0625, "lambda": 0.25, "rho0": 1, "rho1": 4, "n0": 8,
         "num_eigs": 8, "levels": [1, 2, 3]}
    )
    return run_study(cfg)


class TestRunStudy:
    def test_branch_shapes(self, small_table):
        assert len(small_table.branches) >= 4
        full = [b for b in small_table.branches if len(b.rows) == 3]
        assert len(full) >= 2
        for b in small_table.branches:
            levels = [r.level for r in b.rows]
            assert levels == sorted(levels)
            assert levels[0] == b.start_level

    def test_class_stable_within_branch(self, small_table):
        for b in small_table.branches:
            assert {r.cls for r in b.rows} == {b.cls}

    def test_statistics_attached(self, small_table):
        b = next(b for b in small_table.branches if len(b.rows) == 3)
        assert b.rows[0].rel_error is None and b.rows[0].order is None
        assert b.rows[1].rel_error is not None and b.rows[1].order is None
        assert b.rows[2].order is not None

    def test_h_column(self, small_table):
        b = next(b for b in small_table.branches if b.start_level == 1)
        assert [r.h for r in b.rows][:2] == [0.125, 0.0625]

    def test_csv_schema_and_self_consistency(self, small_table, tmp_path):
        path = tmp_path / "table.csv"
        save_table_csv(small_table, path)
        with open(path) as f:
            rows = list(csv.DictReader(f))
        assert list(rows[0]) == [
            "branch", "level", "h", "omega_re", "omega_im",
            "rel_error", "order", "class",
        ]
        by_branch = {}
        for r in rows:
            by_branch.setdefault(int(r["branch"]), []).append(r)
        for branch_rows in by_branch.values():
            values = [
                complex(float(r["omega_re"]), float(r["omega_im"]))
                for r in branch_rows
            ]
            errors, orders = convergence_statistics(values)
            for i, r in enumerate(branch_rows):
                if i == 0:
                    assert r["rel_error"] == ""
                else:
                    # omega is stored to 10 significant digits; recomputed
                    # errors agree to the induced rounding level
                    assert float(r["rel_error"]) == pytest.approx(
                        errors[i - 1], rel=1e-6, abs=1e-9
                    )
                if i >= 2 and orders[i - 2] is not None:
                    assert float(r["order"]) == pytest.approx(
                        orders[i - 2], abs=1e-5
                    )

    def test_text_table_written(self, small_table, tmp_path):
        path = tmp_path / "table.txt"
        save_table_text(small_table, path)
        text = path.read_text()
        assert "branch 0" in text and "order" in text

    def test_abort_carries_partial_table(self):
        cfg = StudyConfig.from_dict(
            {"mu": 0.0625, "lambda": 0.25, "rho0": 1, "rho1": 4, "n0": 4,
             "num_eigs": 4, "levels": [1, 2], "tol": 1e-30, "max_restarts": 1}
        )
        with pytest.raises(StudyAborted) as err:
            run_study(cfg)
        assert isinstance(err.value.partial, ConvergenceTable)


class TestLShape:
    def test_reduced_regularity_order(self):
        # frozen regression: the leading L-shape branch converges with an
        # observed order below the square's (~1.7 here vs ~2.0)
        cfg = StudyConfig.from_dict(
            {"domain": "l_shape", "mu": 0.0625, "lambda": 0.25, "rho0": 1,
             "rho1": 4, "n0": 10, "num_eigs": 6, "levels": [1, 2, 3, 4]}
        )
        table = run_study(cfg)
        full = [b for b in table.branches if len(b.rows) == 4]
        lead = min(full, key=lambda b: abs(b.rows[-1].value))
        _, orders = convergence_statistics([r.value for r in lead.rows])
        assert all(o is not None for o in orders)
        assert all(1.3 < o < 2.0 for o in orders)
