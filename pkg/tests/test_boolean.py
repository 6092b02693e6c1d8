import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momentlab.boolean import (
    REFERENCE_BETA_ROUNDED,
    REFERENCE_BETA_TTT,
    BooleanPoint,
    beta_from_ttt,
    critical_for_beta_ttt,
    eps_gap,
    maxent_beta,
    optimize_beta_ttt,
    rule_beta,
    scan_cell,
    scan_delta_rho,
    surface_balance_residual,
    write_scan_csv,
)
from momentlab.framework import ConstraintError, ModelSpec, beta_from_orbits, epsilon, eta_from, surfaces
from momentlab.lagrange import MaximizeOptions

B = ModelSpec.boolean()


class TestEpsGap:
    def test_half(self):
        assert eps_gap(0.5, 0.37) == 0

    def test_example_and_cross_check(self):
        assert eps_gap(0.6, 0.5) == pytest.approx(-0.01, abs=1e-15)
        d, r = 0.6, 0.5
        eps = epsilon(B, np.outer([1 - d, d], [1 - d, d]), [r, 1 - r])
        e = eta_from(B, np.array([1 - d, d]), np.array([r, 1 - r]))
        assert eps[0, 1] - e[0] * e[1] == pytest.approx(eps_gap(d, r), abs=1e-15)

    def test_monotone_edge(self):
        assert eps_gap(0.3, 1.0) == 0

    def test_sign_and_zero_set_on_grid(self):
        grid = np.linspace(0, 1, 101)
        d, r = np.meshgrid(grid, grid, indexing="ij")
        g = np.vectorize(eps_gap)(d, r)
        assert np.all(g <= 0)
        zero = np.isclose(d, 0.5) | np.isclose(r, 0) | np.isclose(r, 1)
        assert np.all(g[zero] == 0) and np.all(g[~zero] < 0)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_matches_epsilon(self, d, r):
        eps = epsilon(B, np.outer([1 - d, d], [1 - d, d]), [r, 1 - r])
        e = eta_from(B, np.array([1 - d, d]), np.array([r, 1 - r]))
        assert eps[0, 1] - e[0] * e[1] == pytest.approx(eps_gap(d, r), abs=1e-14)


class TestSurfaceBalance:
    def test_reference_vector(self):
        assert abs(surface_balance_residual(beta_from_orbits(B, REFERENCE_BETA_ROUNDED), 0.5, 0.5)) < 1e-5

    def test_uniform(self):
        assert surface_balance_residual(np.full(7, 1 / 7), 0.5, 0.5) == pytest.approx(6 / 7)

    def test_all_true(self):
        assert surface_balance_residual(beta_from_orbits(B, {"TTT": 1.0}), 0.5, 0.5) == pytest.approx(6)

    @given(st.permutations(range(3)))
    def test_invariant_within_orbits(self, perm):
        beta = np.full(7, 1 / 7)
        tff = [B.type_index(t) for t in ("TFF", "FTF", "FFT")]
        base = beta.copy()
        base[tff] = [0.10, 0.15, 0.18]
        base /= base.sum()
        moved = base.copy()
        moved[tff] = base[[tff[i] for i in perm]]
        assert surface_balance_residual(moved, 0.4, 0.3) == pytest.approx(surface_balance_residual(base, 0.4, 0.3))


class TestBetaFamilies:
    def test_ttt_family_balanced(self):
        for b in (0.0, 0.0929, 0.2, 0.25):
            beta = beta_from_ttt(b)
            assert beta.sum() == pytest.approx(1) and surfaces(B, beta)[0] == pytest.approx(1.5)

    def test_reference_vector_reconstructed(self):
        beta = beta_from_ttt(REFERENCE_BETA_TTT)
        assert beta[B.type_index("TFF")] == pytest.approx(0.197633, abs=1e-6)
        assert beta[B.type_index("TTF")] == pytest.approx(0.104733, abs=1e-6)

    def test_ttt_out_of_range(self):
        with pytest.raises(ConstraintError):
            beta_from_ttt(0.3)

    def test_maxent_hits_target(self):
        for target in (1.2, 1.5, 2.5):
            assert surfaces(B, maxent_beta(B, target))[0] == pytest.approx(target, abs=1e-12)

    def test_maxent_out_of_range(self):
        with pytest.raises(ConstraintError, match="outside the open range"):
            maxent_beta(B, 0.9)

    def test_rules(self):
        assert surfaces(B, rule_beta("balanced_half", 0.3, 0.6))[0] == pytest.approx(1.5)
        e = eta_from(B, np.array([0.7, 0.3]), np.array([0.6, 0.4]))
        assert surfaces(B, rule_beta("proportional", 0.3, 0.6))[0] == pytest.approx(3 * e[0])
        with pytest.raises(ValueError):
            rule_beta("other", 0.3, 0.6)

    def test_boolean_point_overlap(self):
        p = BooleanPoint(0.3, 0.5, beta_from_ttt(0.1))
        assert np.allclose(p.overlap(0.1), [[0.6, 0.1], [0.1, 0.2]])
        with pytest.raises(ConstraintError):
            p.overlap(0.4)


class TestCriticalRatio:
    def test_reference_value(self):
        assert critical_for_beta_ttt(REFERENCE_BETA_TTT).c_star == pytest.approx(2.833, abs=0.01)

    def test_independent_of_rho(self):
        vals = [critical_for_beta_ttt(REFERENCE_BETA_TTT, rho).c_star for rho in (0.3, 0.5, 0.7)]
        assert max(vals) - min(vals) < 1e-3

    def test_reference_beta_is_local_optimum(self):
        s = optimize_beta_ttt()
        assert s.is_local_optimum
        assert abs(s.beta_ttt - REFERENCE_BETA_TTT) < 2e-3
        assert critical_for_beta_ttt(REFERENCE_BETA_TTT).c_star == pytest.approx(s.c_star, abs=1e-4)


class TestScan:
    opts = MaximizeOptions(grid=100)

    def test_half_row_nonpositive(self):
        for rule in ("balanced_half", "proportional"):
            for rho in (0.1, 0.5, 0.85):
                assert scan_cell(rule, 0.1, 3, self.opts, (0.5, rho)).status == "nonpositive"

    def test_off_half_positive(self):
        cell = scan_cell("balanced_half", 0.1, 3, self.opts, (0.4, 0.5))
        assert cell.status == "ok" and cell.gap > 0 and np.isfinite(cell.loglog_gap)

    def test_scan_grid_and_csv(self, tmp_path):
        cells = scan_delta_rho("proportional", 0.1, [0.3, 0.5], [0.4, 0.6], options=self.opts)
        assert [(c.delta, c.rho) for c in cells] == [(0.3, 0.4), (0.3, 0.6), (0.5, 0.4), (0.5, 0.6)]
        write_scan_csv(cells, tmp_path / "s.csv")
        rows = list(csv.DictReader(open(tmp_path / "s.csv")))
        assert list(rows[0]) == ["delta", "rho", "gap", "loglog_gap", "status"]
        assert rows[2]["loglog_gap"] == "-inf"

    def test_grid_too_small(self):
        with pytest.raises(ValueError):
            scan_delta_rho("proportional", 0.1, [0.5], [0.5, 0.6])
