import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momentlab.boolean import REFERENCE_BETA_TTT, beta_from_ttt, maxent_beta
from momentlab.framework import ConstraintError, ModelSpec
from momentlab.distributional import (
    DegreeProfile,
    DistributionalLandscape,
    DistributionalPoint,
    distributional_critical,
    eps_gap_distributional,
    eps_tf_independent,
    eta_distributional,
    mu_from_y,
    omega_delta,
    omega_gap,
    omega_scan,
    poisson_profile,
    t1_rate_dist,
    t2_rate_dist,
    write_omega_csv,
)

B = ModelSpec.boolean()


@pytest.fixture(scope="module")
def prof2():
    return poisson_profile(3, 2.0)


class TestProfile:
    def test_mode(self, prof2):
        i = int(np.argmax(prof2.d))
        assert prof2.p[i] in (2, 3) and prof2.q[i] in (2, 3)
        cell = lambda p, q: prof2.d[(prof2.p == p) & (prof2.q == q)][0]
        assert cell(3, 3) == pytest.approx(cell(2, 2), rel=1e-12)

    def test_tail_and_mean(self, prof2):
        assert prof2.notes["tail_mass"] < 1e-12
        assert ((prof2.p + prof2.q) * prof2.d).sum() == pytest.approx(6.0, abs=1e-9)
        assert prof2.d.sum() == pytest.approx(1.0, abs=1e-12)

    def test_rejects(self):
        with pytest.raises(ValueError):
            poisson_profile(3, 2.0, truncation=1.0)
        with pytest.raises(ValueError):
            poisson_profile(3, 0.0)
        with pytest.raises(ConstraintError, match="mean degree"):
            DegreeProfile.from_table({(1, 1): 1.0}, 3, c=1.0)

    def test_csv_roundtrip(self, prof2, tmp_path):
        prof2.write_csv(tmp_path / "p.csv")
        back = DegreeProfile.read_csv(tmp_path / "p.csv", 3, 2.0)
        assert np.array_equal(back.d, prof2.d) and np.array_equal(back.p, prof2.p)


class TestEta:
    def test_half(self, prof2):
        assert eta_distributional(prof2, np.full(prof2.d.shape, 0.5)) == pytest.approx((0.5, 0.5))

    def test_all_ones(self, prof2):
        t, f = eta_distributional(prof2, np.ones(prof2.d.shape))
        assert t == pytest.approx((prof2.p * prof2.d).sum() / 6.0) and t + f == 1

    def test_omega_monte_carlo(self, prof2):
        delta = omega_delta(prof2, 2.0)
        rng = np.random.default_rng(7)
        n = 4_000_000
        cell = rng.choice(len(prof2.d), size=n, p=prof2.weights / prof2.weights.sum())
        positive = rng.random(n) < prof2.p[cell] / (prof2.p[cell] + prof2.q[cell])
        one = rng.random(n) < delta[cell]
        assert abs(np.mean(positive == one) - eta_distributional(prof2, delta)[0]) < 1e-3


class TestMuFromY:
    def test_product_case(self):
        assert mu_from_y(0.3, 1.0, 2, 4) == pytest.approx(0.21, abs=1e-15)

    def test_isolated_variable(self):
        for y in (0.2, 1.0, 7.0):
            assert mu_from_y(0.3, y, 0, 0) == pytest.approx(0.21, abs=1e-15)

    def test_quadratic_residual(self):
        mu = mu_from_y(0.5, 1.1, 3, 3)
        assert (0.5 - mu) * (0.5 - mu) - mu * mu * 1.1**6 == pytest.approx(0, abs=1e-12)

    @given(st.floats(0.0, 1.0), st.floats(0.05, 20.0), st.integers(0, 12))
    def test_root_in_range(self, d, y, s):
        mu = mu_from_y(d, y, s, 0)
        assert -1e-15 <= mu <= min(d, 1 - d) + 1e-15
        assert (d - mu) * (1 - d - mu) - mu * mu * y**s == pytest.approx(0, abs=1e-12)

    def test_continuous_at_one(self):
        assert mu_from_y(0.4, 1 + 1e-12, 5, 1) == pytest.approx(0.24, abs=1e-10)


class TestEpsGap:
    def test_half(self, prof2):
        assert eps_gap_distributional(prof2, np.full(prof2.d.shape, 0.5)) == 0

    def test_omega_negative(self, prof2):
        assert eps_gap_distributional(prof2, omega_delta(prof2, 2.0)) < -1e-4

    def test_pure_literal_profile(self):
        prof = DegreeProfile.from_table({(2, 0): 0.25, (0, 2): 0.25, (1, 0): 0.25, (0, 1): 0.25}, 3)
        # equality in both Cauchy-Schwarz steps: delta' = lam * sign(p - q) on pure literals
        lam = 0.2
        delta = 0.5 + lam * np.sign(prof.p - prof.q)
        assert eps_gap_distributional(prof, delta) == pytest.approx(0, abs=1e-15)

    def test_random_profiles_nonpositive_and_direct(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            size = rng.integers(2, 8)
            cells = {(int(rng.integers(0, 6)), int(rng.integers(0, 6))) for _ in range(size)}
            cells.discard((0, 0))
            if not cells:
                continue
            w = rng.dirichlet(np.ones(len(cells)))
            prof = DegreeProfile.from_table(dict(zip(sorted(cells), w)), 3)
            delta = rng.random(len(prof.d))
            g = eps_gap_distributional(prof, delta)
            t, f = eta_distributional(prof, delta)
            assert g <= 1e-15
            assert g == pytest.approx(eps_tf_independent(prof, delta) - t * f, abs=1e-12)


def half_point(prof, beta):
    delta = np.full(prof.d.shape, 0.5)
    return delta, DistributionalPoint(delta, delta * (1 - delta), np.outer(beta, beta), beta)


class TestRates:
    def test_independence_at_half(self, prof2):
        beta = beta_from_ttt(0.1)
        delta, pt = half_point(prof2, beta)
        t1 = t1_rate_dist(prof2, delta, beta)
        assert abs(t2_rate_dist(prof2, pt) - 2 * t1) < 1e-10

    def test_degenerate_profile(self):
        prof = DegreeProfile.from_table({(0, 0): 1.0}, 3, c=0.0)
        assert t1_rate_dist(prof, np.array([0.5]), beta_from_ttt(0.1)) == pytest.approx(math.log(2))

    def test_surface_constraint_enforced(self, prof2):
        with pytest.raises(ConstraintError, match="true surface"):
            t1_rate_dist(prof2, np.full(prof2.d.shape, 0.5), np.full(7, 1 / 7))

    def test_pair_surface_constraint_enforced(self, prof2):
        beta = beta_from_ttt(0.1)
        delta = np.full(prof2.d.shape, 0.5)
        pt = DistributionalPoint(delta, np.full(delta.shape, 0.1), np.outer(beta, beta), beta)
        with pytest.raises(ConstraintError, match="pair surfaces"):
            t2_rate_dist(prof2, pt)


class TestLandscape:
    def test_max_at_half_is_interior_and_consistent(self, prof2):
        beta = beta_from_ttt(REFERENCE_BETA_TTT)
        land = DistributionalLandscape(prof2, np.full(prof2.d.shape, 0.5), beta)
        rep = land.maximize()
        assert rep.gap == pytest.approx(0, abs=1e-9)
        assert abs(rep.residual) < 1e-6
        h = rep.multipliers
        y = rep.y
        assert h["h_FT"] == pytest.approx(h["h_TF"] / y, abs=1e-10)
        assert h["h_TT"] == pytest.approx(land.eta_t - h["h_TF"] / y, abs=1e-10)
        assert h["h_FF"] == pytest.approx(land.eta_f - h["h_TF"] / y, abs=1e-10)
        # the objective is the full rate at the reconstructed point
        assert t2_rate_dist(prof2, rep.point) == pytest.approx(rep.log_t2, abs=1e-9)

    def test_critical_fixed_beta(self):
        res = distributional_critical(2.7, 2.95, 1e-3, beta_ttt=REFERENCE_BETA_TTT)
        assert res.c_star == pytest.approx(2.838, abs=0.01) and res.monotone


class TestOmega:
    def test_one_and_off_one(self):
        prof = poisson_profile(3, 0.1)
        assert omega_gap(prof, 1.0).gap <= 1e-9
        assert omega_gap(prof, 1.5).gap > 1e-9

    def test_near_one_is_positive(self):
        # quartic onset: tiny but resolvable
        prof = poisson_profile(3, 0.1)
        assert omega_gap(prof, 0.95).gap > 1e-11

    def test_closed_form_gap_symmetric(self):
        prof = poisson_profile(3, 0.1)
        for w in (1.5, 2.0, 3.0):
            assert eps_gap_distributional(prof, omega_delta(prof, w)) == pytest.approx(
                eps_gap_distributional(prof, omega_delta(prof, 1 / w)), abs=1e-15)

    def test_scan_csv(self, tmp_path):
        rows = omega_scan([1.0, 2.0], 0.1)
        write_omega_csv(rows, tmp_path / "o.csv")
        lines = open(tmp_path / "o.csv").read().splitlines()
        assert lines[0] == "omega,gap,loglog_gap" and lines[1].endswith("-inf")
