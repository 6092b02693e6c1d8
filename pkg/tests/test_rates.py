import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momentlab.boolean import beta_from_ttt, first_moment_beta_ttt
from momentlab.critical import first_moment_root
from momentlab.framework import FirstMomentPoint, ModelSpec, SecondMomentPoint, beta_from_orbits, epsilon
from momentlab.implicants import beta_from_free
from momentlab.rates import (
    LN2,
    argmax_rate,
    entropy,
    independence_point,
    nae_g,
    nae_rate,
    plain_first_moment_rate,
    plain_g,
    plain_solutions_rate,
    ratio_gap_at_independence,
    t1_coefficient,
    t1_log_rate,
    t2_log_rate,
    weighted_log,
)

from .strategies import simplex, symmetric_beta

B = ModelSpec.boolean()
I = ModelSpec.implicant()


def half(beta, rho=0.5):
    return FirstMomentPoint.create(B, [0.5, 0.5], [rho, 1 - rho], beta)


class TestT1:
    def test_small_c_limit(self):
        fm = half(np.full(7, 1 / 7))
        assert t1_log_rate(B, fm, 0.0) == pytest.approx(LN2, abs=1e-15)
        assert t1_log_rate(B, fm, 1e-9) == pytest.approx(LN2, abs=1e-8)

    def test_first_moment_root(self):
        fm = half(beta_from_ttt(first_moment_beta_ttt()))
        assert first_moment_root(B, fm) == pytest.approx(3.783, abs=0.01)
        assert orbit_tff(fm) == pytest.approx(0.191, abs=5e-4)

    def test_impossible_selection(self):
        # all clauses TTT while every literal occurrence is false
        beta = beta_from_orbits(B, {"TTT": 1.0})
        fm = FirstMomentPoint.create(B, [1.0, 0.0], [1.0, 0.0], beta)
        assert t1_log_rate(B, fm, 1.0) == -math.inf

    def test_zero_weight_zero_probability(self):
        assert weighted_log([0.0, 1.0], [0.0, 0.5]) == pytest.approx(math.log(0.5))
        assert entropy([0.0, 1.0]) == 0.0

    @given(st.data(), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
    def test_affine_in_c(self, data, c1, c2):
        fm = half(data.draw(simplex(7)))
        mid = t1_log_rate(B, fm, 0.5 * (c1 + c2))
        assert mid == pytest.approx(0.5 * (t1_log_rate(B, fm, c1) + t1_log_rate(B, fm, c2)), abs=1e-12)


def orbit_tff(fm):
    return float(fm.beta[B.type_index("TFF")])


class TestT2:
    def test_diagonal_degenerates_to_one_solution(self):
        beta = beta_from_ttt(0.1)
        d = 0.4
        fm = FirstMomentPoint.create(B, [1 - d, d], [0.5, 0.5], beta)
        sm = SecondMomentPoint.create(B, np.diag([1 - d, d]), np.diag(beta), fm)
        c = 1.7
        eps = epsilon(B, sm.mu, fm.rho)
        diag = np.diag(eps)
        expected = entropy(fm.delta) + c * sum(
            b * (sum(math.log(diag[B.vidx[v]]) for v in t) - math.log(b)) for t, b in zip(B.types, beta) if b > 0)
        assert t2_log_rate(B, sm, fm.rho, c) == pytest.approx(expected, abs=1e-12)

    def test_independence_point_marginals(self):
        beta = np.full(7, 1 / 7)
        sm = independence_point(half(beta))
        assert np.allclose(sm.mu, 0.25)
        assert sm.gamma.shape == (7, 7) and np.allclose(sm.gamma.sum(axis=1), beta)

    def test_implicant_independence_point(self):
        beta = beta_from_free(0.2, 0.1233, 0.02567, 0.02833)
        fm = FirstMomentPoint.create(I, [0.5, 0.3, 0.2], [0.5, 0.5], beta / beta.sum())
        mu = independence_point(fm).mu
        o, s = I.didx["1"], I.didx["*"]
        assert (mu[o, o], mu[s, s], mu[o, s], mu[s, o]) == pytest.approx((0.09, 0.04, 0.06, 0.06))


class TestGapAtIndependence:
    @given(symmetric_beta(), st.floats(0.0, 1.0), st.floats(0.0, 10.0))
    def test_half_any_rho(self, beta, rho, c):
        assert abs(ratio_gap_at_independence(B, half(beta, rho), c)) < 1e-10

    def test_off_half_negative(self):
        beta = beta_from_ttt(0.0929)
        fm = FirstMomentPoint.create(B, [0.4, 0.6], [0.5, 0.5], beta)
        assert ratio_gap_at_independence(B, fm, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert ratio_gap_at_independence(B, fm, 1.0) < -1e-4

    def test_implicant_balanced(self):
        alpha = 0.11
        beta = beta_from_free(alpha, 0.1533, 0.05467, 0.0033)
        fm = FirstMomentPoint.create(I, [(1 - alpha) / 2, (1 - alpha) / 2, alpha], [0.5, 0.5], beta / beta.sum())
        for c in (0.5, 2.0, 3.0):
            assert abs(ratio_gap_at_independence(I, fm, c)) < 1e-10


class TestPlainAndNae:
    def test_g_at_half_is_first_moment_squared(self):
        assert plain_g(0.5, 3) == pytest.approx(49 / 64, abs=1e-15)
        assert plain_solutions_rate(0.5, 1.3, 3) == pytest.approx(2 * plain_first_moment_rate(1.3, 3), abs=1e-14)

    def test_g_identical(self):
        assert plain_g(0.0, 3) == pytest.approx(7 / 8)

    @pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
    def test_plain_argmax_below_half(self, c):
        mu, val = argmax_rate(plain_solutions_rate, c, 3)
        assert mu < 0.5 and val > 2 * plain_first_moment_rate(c, 3)

    def test_argmax_matches_dense_grid(self):
        grid = np.linspace(0, 1, 200_001)
        vals = plain_solutions_rate(grid, 1.0, 3)
        mu, val = argmax_rate(plain_solutions_rate, 1.0, 3)
        assert abs(mu - grid[np.argmax(vals)]) < 1e-4 and val >= vals.max() - 1e-12

    @given(st.floats(0.0, 1.0))
    def test_nae_symmetric(self, mu):
        assert nae_g(mu, 3) == pytest.approx(nae_g(1 - mu, 3), abs=1e-15)

    def test_nae_half(self):
        assert nae_g(0.5, 3) == pytest.approx(17 / 32)

    def test_nae_stationary_at_half(self):
        h = 1e-5
        assert (nae_g(0.5 + h, 3) - nae_g(0.5 - h, 3)) / (2 * h) == pytest.approx(0, abs=1e-10)
        assert nae_rate(0.5, 1.0, 3) > nae_rate(0.45, 1.0, 3)

    @given(st.floats(1e-300, 1e-3))
    def test_continuous_at_zero(self, mu):
        assert plain_solutions_rate(mu, 1.0, 3) == pytest.approx(plain_solutions_rate(0.0, 1.0, 3), abs=1e-2)
