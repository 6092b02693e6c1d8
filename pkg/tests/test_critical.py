import math

import pytest

from momentlab.boolean import REFERENCE_BETA_TTT, beta_from_ttt, first_moment_beta_ttt, half_point
from momentlab.critical import (
    BracketError,
    bisect_critical,
    first_moment_critical,
    first_moment_root,
    ratio_critical,
    second_moment_critical,
)
from momentlab.framework import FirstMomentPoint, ModelSpec
from momentlab.lagrange import SecondMomentLandscape, maximize_t2
from momentlab.rates import plain_first_moment_rate
from scipy.optimize import brentq

B = ModelSpec.boolean()


class TestBisection:
    def test_linear_gap(self):
        res = bisect_critical(lambda c: c - 2.5, 1.0, 4.0, tol_c=1e-4)
        assert res.c_star == pytest.approx(2.5, abs=1e-4) and res.monotone
        assert res.lo <= 2.5 <= res.hi and res.hi - res.lo <= 1e-4

    def test_invalid_bracket(self):
        with pytest.raises(BracketError):
            bisect_critical(lambda c: c - 2.5, 3.0, 4.0)

    def test_non_monotone_flagged(self):
        # positive only on a window that the bisection steps over
        res = bisect_critical(lambda c: 1.0 if 1.4 < c < 1.6 or c > 3.9 else -1.0, 1.0, 4.0, tol_c=1e-3)
        assert not res.monotone

    def test_record_shape(self):
        doc = bisect_critical(lambda c: c - 2.5, 1.0, 4.0).to_dict()
        assert {"c_star", "bracket", "probes", "spot_checks", "monotone"} <= set(doc)


@pytest.fixture(scope="module")
def reference_point():
    return half_point(beta_from_ttt(REFERENCE_BETA_TTT))


class TestSecondMoment:
    def test_two_routes_agree(self, reference_point):
        land = SecondMomentLandscape(B, reference_point)
        bis = second_moment_critical(B, reference_point, 2.6, 3.1, tol_c=1e-4, landscape=land)
        rat = ratio_critical(land)
        assert bis.c_star == pytest.approx(2.833, abs=0.01)
        assert bis.c_star == pytest.approx(rat.c_star, abs=2e-4)

    def test_bracketed(self, reference_point):
        tol = 1e-3
        res = second_moment_critical(B, reference_point, 2.6, 3.1, tol_c=tol)
        assert maximize_t2(B, reference_point, res.c_star - tol).gap <= 1e-9
        assert maximize_t2(B, reference_point, res.c_star + tol).gap > 1e-9

    def test_not_above_first_moment(self, reference_point):
        res = second_moment_critical(B, reference_point, 2.6, 3.1)
        assert res.c_star <= first_moment_root(B, reference_point)


class TestFirstMoment:
    def test_closed_form_and_bisection(self):
        fm = half_point(beta_from_ttt(first_moment_beta_ttt()))
        root = first_moment_root(B, fm)
        res = first_moment_critical(B, fm, 3.5, 4.0, tol_c=1e-4)
        assert root == pytest.approx(3.783, abs=0.01)
        assert res.c_star == pytest.approx(root, abs=1e-4)

    def test_optimal_beta(self):
        b = first_moment_beta_ttt()
        assert beta_from_ttt(b)[B.type_index("TFF")] == pytest.approx(0.191, abs=5e-4)

    def test_restricted_beta_lowers_root(self):
        # balanced family optimum against a family member and against unrestricted beta
        best = first_moment_root(B, half_point(beta_from_ttt(first_moment_beta_ttt())))
        other = first_moment_root(B, half_point(beta_from_ttt(0.12)))
        uniform = first_moment_root(B, FirstMomentPoint.create(B, [0.5, 0.5], [0.5, 0.5], [1 / 7] * 7))
        assert other < best < uniform
        assert uniform == pytest.approx(math.log(2) / -math.log(7 / 8), abs=1e-12)

    def test_plain_upper_bound(self):
        root = brentq(lambda c: plain_first_moment_rate(c, 3), 1.0, 10.0, xtol=1e-12)
        assert root == pytest.approx(5.191, abs=1e-3)
