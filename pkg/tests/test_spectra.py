import json
import math
from fractions import Fraction

import pytest
from numpy.testing import assert_allclose
from scipy.optimize import brentq
from scipy.special import jv

from hardyspec.spectra import (HARDY_SATURATED, INCONCLUSIVE, MINIMIZER_EXISTS, ball_bound,
                               ball_dirichlet_lambda1, check_lemma21, decay_exponent, decay_fit,
                               lambda_m, limit_constants)
from hardyspec.weightcore import combine, step_profile

L2 = math.log(2.0)


@pytest.fixture(scope="module")
def bump_report(bump, default_grid):
    return lambda_m(bump, 3, default_grid, l_max=2)


def test_constant_weight_saturated(one, default_grid):
    rep = lambda_m(one, 3, default_grid, l_max=2)
    assert 0.25 <= rep.lambda_m <= 0.255
    assert rep.lambda_star == 0.25
    assert rep.classification == HARDY_SATURATED
    assert rep.saturated


def test_constant_weight_dirichlet(one, default_grid):
    rep = lambda_m(one, 3, default_grid, l_max=2, closure="dirichlet")
    assert 0.25 < rep.lambda_m <= 0.255
    # the Dirichlet truncation error (~2.7e-3) exceeds the default relative tolerance
    assert rep.classification == INCONCLUSIVE
    rep = lambda_m(one, 3, default_grid, l_max=0, closure="dirichlet", classification_tol=0.02)
    assert rep.classification == HARDY_SATURATED


def test_bump_has_minimizer(bump_report):
    assert bump_report.lambda_m < 0.25
    assert bump_report.classification == MINIMIZER_EXISTS
    assert bump_report.sector == 0
    assert not bump_report.saturated


def test_bump_closures_agree(bump, default_grid, bump_report):
    d = lambda_m(bump, 3, default_grid, l_max=0, closure="dirichlet").lambda_m
    assert_allclose(bump_report.lambda_m, d, rtol=1e-6)


def test_counterexample_saturated(counterexample, default_grid):
    rep = lambda_m(counterexample, 3, default_grid, l_max=1)
    assert abs(rep.lambda_m - 0.25) <= 1e-3
    assert rep.classification == HARDY_SATURATED


def test_sectors_nondecreasing(bump_report):
    v = bump_report.sector_values
    assert v[0] <= v[1] <= v[2]


def test_inconclusive_without_obstruction(default_grid):
    # a dip then a weak bump: gap small but m exceeds both limits somewhere
    p = step_profile([-1, 0, 1], [0.5, 1.0005], 1.0, 1.0)
    rep = lambda_m(p, 3, default_grid, l_max=0, classification_tol=0.5)
    assert rep.classification == INCONCLUSIVE


def test_limit_constants(bump):
    assert limit_constants(bump, 3) == (0.25, 0.25, 0.25)
    p = step_profile([0, 1], [2.0], 0.5, -1.0)
    lp, lm, ls = limit_constants(p, 4)
    assert lp == math.inf and lm == 2.0 and ls == 2.0


def test_limit_bound_cases(one, bump, default_grid):
    lam, lp, lm, ok = check_lemma21(one, 3, default_grid)
    assert ok and lp == lm == 0.25 and abs(lam - 0.25) < 1e-3
    lam, lp, lm, ok = check_lemma21(bump, 3, default_grid)
    assert ok and lam < 0.25
    m = combine([(1.0, step_profile([-1, 0, L2, 1.5], [0.0, 9.0, 0.0], 0.0, 0.0))], offset=1.0)
    assert check_lemma21(m, 3, default_grid)[3]


def test_report_json(bump_report):
    d = bump_report.to_json()
    assert d["classification"] == MINIMIZER_EXISTS
    json.dumps(d, allow_nan=False)


def test_report_json_inf(default_grid):
    p = step_profile([0, 1], [1.0], 0.0, 0.0)
    d = lambda_m(p, 3, default_grid, l_max=0).to_json()
    assert d["lambda_plus"] == "inf"
    json.dumps(d, allow_nan=False)


def test_decay_exponent():
    assert decay_exponent(3, 3 / 16) == 0.25
    assert decay_exponent(3, 0.0) == 0.0
    with pytest.raises(ValueError):
        decay_exponent(3, 0.3)


def test_decay_fit_band(bump_report):
    fit = decay_fit(bump_report)
    assert fit.passes
    assert fit.predicted_band[0] == fit.predicted_band[1]
    assert_allclose(fit.fitted_s, fit.predicted_band[0], atol=5e-3)
    assert set(fit.to_json()) >= {"window", "fitted_s", "predicted_band", "band_margin"}


def test_decay_fit_needs_minimizer(one, default_grid):
    with pytest.raises(ValueError, match="minimizer"):
        decay_fit(lambda_m(one, 3, default_grid, l_max=0))


def test_ball_bound_golden():
    rep = ball_bound(3, 1, 2, 1, 1, 100)
    assert rep.exact["apriori_bound"] == Fraction(9, 10)
    assert rep.apriori_bound == 0.9
    assert rep.exact["criterion_rhs"] == Fraction(1, 360)
    assert not rep.criterion_holds


def test_ball_bound_holds_for_tall_bump():
    rep = ball_bound(3, 1, 2, 1, 1, 1000)
    assert rep.criterion_holds
    assert rep.apriori_bound < 0.25


def test_ball_bound_sharp():
    rep = ball_bound(3, 1, 2, 1, 1, 100, use_sharp=True)
    assert_allclose(rep.sharp_bound, math.pi ** 2 * 9 / 100, atol=1e-4)
    assert rep.sharp_bound <= rep.apriori_bound


def test_ball_bound_rejects_bad_geometry():
    with pytest.raises(ValueError):
        ball_bound(3, 1, 0.5, 1, 1, 100)
    with pytest.raises(ValueError):
        ball_bound(2, 1, 2, 1, 1, 100)


@pytest.mark.parametrize("N", [3, 4, 5, 6, 7])
def test_ball_lambda1_bessel(N):
    nu = N / 2 - 1
    j = brentq(lambda x: jv(nu, x), 2.0, 2.0 + N)
    lam = ball_dirichlet_lambda1(N, 4001)
    assert_allclose(lam, j ** 2, rtol=1e-5)
    assert lam < (N + 1) * (N + 2) / 2
