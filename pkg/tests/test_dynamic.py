"""Stochastic trend dynamics, cohort factors, and CBD/M6 mappings."""

import math

import numpy as np
import pytest

from vitalkit.distributions import ExponentialJump, Fatal
from vitalkit.dynamic import (
    AgeScaled,
    DynamicGompertzParams,
    GammaRate,
    NoCohort,
    PowerDecay,
    cbd_inverse,
    cbd_reparameterization,
    lognormal_approx_survival,
    m6_inverse,
    m6_reparameterization,
    simulate_trend_path,
    survival_dynamic,
    survival_dynamic_with_jumps,
)
from vitalkit.errors import ValidationError
from vitalkit.model import ConstantIntensity, JumpSpec
from vitalkit.numerics import RngStream

B, C, X = 0.0001744, 1.082, 60.0
FROZEN = DynamicGompertzParams(b0=B, c0=C)
WOBBLY = DynamicGompertzParams(b0=B, c0=C, mu_b=-0.01, sigma_b=0.05,
                               sigma_c=0.002, rho=-0.3)


def gompertz_survival(T):
    y = B * C**X * (C**T - 1.0) / math.log(C)
    return math.exp(-y)


def test_params_validation():
    with pytest.raises(ValidationError):
        DynamicGompertzParams(b0=0.0, c0=C)
    with pytest.raises(ValidationError):
        DynamicGompertzParams(b0=B, c0=0.9)
    with pytest.raises(ValidationError):
        DynamicGompertzParams(b0=B, c0=C, sigma_b=-1.0)
    with pytest.raises(ValidationError):
        DynamicGompertzParams(b0=B, c0=C, rho=1.5)


def test_degenerate_volatility_matches_static_closed_form():
    # zero volatility, zero drift: the trend is frozen Gompertz and survival
    # must hit exp(-Y(T)) up to the trapezoid bias only
    for T in (5.0, 15.0):
        est = survival_dynamic(FROZEN, NoCohort(), X, T, n_paths=400,
                               dt=1.0 / 360.0, rng=RngStream(1))
        assert est.std_error < 1e-12
        assert est.value == pytest.approx(gompertz_survival(T), abs=3e-6)


def test_simulate_trend_path_shapes_and_start():
    path = simulate_trend_path(WOBBLY, X, 10.0, 1.0 / 12.0, RngStream(4))
    assert path.times[0] == 0.0 and path.times[-1] == 10.0
    assert path.ln_b[0] == pytest.approx(math.log(B))
    assert path.ln_c[0] == pytest.approx(math.log(C))
    assert np.all(np.diff(path.y_values) >= 0)
    with pytest.raises(ValidationError):
        simulate_trend_path(WOBBLY, X, 10.0, 0.5, RngStream(4))


def test_survival_dynamic_reproducible_and_sane():
    a = survival_dynamic(WOBBLY, NoCohort(), X, 10.0, 4000, 1.0 / 12.0, RngStream(9))
    b = survival_dynamic(WOBBLY, NoCohort(), X, 10.0, 4000, 1.0 / 12.0, RngStream(9))
    assert (a.value, a.std_error) == (b.value, b.std_error)
    assert 0.0 < a.value < 1.0
    assert a.std_error > 0.0
    assert survival_dynamic(WOBBLY, NoCohort(), X, 0.0, 4000, 1.0 / 12.0,
                            RngStream(9)).value == 1.0


def test_age_scaled_identity():
    """The a^x cohort scaling cancels against the divided trend: same law as
    the plain GammaRate construction, so equal-seed estimates agree to 3
    combined SE (they share Brownian draws but differ in the quadrature
    arrangement of the gamma factor)."""
    plain = GammaRate(mu_gamma=0.01, sigma_gamma=0.02, birth_year=5.0)
    scaled = AgeScaled(mu_gamma=0.01, sigma_gamma=0.02, birth_year=5.0, a=1.05)
    e_plain = survival_dynamic(WOBBLY, plain, X, 10.0, 30_000, 1.0 / 12.0, RngStream(21))
    e_scaled = survival_dynamic(WOBBLY, scaled, X, 10.0, 30_000, 1.0 / 12.0, RngStream(21))
    gap = abs(e_plain.value - e_scaled.value)
    assert gap < 3.0 * math.hypot(e_plain.std_error, e_scaled.std_error) + 1e-12


def test_power_decay_needs_headroom():
    cohort = PowerDecay(mu_gamma=0.0, sigma_gamma=0.01, birth_year=1.0, x_c=50.0)
    with pytest.raises(ValidationError):
        survival_dynamic(WOBBLY, cohort, X, 5.0, 1000, 1.0 / 12.0, RngStream(2))


def test_lognormal_approximation_close_to_full_mc():
    full = survival_dynamic(WOBBLY, NoCohort(), X, 10.0, 60_000, 1.0 / 12.0, RngStream(31))
    approx = lognormal_approx_survival(WOBBLY, X, 10.0, 60_000, RngStream(31))
    assert abs(approx - full.value) / full.value < 0.005


def test_jumps_layer_multiplicatively_when_fatal():
    lam = 0.02
    jump = JumpSpec(ConstantIntensity(lam), Fatal())
    with_j = survival_dynamic_with_jumps(WOBBLY, X, 10.0, jump, 20_000,
                                         1.0 / 12.0, RngStream(43))
    base = survival_dynamic(WOBBLY, NoCohort(), X, 10.0, 20_000, 1.0 / 12.0, RngStream(43))
    assert with_j.value == pytest.approx(base.value * math.exp(-lam * 10.0), rel=1e-12)


def test_exponential_jumps_reduce_survival_consistently():
    jump = JumpSpec(ConstantIntensity(0.05), ExponentialJump(1.0))
    with_j = survival_dynamic_with_jumps(WOBBLY, X, 10.0, jump, 30_000,
                                         1.0 / 12.0, RngStream(47))
    base = survival_dynamic(WOBBLY, NoCohort(), X, 10.0, 30_000, 1.0 / 12.0, RngStream(47))
    assert with_j.value < base.value
    # frozen-trend cross-check against the static closed form
    frozen_j = survival_dynamic_with_jumps(FROZEN, X, 10.0, jump, 2000,
                                           1.0 / 360.0, RngStream(47))
    kept = 1.0 / (1.0 + 1.0)
    want = gompertz_survival(10.0) * math.exp(-0.05 * 10.0 * (1.0 - kept))
    assert frozen_j.value == pytest.approx(want, abs=5e-5)


def test_cbd_round_trip():
    b, c = cbd_reparameterization(-10.0, 0.09, 70.0)
    k1, k2 = cbd_inverse(b, c, 70.0)
    assert k1 == pytest.approx(-10.0, rel=1e-12)
    assert k2 == pytest.approx(0.09, rel=1e-12)
    assert c == pytest.approx(math.exp(0.09), rel=1e-14)


def test_cbd_warns_on_flat_hazard():
    with pytest.warns(RuntimeWarning):
        cbd_reparameterization(-10.0, -0.01, 70.0)


def test_m6_round_trip():
    b, c, g = m6_reparameterization(-9.5, 0.085, 0.3, 72.0)
    k1, k2, gamma = m6_inverse(b, c, g, 72.0)
    assert k1 == pytest.approx(-9.5, rel=1e-12)
    assert k2 == pytest.approx(0.085, rel=1e-12)
    assert gamma == pytest.approx(0.3, rel=1e-12)
