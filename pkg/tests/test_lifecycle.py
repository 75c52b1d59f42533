r"""Consumption and portfolio choice under vitality-driven mortality.

The sigma_V = 0 branch has closed forms throughout, so most oracles here
are exact.  The noisy branch is checked three independent ways: an
analytic residual of the consumption ODE, a finite-difference residual of
the value equation, and a collocation solution of the same boundary value
problem via scipy's solve_bvp.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_bvp, solve_ivp

from vitalkit.actuarial import PricingBasis, annuity_price
from vitalkit.distributions import Exponential
from vitalkit.errors import ValidationError
from vitalkit.lifecycle import (
    MarketParams,
    VitalitySDE,
    WithMortality,
    _k1,
    consumption_factor,
    discounted_utility,
    merton_reference,
    optimal_policy,
    simulate_lifecycle,
    utility_sample,
    value_function_g,
)
from vitalkit.model import ConstantRate, VitalityModel
from vitalkit.numerics import RngStream

MKT = MarketParams(r=0.04, theta=0.3, sigma_s=0.2, beta=0.03)
MKT_B = MarketParams(r=0.04, theta=0.3, sigma_s=0.2, beta=0.03, lambda_bequest=4.0)
SDE0 = VitalitySDE(delta=0.05, sigma_v=0.0, v0=1.0)
SDE = VitalitySDE(delta=0.05, sigma_v=0.12, v0=1.0)

G_INF = ((0.04 + 0.045 - 0.03) / 0.03 + math.log(0.03)) / 0.03


def test_params_validation():
    with pytest.raises(ValidationError):
        MarketParams(r=0.04, theta=0.3, sigma_s=0.0, beta=0.03)
    with pytest.raises(ValidationError):
        MarketParams(r=0.04, theta=0.3, sigma_s=0.2, beta=0.0)
    with pytest.raises(ValidationError):
        MarketParams(r=0.04, theta=0.3, sigma_s=0.2, beta=0.03, lambda_bequest=-1.0)
    with pytest.raises(ValidationError):
        VitalitySDE(delta=0.0, sigma_v=0.1, v0=1.0)
    with pytest.raises(ValidationError):
        VitalitySDE(delta=0.05, sigma_v=-0.1, v0=1.0)
    with pytest.raises(ValidationError):
        VitalitySDE(delta=0.05, sigma_v=0.1, v0=0.0)


def test_consumption_factor_noiseless_closed_form():
    # annuity over the remaining deterministic lifetime v / delta
    f1 = consumption_factor(1.0, MKT, SDE0)
    assert f1 == pytest.approx((1.0 - math.exp(-0.6)) / 0.03, abs=1e-12)
    assert f1 == pytest.approx(15.03961213019912, abs=1e-12)
    # exhausted vitality leaves only the bequest weight
    assert consumption_factor(0.0, MKT_B, SDE0) == pytest.approx(4.0, abs=1e-14)
    with pytest.raises(ValidationError):
        consumption_factor(-0.5, MKT, SDE0)


@pytest.mark.parametrize("mkt", [MKT, MKT_B], ids=["no_bequest", "bequest"])
def test_consumption_ode_residual(mkt):
    # delta f' - (sigma_v^2/2) f'' = 1 - beta f with analytic derivatives
    lam = mkt.lambda_bequest
    k1 = _k1(mkt, SDE)
    v = np.linspace(0.01, 30.0, 400)
    f = consumption_factor(v, mkt, SDE)
    fp = (lam - 1.0 / mkt.beta) * k1 * np.exp(k1 * v)
    fpp = k1 * fp
    resid = SDE.delta * fp - 0.5 * SDE.sigma_v**2 * fpp - 1.0 + mkt.beta * f
    assert np.max(np.abs(resid)) <= 1e-10


def test_k1_small_noise_limit_and_sign():
    k1_small = _k1(MKT, VitalitySDE(delta=0.05, sigma_v=1e-4, v0=1.0))
    assert abs(k1_small + 0.03 / 0.05) <= 1e-6
    assert _k1(MKT, SDE) < 0.0


def test_consumption_slope_flips_at_reciprocal_beta():
    lam_c = 1.0 / MKT.beta
    for lam, rising in ((0.5 * lam_c, True), (2.0 * lam_c, False)):
        m = MarketParams(r=0.04, theta=0.3, sigma_s=0.2, beta=0.03,
                         lambda_bequest=lam)
        vals = consumption_factor(np.array([0.5, 1.0, 2.0]), m, SDE)
        d = np.diff(vals)
        assert (d > 0).all() if rising else (d < 0).all()


def test_optimal_policy_values():
    pi, zeta = optimal_policy(100.0, 1.0, MKT, SDE0)
    assert pi == pytest.approx(0.3 / 0.2, abs=1e-14)
    assert zeta == pytest.approx(6.649107645482611, rel=1e-13)
    with pytest.raises(ValidationError):
        optimal_policy(0.0, 1.0, MKT, SDE0)
    with pytest.raises(ValidationError):
        optimal_policy(100.0, 0.0, MKT, SDE0)


def test_merton_infinite_horizon_constants():
    ref = merton_reference(MKT)
    assert ref.F == 1.0 / 0.03
    assert ref.G == pytest.approx(G_INF, abs=1e-14)
    assert ref.G == pytest.approx(-55.77415213288829, abs=1e-12)


def test_merton_with_mortality_reduces_to_annuity():
    # no hazard, huge horizon: back to the perpetual factor
    mm0 = merton_reference(MKT, WithMortality(trend=None, horizon=1000.0))
    assert mm0.F(0.0) == pytest.approx(1.0 / 0.03, abs=1e-8)
    # constant hazard mu: F(0) equals the exponential-lifetime annuity
    mu = 0.02
    mm = merton_reference(MKT, WithMortality(trend=ConstantRate(mu), horizon=1000.0))
    model = VitalityModel(age_x=0.0, initial=Exponential(1.0), trend=ConstantRate(mu))
    abar = annuity_price(model, PricingBasis(MKT.beta))
    assert mm.F(0.0) == pytest.approx(abar, abs=1e-8)
    assert mm.F(0.0) == pytest.approx(1.0 / (MKT.beta + mu), abs=1e-8)


def test_merton_terminal_conditions():
    mmt = merton_reference(MKT, WithMortality(trend=None, horizon=5.0,
                                              lambda_terminal=2.5))
    assert mmt.F(5.0) == 2.5
    assert mmt.G(5.0) == 0.0
    with pytest.raises(ValidationError):
        mmt.F(5.5)
    with pytest.raises(ValidationError):
        WithMortality(trend=None, horizon=0.0)


def test_value_g_noiseless_matches_quadrature():
    grid = np.linspace(1e-3, 12.0, 241)
    g = value_function_g(grid, MKT, SDE0)

    def g_quad(v):
        # integrating factor: g(v) = e^{-bv/d}/d * int_0^v e^{bu/d} s(u) du
        def src(u):
            fu = consumption_factor(u, MKT, SDE0)
            return math.exp(MKT.beta * u / SDE0.delta) * (
                fu * (MKT.r + 0.5 * MKT.theta**2) - 1.0 - math.log(fu)) / SDE0.delta
        val, _ = quad(src, 0.0, v, epsabs=1e-13, epsrel=1e-12, limit=300)
        return math.exp(-MKT.beta * v / SDE0.delta) * val

    for i in (5, 60, 120, 240):
        assert g[i] == pytest.approx(g_quad(grid[i]), abs=1e-6)


def test_value_g_noiseless_matches_finite_horizon_merton():
    # death at v/delta with certainty: same problem as a fixed-horizon
    # Merton with terminal bequest weight
    lam = 4.0
    mkt4 = MarketParams(r=0.04, theta=0.3, sigma_s=0.2, beta=0.03,
                        lambda_bequest=lam)
    grid = np.linspace(1e-3, 12.0, 241)
    gv = value_function_g(grid, mkt4, SDE0)
    for i in (60, 180):
        v = grid[i]
        mmv = merton_reference(mkt4, WithMortality(trend=None, horizon=v / SDE0.delta,
                                                   lambda_terminal=lam))
        assert gv[i] == pytest.approx(mmv.G(0.0), abs=5e-6)
        assert consumption_factor(v, mkt4, SDE0) == pytest.approx(
            mmv.F(0.0), abs=1e-10)


def test_value_g_noisy_fd_residual_and_far_field():
    gridf = np.linspace(1e-3, 25.0, 2001)
    gf = value_function_g(gridf, MKT, SDE)
    h = gridf[1] - gridf[0]
    gp = (gf[2:] - gf[:-2]) / (2 * h)
    gpp = (gf[2:] - 2 * gf[1:-1] + gf[:-2]) / h**2
    fmid = consumption_factor(gridf[1:-1], MKT, SDE)
    src = fmid * (MKT.r + 0.5 * MKT.theta**2) - 1.0 - np.log(fmid)
    resid = 0.5 * SDE.sigma_v**2 * gpp - SDE.delta * gp - MKT.beta * gf[1:-1] + src
    assert np.max(np.abs(resid[5:-5])) < 5e-4
    # approaches the immortal Merton constant from below at high vitality
    assert abs(gf[-1] - G_INF) < 2e-3
    assert gf.min() < G_INF < 0.0


def test_value_g_noisy_vs_collocation_oracle():
    lam = 4.0
    mkt4 = MarketParams(r=0.04, theta=0.3, sigma_s=0.2, beta=0.03,
                        lambda_bequest=lam)

    def src_vec(x):
        fx = consumption_factor(x, mkt4, SDE)
        return fx * (mkt4.r + 0.5 * mkt4.theta**2) - 1.0 - np.log(fx)

    def rhs(x, y):
        s = np.asarray(src_vec(x))
        return np.vstack([y[1],
                          (SDE.delta * y[1] + mkt4.beta * y[0] - s)
                          / (0.5 * SDE.sigma_v**2)])

    def bc(ya, yb):
        return np.array([ya[0], yb[0] - G_INF])

    x0 = np.linspace(0.0, 25.0, 3001)
    bvp = solve_bvp(rhs, bc, x0, np.zeros((2, x0.size)), tol=1e-8,
                    max_nodes=400_000)
    assert bvp.success, bvp.message
    probe = np.array([0.5, 1.0, 3.0, 8.0, 20.0])
    dense = np.unique(np.concatenate([np.linspace(1e-3, 25.0, 6001), probe]))
    mine = value_function_g(dense, mkt4, SDE)[np.searchsorted(dense, probe)]
    assert np.max(np.abs(mine - bvp.sol(probe)[0])) < 5e-5


def test_value_g_grid_validation():
    with pytest.raises(ValidationError):
        value_function_g(np.array([1.0]), MKT, SDE0)
    with pytest.raises(ValidationError):
        value_function_g(np.array([0.5, 0.2, 1.0]), MKT, SDE0)
    with pytest.raises(ValidationError):
        value_function_g(np.array([0.0, 1.0]), MKT, SDE0)
    with pytest.raises(ValidationError):
        value_function_g(np.array([0.5, 1.0]), MKT, SDE0)


def test_simulate_deterministic_market_matches_rk():
    # theta = 0 and sigma_v = 0 make the whole path an ODE
    mkt_det = MarketParams(r=0.04, theta=0.0, sigma_s=0.2, beta=0.03,
                           lambda_bequest=1.0)
    sde_det = VitalitySDE(delta=0.1, sigma_v=0.0, v0=1.0)

    def rhs(t, y):
        v = max(sde_det.v0 - sde_det.delta * t, 0.0)
        f = consumption_factor(v, mkt_det, sde_det)
        return [y[0] * mkt_det.r - y[0] / f]

    sol = solve_ivp(rhs, (0.0, 10.0), [100.0], rtol=1e-11, atol=1e-12,
                    dense_output=True)
    path = simulate_lifecycle(100.0, mkt_det, sde_det, dt=2e-5, rng=RngStream(5))
    assert path.tau is not None
    assert path.tau == pytest.approx(10.0, abs=3e-5)
    assert not path.bankrupt
    a_rk = sol.sol(path.times[-1])[0]
    assert path.assets[-1] == pytest.approx(a_rk, rel=1e-4)
    assert np.isfinite(discounted_utility(path, mkt_det))


def test_simulate_validation():
    with pytest.raises(ValidationError):
        simulate_lifecycle(0.0, MKT, SDE0, dt=1e-3, rng=RngStream(1))
    with pytest.raises(ValidationError):
        simulate_lifecycle(10.0, MKT, SDE0, dt=0.5, rng=RngStream(1))


def test_utility_falls_when_consumption_leaves_optimum():
    # common random numbers, +-5% consumption scale
    mkt_p = MarketParams(r=0.04, theta=0.3, sigma_s=0.2, beta=0.03,
                         lambda_bequest=5.0)
    sde_p = VitalitySDE(delta=0.1, sigma_v=0.0, v0=1.0)
    base = utility_sample(100.0, mkt_p, sde_p, 1 / 252, 10_000, RngStream(41))
    lo = utility_sample(100.0, mkt_p, sde_p, 1 / 252, 10_000, RngStream(41),
                        consumption_scale=0.95)
    hi = utility_sample(100.0, mkt_p, sde_p, 1 / 252, 10_000, RngStream(41),
                        consumption_scale=1.05)
    assert np.isfinite(base).all() and np.isfinite(lo).all() and np.isfinite(hi).all()
    n = base.size
    for other in (lo, hi):
        d = base - other
        z = d.mean() / (d.std(ddof=1) / math.sqrt(n))
        assert z > 1.645


def test_utility_sample_validation():
    with pytest.raises(ValidationError):
        utility_sample(100.0, MKT, SDE0, 1 / 252, 10, RngStream(1),
                       consumption_scale=0.0)
    with pytest.raises(ValidationError):
        utility_sample(100.0, MKT, SDE0, 1 / 252, 1, RngStream(1))
