"""Closed-form survival and first-passage machinery.

Reference values were frozen from high-precision evaluation (mpmath at 40
digits) of the same formulas; tolerances reflect float64 round-off unless a
numerical inversion is involved.
"""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtr

from vitalkit.distributions import (
    DagumMix,
    Degenerate,
    Exponential,
    ExponentialJump,
    Fatal,
    GammaMix,
    MixtureExponential,
    ParetoII,
)
from vitalkit.errors import NoClosedFormError, ValidationError
from vitalkit.model import (
    BrownianConst,
    ConstantIntensity,
    ConstantRate,
    FrailtyScaled,
    GompertzTrend,
    JumpSpec,
    NoDiffusion,
    PiecewiseIntensity,
    PiecewiseRates,
    VitalityModel,
    cumulative_hazard,
    death_time_laplace,
    exp_transform,
    gompertz_death_time,
    hazard_rate,
    no_jumps,
    survival_by_laplace,
    survival_static,
    trend_inverse,
)

B, C, X = 0.0001744, 1.082, 60.0
GOMP = GompertzTrend(b=B, c=C)


def eq6_survival(v, delta, sigma, T):
    """Reflection formula for Pr(v - delta*t - sigma*B(t) > 0 on [0, T])."""
    sq = sigma * math.sqrt(T)
    return (ndtr((v - delta * T) / sq)
            - math.exp(2.0 * delta * v / sigma**2) * ndtr((-v - delta * T) / sq))


# ---------------------------------------------------------------------------
# trend helpers


def test_gompertz_cumulative_hazard_closed_form():
    t = np.linspace(0.0, 40.0, 81)
    want = B * C**X * (C**t - 1.0) / math.log(C)
    assert np.allclose(cumulative_hazard(GOMP, X, t), want, rtol=1e-14)
    assert cumulative_hazard(GOMP, X, 10.0) == pytest.approx(0.3002619957107447, rel=1e-12)


def test_hazard_rate_is_derivative_of_cumulative():
    for trend in (GOMP, ConstantRate(0.35), PiecewiseRates((0.1, 0.4, 0.2))):
        for t in (0.3, 1.7, 2.5):
            h = 1e-6
            num = (cumulative_hazard(trend, X, t + h) - cumulative_hazard(trend, X, t - h)) / (2 * h)
            assert float(hazard_rate(trend, X, t)) == pytest.approx(num, rel=1e-6)


def test_trend_inverse_round_trips():
    for trend in (GOMP, ConstantRate(0.35), PiecewiseRates((0.1, 0.4, 0.2, 0.3))):
        y = np.array([0.01, 0.2, 0.5, 0.9])
        t = trend_inverse(trend, X, y)
        assert np.allclose(cumulative_hazard(trend, X, t), y, rtol=1e-10)


def test_piecewise_rates_coverage_is_bounded():
    tr = PiecewiseRates((0.1, 0.3))
    assert float(cumulative_hazard(tr, 0.0, 1.5)) == pytest.approx(0.1 + 0.3 * 0.5)
    assert float(hazard_rate(tr, 0.0, 1.7)) == pytest.approx(0.3)
    # past the listed years the schedule is undefined, not extrapolated
    with pytest.raises(ValidationError):
        cumulative_hazard(tr, 0.0, 5.0)


def test_spec_validation():
    with pytest.raises(ValidationError):
        ConstantRate(0.0)
    with pytest.raises(ValidationError):
        GompertzTrend(b=B, c=1.0)
    with pytest.raises(ValidationError):
        PiecewiseRates(())
    with pytest.raises(ValidationError):
        BrownianConst(0.0)
    with pytest.raises(ValidationError):
        ConstantIntensity(-0.1)
    with pytest.raises(ValidationError):
        VitalityModel(age_x=-1.0, initial=Degenerate(1.0), trend=GOMP)
    with pytest.raises(ValidationError):
        FrailtyScaled(FrailtyScaled(GOMP, GammaMix(1.0, 1.0)), GammaMix(1.0, 1.0))


def test_no_jumps_is_null():
    assert no_jumps().is_null
    assert not JumpSpec(ConstantIntensity(0.1), Fatal()).is_null
    assert JumpSpec(PiecewiseIntensity((0.0, 0.0)), Fatal()).is_null


def test_intensity_cumulative():
    ci = ConstantIntensity(0.05)
    assert float(ci.cumulative(10.0)) == pytest.approx(0.5)
    pi = PiecewiseIntensity((0.1, 0.2))
    assert float(pi.cumulative(1.5)) == pytest.approx(0.1 + 0.1)
    assert float(pi.cumulative(2.0)) == pytest.approx(0.1 + 0.2)
    with pytest.raises(ValidationError):
        pi.cumulative(4.0)
    with pytest.raises(ValidationError):
        ci.cumulative(-1.0)


# ---------------------------------------------------------------------------
# deterministic death ages


def test_gompertz_death_time_frozen_values():
    assert gompertz_death_time(1.0, X, B, C) == pytest.approx(20.40615108712781, abs=1e-11)
    assert gompertz_death_time(math.log(2.0), X, B, C) == pytest.approx(16.83332790654539, abs=1e-11)
    assert gompertz_death_time(2.0, X, B, C) == pytest.approx(27.862614, abs=1e-6)


def test_gompertz_death_time_inverts_hazard():
    v = np.array([0.05, 0.5, 1.0, 3.0])
    t = gompertz_death_time(v, X, B, C)
    assert np.allclose(cumulative_hazard(GOMP, X, t), v, rtol=1e-12)


# ---------------------------------------------------------------------------
# closed-form survival: pure trend


def test_survival_degenerate_is_step_at_death_time():
    m = VitalityModel(age_x=X, initial=Degenerate(1.0), trend=GOMP)
    tau = 20.40615108712781
    assert survival_static(m, tau - 0.01) == 1.0
    assert survival_static(m, tau + 0.01) == 0.0
    assert survival_static(m, 0.0) == 1.0


def test_survival_exponential_initial_frozen():
    m = VitalityModel(age_x=X, initial=Exponential(1.0), trend=GOMP)
    assert survival_static(m, 10.0) == pytest.approx(0.7406241549087679, rel=1e-13)
    t = np.linspace(0.0, 40.0, 41)
    y = cumulative_hazard(GOMP, X, t)
    assert np.allclose(survival_static(m, t), np.exp(-y), rtol=1e-14)


def test_survival_negative_time_rejected():
    m = VitalityModel(age_x=X, initial=Exponential(1.0), trend=GOMP)
    with pytest.raises(ValidationError):
        survival_static(m, -0.5)


def test_survival_vector_scalar_agree():
    m = VitalityModel(age_x=X, initial=Exponential(1.0), trend=GOMP,
                      jump=JumpSpec(ConstantIntensity(0.04), Fatal()))
    ts = np.array([0.0, 3.0, 11.0])
    vec = survival_static(m, ts)
    assert vec.shape == (3,)
    for i, t in enumerate(ts):
        assert float(vec[i]) == survival_static(m, float(t))


# ---------------------------------------------------------------------------
# closed-form survival: drifted Brownian motion


def test_survival_drifted_bm_frozen_and_formula():
    m = VitalityModel(age_x=0.0, initial=Degenerate(1.0), trend=ConstantRate(1.0),
                      diffusion=BrownianConst(1.0))
    assert survival_static(m, 1.0) == pytest.approx(0.33189799877682935, rel=1e-12)

    for (v, d, s) in [(1.0, 0.5, 0.3), (2.0, 0.1, 0.6), (0.7, 0.9, 1.2), (0.5, 0.3, 1.0)]:
        mm = VitalityModel(age_x=0.0, initial=Degenerate(v), trend=ConstantRate(d),
                           diffusion=BrownianConst(s))
        for T in (0.5, 2.0, 9.0):
            assert survival_static(mm, T) == pytest.approx(eq6_survival(v, d, s, T), rel=1e-12)


def test_survival_bm_fatal_jumps_factorize():
    lam = 0.05
    m = VitalityModel(age_x=0.0, initial=Degenerate(1.0), trend=ConstantRate(0.5),
                      diffusion=BrownianConst(0.3),
                      jump=JumpSpec(ConstantIntensity(lam), Fatal()))
    base = VitalityModel(age_x=0.0, initial=Degenerate(1.0), trend=ConstantRate(0.5),
                         diffusion=BrownianConst(0.3))
    for T in (1.0, 5.0, 10.0):
        assert survival_static(m, T) == pytest.approx(
            math.exp(-lam * T) * survival_static(base, T), rel=1e-13)


def test_survival_bm_exponential_initial_mixes():
    # averaging the degenerate formula over the initial law
    r = 1.3
    m = VitalityModel(age_x=0.0, initial=Exponential(r), trend=ConstantRate(0.5),
                      diffusion=BrownianConst(0.3))
    from scipy.integrate import quad
    for T in (1.0, 4.0):
        want, _ = quad(lambda v: r * math.exp(-r * v) * eq6_survival(v, 0.5, 0.3, T),
                       0, 60, limit=200)
        # 64-node Laguerre mixing carries a ~1e-6 quadrature floor
        assert survival_static(m, T) == pytest.approx(want, abs=5e-6)


def test_survival_diffusion_needs_constant_trend():
    m = VitalityModel(age_x=X, initial=Degenerate(1.0), trend=GOMP,
                      diffusion=BrownianConst(0.3))
    with pytest.raises(NoClosedFormError):
        survival_static(m, 5.0)


# ---------------------------------------------------------------------------
# closed-form survival: non-lethal jumps, no diffusion


def test_survival_point_mass_exponential_jumps_vs_poisson_sum():
    lam, rate, v = 0.4, 1.1, 3.0
    m = VitalityModel(age_x=0.0, initial=Degenerate(v), trend=ConstantRate(0.2),
                      jump=JumpSpec(ConstantIntensity(lam), ExponentialJump(rate)))
    for T in (1.0, 5.0, 12.0):
        head = v - 0.2 * T
        if head <= 0:
            want = 0.0
        else:
            ks = np.arange(0, 200)
            want = float(np.sum(stats.poisson.pmf(ks, lam * T)
                                * stats.gamma.cdf(head, a=np.maximum(ks, 1e-12), scale=1 / rate)
                                * (ks > 0))
                         + stats.poisson.pmf(0, lam * T))
        assert survival_static(m, T) == pytest.approx(want, abs=1e-12)


def test_survival_exponential_initial_nonlethal_jumps():
    r, lam, a = 0.8, 0.3, 1.4
    m = VitalityModel(age_x=X, initial=Exponential(r), trend=GOMP,
                      jump=JumpSpec(ConstantIntensity(lam), ExponentialJump(a)))
    t = np.array([2.0, 10.0, 25.0])
    y = cumulative_hazard(GOMP, X, t)
    kept = a / (a + r)
    want = np.exp(-r * y - lam * t * (1.0 - kept))
    assert np.allclose(survival_static(m, t), want, rtol=1e-13)


def test_survival_exponential_initial_mixture_jumps():
    r, lam = 0.6, 0.2
    mix = MixtureExponential(weights=(0.25, 0.75), rates=(0.5, 2.0))
    m = VitalityModel(age_x=0.0, initial=Exponential(r), trend=ConstantRate(0.1),
                      jump=JumpSpec(ConstantIntensity(lam), mix))
    kept = 0.25 * 0.5 / (0.5 + r) + 0.75 * 2.0 / (2.0 + r)
    T = 8.0
    want = math.exp(-r * 0.1 * T - lam * T * (1.0 - kept))
    assert survival_static(m, T) == pytest.approx(want, rel=1e-13)


def test_survival_nonlethal_jump_no_closed_form_cases():
    mix = MixtureExponential(weights=(1.0,), rates=(1.0,))
    m = VitalityModel(age_x=0.0, initial=Degenerate(1.0), trend=ConstantRate(0.1),
                      jump=JumpSpec(ConstantIntensity(0.2), mix))
    with pytest.raises(NoClosedFormError):
        survival_static(m, 2.0)
    m2 = VitalityModel(age_x=0.0, initial=ParetoII(2.0, 1.0), trend=ConstantRate(0.1),
                       jump=JumpSpec(ConstantIntensity(0.2), ExponentialJump(1.0)))
    with pytest.raises(NoClosedFormError):
        survival_static(m2, 2.0)


# ---------------------------------------------------------------------------
# frailty: the Gamma-Gompertz family three ways


def gg_models(alpha=2.0, phi=4.0, v=1.5):
    m_pareto = VitalityModel(age_x=X, initial=ParetoII(shape=alpha, scale=phi), trend=GOMP)
    m_gamma = VitalityModel(age_x=X, initial=Exponential(1.0),
                            trend=FrailtyScaled(GOMP, GammaMix(shape=alpha, rate=phi)))
    m_dagum = VitalityModel(age_x=X, initial=Degenerate(v),
                            trend=FrailtyScaled(GOMP, DagumMix(p=alpha, a=1.0, scale=v / phi)))
    return m_pareto, m_gamma, m_dagum


def test_gamma_gompertz_three_constructions_agree():
    t = np.arange(1.0, 51.0)
    s1, s2, s3 = (survival_static(m, t) for m in gg_models())
    assert np.max(np.abs(s1 - s2)) < 1e-12
    assert np.max(np.abs(s1 - s3)) < 1e-12
    y = cumulative_hazard(GOMP, X, t)
    assert np.allclose(s1, (1.0 + y / 4.0) ** -2.0, rtol=1e-13)


def test_gamma_gompertz_hazard_plateaus():
    m = gg_models()[0]
    h = 1e-4

    def hazard(T):
        lo = survival_static(m, T - h)
        hi = survival_static(m, T + h)
        return (math.log(lo) - math.log(hi)) / (2 * h)

    h200, h250 = hazard(200.0), hazard(250.0)
    assert abs(h250 - h200) / h200 < 1e-3
    # the plateau level is alpha times the frailty-free rate scale phi... the
    # asymptote equals alpha * ln(c) for the Gamma-Gompertz family
    assert h250 == pytest.approx(2.0 * math.log(C), rel=1e-3)


def test_frailty_with_diffusion_rejected():
    m = VitalityModel(age_x=X, initial=Exponential(1.0),
                      trend=FrailtyScaled(GOMP, GammaMix(2.0, 4.0)),
                      diffusion=BrownianConst(0.1))
    with pytest.raises(NoClosedFormError):
        survival_static(m, 5.0)


# ---------------------------------------------------------------------------
# Laplace-transform route


def test_death_time_laplace_matches_inverse_gaussian_transform():
    d, s = 0.5, 0.3
    m = VitalityModel(age_x=0.0, initial=Degenerate(1.0), trend=ConstantRate(d),
                      diffusion=BrownianConst(s))
    for q in (0.1, 0.7, 2.0):
        want = math.exp((d - math.sqrt(d * d + 2.0 * q * s * s)) / (s * s))
        assert death_time_laplace(m, 1.0, q) == pytest.approx(want, rel=1e-10)


def test_death_time_laplace_spec_point():
    m = VitalityModel(age_x=0.0, initial=Degenerate(1.0), trend=ConstantRate(1.0),
                      diffusion=BrownianConst(1.0))
    assert death_time_laplace(m, 1.0, 1.0) == pytest.approx(math.exp(1.0 - math.sqrt(3.0)),
                                                            rel=1e-12)


def test_death_time_laplace_completely_monotone():
    m = VitalityModel(age_x=0.0, initial=Degenerate(2.0), trend=ConstantRate(1.0),
                      diffusion=BrownianConst(1.0),
                      jump=JumpSpec(ConstantIntensity(0.5), ExponentialJump(2.0)))
    q = np.linspace(0.1, 4.0, 25)
    vals = np.array([death_time_laplace(m, 2.0, float(qq)) for qq in q])
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) < 0)
    assert np.all(np.diff(vals, 2) > 0)


def test_survival_by_laplace_no_jumps_matches_reflection():
    d, s, v = 1.0, 1.0, 1.0
    m = VitalityModel(age_x=0.0, initial=Degenerate(v), trend=ConstantRate(d),
                      diffusion=BrownianConst(s))
    for T in (0.5, 1.0, 2.0, 5.0, 10.0):
        got = survival_by_laplace(m, v, T)
        assert got == pytest.approx(eq6_survival(v, d, s, T), abs=1e-4)


def test_survival_by_laplace_with_jumps_behaves():
    m = VitalityModel(age_x=0.0, initial=Degenerate(2.0), trend=ConstantRate(1.0),
                      diffusion=BrownianConst(1.0),
                      jump=JumpSpec(ConstantIntensity(0.5), ExponentialJump(2.0)))
    vals = [survival_by_laplace(m, 2.0, T) for T in (0.5, 1.0, 2.0, 4.0)]
    assert all(0.0 <= x <= 1.0 + 1e-9 for x in vals)
    assert all(a >= b - 1e-6 for a, b in zip(vals, vals[1:]))
    # jumps can only hasten death
    base = VitalityModel(age_x=0.0, initial=Degenerate(2.0), trend=ConstantRate(1.0),
                         diffusion=BrownianConst(1.0))
    assert vals[1] < survival_static(base, 1.0)


# ---------------------------------------------------------------------------
# exponential change of scale


def test_exp_transform_reads():
    m = VitalityModel(age_x=X, initial=Exponential(2.0), trend=GOMP)
    info = exp_transform(m)
    assert info.threshold == 1.0
    assert "Pareto" in info.initial
    assert "unchanged" in info.note
    m2 = VitalityModel(age_x=X, initial=Degenerate(1.0), trend=GOMP)
    assert exp_transform(m2).initial.startswith("Degenerate")
