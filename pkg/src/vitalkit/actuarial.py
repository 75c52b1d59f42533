"""Life expectancy, annuity and insurance pricing, belief gaps, and
disability/recovery probabilities.

Every price here is an integral of a payoff against the death-time law,
and the integration route mirrors the model structure:

* pure trend: the crossing time tau(v) inverts the cumulative depletion,
  so conditional prices are exact and unconditional ones mix tau(v) over
  the initial law by Gauss-Laguerre;
* trend plus diffusion: the first-passage density over the moving
  boundary (tangent approximation by default, higher Durbin orders on
  request) is integrated adaptively with a breakpoint at the zero-noise
  crossing time, where a low-volatility density concentrates;
* jumps with diffusion: payoffs average over simulated death times with
  the Brownian-bridge kill correction;
* jumps without diffusion: the trend alone exhausts vitality v by
  tau(v), so death is certain on a finite window and the payoff
  integrates survival values there (closed form when every jump is
  lethal, Laplace inversion otherwise) via E[g(tau)] = g(0) +
  int g'(t) Pr(tau > t) dt.

The disability block works in the constant-rate specification
V(t) = v - delta t - sigma B(t).  Standardize the depletion as
What(t) = B(t) + (delta/sigma) t with running maximum Mhat; the
reflection principle gives the joint density of (Mhat(T), What(T)) in
closed form, and "end above omega without ever ruining" is the event
{Mhat(T) < v/sigma, What(T) < (v - omega)/sigma}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Degenerate, Exponential, ExponentialJump, Fatal, jump_convolution_cdf
from .errors import ConvergenceError, NoClosedFormError, ValidationError
from .fpt_density import _quad, boundary_from_model, durbin_density, tangent_density
from .model import (
    BrownianConst,
    ConstantRate,
    FrailtyScaled,
    NoDiffusion,
    VitalityModel,
    cumulative_hazard,
    gompertz_death_time,
    survival_by_laplace,
    trend_inverse,
)
from .montecarlo import McConfig, sample_death_times
from .numerics import RngStream, gauss_laguerre

__all__ = [
    "PricingBasis",
    "DisabilityQuery",
    "BeliefGap",
    "RecoveryReport",
    "life_expectancy",
    "annuity_price",
    "insurance_price",
    "belief_gap",
    "healthy_stay_prob",
    "joint_max_endpoint_density",
    "recovery_prob",
    "recovery_report",
]

_LAGUERRE_ORDER = 64


@dataclass(frozen=True)
class PricingBasis:
    """Force of interest used to discount payment streams."""

    force_of_interest: float

    def __post_init__(self):
        if not self.force_of_interest > 0:
            raise ValidationError("PricingBasis: force_of_interest must be positive")


@dataclass(frozen=True)
class DisabilityQuery:
    """Disability threshold and horizon.

    `threshold_dist` optionally randomizes the threshold; results that are
    free of the threshold (the healthy-stay probability under an exponential
    initial law) ignore it by design.
    """

    threshold: float
    horizon: float
    threshold_dist: object | None = None

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValidationError("DisabilityQuery: threshold must be positive")
        if self.horizon < 0:
            raise ValidationError("DisabilityQuery: horizon must be non-negative")


# ---------------------------------------------------------------------------
# death-time expectations


def _certain_horizon(model: VitalityModel, v: float, t_star: float) -> float:
    """A time by which survival is negligible: the boundary sits 12 standard
    deviations below zero.  Grown geometrically from the zero-noise crossing."""
    sigma = model.diffusion.sigma
    t = max(t_star, 1e-8)
    for _ in range(400):
        margin = float(cumulative_hazard(model.trend, model.age_x, t)) - v
        if margin > 12.0 * sigma * math.sqrt(t):
            return t
        t *= 1.25
    raise ConvergenceError("pricing: no horizon with negligible survival was found")


def _density_expect(model: VitalityModel, v: float, g, order: int) -> float:
    boundary = boundary_from_model(model)
    sigma = model.diffusion.sigma
    t_star = float(trend_inverse(model.trend, model.age_x, v))
    horizon = _certain_horizon(model, v, t_star)

    if order == 1:
        def dens(t: float) -> float:
            return float(tangent_density(boundary, sigma, v, t))
    else:
        def dens(t: float) -> float:
            return float(durbin_density(boundary, sigma, v, t, k=order))

    pts = [t_star] if 0.0 < t_star < horizon else None
    return _quad(lambda t: float(g(t)) * dens(t), 0.0, horizon, 1e-10, points=pts)


def _mc_expect(model: VitalityModel, v: float, g, n_paths: int, stream: RngStream) -> float:
    t_star = float(trend_inverse(model.trend, model.age_x, v))
    horizon = _certain_horizon(model, v, t_star)
    cfg = McConfig(
        n_paths=n_paths,
        n_time_points=max(2, int(round(12.0 * horizon)) + 1),
        stream=stream,
    )
    tau = sample_death_times(model, v, horizon, cfg)
    # Residual alive mass at the horizon is below 1e-30 by construction.
    tau = np.where(np.isfinite(tau), tau, horizon)
    return float(np.mean(g(tau)))


def _jump_survival_fn(model: VitalityModel, v: float):
    """Pr(tau > t) for a pure-trend-plus-jumps model, with the quadrature
    tolerance the route can support.

    Depletion is monotone without diffusion, so tau > t exactly when the
    accumulated jumps stay below the trend headroom v - Y(t): a Poisson sum
    of convolution cdfs.  Lethal jumps collapse that to exp(-Lambda(t)); a
    constant-rate trend falls back to Laplace inversion for size laws with
    no convolution closed form.
    """
    if isinstance(model.jump.size, Fatal):
        def surv(t: float) -> float:
            return math.exp(-float(model.jump.intensity.cumulative(t)))

        return surv, 1e-10
    if isinstance(model.jump.size, ExponentialJump):
        def surv(t: float) -> float:
            head = v - float(cumulative_hazard(model.trend, model.age_x, t))
            if head <= 0.0:
                return 0.0
            lam = float(model.jump.intensity.cumulative(t))
            total, weight = 0.0, math.exp(-lam)
            k = 0
            while True:
                total += weight * float(jump_convolution_cdf(model.jump.size, k, head))
                k += 1
                if weight < 1e-14 and k > lam:
                    return total
                weight *= lam / k

        return surv, 1e-10
    if isinstance(model.trend, ConstantRate):
        def surv(t: float) -> float:
            return survival_by_laplace(model, v, t)

        return surv, 1e-6  # inversion noise caps useful quadrature accuracy
    raise NoClosedFormError(
        "pricing: no survival route for this trend and jump-size combination"
    )


def _jumps_expect(model: VitalityModel, v: float, gprime, g0: float) -> float:
    """Jumps without diffusion: integrate g'(t) Pr(tau > t) on [0, tau(v)]."""
    t_star = float(trend_inverse(model.trend, model.age_x, v))
    surv, tol = _jump_survival_fn(model, v)
    return g0 + _quad(lambda t: float(gprime(t)) * surv(t), 0.0, t_star, tol)


def _conditional_expect(model, v, g, gprime, g0, order, n_paths, stream) -> float:
    if not v > 0:
        raise ValidationError("pricing: conditional vitality must be positive")
    if isinstance(model.trend, FrailtyScaled):
        raise NoClosedFormError(
            "pricing: frailty-scaled trends have no death-time density route"
        )
    has_jumps = not model.jump.is_null
    diffusive = isinstance(model.diffusion, BrownianConst)
    if not has_jumps and not diffusive:
        return float(g(float(trend_inverse(model.trend, model.age_x, v))))
    if not has_jumps:
        return _density_expect(model, v, g, order)
    if diffusive:
        return _mc_expect(model, v, g, n_paths, stream)
    return _jumps_expect(model, v, gprime, g0)


def _expected_payoff(model, conditional_v, g, gprime, g0, order, n_paths, stream) -> float:
    if not isinstance(model, VitalityModel):
        raise ValidationError("pricing: a VitalityModel is required")
    if conditional_v is not None:
        return _conditional_expect(model, float(conditional_v), g, gprime, g0,
                                   order, n_paths, stream)
    initial = model.initial
    if isinstance(initial, Degenerate):
        return _conditional_expect(model, initial.value, g, gprime, g0,
                                   order, n_paths, stream)
    if isinstance(initial, Exponential):
        rule = gauss_laguerre(_LAGUERRE_ORDER)
        needs_mc = (not model.jump.is_null) and isinstance(model.diffusion, BrownianConst)
        per_node = max(2000, n_paths // rule.nodes.size) if needs_mc else n_paths
        vals = [
            _conditional_expect(model, float(u) / initial.rate, g, gprime, g0,
                                order, per_node, stream.child(i + 1))
            for i, u in enumerate(rule.nodes)
        ]
        return float(np.dot(rule.weights, vals))
    raise NoClosedFormError(
        "pricing: unconditional quantities mix over Degenerate or Exponential "
        "initial vitality; pass conditional_v for other initial laws"
    )


def life_expectancy(
    model: VitalityModel,
    conditional_v: float | None = None,
    *,
    order: int = 1,
    n_paths: int = 200_000,
    stream: RngStream = RngStream(11),
) -> float:
    """Expected remaining lifetime in years, conditionally on the current
    vitality or averaged over the initial law when `conditional_v` is None."""
    return _expected_payoff(
        model, conditional_v,
        g=lambda t: t,
        gprime=lambda t: 1.0,
        g0=0.0,
        order=order, n_paths=n_paths, stream=stream,
    )


def annuity_price(
    model: VitalityModel,
    basis: PricingBasis,
    conditional_v: float | None = None,
    *,
    order: int = 1,
    n_paths: int = 200_000,
    stream: RngStream = RngStream(11),
) -> float:
    """Expected present value of a unit payment stream until death."""
    d = basis.force_of_interest
    return _expected_payoff(
        model, conditional_v,
        g=lambda t: -np.expm1(-d * t) / d,
        gprime=lambda t: math.exp(-d * t),
        g0=0.0,
        order=order, n_paths=n_paths, stream=stream,
    )


def insurance_price(
    model: VitalityModel,
    basis: PricingBasis,
    conditional_v: float | None = None,
    **kwargs,
) -> float:
    """Expected present value of a unit benefit at death, via the identity
    with the annuity under the same force of interest."""
    return 1.0 - basis.force_of_interest * annuity_price(
        model, basis, conditional_v, **kwargs
    )


# ---------------------------------------------------------------------------
# belief gap


@dataclass(frozen=True)
class BeliefGap:
    """Life expectancies under three readings of "typical": the population
    average, the average-vitality individual, and the median-vitality one."""

    pop_le: float
    avg_v_le: float
    median_v_le: float


def belief_gap(b: float, c: float, x: float) -> BeliefGap:
    """Population-vs-individual life expectancy gap for a Gompertz trend with
    unit-mean exponential initial vitality.

    tau(v) is concave in v, so averaging over vitality before inverting
    (individual view) always beats averaging lifetimes (population view).
    """
    rule = gauss_laguerre(_LAGUERRE_ORDER)
    taus = gompertz_death_time(rule.nodes, x, b, c)
    pop = float(np.dot(rule.weights, taus))
    avg = float(gompertz_death_time(1.0, x, b, c))
    med = float(gompertz_death_time(math.log(2.0), x, b, c))
    if not pop <= avg:
        raise ConvergenceError("belief_gap: quadrature violated the concavity bound")
    return BeliefGap(pop_le=pop, avg_v_le=avg, median_v_le=med)


# ---------------------------------------------------------------------------
# disability


def healthy_stay_prob(model: VitalityModel, q: DisabilityQuery) -> float:
    """Probability of staying above the disability threshold through the
    horizon.  Under an exponential initial law and a deterministic trend the
    answer is exp(-rate * Y(T)) regardless of the threshold, fixed or
    randomized: memorylessness wipes the threshold out."""
    if not isinstance(model.initial, Exponential):
        raise ValidationError("healthy_stay_prob: exponential initial law required")
    if isinstance(model.trend, FrailtyScaled):
        raise ValidationError("healthy_stay_prob: deterministic trends only")
    if isinstance(model.diffusion, BrownianConst) or not model.jump.is_null:
        raise ValidationError(
            "healthy_stay_prob: diffusion and jumps fall outside the "
            "memorylessness argument"
        )
    y = float(cumulative_hazard(model.trend, model.age_x, q.horizon))
    return math.exp(-model.initial.rate * y)


def joint_max_endpoint_density(m, w, T: float, delta: float, sigma: float):
    """Joint density of the running maximum and endpoint of the standardized
    depletion What(t) = B(t) + (delta/sigma) t at time T, supported on
    {w <= m, m >= 0}."""
    if not T > 0:
        raise ValidationError("joint_max_endpoint_density: T must be positive")
    if not sigma > 0:
        raise ValidationError("joint_max_endpoint_density: sigma must be positive")
    m_arr, w_arr = np.broadcast_arrays(
        np.asarray(m, dtype=float), np.asarray(w, dtype=float)
    )
    nu = delta / sigma
    spread = 2.0 * m_arr - w_arr
    with np.errstate(under="ignore", over="ignore", invalid="ignore"):
        val = (
            2.0 * spread / (T * math.sqrt(2.0 * math.pi * T))
            * np.exp(nu * w_arr - 0.5 * nu * nu * T - spread * spread / (2.0 * T))
        )
    out = np.where((w_arr <= m_arr) & (m_arr >= 0.0), val, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RecoveryReport:
    """Recovery probability pieces reported side by side.

    `numerator` is Pr(start disabled and recover by T) from nested adaptive
    quadrature of the joint max/endpoint density mixed over the initial law;
    `mc_numerator` estimates the same quantity by simulating endpoints with
    the exact Brownian-bridge non-ruin factor.  `printed` divides by the
    survivor mass 1 - F0(omega) exactly as displayed in the source formula;
    `conditional` divides by the disabled mass F0(omega), which matches the
    verbal conditioning.  The two normalizations are not reconciled here; a
    vanishing denominator is reported as nan.
    """

    numerator: float
    printed: float
    conditional: float
    mc_numerator: float
    mc_std_error: float
    n_paths: int


def _require_recovery_model(model: VitalityModel) -> tuple[float, float]:
    if not isinstance(model.trend, ConstantRate):
        raise ValidationError("recovery: constant-rate trend required")
    if not isinstance(model.diffusion, BrownianConst):
        raise ValidationError("recovery: Brownian diffusion required")
    if not model.jump.is_null:
        raise ValidationError("recovery: jumps fall outside this calculation")
    return model.trend.rate, model.diffusion.sigma


def _recovery_inner(v, omega, T, delta, sigma, tol) -> float:
    """Pr(Mhat(T) < v/sigma, What(T) < (v-omega)/sigma) by double quadrature
    of the joint density."""
    a = v / sigma
    b = (v - omega) / sigma
    nu = delta / sigma
    w_lo = min(b, nu * T) - 14.0 * math.sqrt(T)

    def over_m(w: float) -> float:
        return _quad(
            lambda mm: float(joint_max_endpoint_density(mm, w, T, delta, sigma)),
            max(0.0, w), a, tol * 1e-2,
        )

    return _quad(over_m, w_lo, b, tol)


def _recovery_numerator(model, q, tol) -> float:
    delta, sigma = _require_recovery_model(model)
    omega, T = q.threshold, q.horizon
    initial = model.initial
    if isinstance(initial, Degenerate):
        if not initial.value < omega:
            raise ValidationError(
                "recovery: initial vitality sits at or above the threshold "
                "(empty numerator domain)"
            )
        return _recovery_inner(initial.value, omega, T, delta, sigma, tol)
    return _quad(
        lambda v: _recovery_inner(v, omega, T, delta, sigma, tol * 1e-2)
        * float(initial.density(v)),
        0.0, omega, tol,
    )


def _recovery_mc(model, q, n_paths: int, stream: RngStream) -> tuple[float, float]:
    delta, sigma = _require_recovery_model(model)
    omega, T = q.threshold, q.horizon
    rng = stream.generator()
    v0 = np.asarray(model.initial.sample(rng, n_paths), dtype=float)
    vt = v0 - delta * T - sigma * math.sqrt(T) * rng.standard_normal(n_paths)
    ok = (v0 < omega) & (vt > omega)
    with np.errstate(over="ignore"):
        stay = -np.expm1(-2.0 * v0 * np.maximum(vt, 0.0) / (sigma * sigma * T))
    vals = np.where(ok, stay, 0.0)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_paths))
    return mean, se


def _disabled_mass(model, omega: float) -> float:
    f0 = 1.0 - float(np.asarray(model.initial.survival(omega)))
    if f0 <= 0.0:
        raise ValidationError(
            "recovery: the initial law puts no mass below the threshold "
            "(empty numerator domain)"
        )
    return f0


def recovery_report(
    model: VitalityModel,
    q: DisabilityQuery,
    *,
    n_paths: int = 100_000,
    stream: RngStream = RngStream(17),
    tol: float = 1e-8,
) -> RecoveryReport:
    """Quadrature and Monte Carlo recovery numbers under both normalizations."""
    _require_recovery_model(model)
    if not q.horizon > 0:
        raise ValidationError("recovery: horizon must be positive")
    if n_paths < 100:
        raise ValidationError("recovery: n_paths must be at least 100")
    f0 = _disabled_mass(model, q.threshold)
    num = _recovery_numerator(model, q, tol)
    mc_num, mc_se = _recovery_mc(model, q, n_paths, stream)
    printed = num / (1.0 - f0) if f0 < 1.0 else float("nan")
    return RecoveryReport(
        numerator=num,
        printed=printed,
        conditional=num / f0,
        mc_numerator=mc_num,
        mc_std_error=mc_se,
        n_paths=n_paths,
    )


def recovery_prob(
    model: VitalityModel,
    q: DisabilityQuery,
    *,
    denominator: str = "printed",
    method: str = "quadrature",
    n_paths: int = 100_000,
    stream: RngStream = RngStream(17),
    tol: float = 1e-8,
) -> float:
    """Probability that a disabled life climbs back above the threshold by
    the horizon without its vitality ever hitting zero.

    `denominator` picks the normalization: "printed" divides by the survivor
    mass 1 - F0(omega) as the source formula displays, "disabled" divides by
    the disabled mass F0(omega).  `method` is "quadrature" (nested adaptive
    integration of the joint density) or "monte-carlo" (endpoint simulation
    with the exact bridge non-ruin factor).
    """
    _require_recovery_model(model)
    if not q.horizon > 0:
        raise ValidationError("recovery: horizon must be positive")
    f0 = _disabled_mass(model, q.threshold)
    if method == "quadrature":
        num = _recovery_numerator(model, q, tol)
    elif method == "monte-carlo":
        if n_paths < 100:
            raise ValidationError("recovery: n_paths must be at least 100")
        num, _ = _recovery_mc(model, q, n_paths, stream)
    else:
        raise ValidationError(f"recovery: unknown method {method!r}")
    if denominator == "printed":
        if f0 >= 1.0:
            raise ValidationError("recovery: the displayed denominator 1 - F0(omega) vanishes")
        return num / (1.0 - f0)
    if denominator == "disabled":
        return num / f0
    raise ValidationError(f"recovery: unknown denominator {denominator!r}")
