"""Stochastic mortality-trend dynamics and cohort effects.

The Gompertz coefficients follow correlated geometric Brownian motions,

    d ln b(t) = mu_b dt + sigma_b dB_b(t),
    d ln c(t) = mu_c dt + sigma_c dB_c(t),     corr(dB_b, dB_c) = rho,

so the integrated hazard Y(T) = int_0^T b(s) c(s)^(x+s) ds is an integral of
correlated log-normals with no closed law.  Survival of a cohort born in
year y with initial vitality Exp(rate) is then the outer expectation
E[exp(-rate * Y(T))], with the rate possibly carrying a cohort factor
Gamma(y) that is itself a geometric Brownian motion at time y.

Transitions of (ln b, ln c) are sampled exactly (no Euler bias); only the
Y integral uses the trapezoid rule, with error controlled by dt.  Paths are
streamed over time in fixed-size blocks so memory stays O(paths) and results
are reproducible for a given stream regardless of path count batching.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .distributions import ExponentialJump, Fatal
from .errors import ValidationError
from .model import JumpSpec
from .montecarlo import McEstimate
from .numerics import RngStream, gauss_laguerre

__all__ = [
    "DynamicGompertzParams",
    "NoCohort",
    "GammaRate",
    "AgeScaled",
    "PowerDecay",
    "TrendPath",
    "simulate_trend_path",
    "survival_dynamic",
    "lognormal_approx_survival",
    "survival_dynamic_with_jumps",
    "cbd_reparameterization",
    "cbd_inverse",
    "m6_reparameterization",
    "m6_inverse",
]

_BLOCK = 65536


@dataclass(frozen=True)
class DynamicGompertzParams:
    b0: float
    c0: float
    mu_b: float = 0.0
    mu_c: float = 0.0
    sigma_b: float = 0.0
    sigma_c: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        if self.b0 <= 0 or self.c0 <= 1:
            raise ValidationError("DynamicGompertzParams: need b0 > 0 and c0 > 1")
        if self.sigma_b < 0 or self.sigma_c < 0:
            raise ValidationError("DynamicGompertzParams: volatilities must be non-negative")
        if not -1.0 <= self.rho <= 1.0:
            raise ValidationError("DynamicGompertzParams: rho must lie in [-1, 1]")


@dataclass(frozen=True)
class NoCohort:
    pass


@dataclass(frozen=True)
class GammaRate:
    """Initial vitality Exp(Gamma(y)) with Gamma a GBM at the birth year y."""

    mu_gamma: float = 0.0
    sigma_gamma: float = 0.0
    birth_year: float = 0.0

    def __post_init__(self):
        if self.sigma_gamma < 0:
            raise ValidationError("GammaRate: sigma_gamma must be non-negative")


@dataclass(frozen=True)
class AgeScaled(GammaRate):
    """Exp(Gamma(y) * a^x) initial paired with the trend divided by a^x; the
    a^x factors cancel algebraically against the plain GammaRate survival."""

    a: float = math.e

    def __post_init__(self):
        super().__post_init__()
        if self.a <= 1:
            raise ValidationError("AgeScaled: a must exceed 1")


@dataclass(frozen=True)
class PowerDecay(GammaRate):
    """Exp(Gamma(y)^(x_c - x)) initial with the unscaled trend."""

    x_c: float = 100.0


@dataclass(frozen=True)
class TrendPath:
    times: np.ndarray
    ln_b: np.ndarray
    ln_c: np.ndarray
    y_values: np.ndarray


def _check_step(T: float, dt: float) -> tuple[int, float]:
    if T <= 0:
        raise ValidationError("dynamic simulation: T must be positive")
    if dt > 1.0 / 12.0 + 1e-12:
        raise ValidationError("dynamic simulation: dt must not exceed one month")
    n_steps = max(1, math.ceil(T / dt - 1e-9))
    return n_steps, T / n_steps


def simulate_trend_path(params: DynamicGompertzParams, age_x: float, T: float,
                        dt: float, rng: RngStream) -> TrendPath:
    """One exact-transition path of (ln b, ln c) with the trapezoid Y."""
    n_steps, h = _check_step(T, dt)
    gen = rng.generator()
    times = np.linspace(0.0, T, n_steps + 1)
    ln_b = np.empty(n_steps + 1)
    ln_c = np.empty(n_steps + 1)
    y = np.empty(n_steps + 1)
    ln_b[0], ln_c[0], y[0] = math.log(params.b0), math.log(params.c0), 0.0
    cross = math.sqrt(max(0.0, 1.0 - params.rho**2))
    g_prev = params.b0 * params.c0**age_x
    for j in range(1, n_steps + 1):
        z1, z2 = gen.normal(size=2)
        ln_b[j] = ln_b[j - 1] + params.mu_b * h + params.sigma_b * math.sqrt(h) * z1
        ln_c[j] = ln_c[j - 1] + params.mu_c * h + params.sigma_c * math.sqrt(h) * (
            params.rho * z1 + cross * z2)
        g_new = math.exp(ln_b[j] + (age_x + times[j]) * ln_c[j])
        y[j] = y[j - 1] + 0.5 * (g_prev + g_new) * h
        g_prev = g_new
    return TrendPath(times, ln_b, ln_c, y)


def _simulate_y_block(params, age_x, T, n_steps, h, m, gen, trend_divisor=1.0):
    """Terminal Y(T) for m paths, streaming over time (O(m) memory)."""
    ln_b = np.full(m, math.log(params.b0))
    ln_c = np.full(m, math.log(params.c0))
    cross = math.sqrt(max(0.0, 1.0 - params.rho**2))
    sqrt_h = math.sqrt(h)
    y = np.zeros(m)
    g_prev = np.full(m, params.b0 * params.c0**age_x / trend_divisor)
    for j in range(1, n_steps + 1):
        z = gen.normal(size=(2, m))
        ln_b += params.mu_b * h + params.sigma_b * sqrt_h * z[0]
        ln_c += params.mu_c * h + params.sigma_c * sqrt_h * (
            params.rho * z[0] + cross * z[1])
        g_new = np.exp(ln_b + (age_x + j * h) * ln_c) / trend_divisor
        y += 0.5 * (g_prev + g_new) * h
        g_prev = g_new
    return y


def _gamma_factor(cohort, gen, m):
    """Cohort GBM level at the birth year: exp((mu - s^2/2) y + s sqrt(y) xi)."""
    y = cohort.birth_year
    drift = (cohort.mu_gamma - 0.5 * cohort.sigma_gamma**2) * y
    spread = cohort.sigma_gamma * math.sqrt(max(y, 0.0))
    return np.exp(drift + spread * gen.normal(size=m))


def _dynamic_values(params, cohort, age_x, T, n_paths, dt, rng, exponent_only=False):
    """Per-path exp(-rate * Y(T)), or Y(T) itself when exponent_only."""
    n_steps, h = _check_step(T, dt)
    out = np.empty(n_paths)
    done = 0
    block_index = 0
    while done < n_paths:
        m = min(_BLOCK, n_paths - done)
        gen = rng.child(block_index).generator()
        divisor = cohort.a**age_x if isinstance(cohort, AgeScaled) else 1.0
        y = _simulate_y_block(params, age_x, T, n_steps, h, m, gen, divisor)
        if exponent_only:
            out[done:done + m] = y
        elif isinstance(cohort, NoCohort):
            out[done:done + m] = np.exp(-y)
        else:
            gamma = _gamma_factor(cohort, gen, m)
            if isinstance(cohort, AgeScaled):
                rate = gamma * cohort.a**age_x
            elif isinstance(cohort, PowerDecay):
                if cohort.x_c <= age_x:
                    raise ValidationError("PowerDecay: x_c must exceed age_x")
                rate = gamma ** (cohort.x_c - age_x)
            else:
                rate = gamma
            out[done:done + m] = np.exp(-rate * y)
        done += m
        block_index += 1
    return out


def survival_dynamic(params: DynamicGompertzParams, cohort, age_x: float, T: float,
                     n_paths: int, dt: float, rng: RngStream) -> McEstimate:
    """Pr(tau > T) = E[exp(-rate * Y(T))] by path simulation of the trend."""
    if n_paths < 2:
        raise ValidationError("survival_dynamic: need at least 2 paths")
    if T == 0:
        return McEstimate(1.0, 0.0, n_paths)
    values = _dynamic_values(params, cohort, age_x, T, n_paths, dt, rng)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n_paths))
    return McEstimate(mean, se, n_paths)


def lognormal_approx_survival(params: DynamicGompertzParams, age_x: float, T: float,
                              n_moment_paths: int, rng: RngStream,
                              dt: float = 1.0 / 12.0) -> float:
    """Match Y(T) to a log-normal by its first two simulated moments, then
    integrate E[e^{-Y}] under that law by Gauss-Hermite quadrature."""
    y = _dynamic_values(params, NoCohort(), age_x, T, n_moment_paths, dt, rng,
                        exponent_only=True)
    m1 = float(y.mean())
    m2 = float((y * y).mean())
    if m1 <= 0:
        raise ValidationError("lognormal_approx_survival: mean of Y(T) must be positive")
    var = m2 - m1 * m1
    if var < -1e-12 * m2:
        raise ValidationError("lognormal_approx_survival: negative estimated variance")
    s2 = math.log(m2 / (m1 * m1)) if m2 > m1 * m1 else 0.0
    if s2 <= 0:
        return math.exp(-m1)
    mu = math.log(m1) - 0.5 * s2
    nodes, weights = hermgauss(64)
    draws = np.exp(mu + math.sqrt(2.0 * s2) * nodes)
    return float(np.dot(weights, np.exp(-draws)) / math.sqrt(math.pi))


def survival_dynamic_with_jumps(params: DynamicGompertzParams, age_x: float, T: float,
                                jump: JumpSpec, n_paths: int, dt: float,
                                rng: RngStream) -> McEstimate:
    """Survival with an independent jump component layered on the dynamic
    trend, for a unit-rate exponential initial level.

    Lethal jumps factor out exactly as exp(-Lambda(T)).  Exponential sizes
    are handled per path by conditioning on the Poisson count (Erlang cdf of
    the accumulated jump mass) and Gauss-Laguerre mixing over the initial
    level; no diffusion term enters this representation.
    """
    if T == 0:
        return McEstimate(1.0, 0.0, n_paths)
    if jump.is_null or isinstance(jump.size, Fatal):
        base = survival_dynamic(params, NoCohort(), age_x, T, n_paths, dt, rng)
        factor = float(np.exp(-jump.intensity.cumulative(T)))
        return McEstimate(base.value * factor, base.std_error * factor, base.n_effective)
    if not isinstance(jump.size, ExponentialJump):
        raise ValidationError(
            "survival_dynamic_with_jumps: jump sizes must be ExponentialJump or Fatal")
    y = _dynamic_values(params, NoCohort(), age_x, T, n_paths, dt, rng, exponent_only=True)
    lam_total = float(jump.intensity.cumulative(T))
    rule = gauss_laguerre(64)
    # Poisson weights until the tail mass is negligible
    k_max = 1
    while k_max < 400:
        tail = 1.0 - math.exp(-lam_total) * sum(
            lam_total**i / math.factorial(i) for i in range(k_max + 1))
        if tail < 1e-13:
            break
        k_max += 1
    from .distributions import jump_convolution_cdf
    # Pr(alive | Y) = int_Y^inf e^{-v} sum_k pois_k F_k(v - Y) dv; substituting
    # u = v - Y keeps the quadrature on the smooth Erlang cdf and leaves the
    # path dependence in the e^{-Y} factor
    jump_mass = 0.0
    weight_k = math.exp(-lam_total)
    for k in range(k_max + 1):
        if k > 0:
            weight_k *= lam_total / k
        cdf = jump_convolution_cdf(jump.size, k, rule.nodes)
        jump_mass += weight_k * float(np.dot(rule.weights, cdf))
    values = jump_mass * np.exp(-y)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n_paths))
    return McEstimate(mean, se, n_paths)


def cbd_reparameterization(kappa1: float, kappa2: float, x_bar: float) -> tuple[float, float]:
    """(b, c) = (exp(kappa1 - kappa2 x_bar), exp(kappa2)); warns when the
    mapped c fails c > 1 (non-increasing hazard)."""
    b = math.exp(kappa1 - kappa2 * x_bar)
    c = math.exp(kappa2)
    if c <= 1.0:
        warnings.warn("cbd_reparameterization: kappa2 <= 0 gives c <= 1 "
                      "(degenerate, non-increasing hazard)", RuntimeWarning, stacklevel=2)
    return b, c


def cbd_inverse(b: float, c: float, x_bar: float) -> tuple[float, float]:
    if b <= 0 or c <= 0:
        raise ValidationError("cbd_inverse: b and c must be positive")
    kappa2 = math.log(c)
    return math.log(b) + kappa2 * x_bar, kappa2


def m6_reparameterization(kappa1: float, kappa2: float, gamma: float,
                          x_bar: float) -> tuple[float, float, float]:
    b, c = cbd_reparameterization(kappa1, kappa2, x_bar)
    return b, c, math.exp(gamma)


def m6_inverse(b: float, c: float, gamma_level: float, x_bar: float) -> tuple[float, float, float]:
    if gamma_level <= 0:
        raise ValidationError("m6_inverse: cohort level must be positive")
    kappa1, kappa2 = cbd_inverse(b, c, x_bar)
    return kappa1, kappa2, math.log(gamma_level)
