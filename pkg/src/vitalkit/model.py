"""Model assembly and closed-form survival.

A vitality model is V(t) = V(0) - Y(t) - W(t) - J(t): a random initial
endowment, a deterministic decline trend Y with rate mu_x(t), an optional
Brownian component W = sigma B(t), and an optional compound Poisson jump
component J.  Death is the first time V reaches zero.

Closed-form survival routes handled by `survival_static`:

* deterministic trend, no diffusion, no jumps (or lethal jumps, which
  factor out as exp(-Lambda(T))):  Pr(tau > T) = S0(Y(T))
* frailty-scaled trend:  Exponential initial + Gamma frailty gives the
  plateau law (1 + rate Y/phi)^-alpha; degenerate initial + Dagum frailty
  gives the same family through the frailty cdf
* constant-rate trend + Brownian diffusion + lethal (or no) jumps:
  Pr(tau > T) = e^{-Lambda(T)} int [Phi((v - dT)/(s sqrt T))
  - e^{2dv/s^2} Phi((-v - dT)/(s sqrt T))] dF0(v)
* deterministic trend + non-lethal jumps, no diffusion: depletion
  Y + J is nondecreasing, so tau > T iff V(0) > Y(T) + J(T).  A point
  mass with exponential jump sizes sums Poisson-weighted Erlang cdfs;
  an exponential initial law uses the compound-Poisson transform
  Pr(tau > T) = exp(-r Y(T) - Lambda(T) (1 - E[e^{-r Z}])).

Everything else raises NoClosedFormError; the Monte Carlo and Laplace
routes cover those models.

The Laplace route: with constant-rate trend, Brownian diffusion, and
exponential-mixture jumps, -(Y + W + J) is a spectrally negative Levy
process and E_v[e^{-q tau}] is a rational-exponential expression in the
n + 2 real roots of

    s^2 y^2 / 2 - d y + sum_i lam p_i a_i / (y + a_i) - lam - q = 0,

one positive, one in (-a_1, 0], one between consecutive pole pairs, one
below -a_n.  Roots are bracketed between the poles and bisected to 1e-13.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import log_ndtr, ndtr

from .distributions import (
    DagumMix,
    Degenerate,
    Exponential,
    ExponentialJump,
    Fatal,
    GammaMix,
    GompertzDist,
    MixtureExponential,
    NormalJump,
    ParetoII,
    jump_convolution_cdf,
)
from .errors import ConvergenceError, NoClosedFormError, ValidationError
from .numerics import gauss_laguerre, gauss_legendre, laplace_invert

__all__ = [
    "ConstantRate",
    "PiecewiseRates",
    "GompertzTrend",
    "FrailtyScaled",
    "NoDiffusion",
    "BrownianConst",
    "ConstantIntensity",
    "PiecewiseIntensity",
    "JumpSpec",
    "no_jumps",
    "VitalityModel",
    "hazard_rate",
    "cumulative_hazard",
    "trend_inverse",
    "survival_static",
    "gompertz_death_time",
    "death_time_laplace",
    "survival_by_laplace",
    "ExpTransformInfo",
    "exp_transform",
]


# ---------------------------------------------------------------------------
# trend specifications


@dataclass(frozen=True)
class ConstantRate:
    """Vitality declines at a constant rate."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValidationError("ConstantRate: rate must be positive")


@dataclass(frozen=True)
class PiecewiseRates:
    """Constant decline rate on each one-year interval from time 0."""

    rates: tuple[float, ...]

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        if r.size == 0:
            raise ValidationError("PiecewiseRates: needs at least one rate")
        if np.any(r < 0):
            raise ValidationError("PiecewiseRates: rates must be non-negative")


@dataclass(frozen=True)
class GompertzTrend:
    """Decline rate b c^{x+t} for a life aged x."""

    b: float
    c: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValidationError("GompertzTrend: b must be positive")
        if not self.c > 1:
            raise ValidationError("GompertzTrend: c must exceed 1")


@dataclass(frozen=True)
class FrailtyScaled:
    """Trend multiplied by an unobserved positive frailty factor."""

    base: Union[ConstantRate, PiecewiseRates, GompertzTrend]
    mix: Union[GammaMix, DagumMix]

    def __post_init__(self):
        if isinstance(self.base, FrailtyScaled):
            raise ValidationError("FrailtyScaled: cannot nest frailty scalings")


TrendSpec = Union[ConstantRate, PiecewiseRates, GompertzTrend, FrailtyScaled]


# ---------------------------------------------------------------------------
# diffusion and jumps


@dataclass(frozen=True)
class NoDiffusion:
    pass


@dataclass(frozen=True)
class BrownianConst:
    """Brownian vitality noise with constant volatility."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError("BrownianConst: sigma must be positive")


DiffusionSpec = Union[NoDiffusion, BrownianConst]


@dataclass(frozen=True)
class ConstantIntensity:
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValidationError("ConstantIntensity: rate must be non-negative")

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValidationError("intensity: t must be non-negative")
        return self.rate * t

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return np.full_like(t, self.rate, dtype=float)


@dataclass(frozen=True)
class PiecewiseIntensity:
    """Constant jump intensity on each one-year interval from time 0."""

    rates: tuple[float, ...]

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        if r.size == 0:
            raise ValidationError("PiecewiseIntensity: needs at least one rate")
        if np.any(r < 0):
            raise ValidationError("PiecewiseIntensity: rates must be non-negative")

    def cumulative(self, t):
        return _piecewise_cumulative(np.asarray(self.rates, dtype=float), t, "intensity")

    def value(self, t):
        return _piecewise_value(np.asarray(self.rates, dtype=float), t, "intensity")


IntensitySpec = Union[ConstantIntensity, PiecewiseIntensity]

JumpSizeSpec = Union[Fatal, ExponentialJump, MixtureExponential, NormalJump]


@dataclass(frozen=True)
class JumpSpec:
    intensity: IntensitySpec
    size: JumpSizeSpec

    @property
    def is_null(self) -> bool:
        if isinstance(self.intensity, ConstantIntensity):
            return self.intensity.rate == 0.0
        return all(r == 0.0 for r in self.intensity.rates)


def no_jumps() -> JumpSpec:
    """Jump component that never fires."""
    return JumpSpec(ConstantIntensity(0.0), Fatal())


InitialSpec = Union[Exponential, ParetoII, GompertzDist, Degenerate]


@dataclass(frozen=True)
class VitalityModel:
    """Complete model for one life aged `age_x`."""

    age_x: float
    initial: InitialSpec
    trend: TrendSpec
    diffusion: DiffusionSpec = field(default_factory=NoDiffusion)
    jump: JumpSpec = field(default_factory=no_jumps)

    def __post_init__(self):
        if self.age_x < 0:
            raise ValidationError("VitalityModel: age_x must be non-negative")


# ---------------------------------------------------------------------------
# hazard evaluation


def _piecewise_value(rates: np.ndarray, t, what: str):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError(f"{what}: t must be non-negative")
    if np.any(t > rates.size):
        raise ValidationError(f"{what}: t={np.max(t)} beyond the {rates.size}-year coverage")
    idx = np.minimum(np.floor(t).astype(int), rates.size - 1)
    return rates[idx]


def _piecewise_cumulative(rates: np.ndarray, t, what: str):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError(f"{what}: t must be non-negative")
    if np.any(t > rates.size):
        raise ValidationError(f"{what}: t={np.max(t)} beyond the {rates.size}-year coverage")
    cum = np.concatenate([[0.0], np.cumsum(rates)])
    idx = np.minimum(np.floor(t).astype(int), rates.size - 1)
    return cum[idx] + (t - idx) * rates[idx]


def hazard_rate(trend: TrendSpec, age_x: float, t):
    """Decline rate mu_x(t) at elapsed time t."""
    if isinstance(trend, ConstantRate):
        t = np.asarray(t, dtype=float)
        return np.full_like(t, trend.rate, dtype=float)
    if isinstance(trend, PiecewiseRates):
        return _piecewise_value(np.asarray(trend.rates, dtype=float), t, "trend")
    if isinstance(trend, GompertzTrend):
        t = np.asarray(t, dtype=float)
        return trend.b * trend.c ** (age_x + t)
    if isinstance(trend, FrailtyScaled):
        raise ValidationError("hazard_rate: frailty-scaled trend has no fixed rate")
    raise ValidationError(f"hazard_rate: unknown trend {type(trend).__name__}")


def cumulative_hazard(trend: TrendSpec, age_x: float, T):
    """Y(T) = int_0^T mu_x(s) ds for a deterministic trend."""
    if isinstance(trend, ConstantRate):
        T = np.asarray(T, dtype=float)
        if np.any(T < 0):
            raise ValidationError("cumulative_hazard: T must be non-negative")
        return trend.rate * T
    if isinstance(trend, PiecewiseRates):
        return _piecewise_cumulative(np.asarray(trend.rates, dtype=float), T, "trend")
    if isinstance(trend, GompertzTrend):
        T = np.asarray(T, dtype=float)
        if np.any(T < 0):
            raise ValidationError("cumulative_hazard: T must be non-negative")
        lnc = math.log(trend.c)
        return trend.b * trend.c**age_x * np.expm1(lnc * T) / lnc
    if isinstance(trend, FrailtyScaled):
        raise ValidationError("cumulative_hazard: frailty-scaled trend has no fixed hazard")
    raise ValidationError(f"cumulative_hazard: unknown trend {type(trend).__name__}")


def trend_inverse(trend: TrendSpec, age_x: float, y):
    """Solve Y(t) = y for t (the deterministic depletion time of y units)."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValidationError("trend_inverse: y must be non-negative")
    if isinstance(trend, ConstantRate):
        return y / trend.rate
    if isinstance(trend, GompertzTrend):
        lnc = math.log(trend.c)
        return np.log1p(y * lnc / (trend.b * trend.c**age_x)) / lnc
    if isinstance(trend, PiecewiseRates):
        rates = np.asarray(trend.rates, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(rates)])
        if np.any(y > cum[-1]):
            raise ValidationError("trend_inverse: y beyond total coverage")
        knots = np.arange(rates.size + 1, dtype=float)
        return np.interp(y, cum, knots)
    raise ValidationError(f"trend_inverse: unsupported trend {type(trend).__name__}")


# ---------------------------------------------------------------------------
# closed-form survival


def _fatal_factor(model: VitalityModel, T):
    """exp(-Lambda(T)) when jumps are lethal or absent; None otherwise."""
    if model.jump.is_null:
        return np.ones_like(np.asarray(T, dtype=float))
    if isinstance(model.jump.size, Fatal):
        return np.exp(-model.jump.intensity.cumulative(T))
    return None


def _drifted_bm_inner(v, drift, sigma, T):
    """Pr(min of v + drift*t + sigma*B stays positive to T), elementwise.

    The reflection term e^{2 d v / s^2} Phi(-(v + dT)/(s sqrt T)) is formed in
    log space: at large v the exponential overflows while the cdf underflows,
    but their product decays like exp(-v^2 / (2 s^2 T)).
    """
    v = np.asarray(v, dtype=float)
    T = np.asarray(T, dtype=float)
    rt = sigma * np.sqrt(T)
    direct = ndtr((v - drift * T) / rt)
    reflected = np.exp(2.0 * drift * v / sigma**2 + log_ndtr((-v - drift * T) / rt))
    return np.clip(direct - reflected, 0.0, 1.0)


def _diffusion_survival(model: VitalityModel, T):
    delta = model.trend.rate
    sigma = model.diffusion.sigma
    initial = model.initial
    T = np.asarray(T, dtype=float)
    if isinstance(initial, Degenerate):
        return _drifted_bm_inner(initial.value, delta, sigma, T)
    if isinstance(initial, Exponential):
        rule = gauss_laguerre(64)
        nodes = rule.nodes / initial.rate
        vals = _drifted_bm_inner(nodes[:, None], delta, sigma, T[None, :])
        return rule.weights @ vals
    # generic initial law: integrate over the probability scale
    rule = gauss_legendre(128, 0.0, 1.0)
    nodes = initial.quantile(rule.nodes)
    vals = _drifted_bm_inner(nodes[:, None], delta, sigma, T[None, :])
    return rule.weights @ vals


def survival_static(model: VitalityModel, T):
    """Closed-form Pr(tau > T) for the model families listed in the module
    docstring.  Raises NoClosedFormError for anything else."""
    T_arr = np.asarray(T, dtype=float)
    scalar = T_arr.ndim == 0
    T_arr = np.atleast_1d(T_arr)
    if np.any(T_arr < 0):
        raise ValidationError("survival_static: T must be non-negative")

    fatal = _fatal_factor(model, T_arr)

    if isinstance(model.trend, FrailtyScaled):
        if not isinstance(model.diffusion, NoDiffusion) or fatal is None:
            raise NoClosedFormError(
                "survival_static: frailty trend combines only with "
                "deterministic dynamics and lethal or absent jumps"
            )
        out = fatal * _frailty_survival(model, T_arr)
    elif isinstance(model.diffusion, NoDiffusion):
        if fatal is None:
            out = _monotone_jump_survival(model, T_arr)
        else:
            y = cumulative_hazard(model.trend, model.age_x, T_arr)
            out = fatal * model.initial.survival(y)
    else:
        if not isinstance(model.trend, ConstantRate) or fatal is None:
            raise NoClosedFormError(
                "survival_static: diffusion is closed-form only with a "
                "constant-rate trend and lethal or absent jumps"
            )
        out = np.where(T_arr == 0.0, 1.0, fatal * _diffusion_survival(model, np.maximum(T_arr, 1e-300)))

    out = np.asarray(out, dtype=float)
    return float(out[0]) if scalar else out


def _monotone_jump_survival(model: VitalityModel, T):
    """Pr(tau > T) with non-lethal jumps and no diffusion.

    The depletion Y + J never decreases, so tau > T iff V(0) > Y(T) + J(T).
    """
    size = model.jump.size
    initial = model.initial
    y = cumulative_hazard(model.trend, model.age_x, T)
    lam_cum = np.asarray(model.jump.intensity.cumulative(T), dtype=float)

    if isinstance(initial, Exponential):
        r = initial.rate
        if isinstance(size, ExponentialJump):
            kept = size.rate / (size.rate + r)
        elif isinstance(size, MixtureExponential):
            w = np.asarray(size.weights, dtype=float)
            a = np.asarray(size.rates, dtype=float)
            kept = float(np.sum(w * a / (a + r)))
        else:
            raise NoClosedFormError(
                "survival_static: exponential initial with jumps needs "
                "exponential or mixture jump sizes"
            )
        return np.exp(-r * y - lam_cum * (1.0 - kept))

    if isinstance(initial, Degenerate) and isinstance(size, ExponentialJump):
        head = initial.value - y
        alive = head > 0
        out = np.zeros_like(np.asarray(T, dtype=float))
        if np.any(alive):
            lam_a = lam_cum[alive]
            head_a = head[alive]
            lam_max = float(np.max(lam_a))
            k_max = int(math.ceil(lam_max + 12.0 * math.sqrt(lam_max) + 30.0))
            acc = np.zeros_like(head_a)
            weight = np.exp(-lam_a)
            for k in range(k_max + 1):
                if k > 0:
                    weight = weight * lam_a / k
                acc += weight * jump_convolution_cdf(size, k, head_a)
            out[alive] = acc
        return out

    raise NoClosedFormError(
        "survival_static: non-lethal jumps have a closed form only for "
        "exponential initial vitality (exponential or mixture sizes) or a "
        "point mass with exponential sizes; use the Monte Carlo or Laplace "
        "routes"
    )


def _frailty_survival(model: VitalityModel, T):
    trend: FrailtyScaled = model.trend
    y = cumulative_hazard(trend.base, model.age_x, T)
    initial = model.initial
    mix = trend.mix
    if isinstance(initial, Exponential) and isinstance(mix, GammaMix):
        return (1.0 + initial.rate * y / mix.rate) ** (-mix.shape)
    if isinstance(initial, Degenerate) and isinstance(mix, DagumMix):
        # alive at T iff the frailty factor stays below v / Y(T)
        with np.errstate(divide="ignore"):
            ratio = np.where(y > 0, initial.value / np.maximum(y, 1e-300), np.inf)
        return np.where(y == 0.0, 1.0, mix.cdf(ratio))
    raise NoClosedFormError(
        "survival_static: frailty closed forms need Exponential+GammaMix "
        "or Degenerate+DagumMix"
    )


def gompertz_death_time(v, age_x: float, b: float, c: float):
    """Deterministic death time of a life aged x holding vitality v under a
    pure Gompertz trend: the time at which the accumulated decline equals v."""
    trend = GompertzTrend(b, c)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValidationError("gompertz_death_time: v must be non-negative")
    out = trend_inverse(trend, age_x, v)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Laplace-transform route for the jump diffusion


def _mixture_terms(jump: JumpSpec) -> tuple[float, np.ndarray, np.ndarray]:
    """(lambda, weights, rates) with duplicate rates merged; lambda may be 0."""
    if not isinstance(jump.intensity, ConstantIntensity):
        raise ValidationError("death_time_laplace: intensity must be constant")
    lam = jump.intensity.rate
    if lam == 0.0:
        return 0.0, np.empty(0), np.empty(0)
    size = jump.size
    if isinstance(size, ExponentialJump):
        return lam, np.array([1.0]), np.array([size.rate])
    if isinstance(size, MixtureExponential):
        rates, inv = np.unique(np.asarray(size.rates, dtype=float), return_inverse=True)
        weights = np.zeros_like(rates)
        np.add.at(weights, inv, np.asarray(size.weights, dtype=float))
        return lam, weights, rates
    raise ValidationError(
        "death_time_laplace: jump sizes must be exponential or an exponential mixture"
    )


def _bisect(f, lo: float, hi: float, tol: float = 1e-13) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ConvergenceError("root bracketing failed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _exponent_roots(sigma, delta, lam, weights, rates, q) -> np.ndarray:
    """All n + 2 real roots of the exponent equation, descending."""

    def psi(y):
        if lam > 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                jump_part = lam * float(np.sum(weights * rates / (y + rates)))
        else:
            jump_part = 0.0
        return 0.5 * sigma**2 * y * y - delta * y + jump_part - lam - q

    roots = []
    # positive root: psi(0) = -q < 0, quadratic term wins at +inf
    hi = max(1.0, 4.0 * delta / sigma**2)
    while psi(hi) <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError("death_time_laplace: positive root not bracketed")
    roots.append(_bisect(psi, 0.0, hi))

    if lam == 0.0:
        lo = -max(1.0, 4.0 * delta / sigma**2)
        while psi(lo) <= 0:
            lo *= 2.0
            if lo < -1e12:
                raise ConvergenceError("death_time_laplace: negative root not bracketed")
        roots.append(_bisect(psi, lo, 0.0))
        return np.array(roots)

    poles = np.sort(rates)  # alpha_1 < ... < alpha_n; poles at -alpha_i
    # root in (-alpha_1, 0]: psi -> +inf at the pole, psi(0) = -q < 0
    lo = _approach_pole(psi, -poles[0], 0.0)
    roots.append(_bisect(psi, lo, 0.0))
    # one root between consecutive poles
    for i in range(poles.size - 1):
        left = _approach_pole(psi, -poles[i + 1], -poles[i])  # psi > 0 side
        right = _approach_pole(psi, -poles[i], -poles[i + 1])  # psi < 0 side
        roots.append(_bisect(psi, left, right))
    # root below the deepest pole: psi -> -inf at the pole from the left,
    # quadratic term wins at -inf
    right = _approach_pole(psi, -poles[-1], -poles[-1] - 1.0)
    lo = right - max(1.0, 4.0 * delta / sigma**2)
    while psi(lo) <= 0:
        lo -= 2.0 * (right - lo)
        if lo < -1e12:
            raise ConvergenceError("death_time_laplace: deepest root not bracketed")
    roots.append(_bisect(psi, lo, right))

    out = np.array(roots)
    if not np.all(np.diff(out) < 0):
        raise ConvergenceError("death_time_laplace: root ordering check failed")
    return out


def _approach_pole(psi, pole: float, toward: float) -> float:
    """Point near `pole`, on the side of `toward`, where psi carries its pole
    sign: the jump term blows up to +inf just right of a pole and to -inf
    just left of it, so the target sign is the approach direction's sign."""
    direction = 1.0 if toward > pole else -1.0
    want_positive = direction > 0
    step = 1e-9 * max(1.0, abs(pole))
    for _ in range(120):
        y = pole + direction * step
        val = psi(y)
        if math.isfinite(val) and (val > 0) == want_positive:
            return y
        step *= 0.5
    raise ConvergenceError("death_time_laplace: could not approach a pole")


def death_time_laplace(model: VitalityModel, v: float, q: float) -> float:
    """E_v[e^{-q tau}] for constant-rate trend + Brownian noise + exponential
    (or exponential-mixture) jumps, starting from vitality v > 0."""
    if not isinstance(model.trend, ConstantRate):
        raise ValidationError("death_time_laplace: trend must be ConstantRate")
    if not isinstance(model.diffusion, BrownianConst):
        raise ValidationError("death_time_laplace: diffusion must be BrownianConst")
    if not v > 0:
        raise ValidationError("death_time_laplace: v must be positive")
    if not q > 0:
        raise ValidationError("death_time_laplace: q must be positive")
    delta = model.trend.rate
    sigma = model.diffusion.sigma
    lam, weights, rates = _mixture_terms(model.jump)

    theta = _exponent_roots(sigma, delta, lam, weights, rates, q)

    def g(y):
        jump_part = lam * np.sum(weights * rates / (y + rates) ** 2) if lam > 0 else 0.0
        return sigma**2 * y - delta - jump_part

    # E = q sum_i e^{theta_i v} / g(theta_i) (1/theta_i - 1/theta_1); the
    # i = 1 term vanishes identically, so only non-positive exponents remain
    theta1 = theta[0]
    total = 0.0
    for th in theta[1:]:
        total += math.exp(th * v) / g(th) * (1.0 / th - 1.0 / theta1)
    return float(np.clip(q * total, 0.0, 1.0))


def survival_by_laplace(model: VitalityModel, v: float, T: float, order: int = 7) -> float:
    """Pr(tau > T) by numerically inverting the death-time transform."""
    if T < 0:
        raise ValidationError("survival_by_laplace: T must be non-negative")
    if T == 0.0:
        return 1.0

    def transform(q: float) -> float:
        return (1.0 - death_time_laplace(model, v, q)) / q

    value = laplace_invert(transform, T, order=order)
    return float(np.clip(value, 0.0, 1.0))


# ---------------------------------------------------------------------------
# exponential change of scale


@dataclass(frozen=True)
class ExpTransformInfo:
    """How the model reads after mapping vitality through v -> e^v.

    Death becomes the first passage of e^V to the threshold e^0 = 1; the
    death time itself is unchanged because the map is strictly increasing.
    """

    initial: str
    threshold: float
    note: str


def exp_transform(model: VitalityModel) -> ExpTransformInfo:
    initial = model.initial
    if isinstance(initial, Exponential):
        desc = f"Pareto(shape={initial.rate:g}, scale=1) on [1, inf)"
    elif isinstance(initial, GompertzDist):
        desc = f"inverse Weibull (log-Gompertz), shape={initial.shape:g}, on [1, inf)"
    elif isinstance(initial, Degenerate):
        desc = f"Degenerate({math.exp(initial.value):.12g})"
    elif isinstance(initial, ParetoII):
        desc = f"log-Pareto-II(shape={initial.shape:g}, scale={initial.scale:g}) on [1, inf)"
    else:
        raise ValidationError("exp_transform: unsupported initial law")
    return ExpTransformInfo(
        initial=desc,
        threshold=1.0,
        note="death time unchanged: the exponential map is strictly increasing",
    )
