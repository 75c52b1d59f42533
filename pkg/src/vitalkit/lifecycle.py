"""Optimal investment and consumption for a life whose remaining lifetime is
the vitality crossing time.

The investor holds assets A, consumes at rate zeta, invests a fraction pi in
a risky asset with market price of risk theta, and draws log utility
discounted at beta, with weight lambda_bequest on ln A at death.  Vitality
follows dV = -delta dt + sigma_V dB, independent of the market, and death is
the first passage of V to zero.  The value function separates as
J(a, v) = f(v) ln a + g(v):

* the consumption factor solves delta f' - (sigma_V^2/2) f'' - 1 + beta f = 0
  with f(0) = lambda_bequest and f(inf) = 1/beta, giving
  f(v) = (lambda - 1/beta) e^{k1 v} + 1/beta with
  k1 = (delta - sqrt(delta^2 + 2 sigma_V^2 beta)) / sigma_V^2, understood as
  -beta/delta when sigma_V = 0;
* the optimal controls are pi* = theta/sigma_S (a constant) and
  zeta* = A / f(V);
* the intercept g solves the linear second-order two-point problem
  (sigma_V^2/2) g'' - delta g' - beta g = -(f (r + theta^2/2) - 1 - ln f)
  with g(0) = 0 and g -> G (the infinite-horizon Merton constant) as v
  grows.

Classical Merton solutions, with and without a deterministic force of
mortality, are provided as references, and a path simulator supports policy
experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceError, ValidationError
from .fpt_density import _quad
from .model import cumulative_hazard, hazard_rate
from .numerics import RngStream

__all__ = [
    "MarketParams",
    "VitalitySDE",
    "MertonConstants",
    "WithMortality",
    "MortalityMerton",
    "LifecyclePath",
    "consumption_factor",
    "optimal_policy",
    "merton_reference",
    "value_function_g",
    "simulate_lifecycle",
    "discounted_utility",
    "utility_sample",
]


@dataclass(frozen=True)
class MarketParams:
    """Market and preference parameters for the consumption problem."""

    r: float
    theta: float
    sigma_s: float
    beta: float
    lambda_bequest: float = 0.0

    def __post_init__(self):
        if not self.sigma_s > 0:
            raise ValidationError("MarketParams: sigma_s must be positive")
        if not self.beta > 0:
            raise ValidationError("MarketParams: beta must be positive")
        if self.lambda_bequest < 0:
            raise ValidationError("MarketParams: lambda_bequest must be non-negative")


@dataclass(frozen=True)
class VitalitySDE:
    """Constant-rate vitality dynamics dV = -delta dt + sigma_V dB."""

    delta: float
    sigma_v: float
    v0: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValidationError("VitalitySDE: delta must be positive")
        if self.sigma_v < 0:
            raise ValidationError("VitalitySDE: sigma_v must be non-negative")
        if not self.v0 > 0:
            raise ValidationError("VitalitySDE: v0 must be positive")


def _k1(market: MarketParams, sde: VitalitySDE) -> float:
    # algebraically equal to (delta - sqrt(delta^2 + 2 sigma^2 beta))/sigma^2
    # but free of cancellation, and it carries the sigma -> 0 limit -beta/delta
    return -2.0 * market.beta / (
        sde.delta + math.sqrt(sde.delta**2 + 2.0 * sde.sigma_v**2 * market.beta)
    )


def consumption_factor(v, market: MarketParams, sde: VitalitySDE):
    """Marginal-utility scale f(v): assets divided by f give the optimal
    consumption rate.  f(0) is the bequest weight; f grows (or decays, when
    the bequest weight exceeds 1/beta) toward the perpetual value 1/beta."""
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0):
        raise ValidationError("consumption_factor: v must be non-negative")
    inv_beta = 1.0 / market.beta
    out = (market.lambda_bequest - inv_beta) * np.exp(_k1(market, sde) * v_arr) + inv_beta
    return float(out) if out.ndim == 0 else out


def optimal_policy(a: float, v: float, market: MarketParams, sde: VitalitySDE) -> tuple[float, float]:
    """(risky fraction, consumption rate) at assets a and vitality v."""
    if not a > 0:
        raise ValidationError("optimal_policy: assets must be positive")
    if not v > 0:
        raise ValidationError("optimal_policy: vitality must be positive")
    return market.theta / market.sigma_s, a / consumption_factor(v, market, sde)


# ---------------------------------------------------------------------------
# Merton references


@dataclass(frozen=True)
class MertonConstants:
    """Infinite-horizon log-utility value function pieces J = F ln a + G."""

    F: float
    G: float


@dataclass(frozen=True)
class WithMortality:
    """Finite-horizon Merton configuration under a deterministic force of
    mortality.  `trend` supplies the force for a life aged `age_x` at time
    zero (None means no mortality); `lambda_bequest` weights ln A at death
    and `lambda_terminal` weights ln A at the horizon."""

    trend: object | None
    horizon: float
    lambda_bequest: float = 0.0
    lambda_terminal: float = 0.0
    age_x: float = 0.0

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValidationError("WithMortality: horizon must be positive")
        if self.lambda_bequest < 0 or self.lambda_terminal < 0:
            raise ValidationError("WithMortality: bequest weights must be non-negative")


class MortalityMerton:
    """Evaluator for the finite-horizon problem, J(t, a) = F(t) ln a + G(t)."""

    def __init__(self, market: MarketParams, spec: WithMortality):
        self.market = market
        self.spec = spec

    def _mu(self, s: float) -> float:
        if self.spec.trend is None:
            return 0.0
        return float(hazard_rate(self.spec.trend, self.spec.age_x, s))

    def _decay(self, t: float, s: float) -> float:
        out = self.market.beta * (s - t)
        if self.spec.trend is not None:
            out += float(cumulative_hazard(self.spec.trend, self.spec.age_x, s)) - float(
                cumulative_hazard(self.spec.trend, self.spec.age_x, t)
            )
        return out

    def F(self, t: float) -> float:
        """Consumption factor at time t (an annuity plus weighted insurance
        and endowment values under discount beta)."""
        end = self.spec.horizon
        if not 0.0 <= t <= end:
            raise ValidationError("MortalityMerton.F: t must lie in [0, horizon]")
        if t == end:
            return self.spec.lambda_terminal
        terminal = self.spec.lambda_terminal * math.exp(-self._decay(t, end))
        running = _quad(
            lambda s: math.exp(-self._decay(t, s))
            * (1.0 + self.spec.lambda_bequest * self._mu(s)),
            t, end, 1e-11,
        )
        return terminal + running

    def G(self, t: float) -> float:
        """Intercept at time t, by quadrature over the consumption factor."""
        end = self.spec.horizon
        if not 0.0 <= t <= end:
            raise ValidationError("MortalityMerton.G: t must lie in [0, horizon]")
        if t == end:
            return 0.0
        load = self.market.r + 0.5 * self.market.theta**2

        def integrand(s: float) -> float:
            fs = self.F(s)
            return math.exp(-self._decay(t, s)) * (fs * load - 1.0 - math.log(fs))

        return _quad(integrand, t, end, 1e-9)


def merton_reference(market: MarketParams, horizon: WithMortality | None = None):
    """Classical log-utility reference solutions.

    With no horizon argument, returns the infinite-horizon constants
    F = 1/beta and G = ((r + theta^2/2 - beta)/beta + ln beta)/beta.  With a
    WithMortality configuration, returns the finite-horizon evaluator whose
    F and G methods integrate the displayed recursions by quadrature.
    """
    if horizon is not None:
        if not isinstance(horizon, WithMortality):
            raise ValidationError("merton_reference: horizon must be WithMortality or None")
        return MortalityMerton(market, horizon)
    beta = market.beta
    g_const = ((market.r + 0.5 * market.theta**2 - beta) / beta + math.log(beta)) / beta
    return MertonConstants(F=1.0 / beta, G=g_const)


# ---------------------------------------------------------------------------
# value-function intercept


def _g_source(v, market: MarketParams, sde: VitalitySDE):
    f = consumption_factor(v, market, sde)
    return f * (market.r + 0.5 * market.theta**2) - 1.0 - np.log(f)


def value_function_g(v_grid, market: MarketParams, sde: VitalitySDE) -> np.ndarray:
    """Value-function intercept g on `v_grid`.

    For sigma_v > 0 this solves the two-point boundary problem with g(0) = 0
    and g at the last grid point pinned to the infinite-horizon Merton
    constant (the stated large-v limit) by second-order finite differences
    on the possibly non-uniform grid.  For sigma_v = 0 the equation is first
    order and is marched from g(0) = 0 cell by cell with the integrating
    factor, each cell integral done adaptively, so the result is exact to
    quadrature tolerance on any admissible grid (the source has an
    integrable log singularity at v = 0 when the bequest weight vanishes).
    """
    grid = np.asarray(v_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValidationError("value_function_g: v_grid must hold at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("value_function_g: v_grid must be strictly increasing")
    if not grid[0] > 0:
        raise ValidationError("value_function_g: v_grid must start above zero")
    if grid[0] > 1e-3:
        raise ValidationError("value_function_g: v_grid must start at or below 1e-3")

    if sde.sigma_v == 0.0:
        g = _march_first_order(grid, market, sde)
    else:
        g = _solve_two_point(grid, market, sde)
    return np.asarray(g, dtype=float)


def _march_first_order(grid, market, sde):
    # delta g' + beta g = src, so over one cell [a, b]
    #   g(b) = e^{-beta (b-a)/delta} g(a)
    #          + int_a^b e^{-beta (b-u)/delta} src(u)/delta du
    # and every exponent in the cell integral is non-positive.
    delta = sde.delta
    beta = market.beta

    def src(u):
        return float(_g_source(u, market, sde))

    g = np.empty(grid.size)
    nodes = np.concatenate([[0.0], grid])
    val = 0.0
    for i in range(grid.size):
        a, b = float(nodes[i]), float(nodes[i + 1])
        cell = _quad(
            lambda u: math.exp(-beta * (b - u) / delta) * src(u) / delta,
            a, b, 1e-13,
        )
        val = math.exp(-beta * (b - a) / delta) * val + cell
        g[i] = val
    return g


def _solve_two_point(grid, market, sde):
    g_inf = merton_reference(market).G
    nodes = np.concatenate([[0.0], grid])
    n = nodes.size
    interior = np.arange(1, n - 1)
    hm = nodes[interior] - nodes[interior - 1]
    hp = nodes[interior + 1] - nodes[interior]
    half_var = 0.5 * sde.sigma_v**2

    # second-order stencils on a non-uniform grid
    lo = 2.0 * half_var / (hm * (hm + hp)) + sde.delta * hp / (hm * (hm + hp))
    di = -2.0 * half_var / (hm * hp) - sde.delta * (hp - hm) / (hm * hp) - market.beta
    up = 2.0 * half_var / (hp * (hm + hp)) - sde.delta * hm / (hp * (hm + hp))

    rhs = -np.asarray(_g_source(nodes[interior], market, sde), dtype=float)
    rhs[0] -= lo[0] * 0.0
    rhs[-1] -= up[-1] * g_inf

    banded = np.zeros((3, interior.size))
    banded[0, 1:] = up[:-1]
    banded[1, :] = di
    banded[2, :-1] = lo[1:]
    try:
        sol = solve_banded((1, 1), banded, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"value_function_g: singular linear system: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise ConvergenceError("value_function_g: singular linear system")
    g = np.empty(grid.size)
    g[:-1] = sol
    g[-1] = g_inf
    return g


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class LifecyclePath:
    """One simulated life: per-step times, assets, consumption rates, and
    vitality, the death time (None if the path outlived the cap), and a flag
    for assets hitting zero."""

    times: np.ndarray
    assets: np.ndarray
    consumption: np.ndarray
    vitality: np.ndarray
    tau: float | None
    bankrupt: bool


def _default_cap(sde: VitalitySDE) -> float:
    base = sde.v0 / sde.delta
    return base + 30.0 * sde.sigma_v * math.sqrt(base) / sde.delta + 1.0


def simulate_lifecycle(
    a0: float,
    market: MarketParams,
    sde: VitalitySDE,
    policy: Callable[[float, float], tuple[float, float]] | None = None,
    dt: float = 1.0 / 252.0,
    rng: RngStream = RngStream(23),
    t_max: float | None = None,
) -> LifecyclePath:
    """Euler-Maruyama path of (assets, vitality) under a policy mapping
    (assets, vitality) to (risky fraction, consumption rate); the default is
    the optimal one.  Vitality absorbs at zero (death); assets are floored
    at zero and flagged."""
    if not a0 > 0:
        raise ValidationError("simulate_lifecycle: a0 must be positive")
    if not 0 < dt <= 1.0 / 252.0:
        raise ValidationError("simulate_lifecycle: dt must lie in (0, 1/252]")
    if policy is None:
        def policy(a, v):
            return optimal_policy(a, v, market, sde)

    gen = rng.generator()
    cap = _default_cap(sde) if t_max is None else float(t_max)
    n_steps = int(math.ceil(cap / dt))
    times = [0.0]
    assets = [float(a0)]
    vitality = [sde.v0]
    consumption = []
    a, v = float(a0), float(sde.v0)
    tau = None
    bankrupt = False
    root_dt = math.sqrt(dt)
    for i in range(n_steps):
        if a > 0.0:
            pi, zeta = policy(a, v)
        else:
            pi, zeta = 0.0, 0.0
        consumption.append(zeta)
        z_s, z_v = gen.standard_normal(2)
        a = a + a * (market.r + pi * market.theta * market.sigma_s) * dt \
            + pi * market.sigma_s * a * root_dt * z_s - zeta * dt
        if a <= 0.0:
            a = 0.0
            bankrupt = True
        v = v - sde.delta * dt + sde.sigma_v * root_dt * z_v
        t = (i + 1) * dt
        times.append(t)
        assets.append(a)
        if v <= 0.0:
            vitality.append(0.0)
            tau = t
            break
        vitality.append(v)
    return LifecyclePath(
        times=np.asarray(times),
        assets=np.asarray(assets),
        consumption=np.asarray(consumption),
        vitality=np.asarray(vitality),
        tau=tau,
        bankrupt=bankrupt,
    )


def discounted_utility(path: LifecyclePath, market: MarketParams) -> float:
    """Realized discounted log utility of one path, including the bequest
    term at death.  Paths that consumed nothing in some step score -inf."""
    dt = np.diff(path.times)
    disc = np.exp(-market.beta * path.times[:-1])
    zeta = path.consumption
    if np.any(zeta <= 0.0):
        return float("-inf")
    total = float(np.sum(disc * np.log(zeta) * dt))
    if path.tau is not None and market.lambda_bequest > 0.0:
        a_tau = path.assets[-1]
        if a_tau <= 0.0:
            return float("-inf")
        total += market.lambda_bequest * math.exp(-market.beta * path.tau) * math.log(a_tau)
    return total


def utility_sample(
    a0: float,
    market: MarketParams,
    sde: VitalitySDE,
    dt: float,
    n_paths: int,
    stream: RngStream,
    consumption_scale: float = 1.0,
    t_max: float | None = None,
) -> np.ndarray:
    """Per-path discounted utilities under the optimal policy with the
    consumption rate multiplied by `consumption_scale`.

    Shocks depend only on (stream, step), never on the scale, so calls with
    the same stream make paired common-random-number comparisons."""
    if not a0 > 0:
        raise ValidationError("utility_sample: a0 must be positive")
    if not 0 < dt <= 1.0 / 252.0:
        raise ValidationError("utility_sample: dt must lie in (0, 1/252]")
    if not consumption_scale > 0:
        raise ValidationError("utility_sample: consumption_scale must be positive")
    if n_paths < 2:
        raise ValidationError("utility_sample: n_paths must be at least 2")

    gen = stream.generator()
    cap = _default_cap(sde) if t_max is None else float(t_max)
    n_steps = int(math.ceil(cap / dt))
    pi = market.theta / market.sigma_s
    grow = market.r + pi * market.theta * market.sigma_s
    root_dt = math.sqrt(dt)
    lam = market.lambda_bequest

    a = np.full(n_paths, float(a0))
    v = np.full(n_paths, sde.v0)
    alive = np.ones(n_paths, dtype=bool)
    ruined = np.zeros(n_paths, dtype=bool)
    util = np.zeros(n_paths)
    for i in range(n_steps):
        z = gen.standard_normal((2, n_paths))
        if not np.any(alive):
            break
        t = i * dt
        f_v = np.asarray(consumption_factor(np.maximum(v, 0.0), market, sde))
        with np.errstate(divide="ignore", invalid="ignore"):
            zeta = consumption_scale * a / f_v
            act = alive & ~ruined & (zeta > 0.0) & np.isfinite(zeta)
            util[act] += math.exp(-market.beta * t) * np.log(zeta[act]) * dt
            a = np.where(
                alive & ~ruined,
                a + a * grow * dt + pi * market.sigma_s * a * root_dt * z[0] - zeta * dt,
                a,
            )
        newly_ruined = alive & ~ruined & (a <= 0.0)
        ruined |= newly_ruined
        a = np.maximum(a, 0.0)
        v = np.where(alive, v - sde.delta * dt + sde.sigma_v * root_dt * z[1], v)
        dead = alive & (v <= 0.0)
        if lam > 0.0 and np.any(dead):
            ok = dead & (a > 0.0)
            util[ok] += lam * math.exp(-market.beta * (t + dt)) * np.log(a[ok])
            util[dead & ~ok] = -np.inf
        alive &= ~dead
    util[ruined] = -np.inf
    return util
