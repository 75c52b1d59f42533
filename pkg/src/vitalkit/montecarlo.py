"""Monte Carlo survival for jump-diffusion vitality models.

The estimator follows the boundary-crossing construction: merge a
deterministic time grid with the path's jump times, evaluate the moving
boundary (v - Y - accumulated jumps)/sigma just after (b+) and just before
(b-) each merged point, simulate the Brownian skeleton at those points, and
multiply one factor per interval,

    1(y_i < b+_i) * (1 - exp(-2 (b+_{i-1} - y_{i-1})(b-_i - y_i) / du_i)),

whose second part is the bridge probability of not crossing between skeleton
points.  Lethal jumps are carried through the same algebra with an
effectively infinite size, which zeroes every factor from the arrival on.
The bridge factor is clamped to [0, 1]: a vitality-raising jump can lift the
boundary above the skeleton only after the path has already died, and the
clamp zeroes exactly those paths.

Paths are simulated in fixed-size blocks, each block drawing from its own
child stream and reduced in block order, so results are bit-identical for a
given seed regardless of how many workers run (workers capped by
VITALKIT_THREADS).  Antithetic pairs share jump times and sizes and flip the
Gaussian increments; pair averages are the independent units for the
standard error.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import Degenerate, Exponential, Fatal
from .errors import ValidationError
from .model import (
    BrownianConst,
    ConstantIntensity,
    FrailtyScaled,
    VitalityModel,
    cumulative_hazard,
)
from .numerics import RngStream, gauss_laguerre, worker_count

__all__ = [
    "McConfig",
    "McEstimate",
    "linear_noncrossing_prob",
    "simulate_jump_times",
    "mc_survival",
    "mc_survival_curve",
    "piecewise_survival_fatal",
    "survival_unconditional",
    "sample_death_times",
]

_FATAL_SIZE = 1e200


@dataclass(frozen=True)
class McConfig:
    """Path count, deterministic grid resolution (intervals over the whole
    horizon), stream, and variance-reduction switches."""

    n_paths: int
    n_time_points: int
    stream: RngStream
    antithetic: bool = False
    block_size: int = 8192
    jump_time_method: str = "order-stat"

    def __post_init__(self):
        if self.n_paths < 100:
            raise ValidationError("McConfig: n_paths must be at least 100")
        if self.n_time_points < 1:
            raise ValidationError("McConfig: n_time_points must be at least 1")
        if self.block_size < 2:
            raise ValidationError("McConfig: block_size must be at least 2")
        if self.jump_time_method not in ("order-stat", "sequential"):
            raise ValidationError("McConfig: jump_time_method must be order-stat or sequential")


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_effective: int


def monthly_config(horizon: float, n_paths: int, stream: RngStream, **kw) -> McConfig:
    """Config with the default twelve grid points per year."""
    return McConfig(n_paths, max(1, math.ceil(12.0 * horizon)), stream, **kw)


def linear_noncrossing_prob(slope, intercept, s, x):
    """Pr(B(t) < slope*t + intercept for all t <= s | B(s) = x) for a
    Brownian bridge; zero when either endpoint already violates the line."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValidationError("linear_noncrossing_prob: s must be positive")
    intercept = np.asarray(intercept, dtype=float)
    x = np.asarray(x, dtype=float)
    end_gap = slope * s + intercept - x
    with np.errstate(over="ignore"):
        p = -np.expm1(-2.0 * intercept * end_gap / s)
    return np.where((intercept > 0) & (end_gap > 0), np.clip(p, 0.0, 1.0), 0.0)


# ---------------------------------------------------------------------------
# jump times


def _intensity_inverse(intensity, targets):
    """Solve Lambda(t) = target for each target in [0, Lambda(coverage))."""
    targets = np.asarray(targets, dtype=float)
    if isinstance(intensity, ConstantIntensity):
        return targets / intensity.rate
    rates = np.asarray(intensity.rates, dtype=float)
    knots = np.arange(rates.size + 1, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(rates)])
    return np.interp(targets, cum, knots)


def simulate_jump_times(intensity, horizon: float, rng: np.random.Generator,
                        method: str = "order-stat") -> np.ndarray:
    """Arrival times on [0, horizon] given the jump count is Poisson with
    mean Lambda(horizon).

    "order-stat" draws the exact conditional law (sorted iid points with
    density lambda/Lambda); "sequential" draws each arrival truncated to lie
    between its predecessor and the horizon, which is not the exact
    conditional law for two or more arrivals and is kept for comparison.
    """
    if horizon <= 0:
        raise ValidationError("simulate_jump_times: horizon must be positive")
    total = float(intensity.cumulative(horizon))
    k = int(rng.poisson(total)) if total > 0 else 0
    if k == 0:
        return np.empty(0)
    if method == "order-stat":
        u = rng.uniform(size=k)
        return np.sort(_intensity_inverse(intensity, u * total))
    if method == "sequential":
        times = np.empty(k)
        prev_cum = 0.0
        for i in range(k):
            u = rng.uniform()
            target = prev_cum + u * (total - prev_cum)
            times[i] = float(_intensity_inverse(intensity, target))
            prev_cum = target
        return times
    raise ValidationError(f"simulate_jump_times: unknown method {method!r}")


def _batch_jump_times(intensity, horizon, counts, rng, method):
    """(m, k_max) arrival matrix for a group of equal counts; columns sorted."""
    m, k = counts
    total = float(intensity.cumulative(horizon))
    if method == "order-stat":
        u = rng.uniform(size=(m, k))
        return np.sort(_intensity_inverse(intensity, u * total), axis=1)
    times = np.empty((m, k))
    prev = np.zeros(m)
    for i in range(k):
        u = rng.uniform(size=m)
        target = prev + u * (total - prev)
        times[:, i] = _intensity_inverse(intensity, target)
        prev = target
    return times


# ---------------------------------------------------------------------------
# core engine


def _check_mc_model(model: VitalityModel):
    if not isinstance(model.diffusion, BrownianConst):
        raise ValidationError(
            "monte carlo: model has no diffusion; deterministic models are "
            "served in closed form by survival_static"
        )
    if isinstance(model.trend, FrailtyScaled):
        raise ValidationError("monte carlo: frailty-scaled trends are not path-simulable here")


def _bridge_factors(b_plus, b_minus, y, dt):
    """Per-interval survival factors, clamped into [0, 1]."""
    a_left = b_plus[..., :-1] - y[..., :-1]
    b_right = b_minus[..., 1:] - y[..., 1:]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        r = -np.expm1(-2.0 * a_left * b_right / dt)
    r = np.where(dt <= 0, 1.0, r)
    ind = y[..., 1:] < b_plus[..., 1:]
    return ind * np.clip(r, 0.0, 1.0)


def _q_at_queries(factors, qpos):
    """Partial products of the factor matrix at entry positions qpos."""
    cum = np.cumprod(factors, axis=-1)
    out = np.empty(factors.shape[:-1] + (qpos.size,))
    for j, p in enumerate(qpos):
        out[..., j] = 1.0 if p == 0 else cum[..., p - 1]
    return out


def _simulate_block(model, v_spec, base, base_qpos, horizon, m, rng, cfg):
    """Per-unit survival products at the query positions: (m, nq) matrix.

    v_spec: ("fixed", scalar) or ("sample", initial distribution).
    With antithetic on, each of the m units is an averaged pair.
    """
    sigma = model.diffusion.sigma
    nq = base_qpos.size
    if v_spec[0] == "sample":
        v_all = np.asarray(v_spec[1].quantile(rng.uniform(size=m)), dtype=float)
    else:
        v_all = np.full(m, float(v_spec[1]))

    if model.jump.is_null:
        counts = np.zeros(m, dtype=int)
    else:
        counts = rng.poisson(float(model.jump.intensity.cumulative(horizon)), size=m)
    fatal = isinstance(model.jump.size, Fatal)

    out = np.empty((m, nq))
    y_base = cumulative_hazard(model.trend, model.age_x, base)

    for k in np.unique(counts):
        rows = np.nonzero(counts == k)[0]
        mg = rows.size
        v = v_all[rows][:, None]
        if k == 0:
            b_plus = (v - y_base[None, :]) / sigma
            b_minus = b_plus
            times = np.broadcast_to(base, (mg, base.size))
            qpos_cols = None
        else:
            arrivals = _batch_jump_times(
                model.jump.intensity, horizon, (mg, int(k)), rng, cfg.jump_time_method
            )
            if fatal:
                sizes = np.full((mg, int(k)), _FATAL_SIZE)
            else:
                sizes = np.asarray(model.jump.size.sample(rng, (mg, int(k))), dtype=float)
            cat_t = np.concatenate([np.broadcast_to(base, (mg, base.size)), arrivals], axis=1)
            cat_s = np.concatenate([np.zeros((mg, base.size)), sizes], axis=1)
            flags = np.concatenate(
                [np.broadcast_to(_qflags(base.size, base_qpos), (mg, base.size)),
                 np.full((mg, int(k)), -1)], axis=1)
            order = np.argsort(cat_t, axis=1, kind="stable")
            times = np.take_along_axis(cat_t, order, axis=1)
            ssizes = np.take_along_axis(cat_s, order, axis=1)
            sflags = np.take_along_axis(flags, order, axis=1)
            cum_sizes = np.cumsum(ssizes, axis=1)
            y_t = cumulative_hazard(model.trend, model.age_x, times)
            b_plus = (v - y_t - cum_sizes) / sigma
            b_minus = b_plus + ssizes / sigma
            qpos_cols = np.empty((mg, nq), dtype=int)
            for j in range(nq):
                qpos_cols[:, j] = np.nonzero(sflags == j)[1]

        dt = np.diff(times, axis=1)
        incr = rng.normal(size=dt.shape) * np.sqrt(dt)
        q = _paths_q(b_plus, b_minus, incr, dt, base_qpos, qpos_cols)
        if cfg.antithetic:
            q2 = _paths_q(b_plus, b_minus, -incr, dt, base_qpos, qpos_cols)
            q = 0.5 * (q + q2)
        out[rows] = q
    return out


def _qflags(nb, base_qpos):
    f = np.full(nb, -1)
    f[base_qpos] = np.arange(base_qpos.size)
    return f


def _paths_q(b_plus, b_minus, incr, dt, base_qpos, qpos_cols):
    y = np.concatenate([np.zeros(incr.shape[:-1] + (1,)), np.cumsum(incr, axis=-1)], axis=-1)
    factors = _bridge_factors(b_plus, b_minus, y, dt)
    if qpos_cols is None:
        return _q_at_queries(factors, base_qpos)
    cum = np.cumprod(factors, axis=-1)
    padded = np.concatenate([np.ones(cum.shape[:-1] + (1,)), cum], axis=-1)
    return np.take_along_axis(padded, qpos_cols, axis=-1)


def _run_blocks(model, v_spec, base, base_qpos, horizon, cfg) -> list[McEstimate]:
    units = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths
    if units < 2:
        raise ValidationError("monte carlo: too few paths for a standard error")
    sizes = [min(cfg.block_size, units - s) for s in range(0, units, cfg.block_size)]

    def one(idx_size):
        idx, m = idx_size
        rng = cfg.stream.child(idx).generator()
        q = _simulate_block(model, v_spec, base, base_qpos, horizon, m, rng, cfg)
        return q.sum(axis=0), (q * q).sum(axis=0)

    workers = min(worker_count(), len(sizes))
    jobs = list(enumerate(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, jobs))
    else:
        parts = [one(j) for j in jobs]

    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / units
    var = np.maximum(total_sq / units - mean**2, 0.0) * units / max(units - 1, 1)
    se = np.sqrt(var / units)
    return [McEstimate(float(mu), float(s), units) for mu, s in zip(mean, se)]


def _build_grid(t_grid: np.ndarray, n_time_points: int) -> tuple[np.ndarray, np.ndarray]:
    horizon = float(t_grid[-1])
    base = np.unique(np.concatenate([np.linspace(0.0, horizon, n_time_points + 1), t_grid]))
    qpos = np.searchsorted(base, t_grid)
    return base, qpos


def mc_survival_curve(model: VitalityModel, v: float, t_grid, cfg: McConfig) -> list[McEstimate]:
    """Survival estimates at each time in the ascending grid, from one set of
    paths (so the estimates are monotone along the grid path by path)."""
    _check_mc_model(model)
    if not v > 0:
        raise ValidationError("mc_survival: v must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValidationError("mc_survival_curve: t_grid must be a non-empty 1-d array")
    if np.any(np.diff(t_grid) <= 0) or np.any(t_grid < 0) or not t_grid[-1] > 0:
        raise ValidationError("mc_survival_curve: t_grid must be strictly increasing, ending > 0")
    base, qpos = _build_grid(t_grid, cfg.n_time_points)
    return _run_blocks(model, ("fixed", v), base, qpos, float(t_grid[-1]), cfg)


def mc_survival(model: VitalityModel, v: float, T: float, cfg: McConfig) -> McEstimate:
    """Pr(tau > T | V(0) = v) by bridge-corrected path simulation."""
    if T < 0:
        raise ValidationError("mc_survival: T must be non-negative")
    if T == 0:
        return McEstimate(1.0, 0.0, cfg.n_paths)
    return mc_survival_curve(model, v, np.array([T]), cfg)[0]


def piecewise_survival_fatal(model: VitalityModel, v: float, k: int, cfg: McConfig) -> McEstimate:
    """Integer-horizon survival for diffusion models whose jumps (if any) are
    lethal: simulate the Brownian skeleton at whole years only, with the
    bridge factors over unit intervals and the analytic no-jump factor
    exp(-Lambda(k)) multiplied on."""
    _check_mc_model(model)
    if not v > 0:
        raise ValidationError("piecewise_survival_fatal: v must be positive")
    if k < 0 or int(k) != k:
        raise ValidationError("piecewise_survival_fatal: k must be a non-negative integer")
    if not (model.jump.is_null or isinstance(model.jump.size, Fatal)):
        raise ValidationError("piecewise_survival_fatal: jump sizes must be lethal (or absent)")
    if k == 0:
        return McEstimate(1.0, 0.0, cfg.n_paths)
    jump_factor = float(np.exp(-model.jump.intensity.cumulative(float(k))))
    stripped = dataclasses.replace(model, jump=dataclasses.replace(model.jump,
                                   intensity=ConstantIntensity(0.0)))
    t_grid = np.arange(1.0, k + 1.0)
    base = np.arange(0.0, k + 1.0)
    qpos = np.arange(1, k + 1)
    est = _run_blocks(stripped, ("fixed", v), base, qpos, float(k), cfg)[-1]
    return McEstimate(est.value * jump_factor, est.std_error * jump_factor, est.n_effective)


def survival_unconditional(model: VitalityModel, T: float, cfg: McConfig) -> McEstimate:
    """Pr(tau > T) with the initial vitality integrated out: Gauss-Laguerre
    mixing for exponential initials (one mc_survival call per node, each on
    its own substream), direct evaluation for a point mass, and per-path
    sampling of V(0) otherwise."""
    _check_mc_model(model)
    if T < 0:
        raise ValidationError("survival_unconditional: T must be non-negative")
    if T == 0:
        return McEstimate(1.0, 0.0, cfg.n_paths)
    initial = model.initial
    if isinstance(initial, Degenerate):
        return mc_survival(model, initial.value, T, cfg)
    if isinstance(initial, Exponential):
        rule = gauss_laguerre(64)
        value = 0.0
        var = 0.0
        for i, (node, w) in enumerate(zip(rule.nodes, rule.weights)):
            sub = dataclasses.replace(cfg, stream=cfg.stream.child(i + 1))
            est = mc_survival(model, node / initial.rate, T, sub)
            value += w * est.value
            var += (w * est.std_error) ** 2
        return McEstimate(value, math.sqrt(var), cfg.n_paths)
    base, qpos = _build_grid(np.array([T]), cfg.n_time_points)
    return _run_blocks(model, ("sample", initial), base, qpos, T, cfg)[0]


def sample_death_times(model: VitalityModel, v: float, horizon: float, cfg: McConfig) -> np.ndarray:
    """Death times up to `horizon` (inf where the path outlives it), sampled
    interval by interval with the bridge crossing probability; lethal jumps
    kill at their arrival instants through the same boundary algebra."""
    _check_mc_model(model)
    if not v > 0:
        raise ValidationError("sample_death_times: v must be positive")
    if not horizon > 0:
        raise ValidationError("sample_death_times: horizon must be positive")
    base, _ = _build_grid(np.array([horizon]), cfg.n_time_points)

    sigma = model.diffusion.sigma
    out = []
    units = cfg.n_paths
    sizes = [min(cfg.block_size, units - s) for s in range(0, units, cfg.block_size)]
    fatal = isinstance(model.jump.size, Fatal)
    for idx, m in enumerate(sizes):
        rng = cfg.stream.child(idx).generator()
        if model.jump.is_null:
            counts = np.zeros(m, dtype=int)
        else:
            counts = rng.poisson(float(model.jump.intensity.cumulative(horizon)), size=m)
        tau = np.full(m, np.inf)
        for k in np.unique(counts):
            rows = np.nonzero(counts == k)[0]
            mg = rows.size
            if k == 0:
                times = np.broadcast_to(base, (mg, base.size))
                ssizes = np.zeros((mg, base.size))
            else:
                arrivals = _batch_jump_times(model.jump.intensity, horizon, (mg, int(k)),
                                             rng, cfg.jump_time_method)
                if fatal:
                    sizes_k = np.full((mg, int(k)), _FATAL_SIZE)
                else:
                    sizes_k = np.asarray(model.jump.size.sample(rng, (mg, int(k))), dtype=float)
                cat_t = np.concatenate([np.broadcast_to(base, (mg, base.size)), arrivals], axis=1)
                cat_s = np.concatenate([np.zeros((mg, base.size)), sizes_k], axis=1)
                order = np.argsort(cat_t, axis=1, kind="stable")
                times = np.take_along_axis(cat_t, order, axis=1)
                ssizes = np.take_along_axis(cat_s, order, axis=1)
            y_t = cumulative_hazard(model.trend, model.age_x, times)
            cum_sizes = np.cumsum(ssizes, axis=1)
            b_plus = (v - y_t - cum_sizes) / sigma
            b_minus = b_plus + ssizes / sigma
            dt = np.diff(times, axis=1)
            incr = rng.normal(size=dt.shape) * np.sqrt(dt)
            y = np.concatenate([np.zeros((mg, 1)), np.cumsum(incr, axis=1)], axis=1)
            a_left = b_plus[:, :-1] - y[:, :-1]
            b_right = b_minus[:, 1:] - y[:, 1:]
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                p_cross = np.exp(-2.0 * a_left * b_right / dt)
            p_cross = np.where(dt <= 0, 0.0, np.clip(p_cross, 0.0, 1.0))
            crossed = (y[:, 1:] >= b_plus[:, 1:]) | (b_right <= 0) \
                | (rng.uniform(size=dt.shape) < p_cross)
            any_cross = crossed.any(axis=1)
            first = np.argmax(crossed, axis=1)
            # a kill at a jump arrival happens at that instant; a bridge
            # crossing inside a grid interval is booked at the midpoint
            hit_times = np.where(ssizes[:, 1:] > 0, times[:, 1:],
                                 0.5 * (times[:, 1:] + times[:, :-1]))
            hit = np.take_along_axis(hit_times, first[:, None], axis=1)[:, 0]
            tau[rows] = np.where(any_cross, hit, np.inf)
        out.append(tau)
    return np.concatenate(out)
