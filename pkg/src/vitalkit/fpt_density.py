"""First-passage density approximations for diffusion-only models.

With jumps switched off, death is the first passage of sigma*B(t) to the
moving level H(t, v) = v - Y(t).  The tangent approximation treats the
boundary as its tangent line at the evaluation time,

    |H - t H_t| / (sigma sqrt(2 pi t^3)) * exp(-H^2 / (2 sigma^2 t)),

which is exact for linear boundaries (inverse Gaussian density).  Durbin's
series refines it: with a(s) = H(s, v)/sigma,

    density ~ sum_{j<=k} (-1)^{j-1} q_j(t),
    q_1(t) = (a(t)/t - a'(t)) phi(a(t); 0, t),
    q_j(t) = int_0^t q_{j-1}(s) ((a(t)-a(s))/(t-s) - a'(t))
             phi(a(t)-a(s); 0, t-s) ds,

the chain of conditional Gaussian factors being the joint density of the
Brownian skeleton on the boundary.  Every chord-minus-slope factor vanishes
for a linear boundary, so all higher terms are zero there; for concave H the
terms alternate and shrink quickly (k = 3 suffices in practice).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import ConvergenceError, ValidationError
from .model import GompertzTrend, VitalityModel, cumulative_hazard, hazard_rate

__all__ = [
    "BoundaryFn",
    "boundary_from_model",
    "tangent_density",
    "durbin_density",
    "density_to_survival",
]


@dataclass(frozen=True)
class BoundaryFn:
    """Moving level H(t, v) = v - Y(t) and its time derivative -mu_x(t)."""

    H: Callable
    H_t: Callable
    concave: bool = False


def boundary_from_model(model: VitalityModel) -> BoundaryFn:
    trend, x = model.trend, model.age_x

    def level(t, v):
        return v - cumulative_hazard(trend, x, t)

    def slope(t, v):
        return -hazard_rate(trend, x, t)

    return BoundaryFn(level, slope, concave=isinstance(trend, GompertzTrend))


def tangent_density(boundary: BoundaryFn, sigma: float, v: float, t):
    """Tangent-line first-passage density at time(s) t."""
    if sigma <= 0:
        raise ValidationError("tangent_density: sigma must be positive")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValidationError("tangent_density: t must be positive")
    h = np.asarray(boundary.H(t_arr, v), dtype=float)
    h_t = np.asarray(boundary.H_t(t_arr, v), dtype=float)
    with np.errstate(under="ignore"):
        dens = (np.abs(h - t_arr * h_t) / (sigma * np.sqrt(2.0 * np.pi * t_arr**3))
                * np.exp(-h * h / (2.0 * sigma**2 * t_arr)))
    return dens if dens.shape else float(dens)


def _gauss(x: float, var: float) -> float:
    if var <= 0:
        return 0.0
    z = x * x / (2.0 * var)
    if z > 700.0:
        return 0.0
    return math.exp(-z) / math.sqrt(2.0 * math.pi * var)


def _quad(f, lo, hi, tol, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, _ = quad(f, lo, hi, epsabs=tol, epsrel=1e-10, limit=200, points=points)
        except IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature did not converge: {exc}") from exc
    return val


def _endpoint_quad(f, end, tol, decay_rate):
    """Integrate f over (0, end) when its mass may concentrate against the
    right endpoint.  The chain Gaussian linking s to `end` falls off like
    exp(-decay_rate * (end - s)), so beyond width ~80/rate the integrand is
    dead; splitting there lets the adaptive rule resolve the sliver."""
    if decay_rate > 0 and 80.0 / decay_rate < end:
        cut = end - 80.0 / decay_rate
        return _quad(f, cut, end, tol) + _quad(f, 0.0, cut, tol)
    return _quad(f, 0.0, end, tol)


def durbin_density(boundary: BoundaryFn, sigma: float, v: float, t, k: int = 3):
    """k-term alternating series for the first-passage density (k <= 3)."""
    if k not in (1, 2, 3):
        raise ValidationError("durbin_density: k must be 1, 2, or 3")
    if sigma <= 0:
        raise ValidationError("durbin_density: sigma must be positive")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValidationError("durbin_density: t must be positive")
    if t_arr.shape:
        return np.array([durbin_density(boundary, sigma, v, float(ti), k)
                         for ti in t_arr.ravel()]).reshape(t_arr.shape)
    t = float(t_arr)

    def a(s):
        return float(boundary.H(s, v)) / sigma

    def a_t(s):
        return float(boundary.H_t(s, v)) / sigma

    def q1(s):
        return (a(s) / s - a_t(s)) * _gauss(a(s), s)

    def chain_out(s, end):
        # chord-minus-slope factor and bridge Gaussian linking s to end
        return (((a(end) - a(s)) / (end - s) - a_t(end))
                * _gauss(a(end) - a(s), end - s))

    def rate(end):
        return 0.5 * a_t(end) ** 2

    total = q1(t)
    if k >= 2:
        q2_at_t = _endpoint_quad(lambda s: q1(s) * chain_out(s, t), t, 1e-8, rate(t))
        total -= q2_at_t
    if k == 3:
        def q2(u):
            return _endpoint_quad(lambda s: q1(s) * chain_out(s, u), u, 1e-8, rate(u))

        q3_at_t = _endpoint_quad(lambda u: q2(u) * chain_out(u, t), t, 1e-6, rate(t))
        total += q3_at_t
    return total


def density_to_survival(density: Callable, T: float, breakpoints=None) -> float:
    """1 minus the integrated death density, clamped into [0, 1].

    `breakpoints` hints the quadrature at times where the density is sharply
    peaked (for near-deterministic models, the zero-noise crossing time)."""
    if T < 0:
        raise ValidationError("density_to_survival: T must be non-negative")
    if T == 0:
        return 1.0
    pts = None
    if breakpoints is not None:
        pts = [float(p) for p in breakpoints if 0.0 < p < T]
        pts = pts or None
    mass = _quad(density, 0.0, T, 1e-10, points=pts)
    if mass > 1.0 + 1e-3:
        raise ConvergenceError(
            f"density integrates to {mass:.6f} > 1 on (0, {T}); approximation broke down"
        )
    if mass > 1.0:
        warnings.warn("integrated density slightly exceeds 1; clamping survival to 0",
                      RuntimeWarning, stacklevel=2)
    return max(0.0, 1.0 - mass)
