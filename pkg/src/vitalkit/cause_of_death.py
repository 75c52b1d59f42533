"""Cause-of-death split for Gompertz trend plus lethal-or-not exponential jumps.

With no diffusion, death at time t is either the jump clock's doing (the
accumulated exponential shocks overshoot the remaining headroom
b*(t) = v - Y(t)) or the trend's (the headroom itself runs out, at the latest
at t* where b*(t*) = 0).  Both sub-distribution Laplace transforms are
one-dimensional integrals against modified Bessel kernels:

    accident: int_0^t* lam e^{-(q+lam)t - a b*} I0(2 sqrt(a lam t b*)) dt,
    natural:  int_0^t* e^{-(q+lam)t - a b*} b c^(x+t)
                  sqrt(a lam t / b*) I1(2 sqrt(a lam t b*)) dt
              + e^{-(q+lam) t*},

the final term being the atom of mass e^{-lam t*} at the no-jump death time
(discounted by e^{-q t*}).  The integrands are evaluated in exponentially
scaled form, exp(-qt - (sqrt(a b*) - sqrt(lam t))^2) * i_ke(2 sqrt(a lam t b*)),
which survives arbitrarily large size rates; the natural kernel's apparent
singularity at b* -> 0 is removable (the bracket tends to a·lam·t) and is
handled by a series switch near the endpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.special import i0e, i1e

from .errors import ConvergenceError, ValidationError
from .fpt_density import _quad

__all__ = [
    "CodParams",
    "Cause",
    "CodDensity",
    "cod_laplace_accident",
    "cod_laplace_natural",
    "cod_density",
    "prob_cause_split",
]


class Cause(Enum):
    ACCIDENT = "accident"
    NATURAL = "natural"


@dataclass(frozen=True)
class CodParams:
    age_x: float
    b: float
    c: float
    lam: float
    alpha: float
    v: float

    def __post_init__(self):
        if self.b <= 0 or self.c <= 1:
            raise ValidationError("CodParams: need b > 0 and c > 1")
        if self.lam <= 0 or self.alpha <= 0 or self.v <= 0:
            raise ValidationError("CodParams: lam, alpha, v must be positive")

    @property
    def t_star(self) -> float:
        """Death time with the jump component switched off."""
        ln_c = math.log(self.c)
        return math.log1p(self.v * ln_c / (self.b * self.c**self.age_x)) / ln_c

    def headroom(self, t):
        """b*(t) = v - Y(t), the room left before trend-only death."""
        ln_c = math.log(self.c)
        y = self.b * self.c**self.age_x * np.expm1(np.asarray(t) * ln_c) / ln_c
        return self.v - y


class CodDensity(NamedTuple):
    value: float
    atom_time: float | None
    atom_mass: float | None


def _stable_exponent(p: CodParams, t, q: float):
    """-(q+lam)t - alpha*b* + 2 sqrt(alpha lam t b*), grouped as a square."""
    bs = np.maximum(p.headroom(t), 0.0)
    root = np.sqrt(p.alpha * bs) - np.sqrt(p.lam * np.asarray(t, dtype=float))
    return bs, -q * np.asarray(t, dtype=float) - root * root


def _accident_integrand(p: CodParams, t, q: float):
    bs, expo = _stable_exponent(p, t, q)
    z = 2.0 * np.sqrt(p.alpha * p.lam * np.asarray(t) * bs)
    return p.lam * np.exp(expo) * i0e(z)


def _natural_integrand(p: CodParams, t, q: float):
    t = np.asarray(t, dtype=float)
    bs, expo = _stable_exponent(p, t, q)
    w = p.alpha * p.lam * t * bs
    z = 2.0 * np.sqrt(w)
    # sqrt(alpha lam t / b*) I1(z) e^{-z} -> alpha lam t as b* -> 0
    with np.errstate(divide="ignore", invalid="ignore"):
        bracket = np.where(w < 1e-24, p.alpha * p.lam * t,
                           np.sqrt(np.divide(p.alpha * p.lam * t,
                                             np.where(bs > 0, bs, 1.0))) * i1e(z))
    hazard = p.b * p.c ** (p.age_x + t)
    return hazard * bracket * np.exp(expo)


def _cause_quad(p: CodParams, integrand) -> float:
    """Integrate over (0, t*), splitting off the endpoint sliver where the
    exponent -(sqrt(alpha b*) - sqrt(lam t))^2 wakes up.  For large alpha all
    the mass sits where b* < (sqrt(lam t*) + 8)^2 / alpha, a window far too
    narrow for a global adaptive rule to notice."""
    ts = p.t_star
    b_live = (math.sqrt(p.lam * ts) + 8.0) ** 2 / p.alpha
    if b_live < p.v:
        ln_c = math.log(p.c)
        t_cut = math.log1p((p.v - b_live) * ln_c / (p.b * p.c**p.age_x)) / ln_c
        if t_cut < ts:
            return _quad(integrand, 0.0, t_cut, 1e-9) + _quad(integrand, t_cut, ts, 1e-9)
    return _quad(integrand, 0.0, ts, 1e-9)


def cod_laplace_accident(p: CodParams, q: float) -> float:
    """E_v[e^{-q tau_J} 1(tau_J < tau_Y)]: death strikes at a jump."""
    if q < 0:
        raise ValidationError("cod_laplace_accident: q must be non-negative")
    return _cause_quad(p, lambda t: float(_accident_integrand(p, t, q)))


def cod_laplace_natural(p: CodParams, q: float) -> float:
    """E_v[e^{-q tau_Y} 1(tau_Y < tau_J)]: the trend exhausts the vitality."""
    if q < 0:
        raise ValidationError("cod_laplace_natural: q must be non-negative")
    integral = _cause_quad(p, lambda t: float(_natural_integrand(p, t, q)))
    return integral + math.exp(-(q + p.lam) * p.t_star)


def cod_density(p: CodParams, cause: Cause, t) -> CodDensity:
    """Sub-density of the death time by cause; the natural cause also carries
    a point mass e^{-lam t*} at the no-jump death time t*."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValidationError("cod_density: t must be positive")
    ts = p.t_star
    inside = t_arr < ts
    if cause is Cause.ACCIDENT:
        val = np.where(inside, _accident_integrand(p, np.minimum(t_arr, ts), 0.0), 0.0)
        return CodDensity(val if val.shape else float(val), None, None)
    if cause is Cause.NATURAL:
        val = np.where(inside, _natural_integrand(p, np.minimum(t_arr, ts), 0.0), 0.0)
        return CodDensity(val if val.shape else float(val), ts, math.exp(-p.lam * ts))
    raise ValidationError(f"cod_density: unknown cause {cause!r}")


def prob_cause_split(p: CodParams) -> tuple[float, float]:
    """(Pr death by accident, Pr death by natural decay); must sum to one."""
    acc = cod_laplace_accident(p, 0.0)
    nat = cod_laplace_natural(p, 0.0)
    if abs(acc + nat - 1.0) > 1e-6:
        raise ConvergenceError(
            f"cause probabilities sum to {acc + nat:.9f}, off by more than 1e-6"
        )
    return acc, nat
