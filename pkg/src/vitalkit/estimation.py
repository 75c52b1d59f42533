"""Cohort ingestion, multinomial likelihood, and maximum-likelihood fitting.

Death counts D_{x+t} from an initial exposure E_x form a multinomial over the
one-year cells p_t = S(t) - S(t+1), giving

    l = sum_t D_{x+t} ln p_t  [+ survivors * ln S(T+1)]  + constants,

where the survivor cell makes the probabilities a complete partition for an
open cohort; a toggle drops it to recover the bare summation form.  The
combinatorial constants are parameter-free and kept out of the optimizer's
objective, then added back to the reported log-likelihood.

Fitting is derivative-free simplex search in (ln b, ln(c-1), ln sigma), so
every iterate is automatically in-domain.  When sigma is free the survival
curve comes from the whole-year bridge product under a single increment
matrix drawn once per fit (common random numbers): the objective is then a
deterministic, smooth function of the parameters and repeated fits are
bit-identical for a given stream.  External accident intensities are not
estimated; they are read off a banded rate table and frozen.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .distributions import Degenerate, Exponential, Fatal
from .errors import DataFormatError, ValidationError
from .model import (
    BrownianConst,
    GompertzTrend,
    JumpSpec,
    NoDiffusion,
    PiecewiseIntensity,
    VitalityModel,
    no_jumps,
    survival_static,
)
from .numerics import RngStream, gauss_laguerre

__all__ = [
    "CohortData",
    "AccidentRateTable",
    "FitResult",
    "FitOptions",
    "load_cohort_csv",
    "load_accident_csv",
    "log_likelihood",
    "closed_form_survival",
    "bridge_survival",
    "calibrate_jump_intensity",
    "fit_mle",
    "fit_gompertz_law",
]


@dataclass(frozen=True)
class CohortData:
    """One cohort: deaths[t] observed during year t of follow-up."""

    age_x: int
    exposure: int
    deaths: tuple

    def __post_init__(self):
        if self.exposure <= 0:
            raise ValidationError("CohortData: exposure must be positive")
        if len(self.deaths) == 0:
            raise ValidationError("CohortData: need at least one death count")
        if any(d < 0 or int(d) != d for d in self.deaths):
            raise ValidationError("CohortData: death counts must be non-negative integers")
        if sum(self.deaths) > self.exposure:
            raise ValidationError("CohortData: total deaths exceed the exposure")

    @property
    def n_years(self) -> int:
        return len(self.deaths)

    @property
    def survivors(self) -> int:
        return self.exposure - int(sum(self.deaths))


@dataclass(frozen=True)
class AccidentRateTable:
    """Annual accident hazard by closed age band [lo, hi]."""

    rows: tuple

    def __post_init__(self):
        prev_hi = None
        for lo, hi, rate in self.rows:
            if hi < lo or rate < 0:
                raise ValidationError(f"AccidentRateTable: bad band ({lo}, {hi}, {rate})")
            if prev_hi is not None and lo <= prev_hi:
                raise ValidationError("AccidentRateTable: bands overlap or are unordered")
            prev_hi = hi

    def rate_at(self, age: float) -> float:
        for lo, hi, rate in self.rows:
            if lo <= age <= hi:
                return float(rate)
        raise DataFormatError(f"AccidentRateTable: age {age} not covered by any band")


@dataclass(frozen=True)
class FitResult:
    params: dict
    loglik: float
    n_iterations: int
    converged: bool
    std_errors: dict | None = None

    def to_json(self) -> str:
        return json.dumps({
            "params": self.params,
            "loglik": self.loglik,
            "converged": self.converged,
            "n_iterations": self.n_iterations,
        }, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# file formats


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            yield number, raw.strip()


def load_cohort_csv(path) -> CohortData:
    """Cohort file: a `# exposure=<int> start_age=<int>` line, a `age,deaths`
    header, then one row per contiguous age."""
    exposure = start_age = None
    rows = []
    saw_header = False
    for number, line in _data_lines(path):
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                key, _, value = token.partition("=")
                if key == "exposure":
                    exposure = int(value)
                elif key == "start_age":
                    start_age = int(value)
            continue
        if not saw_header:
            if line.replace(" ", "") != "age,deaths":
                raise DataFormatError(f"{path}:{number}: expected header 'age,deaths'")
            saw_header = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DataFormatError(f"{path}:{number}: expected two comma-separated fields")
        try:
            rows.append((int(parts[0]), int(parts[1]), number))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{number}: non-integer field: {exc}") from exc
    if exposure is None or start_age is None:
        raise DataFormatError(f"{path}: missing '# exposure=<int> start_age=<int>' line")
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    for offset, (age, _, number) in enumerate(rows):
        if age != start_age + offset:
            raise DataFormatError(
                f"{path}:{number}: age {age} breaks contiguity from start_age {start_age}"
            )
    try:
        return CohortData(start_age, exposure, tuple(d for _, d, _ in rows))
    except ValidationError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def load_accident_csv(path) -> AccidentRateTable:
    """Accident-rate file: header `age_lo,age_hi,rate`, one band per row."""
    rows = []
    saw_header = False
    for number, line in _data_lines(path):
        if not line or line.startswith("#"):
            continue
        if not saw_header:
            if line.replace(" ", "") != "age_lo,age_hi,rate":
                raise DataFormatError(f"{path}:{number}: expected header 'age_lo,age_hi,rate'")
            saw_header = True
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise DataFormatError(f"{path}:{number}: expected three comma-separated fields")
        try:
            rows.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{number}: bad field: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    try:
        return AccidentRateTable(tuple(rows))
    except ValidationError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def calibrate_jump_intensity(table: AccidentRateTable, age_lo: int,
                             n_years: int) -> PiecewiseIntensity:
    """Per-year lethal-jump intensity over ages age_lo .. age_lo+n_years-1,
    each year taking the rate of the band containing it (band edges are
    closed; the lower band wins a tie)."""
    rates = tuple(table.rate_at(age_lo + t) for t in range(n_years))
    return PiecewiseIntensity(rates)


# ---------------------------------------------------------------------------
# likelihood


def _cell_probs(survival, data: CohortData):
    survival = np.asarray(survival, dtype=float)
    if survival.size != data.n_years + 1:
        raise ValidationError(
            f"log_likelihood: need survival at t = 0..{data.n_years}, got {survival.size} values"
        )
    if np.any(np.diff(survival) > 1e-12):
        raise ValidationError("log_likelihood: survival values must be non-increasing")
    return np.maximum(np.diff(-survival), 1e-300)


def multinomial_constant(data: CohortData, include_survivor_cell: bool = True) -> float:
    """Parameter-free combinatorial terms of the multinomial likelihood."""
    const = gammaln(data.exposure + 1) - sum(gammaln(d + 1) for d in data.deaths)
    if include_survivor_cell:
        const -= gammaln(data.survivors + 1)
    return float(const)


def log_likelihood(model: VitalityModel, data: CohortData, survival_fn,
                   include_survivor_cell: bool = True) -> float:
    """Multinomial log-likelihood of the observed death counts.

    survival_fn(model, times) must return Pr(tau > t) at the integer times
    0..T_max+1.  The survivor cell (right-censored mass beyond the window) is
    included by default; switch it off to match the bare summation form.
    """
    times = np.arange(data.n_years + 1, dtype=float)
    survival = survival_fn(model, times)
    kernel = _ll_kernel(np.asarray(survival, dtype=float), data, include_survivor_cell)
    return kernel + multinomial_constant(data, include_survivor_cell)


def _ll_kernel(survival, data: CohortData, include_survivor_cell: bool) -> float:
    cells = _cell_probs(survival, data)
    total = float(np.dot(np.asarray(data.deaths, dtype=float), np.log(cells)))
    if include_survivor_cell:
        total += data.survivors * math.log(max(float(survival[-1]), 1e-300))
    return total


def closed_form_survival(model: VitalityModel, times) -> np.ndarray:
    return np.asarray(survival_static(model, times), dtype=float)


def bridge_survival(n_paths: int, stream: RngStream):
    """Strategy factory: whole-year bridge-product survival under common
    random numbers.  The increment matrix is drawn once, so two calls built
    from the same stream give identical curves for identical models."""

    cache = {}

    def strategy(model: VitalityModel, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        k_max = int(times[-1])
        if not np.array_equal(times, np.arange(k_max + 1.0)):
            raise ValidationError("bridge_survival: times must be 0..K at unit steps")
        if "z" not in cache or cache["z"].shape[1] < k_max:
            cache["z"] = stream.generator().normal(size=(n_paths, k_max))
        z = cache["z"][:, :k_max]
        return _crn_curve(model, z, k_max)

    return strategy


def _crn_curve(model: VitalityModel, z: np.ndarray, k_max: int) -> np.ndarray:
    if not isinstance(model.diffusion, BrownianConst):
        raise ValidationError("bridge_survival: model needs a Brownian component")
    if not (model.jump.is_null or isinstance(model.jump.size, Fatal)):
        raise ValidationError("bridge_survival: only lethal (or absent) jumps supported")
    sigma = model.diffusion.sigma
    steps = np.arange(k_max + 1.0)
    y = np.asarray(
        model.trend.b * model.trend.c**model.age_x
        * np.expm1(steps * math.log(model.trend.c)) / math.log(model.trend.c)
        if isinstance(model.trend, GompertzTrend) else _generic_cumhaz(model, steps),
        dtype=float)

    initial = model.initial
    if isinstance(initial, Degenerate):
        nodes, weights = np.array([initial.value]), np.array([1.0])
    elif isinstance(initial, Exponential):
        rule = gauss_laguerre(64)
        nodes, weights = rule.nodes / initial.rate, rule.weights
    else:
        raise ValidationError("bridge_survival: initial must be Degenerate or Exponential")

    b_path = np.cumsum(z, axis=1)
    b_prev = np.concatenate([np.zeros((z.shape[0], 1)), b_path[:, :-1]], axis=1)
    curve = np.zeros(k_max + 1)
    for v, w in zip(nodes, weights):
        h = (v - y) / sigma
        if h[-1] > 12.0 * math.sqrt(k_max):
            # boundary out of Brownian reach over the whole window: survival 1
            curve += w
            continue
        with np.errstate(over="ignore"):
            r = -np.expm1(-2.0 * (h[:-1] - b_prev) * (h[1:] - b_path))
        factors = (b_path < h[1:]) * np.clip(r, 0.0, 1.0)
        curve += w * np.concatenate([[1.0], np.cumprod(factors, axis=1).mean(axis=0)])
    if not model.jump.is_null:
        curve *= np.exp(-np.array([model.jump.intensity.cumulative(t) for t in steps]))
    return curve


def _generic_cumhaz(model, steps):
    from .model import cumulative_hazard
    return cumulative_hazard(model.trend, model.age_x, steps)


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitOptions:
    free: tuple = ("b", "c", "sigma")
    n_starts: int = 5
    n_paths: int = 4096
    stream: RngStream = field(default_factory=lambda: RngStream(0))
    max_iterations: int = 2000
    include_survivor_cell: bool = True


def _pack(params: dict, free) -> np.ndarray:
    out = []
    for name in free:
        value = params[name]
        if name == "b":
            out.append(math.log(value))
        elif name == "c":
            out.append(math.log(value - 1.0))
        else:
            out.append(math.log(value))
    return np.array(out)


def _unpack(theta, free, fixed: dict) -> dict:
    params = dict(fixed)
    for name, value in zip(free, theta):
        params[name] = 1.0 + math.exp(value) if name == "c" else math.exp(value)
    return params


def _template_params(template: VitalityModel) -> dict:
    if not isinstance(template.trend, GompertzTrend):
        raise ValidationError("fit_mle: template trend must be Gompertz")
    params = {"b": template.trend.b, "c": template.trend.c}
    if isinstance(template.diffusion, BrownianConst):
        params["sigma"] = template.diffusion.sigma
    return params


def _rebuild(template: VitalityModel, params: dict) -> VitalityModel:
    diffusion = (BrownianConst(params["sigma"]) if "sigma" in params
                 else template.diffusion)
    return dataclasses.replace(
        template, trend=GompertzTrend(params["b"], params["c"]), diffusion=diffusion)


def fit_mle(template: VitalityModel, data: CohortData,
            fixed_intensity: PiecewiseIntensity | None = None,
            options: FitOptions | None = None) -> FitResult:
    """Simplex maximum likelihood over the free subset of (b, c, sigma).

    The accident intensity, when given, enters as a frozen lethal-jump
    component.  Multi-start: the template point plus perturbed restarts, best
    final value wins."""
    opts = options or FitOptions()
    base = _template_params(template)
    free = tuple(name for name in opts.free if name in base)
    if not free:
        raise ValidationError("fit_mle: no free parameters to fit")
    fixed = {k: v for k, v in base.items() if k not in free}

    working = template
    if fixed_intensity is not None:
        working = dataclasses.replace(template, jump=JumpSpec(fixed_intensity, Fatal()))

    use_mc = "sigma" in base
    strategy = (bridge_survival(opts.n_paths, opts.stream) if use_mc
                else closed_form_survival)
    times = np.arange(data.n_years + 1, dtype=float)

    def objective(theta):
        params = _unpack(theta, free, fixed)
        if params["c"] > 3.0 or params.get("sigma", 0.0) > 10.0:
            return 1e12
        model = _rebuild(working, params)
        try:
            survival = strategy(model, times)
            return -_ll_kernel(np.asarray(survival, dtype=float), data,
                               opts.include_survivor_cell)
        except (ValidationError, FloatingPointError, OverflowError):
            return 1e12

    theta0 = _pack(base, free)
    jitter_rng = opts.stream.child(7).generator()
    best = None
    total_iter = 0
    for start in range(opts.n_starts):
        point = theta0 if start == 0 else theta0 + jitter_rng.normal(0.0, 0.3, theta0.size)
        res = minimize(objective, point, method="Nelder-Mead",
                       options={"xatol": 1e-6, "fatol": 1e-9,
                                "maxiter": opts.max_iterations, "maxfev": 4 * opts.max_iterations})
        total_iter += res.nit
        if best is None or res.fun < best.fun:
            best = res

    params = _unpack(best.x, free, fixed)
    loglik = -best.fun + multinomial_constant(data, opts.include_survivor_cell)
    reported = {name: params[name] for name in ("b", "c", "sigma") if name in params}
    return FitResult(params=reported, loglik=float(loglik),
                     n_iterations=int(total_iter), converged=bool(best.success))


def fit_gompertz_law(data: CohortData, options: FitOptions | None = None) -> FitResult:
    """Classic two-parameter Gompertz-law fit: survival exp(-integrated
    hazard), equivalently the pure-trend model with a unit-rate exponential
    initial level; closed form, no simulation."""
    opts = options or FitOptions(free=("b", "c"))
    template = VitalityModel(age_x=float(data.age_x), initial=Exponential(1.0),
                             trend=GompertzTrend(1e-4, 1.08), diffusion=NoDiffusion(),
                             jump=no_jumps())
    fit_opts = dataclasses.replace(opts, free=tuple(n for n in opts.free if n != "sigma"))
    return fit_mle(template, data, None, fit_opts)
