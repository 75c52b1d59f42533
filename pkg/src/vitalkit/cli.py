"""Command-line front end.

Subcommands map one-to-one onto library surfaces: `survive` evaluates
survival curves (closed form, Laplace inversion, or Monte Carlo), `fit`
estimates parameters from cohort death counts, `price` computes annuity and
insurance values and life expectancies, `cod` splits mortality by cause,
`lifecycle` tabulates the consumption policy and simulates asset paths, and
`disability` evaluates threshold-crossing probabilities.

Models and command options live in an INI config; components are picked by
`kind =` tags (for example `kind = gompertz` under `[model.trend]`).
Randomized commands require an explicit `--seed`; identical config and seed
produce byte-identical output.  Tables are written as CSV (UTF-8, comma,
LF, header row, 17 significant digits) or JSON, to --out or stdout.  Exit
codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import os
import sys

import numpy as np

from .actuarial import (
    DisabilityQuery,
    PricingBasis,
    annuity_price,
    healthy_stay_prob,
    insurance_price,
    life_expectancy,
    recovery_prob,
)
from .cause_of_death import Cause, CodParams, cod_density, prob_cause_split
from .distributions import (
    Degenerate,
    Exponential,
    ExponentialJump,
    Fatal,
    GammaMix,
    GompertzDist,
    MixtureExponential,
    ParetoII,
)
from .errors import ConvergenceError, DataFormatError, NoClosedFormError, ValidationError
from .estimation import (
    FitOptions,
    fit_gompertz_law,
    fit_mle,
    load_cohort_csv,
)
from .lifecycle import (
    MarketParams,
    VitalitySDE,
    consumption_factor,
    simulate_lifecycle,
    value_function_g,
)
from .model import (
    BrownianConst,
    ConstantIntensity,
    ConstantRate,
    FrailtyScaled,
    GompertzTrend,
    JumpSpec,
    NoDiffusion,
    VitalityModel,
    no_jumps,
    survival_static,
    survival_by_laplace,
)
from .montecarlo import McConfig, mc_survival_curve
from .numerics import RngStream, gauss_laguerre

__all__ = ["main"]

_EXIT_OK = 0
_EXIT_VALIDATION = 2
_EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# config access with field-path errors

def _load_config(path: str) -> configparser.ConfigParser:
    if not os.path.isfile(path):
        raise ValidationError(f"config: file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ValidationError(f"config: {exc}") from exc
    return cp


def _field(section: str, key: str) -> str:
    return f"{section}.{key}".replace("model.model", "model")


def _raw(cp, section, key, default=None, required=False):
    if cp.has_option(section, key):
        return cp.get(section, key).strip()
    if required:
        raise ValidationError(f"{_field(section, key)}: required key is missing")
    return default


def _get_float(cp, section, key, default=None, required=False,
               positive=False, nonneg=False):
    raw = _raw(cp, section, key, required=required)
    if raw is None:
        return default
    try:
        val = float(raw)
    except ValueError:
        raise ValidationError(f"{_field(section, key)}: not a number: {raw!r}") from None
    if not math.isfinite(val):
        raise ValidationError(f"{_field(section, key)}: must be finite")
    if positive and not val > 0:
        raise ValidationError(f"{_field(section, key)}: must be positive")
    if nonneg and val < 0:
        raise ValidationError(f"{_field(section, key)}: must be non-negative")
    return val


def _get_int(cp, section, key, default=None, required=False, minimum=None):
    raw = _raw(cp, section, key, required=required)
    if raw is None:
        return default
    try:
        val = int(raw)
    except ValueError:
        raise ValidationError(f"{_field(section, key)}: not an integer: {raw!r}") from None
    if minimum is not None and val < minimum:
        raise ValidationError(f"{_field(section, key)}: must be at least {minimum}")
    return val


def _get_bool(cp, section, key, default):
    raw = _raw(cp, section, key)
    if raw is None:
        return default
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"{_field(section, key)}: not a boolean: {raw!r}")


def _get_choice(cp, section, key, choices, default=None, required=False):
    raw = _raw(cp, section, key, required=required)
    if raw is None:
        return default
    low = raw.lower()
    if low not in choices:
        raise ValidationError(
            f"{_field(section, key)}: unknown value {raw!r} (expected {'|'.join(choices)})"
        )
    return low


def _get_floats(cp, section, key, required=False):
    raw = _raw(cp, section, key, required=required)
    if raw is None:
        return None
    out = []
    for part in raw.split(","):
        part = part.strip()
        try:
            out.append(float(part))
        except ValueError:
            raise ValidationError(f"{_field(section, key)}: not a number: {part!r}") from None
    return tuple(out)


def _wrap(section: str):
    """Re-raise component construction errors with the config section path."""
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc_type is ValidationError:
                raise ValidationError(f"{section}: {exc}") from None
            return False

    return _Ctx()


# ---------------------------------------------------------------------------
# model assembly

def _build_initial(cp):
    sec = "model.initial"
    kind = _get_choice(cp, sec, "kind",
                       ("exponential", "degenerate", "pareto2", "gompertz"),
                       default="exponential")
    with _wrap(sec):
        if kind == "exponential":
            return Exponential(rate=_get_float(cp, sec, "rate", default=1.0, positive=True))
        if kind == "degenerate":
            return Degenerate(value=_get_float(cp, sec, "value", required=True, positive=True))
        if kind == "pareto2":
            return ParetoII(shape=_get_float(cp, sec, "shape", required=True, positive=True),
                            scale=_get_float(cp, sec, "scale", required=True, positive=True))
        return GompertzDist(shape=_get_float(cp, sec, "shape", required=True, positive=True))


def _build_trend(cp):
    sec = "model.trend"
    kind = _get_choice(cp, sec, "kind",
                       ("gompertz", "constant", "gamma-gompertz"),
                       required=True)
    with _wrap(sec):
        if kind == "constant":
            return ConstantRate(rate=_get_float(cp, sec, "rate", required=True, positive=True))
        base = GompertzTrend(b=_get_float(cp, sec, "b", required=True, positive=True),
                             c=_get_float(cp, sec, "c", required=True))
        if kind == "gompertz":
            return base
        mix = GammaMix(shape=_get_float(cp, sec, "frailty_shape", required=True, positive=True),
                       rate=_get_float(cp, sec, "frailty_rate", required=True, positive=True))
        return FrailtyScaled(base=base, mix=mix)


def _build_diffusion(cp):
    sec = "model.diffusion"
    kind = _get_choice(cp, sec, "kind", ("none", "brownian"), default="none")
    with _wrap(sec):
        if kind == "none":
            return NoDiffusion()
        return BrownianConst(sigma=_get_float(cp, sec, "sigma", required=True, positive=True))


def _build_jumps(cp):
    sec = "model.jumps"
    kind = _get_choice(cp, sec, "kind",
                       ("none", "fatal", "exponential", "mixture"),
                       default="none")
    with _wrap(sec):
        if kind == "none":
            return no_jumps()
        intensity = ConstantIntensity(
            rate=_get_float(cp, sec, "intensity", required=True, positive=True))
        if kind == "fatal":
            return JumpSpec(intensity=intensity, size=Fatal())
        if kind == "exponential":
            return JumpSpec(intensity=intensity, size=ExponentialJump(
                rate=_get_float(cp, sec, "size_rate", required=True, positive=True)))
        weights = _get_floats(cp, sec, "weights", required=True)
        rates = _get_floats(cp, sec, "rates", required=True)
        return JumpSpec(intensity=intensity,
                        size=MixtureExponential(weights=weights, rates=rates))


def build_model(cp) -> VitalityModel:
    if not cp.has_section("model"):
        raise ValidationError("model: section is missing")
    age = _get_float(cp, "model", "age", default=0.0, nonneg=True)
    with _wrap("model"):
        return VitalityModel(
            age_x=age,
            initial=_build_initial(cp),
            trend=_build_trend(cp),
            diffusion=_build_diffusion(cp),
            jump=_build_jumps(cp),
        )


def _time_grid(cp, section, default_step=1.0):
    t_max = _get_float(cp, section, "t_max", required=True, positive=True)
    t_step = _get_float(cp, section, "t_step", default=default_step, positive=True)
    t_min = _get_float(cp, section, "t_min", default=0.0, nonneg=True)
    if t_min > t_max:
        raise ValidationError(f"{section}.t_min: must not exceed t_max")
    n = int(round((t_max - t_min) / t_step))
    grid = t_min + t_step * np.arange(n + 1)
    return grid[grid <= t_max * (1 + 1e-12)]


def _need_seed(args, why: str) -> RngStream:
    if args.seed is None:
        raise ValidationError(f"seed: --seed is required ({why})")
    return RngStream(args.seed)


# ---------------------------------------------------------------------------
# commands

def _survive_route(cp, model) -> str:
    method = _get_choice(cp, "survive", "method",
                         ("auto", "closed-form", "monte-carlo", "laplace"),
                         default="auto")
    if method != "auto":
        return method
    if (isinstance(model.jump.size, (ExponentialJump, MixtureExponential))
            and isinstance(model.diffusion, BrownianConst)):
        return "monte-carlo"
    return "closed-form"


def cmd_survive(cp, args):
    model = build_model(cp)
    if not cp.has_section("survive"):
        raise ValidationError("survive: section is missing")
    grid = _time_grid(cp, "survive")
    route = _survive_route(cp, model)

    if route == "closed-form":
        values = [float(survival_static(model, t)) for t in grid]
        rows = [(t, s, "closed-form") for t, s in zip(grid, values)]
        return ["t", "survival", "method"], rows

    if route == "laplace":
        if not isinstance(model.trend, ConstantRate):
            raise ValidationError(
                "survive.method: the laplace route needs a constant-rate trend")
        if not isinstance(model.initial, Degenerate):
            raise ValidationError(
                "survive.method: the laplace route needs a degenerate initial vitality")
        if not isinstance(model.diffusion, BrownianConst):
            raise ValidationError(
                "survive.method: the laplace route needs Brownian diffusion")
        v = model.initial.value
        rows = [(t, 1.0 if t == 0 else survival_by_laplace(model, v, float(t)), "laplace")
                for t in grid]
        return ["t", "survival", "method"], rows

    stream = _need_seed(args, "the monte-carlo route is randomized")
    n_paths = _get_int(cp, "survive", "n_paths", default=100_000, minimum=100)
    horizon = float(grid[-1]) if grid[-1] > 0 else 1.0
    n_time = max(12, int(math.ceil(12 * horizon)))
    pos = grid[grid > 0]

    if isinstance(model.initial, Degenerate):
        cfg = McConfig(n_paths=n_paths, n_time_points=n_time, stream=stream)
        ests = mc_survival_curve(model, model.initial.value, pos, cfg)
        values = {float(t): (e.value, e.std_error) for t, e in zip(pos, ests)}
    elif isinstance(model.initial, Exponential):
        rule = gauss_laguerre(64)
        nodes, weights = rule.nodes, rule.weights
        per_node = max(500, n_paths // 64)
        acc = np.zeros(pos.size)
        var = np.zeros(pos.size)
        for i, (x, w) in enumerate(zip(nodes, weights)):
            cfg = McConfig(n_paths=per_node, n_time_points=n_time,
                           stream=stream.child(i + 1))
            ests = mc_survival_curve(model, float(x / model.initial.rate), pos, cfg)
            acc += w * np.array([e.value for e in ests])
            var += (w * np.array([e.std_error for e in ests])) ** 2
        values = {float(t): (a, math.sqrt(s)) for t, a, s in zip(pos, acc, var)}
    else:
        raise ValidationError(
            "model.initial.kind: the monte-carlo route needs a degenerate "
            "or exponential initial vitality")

    rows = []
    for t in grid:
        if t == 0:
            rows.append((0.0, 1.0, 0.0, "monte-carlo"))
        else:
            val, se = values[float(t)]
            rows.append((t, val, se, "monte-carlo"))
    return ["t", "survival", "std_error", "method"], rows


def cmd_fit(cp, args):
    if not cp.has_section("fit"):
        raise ValidationError("fit: section is missing")
    law = _get_choice(cp, "fit", "law", ("gompertz", "vitality"), default="gompertz")
    data_path = _raw(cp, "fit", "data", required=True)
    if not os.path.isfile(data_path):
        raise ValidationError(f"fit.data: file not found: {data_path}")
    data = load_cohort_csv(data_path)
    survivor_cell = _get_bool(cp, "fit", "include_survivor_cell", True)

    if law == "gompertz":
        result = fit_gompertz_law(data)
    else:
        model = build_model(cp)
        free_raw = _raw(cp, "fit", "free", default="b,c,sigma")
        free = tuple(p.strip() for p in free_raw.split(",") if p.strip())
        n_starts = _get_int(cp, "fit", "n_starts", default=5, minimum=1)
        if isinstance(model.diffusion, BrownianConst) and not model.jump.is_null:
            stream = _need_seed(args, "bridge Monte Carlo is randomized")
        else:
            stream = RngStream(args.seed) if args.seed is not None else RngStream(7)
        n_paths = _get_int(cp, "fit", "n_paths", default=4096, minimum=100)
        options = FitOptions(free=free, n_starts=n_starts, n_paths=n_paths,
                             stream=stream, include_survivor_cell=survivor_cell)
        result = fit_mle(model, data, options=options)

    flat = [("loglik", result.loglik), ("converged", result.converged),
            ("n_iterations", result.n_iterations)]
    for name in sorted(result.params):
        flat.append((f"params.{name}", result.params[name]))
    for name in sorted(result.std_errors or {}):
        flat.append((f"std_errors.{name}", result.std_errors[name]))
    return ["key", "value"], flat


def cmd_price(cp, args):
    model = build_model(cp)
    if not cp.has_section("price"):
        raise ValidationError("price: section is missing")
    product = _get_choice(cp, "price", "product",
                          ("annuity", "insurance", "life-expectancy"),
                          required=True)
    order = _get_int(cp, "price", "order", default=1, minimum=1)
    n_paths = _get_int(cp, "price", "n_paths", default=200_000, minimum=100)
    conditional_v = _get_float(cp, "price", "conditional_v", positive=True)

    randomized = (not model.jump.is_null
                  and isinstance(model.diffusion, BrownianConst))
    if randomized:
        stream = _need_seed(args, "this model prices by Monte Carlo")
    else:
        stream = RngStream(args.seed) if args.seed is not None else RngStream(11)

    kw = dict(order=order, n_paths=n_paths, stream=stream)
    if product == "life-expectancy":
        value = life_expectancy(model, conditional_v, **kw)
    else:
        interest = _get_float(cp, "price", "interest", required=True, positive=True)
        basis = PricingBasis(force_of_interest=interest)
        fn = annuity_price if product == "annuity" else insurance_price
        value = fn(model, basis, conditional_v, **kw)
    return ["product", "value"], [(product, value)]


def cmd_cod(cp, args):
    model = build_model(cp)
    sec = "cod"
    if not isinstance(model.trend, GompertzTrend):
        raise ValidationError("model.trend.kind: cause-of-death needs a gompertz trend")
    if not isinstance(model.initial, Degenerate):
        raise ValidationError(
            "model.initial.kind: cause-of-death needs a degenerate initial vitality")
    if not isinstance(model.diffusion, NoDiffusion):
        raise ValidationError("model.diffusion.kind: cause-of-death allows no diffusion")

    if model.jump.is_null:
        lam = 0.0
    else:
        if not isinstance(model.jump.intensity, ConstantIntensity):
            raise ValidationError(
                "model.jumps.kind: cause-of-death needs a constant jump intensity")
        if not isinstance(model.jump.size, ExponentialJump):
            raise ValidationError(
                "model.jumps.kind: cause-of-death needs exponential jump sizes")
        lam = model.jump.intensity.rate

    want_density = cp.has_option(sec, "t_max") if cp.has_section(sec) else False
    if lam == 0.0:
        if want_density:
            raise ValidationError("cod.t_max: the density table needs jump intensity > 0")
        return ["cause", "probability"], [("accident", 0.0), ("natural", 1.0)]

    params = CodParams(age_x=model.age_x, b=model.trend.b, c=model.trend.c,
                       lam=lam, alpha=model.jump.size.rate,
                       v=model.initial.value)
    if not want_density:
        accident, natural = prob_cause_split(params)
        return ["cause", "probability"], [("accident", accident), ("natural", natural)]

    grid = _time_grid(cp, sec)
    rows = []
    for t in grid:
        acc = cod_density(params, Cause.ACCIDENT, float(t))
        nat = cod_density(params, Cause.NATURAL, float(t))
        rows.append((t, float(acc.density), float(nat.density)))
    return ["t", "accident_density", "natural_density"], rows


def cmd_lifecycle(cp, args):
    sec = "lifecycle"
    if not cp.has_section(sec):
        raise ValidationError("lifecycle: section is missing")
    market = MarketParams(
        r=_get_float(cp, sec, "r", required=True),
        theta=_get_float(cp, sec, "theta", default=0.0),
        sigma_s=_get_float(cp, sec, "sigma_s", required=True, positive=True),
        beta=_get_float(cp, sec, "beta", required=True, positive=True),
        lambda_bequest=_get_float(cp, sec, "bequest", default=0.0, nonneg=True),
    )
    sde = VitalitySDE(
        delta=_get_float(cp, sec, "delta", required=True, positive=True),
        sigma_v=_get_float(cp, sec, "sigma_v", default=0.0, nonneg=True),
        v0=_get_float(cp, sec, "v0", default=1.0, positive=True),
    )
    v_max = _get_float(cp, sec, "v_max", default=40.0, positive=True)
    n_points = _get_int(cp, sec, "n_points", default=401, minimum=2)
    grid = np.linspace(1e-3, v_max, n_points)
    g = value_function_g(grid, market, sde)
    f = consumption_factor(grid, market, sde)
    pi = market.theta / market.sigma_s
    policy_rows = [
        (v, float(fv), float(gv), pi, float(1.0 / fv))
        for v, fv, gv in zip(grid, f, g)
    ]
    columns = ["v", "consumption_factor", "value_intercept",
               "fraction_risky", "consumption_per_wealth"]

    n_sim = _get_int(cp, sec, "simulate", default=0, minimum=0)
    if n_sim == 0:
        return columns, policy_rows

    if args.out is None:
        raise ValidationError("out: --out is required when lifecycle.simulate > 0")
    stream = _need_seed(args, "path simulation is randomized")
    a0 = _get_float(cp, sec, "a0", default=100.0, positive=True)
    dt = _get_float(cp, sec, "dt", default=1.0 / 252.0, positive=True)
    path_rows = []
    for i in range(n_sim):
        path = simulate_lifecycle(a0, market, sde, dt=dt, rng=stream.child(i + 1))
        for k in range(len(path.consumption)):
            path_rows.append((i, path.times[k], float(path.assets[k]),
                              float(path.consumption[k]), float(path.vitality[k])))
    path_cols = ["path", "t", "assets", "consumption", "vitality"]
    base, ext = os.path.splitext(args.out)
    _write_output(_render(path_cols, path_rows, args.format), f"{base}-paths{ext}")
    return columns, policy_rows


def cmd_disability(cp, args):
    model = build_model(cp)
    sec = "disability"
    if not cp.has_section(sec):
        raise ValidationError("disability: section is missing")
    metric = _get_choice(cp, sec, "metric", ("recovery", "healthy-stay"),
                         required=True)
    threshold = _get_float(cp, sec, "threshold", required=True, positive=True)
    grid = _time_grid(cp, sec)
    grid = grid[grid > 0]
    if grid.size == 0:
        raise ValidationError(f"{sec}.t_max: the horizon grid is empty")

    if metric == "healthy-stay":
        rows = [(t, float(healthy_stay_prob(model, DisabilityQuery(threshold, float(t)))))
                for t in grid]
        return ["t", "probability"], rows

    method = _get_choice(cp, sec, "method", ("quadrature", "monte-carlo"),
                         default="quadrature")
    denominator = _get_choice(cp, sec, "denominator", ("printed", "disabled"),
                              default="printed")
    kw = dict(denominator=denominator, method=method)
    if method == "monte-carlo":
        kw["stream"] = _need_seed(args, "the monte-carlo estimator is randomized")
        kw["n_paths"] = _get_int(cp, sec, "n_paths", default=100_000, minimum=100)
    rows = [(t, float(recovery_prob(model, DisabilityQuery(threshold, float(t)), **kw)))
            for t in grid]
    return ["t", "probability"], rows


# ---------------------------------------------------------------------------
# output

def _fmt_cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _render(columns, rows, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(columns) + "\n")
        for row in rows:
            buf.write(",".join(_fmt_cell(x) for x in row) + "\n")
        return buf.getvalue()
    clean = []
    for row in rows:
        out = []
        for x in row:
            if isinstance(x, bool):
                out.append(x)
            elif isinstance(x, (int, np.integer)):
                out.append(int(x))
            elif isinstance(x, (float, np.floating)):
                out.append(float(x))
            else:
                out.append(str(x))
        clean.append(out)
    return json.dumps({"columns": list(columns), "rows": clean}) + "\n"


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# entry point

_COMMANDS = {
    "survive": cmd_survive,
    "fit": cmd_fit,
    "price": cmd_price,
    "cod": cmd_cod,
    "lifecycle": cmd_lifecycle,
    "disability": cmd_disability,
}


def _seed_value(raw: str) -> int:
    try:
        val = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {raw!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vitalkit",
        description="Vitality-based mortality modelling toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("survive", "survival curve on a time grid"),
        ("fit", "fit model parameters to cohort death counts"),
        ("price", "annuity or insurance value, or life expectancy"),
        ("cod", "accident vs natural cause-of-death split"),
        ("lifecycle", "consumption policy table and simulated paths"),
        ("disability", "threshold-crossing probability table"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="INI config path")
        p.add_argument("--seed", type=_seed_value, default=None,
                       help="RNG seed (required for randomized commands)")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cp = _load_config(args.config)
        columns, rows = _COMMANDS[args.command](cp, args)
        _write_output(_render(columns, rows, args.format), args.out)
        return _EXIT_OK
    except (ValidationError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except (ConvergenceError, NoClosedFormError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL
    except FloatingPointError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
