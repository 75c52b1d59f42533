"""Vitality-based mortality modelling.

An individual carries a latent health reserve ("vitality") that declines by
a deterministic trend, Brownian wear, and random shocks; death is the first
time the reserve hits zero.  The package evaluates survival curves under
that mechanism (closed forms, Laplace inversion, bridge-corrected Monte
Carlo), splits mortality by cause, approximates first-passage densities,
fits the model to cohort death counts, prices annuities and insurance, and
solves the lifetime consumption problem tied to the same clock.
"""

from .errors import ConvergenceError, NoClosedFormError, ValidationError, VitalkitError
from .numerics import RngStream
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
)
from .model import (
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
    gompertz_death_time,
    hazard_rate,
    no_jumps,
    survival_by_laplace,
    survival_static,
    trend_inverse,
)
from .montecarlo import (
    McConfig,
    McEstimate,
    mc_survival,
    mc_survival_curve,
    monthly_config,
    sample_death_times,
    survival_unconditional,
)
from .fpt_density import (
    BoundaryFn,
    boundary_from_model,
    density_to_survival,
    durbin_density,
    tangent_density,
)
from .cause_of_death import (
    Cause,
    CodParams,
    cod_density,
    cod_laplace_accident,
    cod_laplace_natural,
    prob_cause_split,
)
from .estimation import (
    CohortData,
    FitOptions,
    FitResult,
    calibrate_jump_intensity,
    fit_gompertz_law,
    fit_mle,
    load_accident_csv,
    load_cohort_csv,
    log_likelihood,
)
from .dynamic import (
    AgeScaled,
    DynamicGompertzParams,
    GammaRate,
    NoCohort,
    PowerDecay,
    TrendPath,
    cbd_inverse,
    cbd_reparameterization,
    lognormal_approx_survival,
    m6_inverse,
    m6_reparameterization,
    simulate_trend_path,
    survival_dynamic,
    survival_dynamic_with_jumps,
)
from .actuarial import (
    BeliefGap,
    DisabilityQuery,
    PricingBasis,
    RecoveryReport,
    annuity_price,
    belief_gap,
    healthy_stay_prob,
    insurance_price,
    joint_max_endpoint_density,
    life_expectancy,
    recovery_prob,
    recovery_report,
)
from .lifecycle import (
    LifecyclePath,
    MarketParams,
    MertonConstants,
    MortalityMerton,
    VitalitySDE,
    WithMortality,
    consumption_factor,
    discounted_utility,
    merton_reference,
    optimal_policy,
    simulate_lifecycle,
    utility_sample,
    value_function_g,
)

__version__ = "0.1.0"
