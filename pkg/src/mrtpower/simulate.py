"""
Synthetic-trial generation and Monte Carlo evaluation of the test pipeline.

This module generates micro-randomized-trial datasets under six generative
scenario families and estimates the type I error and power of the full
sizing-plus-test pipeline by Monte Carlo:

``working-true``
    Availability and treatment are independent Bernoulli draws; the outcome
    follows the working model exactly: Y = alpha(t) + (A - rho) d(t) + eps.
``weekend-mean``
    The conditional mean gains a day-of-week term theta * W_t (W_t = 1 on
    weekend days) that a quadratic-in-day nuisance basis cannot represent.
``nonquadratic-effect``
    Identical generation law to ``working-true`` but with an arbitrary
    (typically non-quadratic) proximal-effect path d(t); see
    :func:`shaped_effect` for the built-in plateau/decay family.
``heteroscedastic``
    The noise standard deviation depends on the treatment arm
    (sigma1_t / sigma0_t = ``variance_ratio``) and follows a time trend
    (:func:`variance_trend_path`), scaled so that the average conditional
    variance is exactly 1.
``availability-feedback``
    Availability decreases with the number of treatments in the last five
    decision points: I_t ~ Ber(tau_t + eta * sum_j (A I - E[A I])).  The
    feedback term is mean-centered, so E[I_t] = tau_t; the Bernoulli mean is
    clamped to [0, 1] (the centered sum can overshoot for large |eta|, and
    the clamp is part of this family's definition).
``treatment-feedback``
    Both availability and the outcome depend on the cumulative treatment
    count C_t over the last five decision points and on recent noise; all
    feedback terms are centered so E[I_t] = tau_t and the standardized
    effect stays d(t).  Requires :func:`calibrate_sigma_star` before
    generation, which estimates E[C_t | I_t = 1] and the residual scale
    sigma* keeping the average conditional variance at 1.  (The
    unavailable-arm outcome mean is irrelevant here: only the noise sequence
    feeds the availability recursion, and unavailable outcomes are exported
    as missing.)

Error processes are scaled to zero mean and unit marginal variance
analytically (no burn-in): the t(3) family by sqrt(1/3), the centered
exponential by rate 1, and the AR families by solving the Yule-Walker
system and initializing from the exact stationary distribution.

Reproducibility: every (replicate, subject) pair owns a private
counter-based RNG stream (Philox keyed by ``SeedSequence(seed,
spawn_key=(replicate, subject))``), and all primitives are drawn from that
stream in a fixed order, so results are bit-identical for any worker count.
Lagged quantities at times before the study start contribute zero.
"""

import dataclasses
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import njit
from .design import (
    AvailabilityPattern,
    EffectPath,
    TrialDesign,
    _freeze,
    build_quadratic_features,
    elicit_quadratic_effect,
)
from .estimator import SubjectRecord, hypothesis_test
from .exceptions import ConfigError, NumericError

__all__ = [
    "ERROR_FAMILIES",
    "SCENARIOS",
    "VARIANCE_TRENDS",
    "VARIANCE_TREND_SPAN",
    "ALPHA_COEFFS",
    "FEEDBACK_LAGS",
    "ErrorProcess",
    "GenerativeModel",
    "MonteCarloReport",
    "ar_autocovariances",
    "calibrate_sigma_star",
    "generate_dataset",
    "generate_subject",
    "monte_carlo",
    "shaped_effect",
    "subject_stream",
    "variance_trend_path",
]

ERROR_FAMILIES = ("iid-normal", "iid-t3-scaled", "iid-exp-centered", "ar1", "ar5")

SCENARIOS = (
    "working-true",
    "availability-feedback",
    "weekend-mean",
    "nonquadratic-effect",
    "heteroscedastic",
    "treatment-feedback",
)

VARIANCE_TRENDS = ("constant", "increasing", "decreasing", "weekend")

# Max/min ratio of the time-varying noise scale for the linear variance
# trends.  A configuration stand-in, not an estimate; change at will.
VARIANCE_TREND_SPAN = 1.5

# Weekend variance-trend levels (weekday / weekend noise SD before the
# mean-square-1 normalization).
WEEKEND_SIGMA_WEEKDAY = 0.8
WEEKEND_SIGMA_WEEKEND = 1.5

# Default conditional-mean coefficients on the (1, day, day^2) basis.
ALPHA_COEFFS = (2.5, 0.727, -8.66e-4)

# Number of lagged decision points feeding the two feedback scenarios.
FEEDBACK_LAGS = 5

# Minimum available samples per decision point for sigma* calibration.
CALIBRATION_MIN_SAMPLES = 100

# spawn_key branch reserved for calibration streams so they can never
# collide with (replicate, subject) generation streams.
_CALIBRATION_BRANCH = 0xFFFFFFFF

_WILSON_Z = 1.959963984540054  # standard normal 97.5% quantile


# ---------------------------------------------------------------------------
# error processes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorProcess:
    """Noise family for the outcome model, scaled to unit marginal variance.

    ``phi`` is the autoregression strength: for ``ar1`` the lag-1
    coefficient, for ``ar5`` the sum of the five (equal) lag coefficients.
    It must be 0 for the i.i.d. families and satisfy |phi| < 1 otherwise.
    """

    family: str
    phi: float = 0.0

    def __post_init__(self):
        if self.family not in ERROR_FAMILIES:
            raise ConfigError(
                f"unknown error family {self.family!r}; expected one of {ERROR_FAMILIES}"
            )
        phi = float(self.phi)
        if not math.isfinite(phi):
            raise ConfigError("phi must be finite")
        if self.family in ("ar1", "ar5"):
            if not abs(phi) < 1.0:
                raise ConfigError(f"AR processes require |phi| < 1, got {phi}")
        elif phi != 0.0:
            raise ConfigError(f"phi is only meaningful for AR families, got {phi}")
        object.__setattr__(self, "phi", phi)

    @property
    def order(self):
        if self.family == "ar1":
            return 1
        if self.family == "ar5":
            return 5
        return 0

    def coefficients(self):
        """Lag coefficients (a_1 ... a_k) of the autoregression."""
        k = self.order
        if k == 0:
            return np.zeros(0)
        return np.full(k, self.phi / k)


def ar_autocovariances(coeffs):
    """Autocovariances r_0..r_k of a unit-variance AR(k) process.

    Solves the Yule-Walker system r_m = sum_j a_j r_|m-j| (m = 1..k) under
    the normalization r_0 = 1.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    k = coeffs.shape[0]
    if k == 0:
        return np.ones(1)
    mat = np.eye(k)
    rhs = np.zeros(k)
    for m in range(1, k + 1):
        for j in range(1, k + 1):
            lag = abs(m - j)
            if lag == 0:
                rhs[m - 1] += coeffs[j - 1]
            else:
                mat[m - 1, lag - 1] -= coeffs[j - 1]
    try:
        r = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Yule-Walker system is singular: {exc}") from exc
    return np.concatenate([[1.0], r])


@lru_cache(maxsize=64)
def _stationary_setup(family, phi):
    """(coefficients, innovation SD, Cholesky of the initial-block covariance).

    Cached per (family, phi); arrays are frozen read-only.
    """
    process = ErrorProcess(family, phi)
    coeffs = process.coefficients()
    k = coeffs.shape[0]
    r = ar_autocovariances(coeffs)
    var_v = 1.0 - float(coeffs @ r[1:]) if k else 1.0
    if var_v <= 0.0:
        raise NumericError(
            f"non-stationary autoregression (innovation variance {var_v})"
        )
    if k:
        cov = r[np.abs(np.arange(k)[:, None] - np.arange(k)[None, :])]
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise NumericError(
                f"stationary covariance is not positive definite: {exc}"
            ) from exc
    else:
        chol = np.zeros((0, 0))
    return _freeze(coeffs), math.sqrt(var_v), _freeze(chol)


@njit(cache=True)
def _ar_path(first, innovations, coeffs, sigma_v, out):
    """Autoregressive recursion after the stationary initial block."""
    k = coeffs.shape[0]
    n = out.shape[0]
    head = k if k < n else n
    for i in range(head):
        out[i] = first[i]
    for i in range(head, n):
        acc = 0.0
        for j in range(k):
            acc += coeffs[j] * out[i - 1 - j]
        out[i] = acc + sigma_v * innovations[i]


def draw_errors(process, size, rng):
    """Draw ``size`` consecutive noise values from one subject's stream.

    The draw order per family is fixed, so a given (stream, family) pair
    always produces the same sequence.
    """
    size = int(size)
    if process.family == "iid-normal":
        return rng.standard_normal(size)
    if process.family == "iid-t3-scaled":
        return rng.standard_t(3.0, size) * math.sqrt(1.0 / 3.0)
    if process.family == "iid-exp-centered":
        return rng.exponential(1.0, size) - 1.0
    coeffs, sigma_v, chol = _stationary_setup(process.family, process.phi)
    k = coeffs.shape[0]
    first = chol @ rng.standard_normal(k)
    innovations = rng.standard_normal(size)
    out = np.empty(size)
    _ar_path(first, innovations, coeffs, sigma_v, out)
    return out


# ---------------------------------------------------------------------------
# sequential-generation kernels (hot paths; compiled when the JIT backend
# is enabled, interpreted otherwise -- identical arithmetic either way)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _trunc(x):
    """x clipped to [-1, 1]."""
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


@njit(cache=True)
def _availability_feedback_path(u_avail, u_action, tau, rho, eta, center, avail, action):
    """Sequential draw of (I_t, A_t) when treatment suppresses availability.

    The Bernoulli mean tau_t + eta * sum_{j=1..5} (A I - center)[t-j] is
    clamped to [0, 1]; lags before the study start contribute zero.
    """
    n = tau.shape[0]
    for i in range(n):
        s = 0.0
        for j in range(1, 6):
            k = i - j
            if k >= 0:
                s += avail[k] * action[k] - center[k]
        p = tau[i] + eta * s
        if p < 0.0:
            p = 0.0
        if p > 1.0:
            p = 1.0
        avail[i] = 1 if u_avail[i] < p else 0
        action[i] = 1 if u_action[i] < rho[i] else 0


@njit(cache=True)
def _treatment_feedback_path(
    u_avail, u_action, eps, tau, rho, eta1, eta2, c_mean, avail, action, c_path
):
    """Sequential draw of (I_t, A_t, C_t) under cumulative-treatment feedback.

    C_t counts treatments at available decision points over the last five
    times; the availability mean is tau_t (1 + eta1 (C_t - E[C_t])) +
    tau_t eta2 Trunc(mean of the last five noise values).  Returns 1 if the
    mean leaves [0, 1] (invalid parameterization), else 0.
    """
    n = tau.shape[0]
    for i in range(n):
        c = 0.0
        es = 0.0
        for j in range(1, 6):
            k = i - j
            if k >= 0:
                c += avail[k] * action[k]
                es += eps[k]
        c_path[i] = c
        p = tau[i] + tau[i] * eta1 * (c - c_mean[i]) + tau[i] * eta2 * _trunc(es / 5.0)
        if p < 0.0 or p > 1.0:
            return 1
        avail[i] = 1 if u_avail[i] < p else 0
        action[i] = 1 if u_action[i] < rho[i] else 0
    return 0


# ---------------------------------------------------------------------------
# generative model
# ---------------------------------------------------------------------------


def variance_trend_path(trend, design):
    """Per-decision noise scale (sigma-bar_t), normalized to mean square 1.

    ``increasing``/``decreasing`` are linear in decision time with max/min
    ratio :data:`VARIANCE_TREND_SPAN`; ``weekend`` takes the weekday /
    weekend levels 0.8 / 1.5 on the day-of-week grid before normalization.
    """
    if trend not in VARIANCE_TRENDS:
        raise ConfigError(
            f"unknown variance trend {trend!r}; expected one of {VARIANCE_TRENDS}"
        )
    T = design.T
    if trend == "constant":
        return np.ones(T)
    if trend == "weekend":
        base = np.where(
            design.day_index % 7 >= 5, WEEKEND_SIGMA_WEEKEND, WEEKEND_SIGMA_WEEKDAY
        ).astype(np.float64)
    else:
        base = np.linspace(1.0, VARIANCE_TREND_SPAN, T)
        if trend == "decreasing":
            base = base[::-1].copy()
    return base / math.sqrt(float(np.mean(base * base)))


def shaped_effect(design, average, max_day, plateau_fraction):
    """Non-quadratic proximal-effect path: quadratic rise, then linear fade.

    The path starts at zero, rises like a quadratic to its peak on day
    ``max_day``, then declines linearly so the final day sits at
    ``plateau_fraction`` of the peak (1 = fully maintained, 0 = effect gone
    by the end).  The whole path is scaled to time-average ``average``.
    """
    average = float(average)
    fraction = float(plateau_fraction)
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"plateau_fraction must be in [0, 1], got {fraction}")
    if int(max_day) != max_day:
        raise ConfigError(f"max_day must be an integer, got {max_day}")
    max_day = int(max_day)
    if not 1 < max_day <= design.days:
        raise ConfigError(
            f"max_day must lie in (1, {design.days}], got {max_day}"
        )
    if average == 0.0:
        raise ConfigError("average effect must be nonzero (null paths need no shape)")
    u = design.day_index.astype(np.float64)
    peak = float(max_day - 1)
    shape = 1.0 - ((u - peak) / peak) ** 2
    tail = u > peak
    if np.any(tail):
        last = float(design.days - 1)
        shape[tail] = 1.0 + (fraction - 1.0) * (u[tail] - peak) / (last - peak)
    return EffectPath.explicit(shape * (average / float(np.mean(shape))))


@dataclass(frozen=True)
class GenerativeModel:
    """One fully specified generative scenario.

    Build instances through the per-scenario classmethods rather than the
    raw constructor; they derive the dependent fields and enforce each
    family's variance normalization.
    """

    scenario: str
    design: TrialDesign
    effect: EffectPath
    tau: AvailabilityPattern
    errors: ErrorProcess
    alpha_path: np.ndarray
    sigma1: np.ndarray
    sigma0: np.ndarray
    theta: float = 0.0
    eta: float = 0.0
    eta1: float = 0.0
    eta2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    variance_ratio: float = 1.0
    variance_trend: str = "constant"
    c_mean: np.ndarray = None
    c_mean_avail: np.ndarray = None
    sigma_star: float = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}"
            )
        T = self.design.T
        for name in ("alpha_path", "sigma1", "sigma0"):
            arr = _freeze(getattr(self, name))
            if arr.shape != (T,):
                raise ConfigError(f"{name} must have length {T}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"{name} must be finite")
            object.__setattr__(self, name, arr)
        if np.any(self.sigma1 < 0.0) or np.any(self.sigma0 < 0.0):
            raise ConfigError("noise scales must be nonnegative")
        if self.effect.path.shape != (T,):
            raise ConfigError("effect path length does not match the design")
        if self.tau.tau.shape != (T,):
            raise ConfigError("availability pattern length does not match the design")
        if self.c_mean is not None:
            object.__setattr__(self, "c_mean", _freeze(self.c_mean))
        if self.c_mean_avail is not None:
            object.__setattr__(self, "c_mean_avail", _freeze(self.c_mean_avail))

    # -- derived views ----------------------------------------------------

    @property
    def T(self):
        return self.design.T

    @property
    def rho(self):
        return self.design.rho

    @property
    def tau_path(self):
        return self.tau.tau

    @property
    def beta_path(self):
        """True standardized proximal-effect path (unit average variance)."""
        return self.effect.path

    @property
    def is_calibrated(self):
        return self.scenario != "treatment-feedback" or self.sigma_star is not None

    def describe(self):
        """JSON-serializable full description (drives the config digest)."""
        out = {
            "scenario": self.scenario,
            "days": self.design.days,
            "decisions_per_day": self.design.decisions_per_day,
            "rho": self.design.rho.tolist(),
            "tau": self.tau.tau.tolist(),
            "tau_kind": self.tau.kind,
            "effect_form": self.effect.form,
            "effect_path": self.effect.path.tolist(),
            "alpha_path": self.alpha_path.tolist(),
            "errors": {"family": self.errors.family, "phi": self.errors.phi},
            "sigma1": self.sigma1.tolist(),
            "sigma0": self.sigma0.tolist(),
            "theta": self.theta,
            "eta": self.eta,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "variance_ratio": self.variance_ratio,
            "variance_trend": self.variance_trend,
        }
        if self.c_mean is not None:
            out["c_mean"] = self.c_mean.tolist()
        if self.c_mean_avail is not None:
            out["c_mean_avail"] = self.c_mean_avail.tolist()
        if self.sigma_star is not None:
            out["sigma_star"] = self.sigma_star
        return out

    # -- scenario constructors --------------------------------------------

    @classmethod
    def working_true(cls, design, effect, tau, errors, *, alpha=ALPHA_COEFFS):
        """Outcome follows the working model exactly."""
        return cls(
            scenario="working-true",
            design=design,
            effect=effect,
            tau=tau,
            errors=errors,
            alpha_path=_quadratic_alpha(design, alpha),
            sigma1=np.ones(design.T),
            sigma0=np.ones(design.T),
        )

    @classmethod
    def weekend_mean(cls, design, effect, tau, errors, *, theta):
        """Conditional mean gains a weekend bump theta outside the basis span.

        The quadratic part of the mean starts at 2.5, exceeds that by 0.1 on
        time-average, and peaks on the final day.
        """
        base = elicit_quadratic_effect(2.5, 2.6, design.days, design)
        weekend = (design.day_index % 7 >= 5).astype(np.float64)
        return cls(
            scenario="weekend-mean",
            design=design,
            effect=effect,
            tau=tau,
            errors=errors,
            alpha_path=base.path + float(theta) * weekend,
            sigma1=np.ones(design.T),
            sigma0=np.ones(design.T),
            theta=float(theta),
        )

    @classmethod
    def nonquadratic_effect(cls, design, effect, tau, errors, *, alpha=ALPHA_COEFFS):
        """Working-model generation with an arbitrary effect path d(t)."""
        return cls(
            scenario="nonquadratic-effect",
            design=design,
            effect=effect,
            tau=tau,
            errors=errors,
            alpha_path=_quadratic_alpha(design, alpha),
            sigma1=np.ones(design.T),
            sigma0=np.ones(design.T),
        )

    @classmethod
    def heteroscedastic(
        cls, design, effect, tau, errors, *, variance_ratio, variance_trend,
        alpha=ALPHA_COEFFS,
    ):
        """Arm- and time-dependent noise scale with unit average variance.

        sigma1_t / sigma0_t = ``variance_ratio`` everywhere, and the
        per-time average variance rho sigma1_t^2 + (1-rho) sigma0_t^2
        follows ``variance_trend`` scaled so its time-average equals 1.
        """
        ratio = float(variance_ratio)
        if ratio <= 0.0 or not math.isfinite(ratio):
            raise ConfigError(f"variance_ratio must be positive, got {variance_ratio}")
        sbar = variance_trend_path(variance_trend, design)
        rho = design.rho
        sigma0 = sbar / np.sqrt(rho * ratio * ratio + 1.0 - rho)
        sigma1 = ratio * sigma0
        model = cls(
            scenario="heteroscedastic",
            design=design,
            effect=effect,
            tau=tau,
            errors=errors,
            alpha_path=_quadratic_alpha(design, alpha),
            sigma1=sigma1,
            sigma0=sigma0,
            variance_ratio=ratio,
            variance_trend=variance_trend,
        )
        mean_var = float(np.mean(rho * sigma1**2 + (1.0 - rho) * sigma0**2))
        if abs(mean_var - 1.0) > 1e-9:
            raise NumericError(
                f"variance normalization failed (average variance {mean_var})"
            )
        return model

    @classmethod
    def availability_feedback(cls, design, effect, tau, errors, *, eta, alpha=ALPHA_COEFFS):
        """Availability drops with the centered recent-treatment count."""
        return cls(
            scenario="availability-feedback",
            design=design,
            effect=effect,
            tau=tau,
            errors=errors,
            alpha_path=_quadratic_alpha(design, alpha),
            sigma1=np.ones(design.T),
            sigma0=np.ones(design.T),
            eta=float(eta),
        )

    @classmethod
    def treatment_feedback(
        cls, design, effect, tau, errors, *, eta1, eta2, gamma1, gamma2,
        alpha=ALPHA_COEFFS,
    ):
        """Availability and outcome both react to recent treatment.

        The returned model is uncalibrated: run
        :func:`calibrate_sigma_star` to fill E[C_t | I_t = 1] and sigma*
        before generating subjects.  The centering argument behind
        E[I_t] = tau_t needs symmetric noise, so the skewed family is
        rejected here.
        """
        if errors.family == "iid-exp-centered":
            raise ConfigError(
                "treatment-feedback requires a symmetric error family "
                "(the availability centering relies on it)"
            )
        rate = design.rho * tau.tau
        c_mean = np.array(
            [rate[max(t - FEEDBACK_LAGS, 0):t].sum() for t in range(design.T)]
        )
        return cls(
            scenario="treatment-feedback",
            design=design,
            effect=effect,
            tau=tau,
            errors=errors,
            alpha_path=_quadratic_alpha(design, alpha),
            sigma1=np.ones(design.T),
            sigma0=np.ones(design.T),
            eta1=float(eta1),
            eta2=float(eta2),
            gamma1=float(gamma1),
            gamma2=float(gamma2),
            c_mean=c_mean,
        )


def _quadratic_alpha(design, alpha):
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (3,):
        raise ConfigError(f"alpha must have 3 coefficients, got shape {alpha.shape}")
    u = design.day_index.astype(np.float64)
    return alpha[0] + alpha[1] * u + alpha[2] * u * u


# ---------------------------------------------------------------------------
# subject generation
# ---------------------------------------------------------------------------


def subject_stream(seed, replicate, subject):
    """Private counter-based RNG stream for one (replicate, subject) pair."""
    seed = int(seed)
    if seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed}")
    key = np.random.SeedSequence(
        entropy=seed, spawn_key=(int(replicate), int(subject))
    )
    return np.random.Generator(np.random.Philox(key))


def generate_subject(model, rng):
    """Draw one subject's trajectory from ``model`` using stream ``rng``.

    Primitives are consumed in a fixed order (availability uniforms, action
    uniforms, noise), so a given stream yields a reproducible record.
    Outcomes at unavailable decision points are exported as NaN (absent).
    """
    if not model.is_calibrated:
        raise ConfigError(
            "treatment-feedback model is uncalibrated; run calibrate_sigma_star first"
        )
    T = model.T
    tau = model.tau_path
    rho = model.rho
    u_avail = rng.random(T)
    u_action = rng.random(T)
    eps = draw_errors(model.errors, T, rng)
    d_path = model.effect.path

    if model.scenario == "availability-feedback":
        avail = np.zeros(T, dtype=np.int8)
        action = np.zeros(T, dtype=np.int8)
        _availability_feedback_path(
            u_avail, u_action, tau, rho, model.eta, rho * tau, avail, action
        )
        y = model.alpha_path + (action - rho) * d_path + eps
    elif model.scenario == "treatment-feedback":
        avail = np.zeros(T, dtype=np.int8)
        action = np.zeros(T, dtype=np.int8)
        c_path = np.zeros(T)
        status = _treatment_feedback_path(
            u_avail, u_action, eps, tau, rho, model.eta1, model.eta2,
            model.c_mean, avail, action, c_path,
        )
        if status != 0:
            raise ConfigError(
                "availability probability left [0, 1]; the feedback "
                "parameterization (eta1, eta2) is too strong for this tau"
            )
        dev = c_path - model.c_mean_avail
        y = (
            model.alpha_path
            + model.gamma1 * dev
            + (action - rho) * d_path * (1.0 + model.gamma2 * dev)
            + model.sigma_star * eps
        )
    else:
        avail = (u_avail < tau).astype(np.int8)
        action = (u_action < rho).astype(np.int8)
        scale = np.where(action == 1, model.sigma1, model.sigma0)
        y = model.alpha_path + (action - rho) * d_path + scale * eps

    return SubjectRecord(
        avail=avail,
        action=action,
        prob=rho.copy(),
        outcome=np.where(avail == 1, y, np.nan),
    )


def generate_dataset(model, n, *, seed, replicate=0):
    """n subjects drawn from per-subject streams keyed by (seed, replicate)."""
    n = int(n)
    if n < 1:
        raise ConfigError(f"need at least 1 subject, got {n}")
    return [
        generate_subject(model, subject_stream(seed, replicate, i)) for i in range(n)
    ]


# ---------------------------------------------------------------------------
# sigma* calibration for the treatment-feedback scenario
# ---------------------------------------------------------------------------


def calibrate_sigma_star(model, reps=10_000, *, seed):
    """Estimate E[C_t | I_t = 1] and solve for the residual scale sigma*.

    Simulates ``reps`` subjects' (I, A, C) trajectories on a dedicated
    stream branch, estimates the conditional mean and variance of C_t among
    available times, and chooses sigma* so the average conditional variance
    of the outcome equals 1.  Returns the calibrated copy of ``model``.
    """
    if model.scenario != "treatment-feedback":
        raise ConfigError(
            f"calibration applies to the treatment-feedback scenario, "
            f"not {model.scenario!r}"
        )
    reps = int(reps)
    if reps < 1:
        raise ConfigError(f"reps must be positive, got {reps}")
    T = model.T
    tau = model.tau_path
    rho = model.rho
    count = np.zeros(T)
    total = np.zeros(T)
    total_sq = np.zeros(T)
    avail = np.zeros(T, dtype=np.int8)
    action = np.zeros(T, dtype=np.int8)
    c_path = np.zeros(T)
    for i in range(reps):
        rng = subject_stream(seed, _CALIBRATION_BRANCH, i)
        u_avail = rng.random(T)
        u_action = rng.random(T)
        eps = draw_errors(model.errors, T, rng)
        status = _treatment_feedback_path(
            u_avail, u_action, eps, tau, rho, model.eta1, model.eta2,
            model.c_mean, avail, action, c_path,
        )
        if status != 0:
            raise ConfigError(
                "availability probability left [0, 1]; the feedback "
                "parameterization (eta1, eta2) is too strong for this tau"
            )
        on = avail == 1
        count[on] += 1.0
        total[on] += c_path[on]
        total_sq[on] += c_path[on] * c_path[on]
    if count.min() < CALIBRATION_MIN_SAMPLES:
        raise ConfigError(
            f"insufficient calibration replicates: a decision point has only "
            f"{int(count.min())} available samples "
            f"(need {CALIBRATION_MIN_SAMPLES}); increase reps"
        )
    c_avail = total / count
    c_var = (total_sq - count * c_avail * c_avail) / (count - 1.0)
    d_path = model.effect.path
    weight = (
        rho * (model.gamma1 + (1.0 - rho) * d_path * model.gamma2) ** 2
        + (1.0 - rho) * (model.gamma1 - rho * d_path * model.gamma2) ** 2
    )
    residual_var = 1.0 - float(np.mean(weight * c_var))
    if residual_var <= 0.0:
        raise NumericError(
            f"feedback terms already exceed unit variance "
            f"(residual variance {residual_var}); weaken gamma1/gamma2"
        )
    return dataclasses.replace(
        model, c_mean_avail=c_avail, sigma_star=math.sqrt(residual_var)
    )


# ---------------------------------------------------------------------------
# Monte Carlo driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloReport:
    """Rejection tally over independent simulated trials.

    ``replicates`` counts completed replicates; replicates aborted by a
    numeric estimation failure are tallied in ``failures`` instead (their
    sum is ``requested``).  ``rate`` is rejections / replicates with a 95%
    score (Wilson) interval.
    """

    requested: int
    replicates: int
    failures: int
    rejections: int
    rate: float
    ci_low: float
    ci_high: float
    alpha0: float
    seed: int
    config_digest: str

    def __post_init__(self):
        if self.replicates + self.failures != self.requested:
            raise ConfigError("replicates + failures must equal requested")
        if self.replicates > 0 and self.rate != self.rejections / self.replicates:
            raise ConfigError("rate must equal rejections / replicates")
        if not self.ci_low <= self.rate <= self.ci_high:
            raise ConfigError("ci95 must contain the rate")

    def to_dict(self):
        return {
            "requested": self.requested,
            "replicates": self.replicates,
            "failures": self.failures,
            "rejections": self.rejections,
            "rate": self.rate,
            "ci95": [self.ci_low, self.ci_high],
            "alpha0": self.alpha0,
            "seed": self.seed,
            "config_digest": self.config_digest,
        }


def _wilson_interval(successes, trials):
    z = _WILSON_Z
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = (
        z
        * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials))
        / denom
    )
    # at the boundaries center -+ half equals the endpoint analytically;
    # pin it so rounding cannot push the interval off the observed rate
    low = 0.0 if successes == 0 else max(0.0, center - half)
    high = 1.0 if successes == trials else min(1.0, center + half)
    return low, high


def _replicate_outcomes(args):
    """Outcomes for a batch of replicates: 1 reject, 0 accept, -1 failure."""
    model, n, alpha0, adjusted, gram, seed, indices = args
    features = build_quadratic_features(model.design)
    out = np.empty(len(indices), dtype=np.int8)
    for pos, rep in enumerate(indices):
        dataset = generate_dataset(model, n, seed=seed, replicate=rep)
        try:
            result = hypothesis_test(
                dataset, features, alpha0, adjusted=adjusted, gram=gram
            )
        except NumericError:
            out[pos] = -1
        else:
            out[pos] = 1 if result.reject else 0
    return out


def resolve_threads(threads=None):
    """Worker count: explicit argument, else MRTPOWER_THREADS, else 1."""
    if threads is None:
        raw = os.environ.get("MRTPOWER_THREADS", "1").strip()
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ConfigError(f"MRTPOWER_THREADS must be an integer, got {raw!r}") from exc
    threads = int(threads)
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}")
    return threads


def config_digest(model, n, reps, alpha0, adjusted, gram, seed):
    """sha256 digest of the full run configuration (excludes worker count)."""
    payload = {
        "model": model.describe(),
        "n": int(n),
        "reps": int(reps),
        "alpha0": float(alpha0),
        "adjusted": bool(adjusted),
        "gram": gram,
        "seed": int(seed),
    }
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def monte_carlo(model, n, reps, alpha0, adjusted=True, *, seed, gram="summed", threads=None):
    """Estimate the test's rejection rate over ``reps`` simulated trials.

    Each replicate generates ``n`` subjects on its own deterministic RNG
    streams and runs the hypothesis test; the report is identical for any
    worker count because per-replicate outcomes depend only on (seed,
    replicate) and the tally is order-independent.
    """
    n = int(n)
    reps = int(reps)
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if n <= model.design.p + model.design.q:
        raise ConfigError(
            f"need more than p + q = {model.design.p + model.design.q} subjects, got {n}"
        )
    if not model.is_calibrated:
        raise ConfigError(
            "treatment-feedback model is uncalibrated; run calibrate_sigma_star first"
        )
    threads = resolve_threads(threads)
    seed = int(seed)

    if threads == 1 or reps == 1:
        outcomes = _replicate_outcomes(
            (model, n, alpha0, adjusted, gram, seed, range(reps))
        )
    else:
        batches = [
            (model, n, alpha0, adjusted, gram, seed, list(range(w, reps, threads)))
            for w in range(threads)
        ]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_replicate_outcomes, batches))
        outcomes = np.concatenate(parts)

    rejections = int(np.sum(outcomes == 1))
    failures = int(np.sum(outcomes == -1))
    completed = reps - failures
    if completed == 0:
        raise NumericError("every replicate failed; the configuration is pathological")
    ci_low, ci_high = _wilson_interval(rejections, completed)
    return MonteCarloReport(
        requested=reps,
        replicates=completed,
        failures=failures,
        rejections=rejections,
        rate=rejections / completed,
        ci_low=ci_low,
        ci_high=ci_high,
        alpha0=float(alpha0),
        seed=seed,
        config_digest=config_digest(model, n, reps, alpha0, adjusted, gram, seed),
    )
