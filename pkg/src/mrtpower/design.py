"""
Trial-design construction: decision-time grids, feature paths, availability
patterns, and standardized proximal-effect paths.

Conventions used throughout the package:

* decision times are t = 1..T with T = days * decisions_per_day;
* the (zero-based) day index of decision t is u_t = floor((t-1)/m), so the
  quadratic feature path is Z_t = B_t = (1, u_t, u_t^2)';
* an effect path d(t) is the proximal treatment effect standardized by the
  average conditional outcome standard deviation.

All returned objects are immutable value types (arrays are marked
read-only), so they can be shared freely across threads and processes.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, NumericError

__all__ = [
    "TrialDesign",
    "FeaturePaths",
    "AvailabilityPattern",
    "EffectPath",
    "build_quadratic_features",
    "elicit_quadratic_effect",
    "make_availability",
    "project_effect",
]

AVAILABILITY_KINDS = ("constant", "linear", "weekly-periodic", "piecewise")

# Relative eigenvalue threshold below which a Gram matrix is treated as
# singular (scaled by the matrix trace).
_SINGULAR_REL_TOL = 1e-12


def _freeze(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _check_invertible(gram, what):
    eigvals = np.linalg.eigvalsh(gram)
    if eigvals[0] <= _SINGULAR_REL_TOL * np.trace(gram):
        raise NumericError(f"{what} is singular or nearly singular")


@dataclass(frozen=True)
class TrialDesign:
    """Decision-time grid and randomization probabilities of a trial.

    ``rho`` may be a scalar (constant randomization probability) or a
    length-T sequence; it is stored per decision time.
    """

    days: int
    decisions_per_day: int
    rho: np.ndarray
    p: int = 3
    q: int = 3

    def __post_init__(self):
        if int(self.days) != self.days or self.days < 1:
            raise ConfigError(f"days must be a positive integer, got {self.days}")
        if int(self.decisions_per_day) != self.decisions_per_day or self.decisions_per_day < 1:
            raise ConfigError(
                f"decisions_per_day must be a positive integer, got {self.decisions_per_day}"
            )
        object.__setattr__(self, "days", int(self.days))
        object.__setattr__(self, "decisions_per_day", int(self.decisions_per_day))
        rho = np.broadcast_to(np.asarray(self.rho, dtype=np.float64), (self.T,)).copy()
        if not np.all((rho > 0.0) & (rho < 1.0)):
            raise ConfigError("all randomization probabilities must lie in (0, 1)")
        object.__setattr__(self, "rho", _freeze(rho))

    @property
    def T(self):
        return self.days * self.decisions_per_day

    @property
    def day_index(self):
        """Zero-based day index u_t for t = 1..T, as a float array."""
        return np.arange(self.T) // self.decisions_per_day


@dataclass(frozen=True)
class FeaturePaths:
    """Per-time feature vectors Z_t (effect, p-dim) and B_t (nuisance, q-dim).

    Construction verifies that the unweighted Grams sum_t Z_t Z_t' and
    sum_t B_t B_t' are invertible; availability-weighted invertibility is
    checked wherever an availability pattern is actually paired with the
    features (Q-matrix construction, fitting).
    """

    Z: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        Z = np.atleast_2d(np.asarray(self.Z, dtype=np.float64))
        B = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
        if Z.shape[0] != B.shape[0]:
            raise ConfigError("Z and B must have one row per decision time")
        _check_invertible(Z.T @ Z, "effect-feature Gram matrix")
        _check_invertible(B.T @ B, "nuisance-feature Gram matrix")
        object.__setattr__(self, "Z", _freeze(Z))
        object.__setattr__(self, "B", _freeze(B))

    @property
    def T(self):
        return self.Z.shape[0]

    @property
    def p(self):
        return self.Z.shape[1]

    @property
    def q(self):
        return self.B.shape[1]


@dataclass(frozen=True)
class AvailabilityPattern:
    """Expected availability tau_t = E[I_t] per decision time."""

    tau: np.ndarray
    kind: str
    target_average: float

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.float64)
        if self.kind not in AVAILABILITY_KINDS:
            raise ConfigError(
                f"unknown availability kind {self.kind!r}; expected one of {AVAILABILITY_KINDS}"
            )
        if np.any(tau < 0.0) or np.any(tau > 1.0):
            raise ConfigError("availability values must lie in [0, 1]")
        if abs(float(tau.mean()) - self.target_average) > 1e-9:
            raise ConfigError(
                "availability pattern mean does not match its target average"
            )
        object.__setattr__(self, "tau", _freeze(tau))


@dataclass(frozen=True)
class EffectPath:
    """Standardized proximal effect d(t), quadratic-in-day or explicit.

    ``path`` always holds the evaluated per-time values; ``coeffs`` is the
    (d1, d2, d3) day-quadratic when ``form == "quadratic"``.
    """

    form: str
    path: np.ndarray
    coeffs: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.form not in ("quadratic", "explicit"):
            raise ConfigError(f"unknown effect form {self.form!r}")
        if self.form == "quadratic":
            if self.coeffs is None or np.shape(self.coeffs) != (3,):
                raise ConfigError("quadratic effect requires 3 coefficients")
            object.__setattr__(self, "coeffs", _freeze(self.coeffs))
        object.__setattr__(self, "path", _freeze(self.path))

    @classmethod
    def quadratic(cls, coeffs, design):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        u = design.day_index.astype(np.float64)
        path = coeffs[0] + coeffs[1] * u + coeffs[2] * u * u
        return cls(form="quadratic", path=path, coeffs=coeffs)

    @classmethod
    def explicit(cls, path):
        return cls(form="explicit", path=np.asarray(path, dtype=np.float64))

    @property
    def average(self):
        return float(self.path.mean())


def build_quadratic_features(design):
    """Quadratic day features Z_t = B_t = (1, u_t, u_t^2)' for the design.

    Only defined for p = q = 3 (the feature dimension of the quadratic
    alternative).
    """
    if design.p != 3 or design.q != 3:
        raise ConfigError(
            f"quadratic feature builder requires p = q = 3, got p={design.p}, q={design.q}"
        )
    u = design.day_index.astype(np.float64)
    Z = np.column_stack([np.ones(design.T), u, u * u])
    return FeaturePaths(Z=Z, B=Z.copy())


def elicit_quadratic_effect(initial, average, max_day, design):
    """Solve for day-quadratic effect coefficients from elicited quantities.

    The three constraints are: d(1) = ``initial`` (value on the first day);
    the time-average of d(t) equals ``average``; and the quadratic's vertex
    falls on day ``max_day`` (one-based), i.e. d2 + 2 d3 (max_day - 1) = 0.
    The solved path must attain an interior maximum (d3 < 0).
    """
    initial = float(initial)
    average = float(average)
    if int(max_day) != max_day:
        raise ConfigError(f"max_day must be an integer, got {max_day}")
    max_day = int(max_day)
    if not (1 < max_day <= design.days):
        raise ConfigError(
            f"max_day must satisfy 1 < max_day <= days={design.days}, got {max_day}"
        )
    if average == initial:
        raise ConfigError(
            "average effect equal to the initial effect gives a flat path "
            "with no interior maximum"
        )
    u = design.day_index.astype(np.float64)
    system = np.array(
        [
            [1.0, 0.0, 0.0],
            [1.0, u.mean(), (u * u).mean()],
            [0.0, 1.0, 2.0 * (max_day - 1)],
        ]
    )
    rhs = np.array([initial, average, 0.0])
    try:
        coeffs = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"elicitation system is singular: {exc}") from exc
    if not np.all(np.isfinite(coeffs)):
        raise NumericError("elicitation system produced non-finite coefficients")
    if coeffs[2] >= 0.0:
        raise ConfigError(
            "elicited effect has no interior maximum (leading coefficient "
            f"{coeffs[2]:.3e} >= 0); check initial/average/max_day"
        )
    return EffectPath.quadratic(coeffs, design)


def make_availability(kind, target_average, design, *, amplitude=None, break_day=None):
    """Construct an expected-availability pattern of the requested kind.

    Non-constant kinds are built as a mean-zero shape scaled by ``amplitude``
    and shifted so the time average equals ``target_average`` exactly:

    * ``constant``        -- tau_t = target_average;
    * ``linear``          -- ramp from -amplitude/2 to +amplitude/2 around
                             the average over the study;
    * ``weekly-periodic`` -- weekend days (day mod 7 in {5, 6}) offset by
                             ``amplitude`` relative to weekdays, recentered;
    * ``piecewise``       -- step of height ``amplitude`` at ``break_day``
                             (one-based), recentered.

    Raises an infeasible-pattern error when the requested combination cannot
    stay inside [0, 1].
    """
    target_average = float(target_average)
    if not (0.0 < target_average <= 1.0):
        raise ConfigError(
            f"target average availability must be in (0, 1], got {target_average}"
        )
    T = design.T
    u = design.day_index.astype(np.float64)
    if kind == "constant":
        tau = np.full(T, target_average)
    elif kind == "linear":
        if amplitude is None:
            raise ConfigError("linear availability requires an amplitude")
        shape = np.linspace(-0.5, 0.5, T)
        tau = target_average + float(amplitude) * shape
    elif kind == "weekly-periodic":
        if amplitude is None:
            raise ConfigError("weekly-periodic availability requires an amplitude")
        weekend = ((u % 7) >= 5).astype(np.float64)
        tau = target_average + float(amplitude) * (weekend - weekend.mean())
    elif kind == "piecewise":
        if amplitude is None or break_day is None:
            raise ConfigError("piecewise availability requires amplitude and break_day")
        if not (1 <= int(break_day) <= design.days):
            raise ConfigError(
                f"break_day must be in [1, {design.days}], got {break_day}"
            )
        step = (u >= (int(break_day) - 1)).astype(np.float64)
        tau = target_average + float(amplitude) * (step - step.mean())
    else:
        raise ConfigError(
            f"unknown availability kind {kind!r}; expected one of {AVAILABILITY_KINDS}"
        )
    # tolerate only float-level spill before declaring the shape infeasible
    if tau.min() < -1e-12 or tau.max() > 1.0 + 1e-12:
        raise ConfigError(
            f"infeasible availability pattern: kind={kind!r} with average "
            f"{target_average} leaves [0, 1] (range [{tau.min():.4f}, {tau.max():.4f}])"
        )
    tau = np.clip(tau, 0.0, 1.0)
    return AvailabilityPattern(tau=tau, kind=kind, target_average=target_average)


def project_effect(path, tau, features, rho):
    """Project an arbitrary effect path onto the quadratic feature span.

    Weighted least squares with per-time weights w_t = tau_t rho_t (1-rho_t)
    (the same weights that enter the information matrix, so the projection
    is the asymptotic target of the working-model effect estimate):

        d = (sum_t w_t Z_t Z_t')^{-1} sum_t w_t Z_t d(t)

    Idempotent on paths already in the span.
    """
    values = np.asarray(path.path if isinstance(path, EffectPath) else path, dtype=np.float64)
    Z = features.Z
    if values.shape[0] != Z.shape[0]:
        raise ConfigError("effect path and feature path lengths differ")
    rho_arr = np.broadcast_to(np.asarray(rho, dtype=np.float64), (Z.shape[0],))
    w = tau.tau * rho_arr * (1.0 - rho_arr)
    gram = Z.T @ (w[:, None] * Z)
    _check_invertible(gram, "projection Gram matrix")
    coeffs = np.linalg.solve(gram, Z.T @ (w * values))
    return EffectPath(form="quadratic", path=Z @ coeffs, coeffs=coeffs)
