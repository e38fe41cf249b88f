"""
Working-model estimation and the proximal-effect hypothesis test.

The centered working model for the outcome at an available decision time is

    E[Y_{t+1} | I_t = 1, A_t] = B_t' alpha + (A_t - rho_t) Z_t' beta,

fit by pooled least squares over all subjects and available times.  The test
of H0: beta(t) = 0 uses the statistic N * beta_hat' Sigma_hat^{-1} beta_hat
with a sandwich variance estimate and a scaled-F (Hotelling) critical value.

Variance estimation supports the small-sample hat-matrix adjustment with two
Gram conventions for H = X G^{-1} X':

* ``gram="summed"`` (default): G = sum_j X_j' X_j.  Per-subject leverages
  shrink like 1/N, and (I - H)^{-1} is applied through the Woodbury identity
  using only (p+q)-dimensional solves.
* ``gram="averaged"``: G = avg_j X_j' X_j.  Leverages are N times larger and
  (I - H) is frequently near-singular; this variant is computed literally
  with a dense per-subject solve behind a condition-number guard.

Unavailable decision times are inert throughout: their design rows are zero
and their outcomes (which may be absent, marked NaN) never enter arithmetic.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, NumericError
from .distributions import FDistParams, f_cdf, hotelling_critical

__all__ = [
    "SubjectRecord",
    "ModelFit",
    "TestResult",
    "fit_working_model",
    "sandwich_variance",
    "hypothesis_test",
    "asymptotic_targets",
]

# Relative eigenvalue threshold for declaring a symmetric system singular.
_SINGULAR_REL_TOL = 1e-12
# Condition-number guard for the dense (I - H) solve ("averaged" variant).
_DENSE_COND_CAP = 1e12

GRAM_KINDS = ("summed", "averaged")


@dataclass(frozen=True)
class SubjectRecord:
    """One subject's trajectory over the T decision times.

    ``outcome`` holds Y_{t+1} for available times; at unavailable times the
    value is ignored and is conventionally NaN (the absent marker).  A
    non-finite outcome at an available time is an input error.
    """

    avail: np.ndarray
    action: np.ndarray
    prob: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        avail = np.asarray(self.avail)
        action = np.asarray(self.action)
        prob = np.asarray(self.prob, dtype=np.float64)
        outcome = np.asarray(self.outcome, dtype=np.float64)
        T = avail.shape[0]
        if not (action.shape == prob.shape == outcome.shape == (T,)):
            raise ConfigError("subject arrays must share one length")
        if not np.isin(avail, (0, 1)).all():
            raise ConfigError("availability indicators must be 0 or 1")
        if not np.isin(action, (0, 1)).all():
            raise ConfigError("action indicators must be 0 or 1")
        if not ((prob > 0.0) & (prob < 1.0)).all():
            raise ConfigError("randomization probabilities must lie in (0, 1)")
        on = avail == 1
        if not np.isfinite(outcome[on]).all():
            raise ConfigError(
                "missing or non-finite outcome at an available decision time"
            )
        for name, arr, dtype in (
            ("avail", avail, np.int8),
            ("action", action, np.int8),
            ("prob", prob, np.float64),
            ("outcome", outcome, np.float64),
        ):
            frozen = np.ascontiguousarray(arr, dtype=dtype)
            frozen.setflags(write=False)
            object.__setattr__(self, name, frozen)

    @property
    def T(self):
        return self.avail.shape[0]


@dataclass(frozen=True)
class ModelFit:
    """Pooled least-squares solution and per-subject residuals.

    ``residuals[i, t]`` is Y_{t+1} - B_t'alpha_hat - (A_t - rho_t)Z_t'beta_hat
    at available times and exactly zero at unavailable times.
    """

    alpha_hat: np.ndarray
    beta_hat: np.ndarray
    residuals: np.ndarray

    def __post_init__(self):
        for name in ("alpha_hat", "beta_hat", "residuals"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class TestResult:
    """Outcome of the proximal-effect test at level ``alpha0``."""

    beta_hat: np.ndarray
    sigma_beta_hat: np.ndarray
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    adjustment: str
    n: int
    alpha0: float

    def __post_init__(self):
        if self.adjustment not in ("none", "hat-matrix"):
            raise ConfigError(f"unknown adjustment label {self.adjustment!r}")
        for name in ("beta_hat", "sigma_beta_hat"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_dict(self):
        return {
            "n": self.n,
            "alpha0": self.alpha0,
            "beta_hat": self.beta_hat.tolist(),
            "sigma_beta_hat": self.sigma_beta_hat.tolist(),
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "adjustment": self.adjustment,
        }


def _equilibrated_eigh(mat, what):
    """Symmetric eigendecomposition after diagonal equilibration.

    Feature columns span several orders of magnitude (1 vs day^2), so the raw
    Gram is ill-conditioned; scaling to unit diagonal recovers the lost
    digits.  Returns (scale d, eigenvalues, eigenvectors) for mat scaled as
    mat / (d d'), with the singularity threshold applied on the scaled matrix
    (whose trace equals its dimension).
    """
    d = np.sqrt(np.diag(mat))
    if not np.all(d > 0.0):
        raise NumericError(f"{what} is singular or nearly singular")
    scaled = mat / d[:, None] / d[None, :]
    w, v = np.linalg.eigh(scaled)
    if w[0] <= _SINGULAR_REL_TOL * np.trace(scaled):
        raise NumericError(f"{what} is singular or nearly singular")
    return d, w, v


def _solve_sym(mat, rhs, what):
    """Solve a symmetric positive-definite system with a singularity guard."""
    d, w, v = _equilibrated_eigh(mat, what)
    return (v @ ((v.T @ (rhs / d)) / w)) / d


def _inv_sym(mat, what):
    d, w, v = _equilibrated_eigh(mat, what)
    return ((v / w) @ v.T) / d[:, None] / d[None, :]


def _stack(dataset, features):
    """Dense (N, T) arrays plus the per-subject design tensor X (N, T, q+p).

    Rows of X at unavailable times are identically zero; masked outcomes are
    selected (never multiplied) so garbage at unavailable times cannot
    propagate.
    """
    records = list(dataset)
    if not records:
        raise ConfigError("dataset is empty")
    T = features.T
    for rec in records:
        if rec.T != T:
            raise ConfigError("subject length does not match the feature paths")
    avail = np.stack([r.avail for r in records]).astype(np.float64)
    action = np.stack([r.action for r in records]).astype(np.float64)
    prob = np.stack([r.prob for r in records])
    outcome = np.stack([r.outcome for r in records])
    y = np.where(avail == 1.0, outcome, 0.0)
    centered = avail * (action - prob)
    X = np.concatenate(
        [avail[:, :, None] * features.B[None], centered[:, :, None] * features.Z[None]],
        axis=2,
    )
    return avail, prob, y, centered, X


def fit_working_model(dataset, features):
    """Pooled least squares for (alpha, beta) over all available rows."""
    avail, _, y, _, X = _stack(dataset, features)
    flat = X.reshape(-1, X.shape[2])
    gram = flat.T @ flat
    moment = flat.T @ y.reshape(-1)
    try:
        theta = _solve_sym(gram, moment, "pooled design matrix")
    except NumericError as exc:
        raise NumericError(f"singular design: {exc}") from exc
    q = features.q
    fitted = X @ theta
    residuals = np.where(avail == 1.0, y - fitted, 0.0)
    return ModelFit(alpha_hat=theta[:q], beta_hat=theta[q:], residuals=residuals)


def _score_pieces(dataset, fit, features):
    avail, prob, _, centered, X = _stack(dataset, features)
    n = X.shape[0]
    e = fit.residuals
    if e.shape != avail.shape:
        raise ConfigError("fit residuals do not match the dataset shape")
    gram = np.einsum("nti,ntj->ij", X, X)
    m = np.einsum("nti,nt->ni", X, e)
    return avail, prob, centered, X, gram, m, n, e


def sandwich_variance(dataset, fit, features, adjusted, *, gram="summed"):
    """Sandwich variance of sqrt(N) (beta_hat - beta): Q^{-1} W Q^{-1}.

    Unadjusted: Q and W are the plug-in sample averages

        Q_hat = avg_i sum_t I_it rho_it (1 - rho_it) Z_t Z_t'
        W_hat = avg_i m_i m_i',   m_i = sum_t I_it e_it (A_it - rho_it) Z_t.

    Adjusted (hat-matrix): W is replaced by the lower-right p x p block of
    avg_i X_i'(I - H_i)^{-1} e_i e_i' (I - H_i)^{-1} X_i and Q^{-1} by the
    lower-right block of the inverse of the averaged design Gram.  ``gram``
    selects the Gram convention for H (see module docstring).
    """
    if gram not in GRAM_KINDS:
        raise ConfigError(f"unknown gram convention {gram!r}; expected {GRAM_KINDS}")
    avail, prob, centered, X, G, m, n, e = _score_pieces(dataset, fit, features)
    q = features.q

    if not adjusted:
        weights = (avail * prob * (1.0 - prob)).mean(axis=0)
        q_hat = features.Z.T @ (weights[:, None] * features.Z)
        w_hat = (m[:, q:, None] * m[:, None, q:]).mean(axis=0)
        q_inv = _inv_sym(q_hat, "plug-in information matrix")
        sigma = q_inv @ w_hat @ q_inv
        return 0.5 * (sigma + sigma.T)

    # hat-matrix adjustment
    q_inv_full = _inv_sym(G / n, "averaged design Gram")
    q_inv = q_inv_full[q:, q:]
    if gram == "summed":
        # Woodbury: (I - X G^{-1} X')^{-1} e = e + X (G - X'X)^{-1} X'e, so
        # X'(I - H)^{-1} e = m + K (G - K)^{-1} m with K = X'X per subject.
        K = np.einsum("nti,ntj->nij", X, X)
        S = G[None] - K
        try:
            adj = np.linalg.solve(S, m[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise NumericError(
                f"leave-one-subject-out Gram is singular (N={n} too small "
                f"or design pathological): {exc}"
            ) from exc
        g_full = m + np.einsum("nij,nj->ni", K, adj)
    else:
        # literal dense route: H_i = X_i [avg_j X_j'X_j]^{-1} X_i'
        g_avg_inv = q_inv_full
        g_full = np.empty_like(m)
        T = X.shape[1]
        eye = np.eye(T)
        for i in range(n):
            h = X[i] @ g_avg_inv @ X[i].T
            imh = eye - h
            if np.linalg.cond(imh) > _DENSE_COND_CAP:
                raise NumericError(
                    "(I - H) is numerically singular for a subject under the "
                    "averaged-Gram convention; use gram='summed'"
                )
            g_full[i] = X[i].T @ np.linalg.solve(imh, e[i])
    w_hat = (g_full[:, q:, None] * g_full[:, None, q:]).mean(axis=0)
    sigma = q_inv @ w_hat @ q_inv
    return 0.5 * (sigma + sigma.T)


def hypothesis_test(dataset, features, alpha0, adjusted=True, *, gram="summed"):
    """Test H0: beta(t) = 0 for all t against the feature-spanned alternative.

    Returns the statistic N beta_hat' Sigma_hat^{-1} beta_hat, the scaled-F
    critical value, and the p-value on the same scale (the statistic divided
    by the Hotelling multiplier is F-distributed under H0).
    """
    records = list(dataset)
    p = features.p
    q = features.q
    n = len(records)
    if n <= p + q:
        raise ConfigError(
            f"hypothesis test needs more than p + q = {p + q} subjects, got {n}"
        )
    fit = fit_working_model(records, features)
    sigma = sandwich_variance(records, fit, features, adjusted, gram=gram)
    try:
        stat = float(n) * float(fit.beta_hat @ _solve_sym(sigma, fit.beta_hat, "variance"))
    except NumericError as exc:
        raise NumericError(f"singular variance estimate: {exc}") from exc
    crit = hotelling_critical(p, q, n, alpha0)
    mult = p * (n - q - 1) / (n - q - p)
    p_value = 1.0 - f_cdf(stat / mult, FDistParams(p, n - q - p))
    return TestResult(
        beta_hat=fit.beta_hat,
        sigma_beta_hat=sigma,
        statistic=stat,
        critical_value=crit,
        p_value=p_value,
        reject=bool(stat > crit),
        adjustment="hat-matrix" if adjusted else "none",
        n=n,
        alpha0=alpha0,
    )


def asymptotic_targets(generative, features):
    """Large-sample targets (alpha_tilde, beta_tilde) of the working-model fit.

    Evaluates the population least-squares projections

        alpha_tilde = (sum_t tau_t B B')^{-1} sum_t tau_t alpha(t) B_t
        beta_tilde  = (sum_t tau_t rho_t(1-rho_t) Z Z')^{-1}
                      sum_t tau_t rho_t(1-rho_t) beta(t) Z_t

    from a generative model exposing closed-form paths ``alpha_path``,
    ``beta_path``, ``tau`` and ``rho``.
    """
    alpha_path = np.asarray(generative.alpha_path, dtype=np.float64)
    beta_path = np.asarray(generative.beta_path, dtype=np.float64)
    tau = np.asarray(getattr(generative.tau, "tau", generative.tau), dtype=np.float64)
    rho = np.broadcast_to(
        np.asarray(generative.rho, dtype=np.float64), (features.T,)
    )
    B, Z = features.B, features.Z
    gram_a = B.T @ (tau[:, None] * B)
    alpha_tilde = _solve_sym(gram_a, B.T @ (tau * alpha_path), "nuisance projection")
    w = tau * rho * (1.0 - rho)
    gram_b = Z.T @ (w[:, None] * Z)
    beta_tilde = _solve_sym(gram_b, Z.T @ (w * beta_path), "effect projection")
    return alpha_tilde, beta_tilde
