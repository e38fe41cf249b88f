"""
One-shot generator for tests/_reference_estimator.py.

Implements the pooled least-squares fit, the sandwich variance (unadjusted
and hat-matrix adjusted under both Gram conventions), and the test statistic
directly in mpmath at 50 significant digits, working purely from the raw
arrays in _tiny_instances.py -- completely independent of the package code.

Run from the repository root:  python3 tests/_make_estimator_reference.py
"""

import mpmath as mp
import numpy as np

from _tiny_instances import INSTANCE_A, INSTANCE_B, instance_c_arrays

mp.mp.dps = 50


def _mpf(x):
    # floats -> exact binary rationals; keeps the oracle faithful to the
    # double-precision inputs the package will see
    return mp.mpf(x)


def build_design_rows(avail, action, prob, B, Z):
    """Rows (I*B', I*(A-rho)*Z') per subject as mp matrices."""
    n = len(avail)
    T = len(avail[0])
    q = len(B[0])
    p = len(Z[0])
    X = []
    for i in range(n):
        xi = mp.zeros(T, q + p)
        for t in range(T):
            I = _mpf(avail[i][t])
            a = _mpf(action[i][t]) - _mpf(prob if np.isscalar(prob) else prob[i][t])
            for k in range(q):
                xi[t, k] = I * _mpf(B[t][k])
            for k in range(p):
                xi[t, q + k] = I * a * _mpf(Z[t][k])
        X.append(xi)
    return X


def masked_outcomes(avail, outcome):
    n = len(avail)
    T = len(avail[0])
    y = []
    for i in range(n):
        yi = mp.zeros(T, 1)
        for t in range(T):
            if avail[i][t] == 1:
                yi[t] = _mpf(outcome[i][t])
        y.append(yi)
    return y


def fit(X, y):
    dim = X[0].cols
    G = mp.zeros(dim, dim)
    v = mp.zeros(dim, 1)
    for xi, yi in zip(X, y):
        G += xi.T * xi
        v += xi.T * yi
    theta = mp.lu_solve(G, v)
    resid = [yi - xi * theta for xi, yi in zip(X, y)]
    return theta, resid, G


def sandwich(X, resid, G, avail, prob, Z, q, adjusted, gram):
    n = len(X)
    p = Z.shape[1] if hasattr(Z, "shape") else len(Z[0])
    T = X[0].rows
    if not adjusted:
        # Q_hat = avg_i sum_t I rho(1-rho) Z Z'
        qhat = mp.zeros(p, p)
        for i in range(n):
            for t in range(T):
                if avail[i][t] == 1:
                    r = _mpf(prob)
                    w = r * (1 - r)
                    for a in range(p):
                        for b in range(p):
                            qhat[a, b] += w * _mpf(Z[t][a]) * _mpf(Z[t][b])
        qhat = qhat / n
        what = mp.zeros(p, p)
        for xi, ei in zip(X, resid):
            mi = (xi.T * ei)[q:, :]
            what += mi * mi.T
        what = what / n
        qinv = mp.inverse(qhat)
        return qinv * what * qinv
    gmat = G / n if gram == "averaged" else G
    ginv = mp.inverse(gmat)
    what = mp.zeros(p, p)
    for xi, ei in zip(X, resid):
        h = xi * ginv * xi.T
        imh = mp.eye(T) - h
        adj = mp.lu_solve(imh, ei)
        gi = (xi.T * adj)[q:, :]
        what += gi * gi.T
    what = what / n
    qinv_full = mp.inverse(G / n)
    qinv = qinv_full[q:, q:]
    return qinv * what * qinv


def mat_to_nested(m):
    return [[mp.nstr(m[i, j], 30) for j in range(m.cols)] for i in range(m.rows)]


def f_cdf(x, d1, d2):
    y = d1 * x / (d1 * x + d2)
    return mp.betainc(d1 / 2, d2 / 2, 0, y, regularized=True)


lines = [
    '"""Frozen extended-precision reference values for estimator tests.',
    "",
    "Generated by _make_estimator_reference.py (mpmath, 50 significant digits)",
    "from the raw arrays in _tiny_instances.py.  Do not edit by hand.",
    '"""',
    "",
]

# ------------------------------------------------------------------ A
ones4 = [[1.0]] * 4
XA = build_design_rows(INSTANCE_A["avail"], INSTANCE_A["action"], INSTANCE_A["prob"], ones4, ones4)
yA = masked_outcomes(INSTANCE_A["avail"], INSTANCE_A["outcome"])
thetaA, residA, GA = fit(XA, yA)
lines += [
    "# Instance A: pooled least-squares coefficients (alpha_hat, beta_hat)",
    f'FIT_A_ALPHA = {mp.nstr(thetaA[0], 30)!r}',
    f'FIT_A_BETA = {mp.nstr(thetaA[1], 30)!r}',
    "",
]

# ------------------------------------------------------------------ B
ones3 = [[1.0]] * 3
XB = build_design_rows(INSTANCE_B["avail"], INSTANCE_B["action"], INSTANCE_B["prob"], ones3, ones3)
yB = masked_outcomes(INSTANCE_B["avail"], INSTANCE_B["outcome"])
thetaB, residB, GB = fit(XB, yB)
sig_u = sandwich(XB, residB, GB, INSTANCE_B["avail"], INSTANCE_B["prob"], ones3, 1, False, None)
sig_s = sandwich(XB, residB, GB, INSTANCE_B["avail"], INSTANCE_B["prob"], ones3, 1, True, "summed")
sig_a = sandwich(XB, residB, GB, INSTANCE_B["avail"], INSTANCE_B["prob"], ones3, 1, True, "averaged")
lines += [
    "# Instance B: sandwich variances (p = 1, reported as scalars)",
    f'SANDWICH_B_UNADJUSTED = {mp.nstr(sig_u[0, 0], 30)!r}',
    f'SANDWICH_B_ADJUSTED_SUMMED = {mp.nstr(sig_s[0, 0], 30)!r}',
    f'SANDWICH_B_ADJUSTED_AVERAGED = {mp.nstr(sig_a[0, 0], 30)!r}',
    f'SANDWICH_B_TRACE_INFLATION = {bool(sig_s[0, 0] >= sig_u[0, 0])!r}',
    "",
]

# ------------------------------------------------------------------ C
C = instance_c_arrays()
Zc = C["Z"].tolist()
XC = build_design_rows(C["avail"].tolist(), C["action"].tolist(), 0.4, Zc, Zc)
# outcomes carry NaN markers at unavailable times; replace before mp sees them
outc = np.where(C["avail"] == 1, C["outcome"], 0.0).tolist()
yC = masked_outcomes(C["avail"].tolist(), outc)
thetaC, residC, GC = fit(XC, yC)
sigC = sandwich(XC, residC, GC, C["avail"].tolist(), 0.4, Zc, 3, True, "summed")
betaC = thetaC[3:, :]
n_c = len(XC)
stat = (n_c * betaC.T * mp.lu_solve(sigC, betaC))[0, 0]
p, q = 3, 3
dfd = n_c - q - p
mult = mp.mpf(p) * (n_c - q - 1) / dfd
p_value = 1 - f_cdf(stat / mult, mp.mpf(p), mp.mpf(dfd))
lines += [
    "# Instance C: end-to-end test statistic (N=12, T=12, p=q=3,",
    "# hat-matrix adjusted, summed Gram)",
    f'STAT_C_BETA_HAT = {[mp.nstr(betaC[k, 0], 30) for k in range(3)]!r}',
    f'STAT_C_SIGMA_DIAG = {[mp.nstr(sigC[k, k], 30) for k in range(3)]!r}',
    f'STAT_C_STATISTIC = {mp.nstr(stat, 30)!r}',
    f'STAT_C_P_VALUE = {mp.nstr(p_value, 30)!r}',
    "",
]

import os

out_path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "_reference_estimator.py")
with open(out_path, "w") as fh:
    fh.write("\n".join(lines))
print("wrote tests/_reference_estimator.py")
print("A:", mp.nstr(thetaA[0], 20), mp.nstr(thetaA[1], 20))
print("B:", mp.nstr(sig_u[0, 0], 20), mp.nstr(sig_s[0, 0], 20), mp.nstr(sig_a[0, 0], 20))
print("C stat:", mp.nstr(stat, 20), "p:", mp.nstr(p_value, 20))
