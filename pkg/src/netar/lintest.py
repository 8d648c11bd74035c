"""Quasi-score linearity test with identifiable tested parameters.

The null linear model is fitted (QMLE for counts, least squares for
continuous data) and the partial score of the nonlinear coordinates is
standardized by the quasi-likelihood covariance correction

    Sigma = B22 - H21 H11^-1 B12 - B21 H11^-1 H12
            + H21 H11^-1 B11 H11^-1 H12,

which collapses to the Schur complement of H when B = H (true-likelihood
case) and to Sigma_B = B22 - B21 B11^-1 B12 on the continuous path, where
errors are i.i.d.  The statistic is referred to a chi-square with as many
degrees of freedom as tested coordinates; this is unaffected by the
tested value sitting on the parameter boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaincc

from .dgp import Panel
from .model import ModelSpec, hess_elementwise, jac_elementwise
from .netgraph import Network
from .qmle import FitResult, lagged_design, ols_fit_linear, qmle_fit

__all__ = [
    "ScoreTestResult",
    "chi2_sf",
    "sigma_correction",
    "schur_complement",
    "psd_pinv",
    "lm_test",
]


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail chi-square probability via the regularized gamma Q."""
    if df < 1:
        raise ValueError("df must be a positive integer")
    if x < 0:
        raise ValueError("statistic must be nonnegative")
    return float(gammaincc(df / 2.0, x / 2.0))


def schur_complement(mat: np.ndarray, m1: int) -> np.ndarray:
    a, b = mat[:m1, :m1], mat[:m1, m1:]
    c, d = mat[m1:, :m1], mat[m1:, m1:]
    out = d - c @ np.linalg.solve(a, b)
    return 0.5 * (out + out.T)


def sigma_correction(hess: np.ndarray, opg: np.ndarray, m1: int) -> np.ndarray:
    """Covariance of the partial score at the constrained fit.

    hess and opg are the full m x m curvature and outer-product matrices
    with the linear block leading; m1 is the linear block size.
    """
    if hess.shape != opg.shape or hess.shape[0] != hess.shape[1]:
        raise ValueError("hess and opg must be square with equal shapes")
    if not 0 < m1 < hess.shape[0]:
        raise ValueError("linear block size must be interior")
    h11, h12 = hess[:m1, :m1], hess[:m1, m1:]
    h21 = hess[m1:, :m1]
    b11, b12 = opg[:m1, :m1], opg[:m1, m1:]
    b21, b22 = opg[m1:, :m1], opg[m1:, m1:]
    a = h21 @ np.linalg.inv(h11)
    out = b22 - a @ b12 - b21 @ a.T + a @ b11 @ a.T
    return 0.5 * (out + out.T)


def psd_pinv(mat: np.ndarray, rel_cutoff: float = 1e-12):
    """Pseudo-inverse of a nominally PSD matrix via eigendecomposition.

    Eigenvalues below rel_cutoff times the largest (and all negative ones,
    which are sampling noise here) are treated as zero.  Returns
    (pinv, rank).
    """
    sym = 0.5 * (mat + mat.T)
    vals, vecs = np.linalg.eigh(sym)
    top = vals.max(initial=0.0)
    keep = vals > max(top, 0.0) * rel_cutoff
    if top <= 0.0:
        return np.zeros_like(sym), 0
    inv_vals = np.where(keep, 1.0 / np.where(keep, vals, 1.0), 0.0)
    return (vecs * inv_vals) @ vecs.T, int(keep.sum())


@dataclass
class ScoreTestResult:
    statistic: float
    df: int
    p_value: float
    method: str
    partial_score: np.ndarray
    sigma_used: np.ndarray
    null_fit: FitResult

    def to_dict(self) -> dict:
        return {
            "statistic": float(self.statistic),
            "df": int(self.df),
            "p_value": float(self.p_value),
            "method": self.method,
            "null_fit": self.null_fit.to_dict(),
        }


def _lm_from_parts(partial_score: np.ndarray, sigma: np.ndarray):
    pinv, rank = psd_pinv(sigma)
    if rank < partial_score.shape[0]:
        raise np.linalg.LinAlgError("score covariance is singular")
    stat = float(partial_score @ pinv @ partial_score)
    return max(stat, 0.0), pinv


def lm_test(panel: Panel, net: Network, alt_spec: ModelSpec,
            null_fit: Optional[FitResult] = None) -> ScoreTestResult:
    """Linearity test against the intercept-drift alternative.

    The constrained fit is the linear model; the extra Jacobian column at
    the null is -b0*log(1 + X) (counts) or -b0*log(1 + |X|) (continuous).
    The count path uses the full four-term covariance correction, the
    continuous path its OPG simplification.
    """
    if alt_spec.family != "drift":
        raise ValueError("the identifiable-parameter test is against the drift family")
    domain = alt_spec.domain
    linear = ModelSpec.linear(alt_spec.beta, domain)

    if null_fit is None:
        null_fit = (qmle_fit(panel, net, linear) if domain == "count"
                    else ols_fit_linear(panel, net))
    if not null_fit.converged:
        raise RuntimeError("null fit did not converge")
    beta = null_fit.theta_hat

    y_now, y_lag, x_lag = lagged_design(panel, net)
    # alternative evaluated at the constrained point (beta_hat, g = 0)
    at_null = ModelSpec("drift", domain, tuple(beta), (0.0,))
    jac = jac_elementwise(at_null, x_lag, y_lag)
    lam = beta[0] + beta[1] * x_lag + beta[2] * y_lag

    if domain == "count":
        resid = y_now / lam - 1.0
        s_t = np.einsum("ant,nt->ta", jac, resid)
        hess = np.einsum("ant,nt,bnt->ab", jac, y_now / (lam * lam), jac)
        for row, col, vals in hess_elementwise(at_null, x_lag, y_lag):
            adj = float(np.sum(resid * vals))
            hess[row, col] -= adj
            if row != col:
                hess[col, row] -= adj
        hess = 0.5 * (hess + hess.T)
        opg = s_t.T @ s_t
        sigma = sigma_correction(hess, opg, 3)
    else:
        resid = y_now - lam
        s_t = np.einsum("ant,nt->ta", jac, resid)
        opg = s_t.T @ s_t
        sigma = schur_complement(opg, 3)

    partial = s_t.sum(axis=0)[3:]
    stat, _ = _lm_from_parts(partial, sigma)
    df = 1
    return ScoreTestResult(
        statistic=stat, df=df, p_value=chi2_sf(stat, df), method="chi2",
        partial_score=partial, sigma_used=sigma, null_fit=null_fit)
