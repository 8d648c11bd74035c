"""Quasi-maximum-likelihood estimation for network autoregressions.

Count panels are fitted by maximizing the working Poisson likelihood
(contemporaneous independence), continuous panels by least squares.  Both
report the sandwich covariance H^-1 B H^-1, where H is the observed
Hessian of the quasi-likelihood and B the outer product of per-time score
contributions; B captures the cross-sectional dependence the working
likelihood ignores.

Time indexing: the first column of a panel conditions the recursion, so
all sums run over the remaining T-1 time points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dgp import Panel
from .model import ModelSpec, hess_elementwise, jac_elementwise, mean_elementwise
from .netgraph import Network

__all__ = [
    "FitResult",
    "lagged_design",
    "poisson_quasi_loglik",
    "poisson_score",
    "poisson_hessian",
    "gaussian_quasi_loglik",
    "ols_fit_linear",
    "qmle_fit",
    "sandwich_cov",
]

_LOWER = 1e-8          # box lower bound for count-domain coordinates
_LAM_FLOOR = 1e-12     # intensities below this signal an inadmissible theta


@dataclass
class FitResult:
    """Estimate, curvature matrices and sandwich standard errors."""

    theta_hat: np.ndarray
    loglik: float
    score_at_opt: np.ndarray
    hessian: np.ndarray
    opg: np.ndarray
    cov: np.ndarray
    se: np.ndarray
    iterations: int
    converged: bool
    method: str
    family: str
    domain: str
    sigma2_hat: Optional[float] = None
    jitter_applied: int = 0
    n_obs: int = 0

    def to_dict(self) -> dict:
        return {
            "theta_hat": [float(v) for v in self.theta_hat],
            "se": [float(v) for v in self.se],
            "loglik": float(self.loglik),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "method": self.method,
            "family": self.family,
            "domain": self.domain,
            "sigma2_hat": None if self.sigma2_hat is None else float(self.sigma2_hat),
            "jitter_applied": int(self.jitter_applied),
        }


def lagged_design(panel: Panel, net: Network):
    """Split a panel into response and lagged regressors.

    Returns (y_now, y_lag, x_lag), each of shape (N, T-1), where x_lag is
    the neighbour average of y_lag.
    """
    v = panel.values
    if v.shape[0] != net.n:
        raise ValueError(f"panel has {v.shape[0]} nodes, network has {net.n}")
    if v.shape[1] < 2:
        raise ValueError("need at least two time points")
    y_lag = v[:, :-1]
    return v[:, 1:], y_lag, net.w @ y_lag


def _spec_at(spec: ModelSpec, theta) -> ModelSpec:
    return spec if theta is None else spec.with_active(np.asarray(theta, dtype=float))


def _panel_mean(spec: ModelSpec, x_lag, y_lag) -> np.ndarray:
    return mean_elementwise(spec, x_lag, y_lag)


def _per_time_scores(jac: np.ndarray, resid: np.ndarray) -> np.ndarray:
    """(T-1) x m matrix of score contributions summed over nodes."""
    return np.einsum("ant,nt->ta", jac, resid)


def poisson_quasi_loglik(panel: Panel, net: Network, spec: ModelSpec,
                         theta=None) -> float:
    """Working Poisson log-likelihood sum(Y log lam - lam) over usable cells."""
    sp = _spec_at(spec, theta)
    y_now, y_lag, x_lag = lagged_design(panel, net)
    if np.any(panel.values < 0):
        raise ValueError("count panel has negative entries")
    lam = _panel_mean(sp, x_lag, y_lag)
    if lam.min() <= _LAM_FLOOR:
        raise ValueError("intensity fell below the admissible floor")
    return float(np.sum(np.where(y_now > 0, y_now * np.log(lam), 0.0) - lam))


def poisson_score(panel: Panel, net: Network, spec: ModelSpec, theta=None,
                  per_time: bool = False):
    """Gradient sum (Y/lam - 1) dlam/dtheta; per-time rows on request."""
    sp = _spec_at(spec, theta)
    y_now, y_lag, x_lag = lagged_design(panel, net)
    lam = _panel_mean(sp, x_lag, y_lag)
    if lam.min() <= _LAM_FLOOR:
        raise ValueError("intensity fell below the admissible floor")
    jac = jac_elementwise(sp, x_lag, y_lag)
    resid = y_now / lam - 1.0
    s_t = _per_time_scores(jac, resid)
    return (s_t.sum(axis=0), s_t) if per_time else s_t.sum(axis=0)


def _poisson_hess_arrays(sp: ModelSpec, jac, y_now, lam, x_lag, y_lag) -> np.ndarray:
    h = np.einsum("ant,nt,bnt->ab", jac, y_now / (lam * lam), jac)
    curv = hess_elementwise(sp, x_lag, y_lag)
    if curv is not None:
        resid = y_now / lam - 1.0
        for row, col, vals in curv:
            adj = float(np.sum(resid * vals))
            h[row, col] -= adj
            if row != col:
                h[col, row] -= adj
    return 0.5 * (h + h.T)


def poisson_hessian(panel: Panel, net: Network, spec: ModelSpec,
                    theta=None) -> np.ndarray:
    """Observed information: sum (Y/lam^2) dd' - sum (Y/lam - 1) d2lam."""
    sp = _spec_at(spec, theta)
    y_now, y_lag, x_lag = lagged_design(panel, net)
    lam = _panel_mean(sp, x_lag, y_lag)
    if lam.min() <= _LAM_FLOOR:
        raise ValueError("intensity fell below the admissible floor")
    jac = jac_elementwise(sp, x_lag, y_lag)
    return _poisson_hess_arrays(sp, jac, y_now, lam, x_lag, y_lag)


def gaussian_quasi_loglik(panel: Panel, net: Network, spec: ModelSpec,
                          theta=None) -> float:
    """-0.5 * sum of squared residuals, so its gradient is dlam'(Y - lam)."""
    sp = _spec_at(spec, theta)
    y_now, y_lag, x_lag = lagged_design(panel, net)
    resid = y_now - _panel_mean(sp, x_lag, y_lag)
    return float(-0.5 * np.sum(resid * resid))


def sandwich_cov(hessian: np.ndarray, opg: np.ndarray):
    """H^-1 B H^-1 with a recorded ridge fallback for near-singular H.

    Returns (cov, se, jitter_count); the NT normalizations of H and B
    cancel, so raw sums are expected.
    """
    m = hessian.shape[0]
    h = 0.5 * (hessian + hessian.T)
    jitter = 0
    delta = 1e-8 * np.trace(h) / m
    for attempt in range(3):
        try:
            hinv = np.linalg.inv(h)
            if not np.all(np.isfinite(hinv)):
                raise np.linalg.LinAlgError
            break
        except np.linalg.LinAlgError:
            if attempt == 2:
                raise np.linalg.LinAlgError("hessian is irreparably singular")
            h = h + max(delta, 1e-12) * np.eye(m)
            jitter += 1
    cov = hinv @ opg @ hinv
    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return cov, se, jitter


def ols_fit_linear(panel: Panel, net: Network) -> FitResult:
    """Closed-form least squares of Y_t on (1, X_{t-1}, Y_{t-1})."""
    y_now, y_lag, x_lag = lagged_design(panel, net)
    if panel.t < 3:
        raise ValueError("least squares needs T >= 3")
    n, tm1 = y_now.shape
    design = np.column_stack(
        [np.ones(n * tm1), x_lag.ravel(order="F"), y_lag.ravel(order="F")])
    yvec = y_now.ravel(order="F")
    theta, _, rank, _ = np.linalg.lstsq(design, yvec, rcond=None)
    if rank < 3:
        raise ValueError("design matrix is rank deficient")

    spec = ModelSpec.linear(theta, domain="cont")
    lam = _panel_mean(spec, x_lag, y_lag)
    resid = y_now - lam
    jac = jac_elementwise(spec, x_lag, y_lag)
    s_t = _per_time_scores(jac, resid)
    hess = np.einsum("ant,bnt->ab", jac, jac)
    opg = s_t.T @ s_t
    cov, se, jitter = sandwich_cov(hess, opg)
    sigma2 = float(np.mean(resid * resid))
    return FitResult(
        theta_hat=theta, loglik=float(-0.5 * np.sum(resid * resid)),
        score_at_opt=s_t.sum(axis=0), hessian=hess, opg=opg, cov=cov, se=se,
        iterations=1, converged=True, method="OLS", family="linear",
        domain="cont", sigma2_hat=sigma2, jitter_applied=jitter,
        n_obs=n * tm1)


def _default_start(panel: Panel, spec: ModelSpec) -> np.ndarray:
    theta = np.full(spec.n_active, 0.2)
    theta[0] = max(float(np.mean(panel.values)) * 0.6, _LOWER)
    if spec.n_active > 3:
        theta[3:] = _LOWER
    return theta


def qmle_fit(panel: Panel, net: Network, spec: ModelSpec, theta0=None,
             max_iter: int = 200, score_tol: float = 1e-6,
             step_tol: float = 1e-9) -> FitResult:
    """Newton iterations with step halving for the working Poisson likelihood.

    Count-domain coordinates are projected onto [1e-8, inf); convergence is
    declared when max|score| < score_tol * (number of cells) or the step
    collapses below step_tol.
    """
    if spec.domain != "count":
        raise ValueError("qmle_fit expects a count-domain spec")
    if np.any(panel.values < 0) or not panel.is_count():
        raise ValueError("qmle_fit expects a nonnegative integer panel")
    y_now, y_lag, x_lag = lagged_design(panel, net)
    n_obs = y_now.size

    def project(t):
        return np.maximum(t, _LOWER)

    theta = project(np.asarray(theta0, dtype=float) if theta0 is not None
                    else _default_start(panel, spec))

    def loglik_at(t):
        sp = spec.with_active(t)
        lam = _panel_mean(sp, x_lag, y_lag)
        if lam.min() <= _LAM_FLOOR or not np.all(np.isfinite(lam)):
            return -np.inf, None
        ll = float(np.sum(np.where(y_now > 0, y_now * np.log(lam), 0.0) - lam))
        return ll, lam

    ll, lam = loglik_at(theta)
    if not np.isfinite(ll):
        raise ValueError("starting value is inadmissible")

    jitter_total = 0
    converged = False
    iters = 0
    for iters in range(1, max_iter + 1):
        sp = spec.with_active(theta)
        jac = jac_elementwise(sp, x_lag, y_lag)
        resid = y_now / lam - 1.0
        score = np.einsum("ant,nt->a", jac, resid)
        if np.max(np.abs(score)) < score_tol * n_obs:
            converged = True
            break
        hess = _poisson_hess_arrays(sp, jac, y_now, lam, x_lag, y_lag)
        delta = 1e-8 * np.trace(hess) / hess.shape[0]
        step = None
        for attempt in range(3):
            try:
                step = np.linalg.solve(hess, score)
                if np.all(np.isfinite(step)):
                    break
            except np.linalg.LinAlgError:
                pass
            if attempt == 2:
                raise np.linalg.LinAlgError("singular hessian after ridge jitter")
            hess = hess + max(delta, 1e-12) * np.eye(hess.shape[0])
            jitter_total += 1

        scale = 1.0
        improved = False
        for _ in range(40):
            cand = project(theta + scale * step)
            ll_new, lam_new = loglik_at(cand)
            if ll_new >= ll - 1e-12:
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
        moved = np.max(np.abs(cand - theta))
        theta, ll, lam = cand, ll_new, lam_new
        if moved < step_tol:
            converged = True
            break

    sp = spec.with_active(theta)
    jac = jac_elementwise(sp, x_lag, y_lag)
    resid = y_now / lam - 1.0
    score = np.einsum("ant,nt->a", jac, resid)
    if not converged and np.max(np.abs(score)) < score_tol * n_obs:
        converged = True
    s_t = _per_time_scores(jac, resid)
    hess = _poisson_hess_arrays(sp, jac, y_now, lam, x_lag, y_lag)
    opg = s_t.T @ s_t
    cov, se, jitter = sandwich_cov(hess, opg)
    if not converged:
        warnings.warn("QMLE did not converge; returning the best iterate")
    return FitResult(
        theta_hat=theta, loglik=ll, score_at_opt=score, hessian=hess,
        opg=opg, cov=cov, se=se, iterations=iters, converged=converged,
        method="QMLE", family=spec.family, domain="count",
        jitter_applied=jitter_total + jitter, n_obs=n_obs)
