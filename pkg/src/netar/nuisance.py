"""Linearity tests when the smoothing or threshold rate is not identifiable.

Under the linear null the rate g of the smooth-transition and threshold
families disappears, so the quasi-score statistic is profiled over a grid
of g values.  For each grid point the model is linear in the identifiable
parameters with regressor matrix Z_t(g) = (1, X_{t-1}, Y_{t-1}, h_t(g)),
where h is the family's nonlinear regressor block:

    stnar  h_it(g) = exp(-g * X^2) * X                       (one column)
    tnar   h_it(g) = (1, X, Y) * 1{X <= g}                   (three columns)

The supremum or average of the profile is calibrated either by the Davies
upper bound (scalar smooth nuisance only) or by Hansen's multiplier
bootstrap, which perturbs the per-time score contributions with a single
shared N(0,1) weight per time index.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .dgp import Panel
from .lintest import chi2_sf, psd_pinv, sigma_correction
from .model import ModelSpec
from .netgraph import Network
from .qmle import FitResult, lagged_design, ols_fit_linear, qmle_fit

__all__ = [
    "GammaGrid",
    "LMProfile",
    "ProfileTestResult",
    "default_grid",
    "lm_profile",
    "aggregate",
    "davies_pvalue",
    "score_bootstrap",
    "run_profile_test",
]

_K2 = {"stnar": 1, "tnar": 3}


@dataclass(frozen=True)
class GammaGrid:
    """Strictly increasing evaluation points for the nuisance rate."""

    values: np.ndarray
    source: str = "explicit"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("grid needs at least one point")
        if np.any(np.diff(vals) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size


def default_grid(family: str, panel: Optional[Panel] = None,
                 net: Optional[Network] = None, lo: Optional[float] = None,
                 hi: Optional[float] = None, num: int = 10) -> GammaGrid:
    """Family-specific default grid.

    stnar: equidistant points on [0.05, 2] (overridable bounds).
    tnar: per-node 10 and 90 percent quantiles of the neighbour averages;
    the extremes are the minimum of the former and maximum of the latter,
    trimmed to the open range of the observed X so the indicator never
    degenerates.
    """
    if family == "stnar":
        lo = 0.05 if lo is None else lo
        hi = 2.0 if hi is None else hi
        return GammaGrid(np.linspace(lo, hi, num), source="stnar-default")
    if family != "tnar":
        raise ValueError("default grids exist for stnar and tnar only")
    if panel is None or net is None:
        raise ValueError("the tnar quantile rule needs the panel and network")
    _, _, x_lag = lagged_design(panel, net)
    if np.ptp(x_lag) <= 1e-12 * max(1.0, float(np.abs(x_lag).max())):
        raise ValueError("neighbour averages are constant; no usable threshold range")
    q10 = np.quantile(x_lag, 0.10, axis=1)
    q90 = np.quantile(x_lag, 0.90, axis=1)
    lo = float(q10.min()) if lo is None else lo
    hi = float(q90.max()) if hi is None else hi
    pts = np.linspace(lo, hi, num)
    x_min, x_max = float(x_lag.min()), float(x_lag.max())
    inside = pts[(pts > x_min) & (pts < x_max)]
    if inside.size < 1:
        raise ValueError("quantile rule produced no interior threshold values")
    if inside.size < pts.size:
        warnings.warn(f"dropped {pts.size - inside.size} threshold grid point(s) "
                      "outside the observed X range")
    return GammaGrid(inside, source="tnar-quantile")


@dataclass
class LMProfile:
    """Profile of the quasi-score statistic over the nuisance grid.

    per_time_scores[k] holds the (T-1) x k2 effective partial score
    contributions at grid point k: the nonlinear-block score with the
    linear-block score projected out through the curvature matrix,
    s*_t = s_t^(2) - H21 H11^-1 s_t^(1).  Their total equals the partial
    score at the constrained fit (where the linear-block score sums to
    zero) and their outer product equals the corrected covariance, which
    is what lets the multiplier bootstrap reuse them directly.
    sigma_pinv[k] is the pseudo-inverse of that covariance.
    """

    grid: np.ndarray
    lm: np.ndarray
    k2: int
    per_time_scores: list
    sigma_pinv: list
    family: str
    domain: str
    null_fit: FitResult
    dropped: list = field(default_factory=list)


def _h_columns(family: str, gamma: float, x_lag: np.ndarray, y_lag: np.ndarray):
    if family == "stnar":
        return [np.exp(-gamma * x_lag * x_lag) * x_lag]
    ind = (x_lag <= gamma).astype(float)
    return [ind, x_lag * ind, y_lag * ind]


def _degenerate(family: str, cols) -> bool:
    if family == "tnar":
        ind = cols[0]
        frac = ind.mean()
        if frac == 0.0 or frac == 1.0:
            return True
    return any(np.max(np.abs(c)) == 0.0 for c in cols)


def lm_profile(panel: Panel, net: Network, family: str, grid: GammaGrid,
               domain: str, null_fit: Optional[FitResult] = None) -> LMProfile:
    """Quasi-score statistic at each grid point of the nuisance rate.

    The null linear fit is shared across grid points.  Count panels use
    quasi-Poisson score weights (Y/lam - 1) and Y/lam^2 curvature weights;
    continuous panels use raw residuals and unweighted curvature.
    Degenerate grid points (vanishing or collinear nonlinear regressors)
    are dropped with a warning rather than failing the whole profile.
    """
    if family not in _K2:
        raise ValueError("profiled testing applies to the stnar and tnar families")
    k2 = _K2[family]

    if null_fit is None:
        if domain == "count":
            start = ModelSpec.linear((1.0, 0.2, 0.2), "count")
            null_fit = qmle_fit(panel, net, start)
        else:
            null_fit = ols_fit_linear(panel, net)
    if not null_fit.converged:
        raise RuntimeError("null fit did not converge")
    beta = null_fit.theta_hat

    y_now, y_lag, x_lag = lagged_design(panel, net)
    lam = beta[0] + beta[1] * x_lag + beta[2] * y_lag
    if domain == "count":
        if lam.min() <= 0:
            raise RuntimeError("fitted intensities are not positive")
        resid = y_now / lam - 1.0
        curf = y_now / (lam * lam)
    else:
        resid = y_now - lam
        curf = None

    ones = np.ones_like(x_lag)
    kept_g, kept_lm, kept_scores, kept_pinv, dropped = [], [], [], [], []
    for gamma in grid.values:
        cols = _h_columns(family, gamma, x_lag, y_lag)
        if _degenerate(family, cols):
            dropped.append((float(gamma), "degenerate nonlinear regressors"))
            continue
        z = np.stack([ones, x_lag, y_lag, *cols])
        s_t = np.einsum("ant,nt->ta", z, resid)
        if curf is None:
            hess = np.einsum("ant,bnt->ab", z, z)
        else:
            hess = np.einsum("ant,nt,bnt->ab", z, curf, z)
        opg = s_t.T @ s_t
        try:
            sigma = sigma_correction(hess, opg, 3)
            proj = np.linalg.solve(hess[:3, :3], hess[:3, 3:]).T   # H21 H11^-1
        except np.linalg.LinAlgError:
            dropped.append((float(gamma), "singular linear-block curvature"))
            continue
        pinv, rank = psd_pinv(sigma)
        if rank < k2:
            dropped.append((float(gamma), "singular score covariance"))
            continue
        effective = s_t[:, 3:] - s_t[:, :3] @ proj.T
        total = effective.sum(axis=0)
        kept_g.append(float(gamma))
        kept_lm.append(max(float(total @ pinv @ total), 0.0))
        kept_scores.append(effective)
        kept_pinv.append(pinv)

    if dropped:
        warnings.warn(
            f"dropped {len(dropped)} grid point(s): "
            + "; ".join(f"g={g:.4g} ({why})" for g, why in dropped))
    if not kept_g:
        raise RuntimeError("all grid points were degenerate")
    return LMProfile(
        grid=np.array(kept_g), lm=np.array(kept_lm), k2=k2,
        per_time_scores=kept_scores, sigma_pinv=kept_pinv, family=family,
        domain=domain, null_fit=null_fit, dropped=dropped)


def aggregate(profile: LMProfile, g: str = "sup") -> float:
    """Collapse the profile with the sup or average functional."""
    if profile.lm.size == 0:
        raise ValueError("empty profile")
    if g == "sup":
        return float(profile.lm.max())
    if g == "ave":
        return float(profile.lm.mean())
    raise ValueError("aggregate must be 'sup' or 'ave'")


def davies_pvalue(profile: LMProfile) -> float:
    """Upper bound on the sup-test p-value for a scalar smooth nuisance.

    P(chi2_k2 >= M) + V * M^((k2-1)/2) * exp(-M/2) * 2^(-k2/2) / Gamma(k2/2)
    with M the profile supremum and V the total variation of sqrt(LM).
    Not applicable to the threshold family, whose profile is not smooth
    in the nuisance rate.
    """
    if profile.family == "tnar" or profile.k2 != 1:
        raise ValueError("the Davies bound requires a scalar smooth nuisance rate")
    if profile.lm.size < 2:
        raise ValueError("the total-variation term needs at least two grid points")
    m = float(profile.lm.max())
    root = np.sqrt(profile.lm)
    tv = float(np.abs(np.diff(root)).sum())
    k2 = profile.k2
    bound = chi2_sf(m, k2) + (
        tv * m ** ((k2 - 1) / 2.0) * math.exp(-m / 2.0)
        * 2.0 ** (-k2 / 2.0) / math.gamma(k2 / 2.0))
    return min(1.0, float(bound))


def score_bootstrap(profile: LMProfile, g: str = "sup", reps: int = 499,
                    seed: int = 0):
    """Multiplier-bootstrap p-value for the aggregated profile statistic.

    Each replication draws one N(0,1) weight per time index, shared across
    every grid point, and rebuilds the profile with the unperturbed score
    covariance; replication j uses the stream derived from (seed, j), so
    the result does not depend on execution order.  Returns
    (p_value, draws).
    """
    if reps < 1:
        raise ValueError("need at least one bootstrap replication")
    observed = aggregate(profile, g)
    tm1 = profile.per_time_scores[0].shape[0]
    weights = np.empty((tm1, reps))
    for j in range(reps):
        weights[:, j] = rng.normal(rng.stream(seed, 0xB5, j), tm1)

    stats = np.empty((len(profile.per_time_scores), reps))
    for k, (scores, pinv) in enumerate(zip(profile.per_time_scores,
                                           profile.sigma_pinv)):
        perturbed = scores.T @ weights              # k2 x reps
        stats[k] = np.maximum(np.einsum("kj,kl,lj->j", perturbed, pinv, perturbed),
                              0.0)
    draws = stats.max(axis=0) if g == "sup" else stats.mean(axis=0)
    p = float(np.mean(draws >= observed))
    return p, draws


@dataclass
class ProfileTestResult:
    """Aggregated profile statistics with their p-value approximations."""

    g_sup: float
    g_ave: float
    davies_p: Optional[float]
    boot_p: Optional[float]
    boot_reps: int
    total_variation: float
    seed: int
    profile: LMProfile

    def to_dict(self) -> dict:
        return {
            "g_sup": float(self.g_sup),
            "g_ave": float(self.g_ave),
            "davies_p": None if self.davies_p is None else float(self.davies_p),
            "boot_p": None if self.boot_p is None else float(self.boot_p),
            "boot_reps": int(self.boot_reps),
            "grid": [float(v) for v in self.profile.grid],
            "profile": [float(v) for v in self.profile.lm],
            "dropped_points": [[g, why] for g, why in self.profile.dropped],
            "seed": int(self.seed),
            "null_fit": self.profile.null_fit.to_dict(),
        }


def run_profile_test(panel: Panel, net: Network, family: str, domain: str,
                     grid: Optional[GammaGrid] = None, method: str = "both",
                     agg: str = "sup", reps: int = 499, seed: int = 0,
                     null_fit: Optional[FitResult] = None) -> ProfileTestResult:
    """Profile the statistic and attach Davies and/or bootstrap p-values."""
    if grid is None:
        grid = default_grid(family, panel=panel, net=net)
    profile = lm_profile(panel, net, family, grid, domain, null_fit=null_fit)
    root = np.sqrt(profile.lm)
    tv = float(np.abs(np.diff(root)).sum()) if profile.lm.size > 1 else 0.0

    davies = None
    boot = None
    if method == "davies" or (method == "both" and profile.family == "stnar"):
        davies = davies_pvalue(profile)
    if method in ("bootstrap", "both"):
        boot, _ = score_bootstrap(profile, g=agg, reps=reps, seed=seed)
    return ProfileTestResult(
        g_sup=aggregate(profile, "sup"), g_ave=aggregate(profile, "ave"),
        davies_p=davies, boot_p=boot, boot_reps=reps if boot is not None else 0,
        total_variation=tv, seed=seed, profile=profile)
