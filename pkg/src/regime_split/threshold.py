"""Profiled least-squares estimation of a single threshold.

Rows are split by ``threshold_var > tau`` (regime A, the high state) versus
``<= tau`` (regime B), a separate linear model is fitted in each regime and
tau is chosen to minimize the summed SSE. Because the split only changes when
tau crosses an observed value of the threshold variable, the profile is
evaluated from one sorted pass: the SSE of every leading block of sorted rows
(regime B) and every trailing block (regime A) comes from the Givens kernels.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataio import Dataset, RegressorMatrix
from .errors import DegenerateSplitError, EstimationError
from .regress import ols

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    """Candidate thresholds between two quantiles of the threshold variable.

    ``points`` is ``"observed"`` (every distinct observed value inside the
    window) or an integer ``n`` for ``n`` equally spaced points.
    """

    lower_quantile: float = 0.05
    upper_quantile: float = 0.95
    points: object = "observed"

    def __post_init__(self):
        if not 0 < self.lower_quantile < self.upper_quantile < 1:
            raise ValueError("grid quantiles must satisfy 0 < lower < upper < 1")
        if self.points != "observed":
            if not isinstance(self.points, int) or self.points < 1:
                raise ValueError("points must be 'observed' or a positive integer")

    @classmethod
    def parse(cls, text: str, trim: float | None = None) -> "GridSpec":
        """Parse ``observed`` or ``equally-spaced:N``; ``trim`` sets both quantiles."""
        lo, hi = (0.05, 0.95) if trim is None else (trim, 1.0 - trim)
        text = text.strip()
        if text == "observed":
            return cls(lo, hi, "observed")
        if text.startswith("equally-spaced:"):
            return cls(lo, hi, int(text.split(":", 1)[1]))
        raise ValueError(f"unrecognized grid {text!r}")

    def label(self) -> str:
        pts = "observed" if self.points == "observed" else f"equally-spaced:{self.points}"
        return f"{pts}[{self.lower_quantile:g},{self.upper_quantile:g}]"

    def window(self, q) -> tuple:
        # empirical (inverted-cdf) quantiles are observed values, so an
        # equally spaced grid never reaches a split the observed grid lacks
        lo, hi = np.quantile(np.asarray(q, dtype=float),
                             [self.lower_quantile, self.upper_quantile], method="inverted_cdf")
        return float(lo), float(hi)

    def values(self, q) -> np.ndarray:
        lo, hi = self.window(q)
        if self.points == "observed":
            u = np.unique(np.asarray(q, dtype=float))
            return u[(u >= lo) & (u <= hi)]
        return np.linspace(lo, hi, self.points)


@dataclass(frozen=True)
class ThresholdFit:
    tau_hat: float
    tau: np.ndarray
    sse_profile: np.ndarray
    one_minus_r2: np.ndarray
    one_minus_r2_uncentered: np.ndarray
    coeffs_A: np.ndarray
    coeffs_B: np.ndarray
    sse: float
    mse: float
    regime_indicator: np.ndarray
    n_obs: int
    n_params: int
    grid: GridSpec = field(default_factory=GridSpec)

    @property
    def profile(self) -> list:
        return list(zip(self.tau.tolist(), self.sse_profile.tolist(), self.one_minus_r2.tolist()))

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.sse_profile)

    def to_dict(self) -> dict:
        return {
            "tau_hat": self.tau_hat,
            "sse": self.sse,
            "mse": self.mse,
            "n_obs": self.n_obs,
            "n_params_per_regime": self.n_params,
            "n_high": int(self.regime_indicator.sum()),
            "coeffs_A": self.coeffs_A.tolist(),
            "coeffs_B": self.coeffs_B.tolist(),
            "grid": self.grid.label(),
            "grid_points": int(self.tau.size),
            "feasible_points": int(self.feasible.sum()),
        }


@dataclass(frozen=True)
class ThresholdCI:
    level: float
    lower: float
    upper: float
    method: str
    upper_grid: float
    critical_value: float
    tau_hat: float

    def contains(self, tau: float) -> bool:
        """Membership in the union of accepted grid cells, ``[lower, upper)``."""
        if self.upper == self.upper_grid:
            return self.lower <= tau <= self.upper
        return self.lower <= tau < self.upper

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "lower": self.lower,
            "upper": self.upper,
            "upper_grid": self.upper_grid,
            "critical_value": self.critical_value,
            "method": self.method,
        }


@dataclass(frozen=True)
class RegimeLabels:
    index: tuple
    labels: np.ndarray
    tau: float

    def spans(self) -> list:
        """Contiguous runs of the high state as (first, last) quarters."""
        out = []
        start = None
        for q, flag in zip(self.index, self.labels):
            if flag and start is None:
                start = q
            if not flag and start is not None:
                out.append((start, prev))
                start = None
            prev = q
        if start is not None:
            out.append((start, prev))
        return out


def min_regime_rows(n_params: int) -> int:
    return n_params + 2


def objective_qt(design: RegressorMatrix, tau: float):
    """SSE and per-regime coefficients of the two-regime fit at ``tau``.

    Returns ``(sse, coeffs_A, coeffs_B)`` where regime A is
    ``threshold_var > tau``.
    """
    X = design.regressors
    y = design.response
    high = design.threshold_var > tau
    p = X.shape[1]
    for name, mask in (("A", high), ("B", ~high)):
        if mask.sum() <= p:
            raise DegenerateSplitError(
                f"regime {name} has {int(mask.sum())} rows at tau={tau:g}; need more than {p}")
    fit_a = ols(y[high], X[high], names=design.names)
    fit_b = ols(y[~high], X[~high], names=design.names)
    return fit_a.sse + fit_b.sse, fit_a.coefficients, fit_b.coefficients


def split_sse(X, y, q, taus, min_rows=None):
    """SSE of the two-regime fit at each candidate threshold.

    Infeasible candidates (a regime below ``min_rows`` rows or rank
    deficient) are returned as NaN.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    n, p = X.shape
    if min_rows is None:
        min_rows = min_regime_rows(p)
    order = np.argsort(q, kind="stable")
    qs = q[order]
    Xs = X[order]
    ys = y[order]
    low_sse, low_ok = kernels.prefix_sse(Xs, ys)
    high_sse, high_ok = kernels.prefix_sse(Xs[::-1], ys[::-1])
    k = np.searchsorted(qs, np.asarray(taus, dtype=float), side="right")
    m = n - k
    ok = (k >= min_rows) & (m >= min_rows) & low_ok[k] & high_ok[m]
    return np.where(ok, low_sse[k] + high_sse[m], np.nan)


def profile_grid(design: RegressorMatrix, grid: GridSpec | None = None) -> ThresholdFit:
    """Grid-search estimate of the threshold.

    Ties in the profiled SSE go to the smallest candidate.
    """
    grid = grid or GridSpec()
    X = design.regressors
    y = design.response
    q = design.threshold_var
    taus = grid.values(q)
    if taus.size == 0:
        raise EstimationError("threshold grid is empty after trimming")
    sse = split_sse(X, y, q, taus)
    if not np.isfinite(sse).any():
        raise EstimationError("no feasible threshold on the grid")
    best = int(np.nanargmin(sse))  # first occurrence, i.e. smallest tau
    tau_hat = float(taus[best])
    fit_sse, coef_a, coef_b = objective_qt(design, tau_hat)
    centered = y - y.mean()
    tss = float(centered @ centered)
    uss = float(y @ y)
    high = q > tau_hat
    logger.debug("profile minimum %.6g at tau=%.4g over %d candidates", sse[best], tau_hat,
                 taus.size)
    return ThresholdFit(
        tau_hat=tau_hat,
        tau=taus,
        sse_profile=sse,
        one_minus_r2=sse / tss if tss > 0 else np.full_like(sse, np.nan),
        one_minus_r2_uncentered=sse / uss if uss > 0 else np.full_like(sse, np.nan),
        coeffs_A=coef_a,
        coeffs_B=coef_b,
        sse=fit_sse,
        mse=fit_sse / len(y),
        regime_indicator=high,
        n_obs=len(y),
        n_params=X.shape[1],
        grid=grid,
    )


def second_threshold_scan(design: RegressorMatrix, cap: float,
                          grid: GridSpec | None = None) -> ThresholdFit:
    """Profile the threshold again on the rows with ``threshold_var < cap``."""
    grid = grid or GridSpec()
    lo, _ = grid.window(design.threshold_var)
    if cap <= lo:
        raise EstimationError(f"cap {cap:g} lies below the lower trim point {lo:g}")
    sub = design.subset(design.threshold_var < cap)
    if len(sub) < 2 * min_regime_rows(design.regressors.shape[1]):
        raise EstimationError(f"only {len(sub)} rows below cap {cap:g}")
    return profile_grid(sub, grid)


def lr_critical_value(level: float) -> float:
    """Quantile of the limiting threshold likelihood-ratio law."""
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    return -2.0 * math.log(1.0 - math.sqrt(level))


def lr_statistic(fit: ThresholdFit) -> np.ndarray:
    s_hat = np.nanmin(fit.sse_profile)
    with np.errstate(divide="ignore", invalid="ignore"):
        if s_hat > 0:
            return fit.n_obs * (fit.sse_profile - s_hat) / s_hat
        return np.where(fit.sse_profile <= 0, 0.0, np.inf)


def threshold_ci(design: RegressorMatrix, fit: ThresholdFit, level: float = 0.95) -> ThresholdCI:
    """Confidence set for the threshold by inverting the LR statistic.

    The accepted set is every grid point whose LR value is at most the
    critical value. Each accepted observed value stands for the cell up to the
    next observed value of the threshold variable, so ``upper`` is the right
    edge of the highest accepted cell and ``upper_grid`` the grid point itself.
    """
    if fit.n_obs != len(design):
        raise EstimationError("fit was not produced from this design")
    crit = lr_critical_value(level)
    lr = lr_statistic(fit)
    accepted = np.isfinite(lr) & (lr <= crit)
    if not accepted.any():
        raise EstimationError(f"LR inversion at level {level} is empty; point interval "
                              f"{fit.tau_hat:g}")
    taus = fit.tau[accepted]
    lower = float(taus.min())
    upper_grid = float(taus.max())
    q = np.unique(design.threshold_var)
    above = q[q > upper_grid]
    upper = float(above[0]) if above.size else upper_grid
    return ThresholdCI(level, lower, upper, "lr-inversion", upper_grid, crit, fit.tau_hat)


def regime_labels(dataset: Dataset, tau: float) -> RegimeLabels:
    """High-state labels ``unemp[t-1] > tau`` for every quarter from the second on."""
    lagged = dataset.unemp[:-1]
    return RegimeLabels(dataset.index[1:], lagged > tau, float(tau))
