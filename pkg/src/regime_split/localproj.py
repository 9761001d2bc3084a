"""State-dependent local projections."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .dataio import Dataset, RegressorMatrix, build_design
from .errors import (ContractError, DegenerateSplitError, EstimationError, InsufficientDataError,
                     SingularDesignError)
from .regress import CovMatrix, hac_cov, ols

logger = logging.getLogger(__name__)

STATES = ("high", "low")


@dataclass(frozen=True)
class LpFit:
    h: int
    beta: dict
    se: dict
    coefficients: np.ndarray
    cov: CovMatrix
    n_obs: int
    sse: float


def state_blocks(X, indicator):
    """Interact every column with the high and low state dummies.

    An empty state contributes no columns; the returned slices locate each
    state's block (None when absent).
    """
    ind = np.asarray(indicator, dtype=bool)
    blocks, where = [], {}
    col = 0
    for name, mask in (("high", ind), ("low", ~ind)):
        if mask.any():
            blocks.append(X * mask[:, None])
            where[name] = slice(col, col + X.shape[1])
            col += X.shape[1]
        else:
            where[name] = None
    return np.column_stack(blocks), where


def forward(series, positions, h):
    return np.asarray(series)[np.asarray(positions) + h]


def lp_fit(design: RegressorMatrix, dataset: Dataset, indicator, h: int,
           response: str = "gdp", bandwidth: int | None = None) -> LpFit:
    """One horizon of the projection of ``x_{t+h}`` on state-interacted regressors.

    The state indicator is the one in force at t-1 and is held fixed across
    horizons. Coefficients on the shock are returned per state with
    Newey-West standard errors (bandwidth ``h + 1`` unless given).
    """
    if h < 0:
        raise ContractError("horizon must be nonnegative")
    indicator = np.asarray(indicator, dtype=bool)
    if indicator.shape != (len(design),):
        raise ContractError("indicator must have one entry per design row")
    keep = design.positions + h < len(dataset)
    X = design.regressors[keep]
    ind = indicator[keep]
    y = forward(dataset.series(response), design.positions[keep], h)
    p = X.shape[1]
    if len(y) <= p:
        raise InsufficientDataError(f"{len(y)} rows left at h={h} for {p} regressors")
    for name, mask in (("high", ind), ("low", ~ind)):
        if 0 < mask.sum() <= p:
            raise DegenerateSplitError(f"state {name} has {int(mask.sum())} rows at h={h}")
    Z, where = state_blocks(X, ind)
    try:
        fit = ols(y, Z)
    except SingularDesignError as exc:
        raise DegenerateSplitError(f"state-interacted design is singular at h={h}: {exc}") from None
    bw = h + 1 if bandwidth is None else bandwidth
    cov = hac_cov(fit, Z, min(bw, len(y) - 1))
    beta, se = {}, {}
    for name in STATES:
        sl = where[name]
        if sl is None:
            beta[name] = se[name] = np.nan
        else:
            j = sl.stop - 1  # shock is the last regressor
            beta[name] = float(fit.coefficients[j])
            se[name] = float(np.sqrt(cov.matrix[j, j]))
    return LpFit(h, beta, se, fit.coefficients, cov, len(y), fit.sse)


@dataclass(frozen=True)
class IrfResult:
    horizons: np.ndarray
    response_variable: str
    state_paths: dict
    indicator_tau: float
    level: float
    shock_scale: float = 1.0
    skipped: dict = field(default_factory=dict)

    def rows(self):
        for state in STATES:
            path = self.state_paths[state]
            for i, h in enumerate(self.horizons):
                yield (int(h), state, path["beta"][i], path["se"][i], path["lo"][i], path["hi"][i])

    def to_dict(self) -> dict:
        return {
            "response": self.response_variable,
            "tau": self.indicator_tau,
            "level": self.level,
            "shock_scale": self.shock_scale,
            "horizons": self.horizons.tolist(),
            "states": {s: {k: np.asarray(v).tolist() for k, v in p.items()}
                       for s, p in self.state_paths.items()},
            "skipped": {str(k): v for k, v in self.skipped.items()},
        }


def irf(dataset: Dataset, tau: float, H: int = 19, response: str = "gdp", level: float = 0.95,
        lag_order: int = 4, shock_scale: float = 1.0, design: RegressorMatrix | None = None,
        ) -> IrfResult:
    """Impulse responses for h = 0..H in the high (``unemp_{t-1} > tau``) and low states.

    ``shock_scale`` multiplies responses and standard errors; with news
    already expressed relative to trend GDP the default of 1 reads as the
    response to a shock worth 1 percent of GDP when both series are in
    percent units. Horizons that cannot be estimated are recorded in
    ``skipped`` and left as NaN.
    """
    if H < 0:
        raise ContractError("H must be nonnegative")
    if not 0 < level < 1:
        raise ContractError("level must be in (0, 1)")
    if design is None:
        design = build_design(dataset, lag_order, response=response)
    indicator = design.threshold_var > tau
    z = stats.norm.ppf(0.5 + level / 2)
    horizons = np.arange(H + 1)
    paths = {s: {k: np.full(H + 1, np.nan) for k in ("beta", "se", "lo", "hi")} for s in STATES}
    skipped = {}
    for h in horizons:
        try:
            fit = lp_fit(design, dataset, indicator, int(h), response)
        except (EstimationError, ContractError) as exc:
            skipped[int(h)] = str(exc)
            logger.info("irf horizon %d skipped: %s", h, exc)
            continue
        for s in STATES:
            b = fit.beta[s] * shock_scale
            se = fit.se[s] * abs(shock_scale)
            paths[s]["beta"][h] = b
            paths[s]["se"][h] = se
            paths[s]["lo"][h] = b - z * se
            paths[s]["hi"][h] = b + z * se
    logger.info("irf for %s at tau=%g with shock scale %g", response, tau, shock_scale)
    return IrfResult(horizons, response, paths, float(tau), level, shock_scale, skipped)
