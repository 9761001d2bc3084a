"""State-dependent cumulative spending multipliers estimated by IV local projections."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .dataio import Dataset, build_design
from .errors import ContractError, DegenerateSplitError, RankError, SingularDesignError
from .localproj import STATES, forward, state_blocks
from .regress import iv_2sls, iv_cov, ols, wald, wald_pvalue

logger = logging.getLogger(__name__)

INSTRUMENTS = ("military_news", "blanchard_perotti", "combined")
YEARS = (2, 3, 4, 5)


def bp_shock(dataset: Dataset, lag_order: int = 4) -> np.ndarray:
    """Spending innovation: residual of spending on lagged GDP, spending and news.

    Returned at full dataset length with NaN for the first ``lag_order``
    quarters.
    """
    design = build_design(dataset, lag_order, response="gov")
    fit = ols(design.response, design.controls, names=design.control_names)
    out = np.full(len(dataset), np.nan)
    out[design.positions] = fit.residuals
    return out


def instrument_series(dataset: Dataset, instrument: str, lag_order: int = 4) -> dict:
    if instrument not in INSTRUMENTS:
        raise ContractError(f"unknown instrument {instrument!r}; choose from {INSTRUMENTS}")
    out = {}
    if instrument in ("military_news", "combined"):
        out["news"] = np.asarray(dataset.news)
    if instrument in ("blanchard_perotti", "combined"):
        bp = dataset.bp_shock if dataset.bp_shock is not None else bp_shock(dataset, lag_order)
        out["bp"] = np.asarray(bp)
    return out


@dataclass(frozen=True)
class MultiplierEstimate:
    h: int
    multiplier: dict
    se: dict
    coefficients: np.ndarray
    cov: np.ndarray
    index: dict
    n_obs: int

    def difference_pvalue(self) -> float:
        return multiplier_difference_test(self)


def cumulative_sums(series, positions, h):
    s = np.asarray(series)
    return sum(forward(s, positions, j) for j in range(h + 1))


def cumulative_multiplier(dataset: Dataset, tau: float, instrument: str = "military_news",
                          horizon_quarters: int = 7, lag_order: int = 4,
                          bandwidth: int | None = None) -> MultiplierEstimate:
    """Integral multiplier at horizon ``h`` in each state.

    The sum of GDP over quarters ``t..t+h`` is regressed on the matching sum
    of spending, both state-interacted together with the intercept and the
    lagged controls; cumulative spending is instrumented by the state-
    interacted shock(s). Standard errors use Newey-West with bandwidth
    ``h + 1`` unless given.
    """
    h = horizon_quarters
    if h < 0:
        raise ContractError("horizon must be nonnegative")
    design = build_design(dataset, lag_order)
    shocks = instrument_series(dataset, instrument, lag_order)
    keep = design.positions + h < len(dataset)
    for s in shocks.values():
        keep &= np.isfinite(s[design.positions])
    pos = design.positions[keep]
    ind = design.threshold_var[keep] > tau
    y = cumulative_sums(dataset.gdp, pos, h)
    g = cumulative_sums(dataset.gov, pos, h)
    controls = design.controls[keep]
    p = controls.shape[1]
    for name, mask in (("high", ind), ("low", ~ind)):
        if mask.sum() <= p + 1:
            raise DegenerateSplitError(f"state {name} has {int(mask.sum())} rows at h={h}")
    endog, _ = state_blocks(g[:, None], ind)
    exog, _ = state_blocks(controls, ind)
    inst = np.column_stack([state_blocks(s[pos][:, None], ind)[0] for s in shocks.values()])
    names = [f"{k}_{st}" for k in shocks for st in STATES]
    try:
        fit = iv_2sls(y, endog, exog, inst, instrument_names=names)
    except (RankError, SingularDesignError) as exc:
        raise DegenerateSplitError(f"no usable instrument variation at h={h}: {exc}") from None
    bw = h + 1 if bandwidth is None else bandwidth
    cov = iv_cov(fit, min(bw, len(y) - 1))
    index = {"high": 0, "low": 1}
    mult = {s: float(fit.coefficients[i]) for s, i in index.items()}
    se = {s: float(np.sqrt(cov.matrix[i, i])) for s, i in index.items()}
    return MultiplierEstimate(h, mult, se, fit.coefficients, cov.matrix, index, len(y))


def multiplier_difference_test(est: MultiplierEstimate) -> float:
    """HAC Wald p-value for equal multipliers in the two states."""
    k = est.coefficients.size
    R = np.zeros((1, k))
    R[0, est.index["high"]] = 1.0
    R[0, est.index["low"]] = -1.0
    stat = wald(R, [0.0], est.coefficients, est.cov)
    return wald_pvalue(stat, 1)


@dataclass(frozen=True)
class MultiplierReport:
    instrument: str
    tau: float
    entries: dict
    diff_pvalues: dict
    metadata: dict = field(default_factory=dict)

    def multiplier(self, years: int, state: str = "high") -> float:
        return self.entries[years][state]["multiplier"]

    def to_dict(self) -> dict:
        return {
            "instrument": self.instrument,
            "tau": self.tau,
            "entries": {str(y): v for y, v in self.entries.items()},
            "diff_pvalues": {str(y): v for y, v in self.diff_pvalues.items()},
            "metadata": self.metadata,
        }


def multiplier_report(dataset: Dataset, tau: float, instrument: str = "military_news",
                      years=YEARS, lag_order: int = 4) -> MultiplierReport:
    """Integral multipliers for each horizon in years (h = 4 * years - 1)."""
    entries, pvals = {}, {}
    for yr in years:
        est = cumulative_multiplier(dataset, tau, instrument, 4 * yr - 1, lag_order)
        entries[yr] = {s: {"multiplier": est.multiplier[s], "se": est.se[s]} for s in STATES}
        pvals[yr] = multiplier_difference_test(est)
    meta = {
        "horizon_rule": "h = 4*years - 1, sums over quarters t..t+h",
        "bandwidth_rule": "h+1",
        "instrument_set": instrument,
        "combined_rule": "both shocks as joint instruments" if instrument == "combined" else None,
        "controls": "levels, state-interacted",
    }
    return MultiplierReport(instrument, float(tau), entries, pvals, meta)


def multiplier_path(dataset: Dataset, tau: float, instrument: str = "military_news",
                    quarters: int = 20, level: float = 0.95, lag_order: int = 4) -> list:
    """Per-quarter cumulative multipliers with pointwise bands, h = 0..quarters-1."""
    z = stats.norm.ppf(0.5 + level / 2)
    rows = []
    for h in range(quarters):
        try:
            est = cumulative_multiplier(dataset, tau, instrument, h, lag_order)
        except DegenerateSplitError as exc:
            logger.info("multiplier path skips h=%d: %s", h, exc)
            continue
        for s in STATES:
            m, se = est.multiplier[s], est.se[s]
            rows.append((h, s, m, m - z * se, m + z * se))
    return rows


@dataclass(frozen=True)
class CounterfactualTable:
    spend_immediate: float
    rows: dict
    labels: tuple = ("high", "low")

    def to_dict(self) -> dict:
        return {"spend_immediate": self.spend_immediate, "columns": list(self.labels),
                "rows": {str(k): v for k, v in self.rows.items()}}


def policy_counterfactual(report: MultiplierReport, spend_immediate: float,
                          against: MultiplierReport | None = None,
                          years=YEARS) -> CounterfactualTable:
    """Cumulative GDP gain from spending ``spend_immediate`` now.

    Without ``against`` the columns are the report's high and low states.
    With ``against`` both columns use the high-unemployment multiplier, from
    ``report`` and from ``against`` respectively (two threshold choices
    applied to the same slack episode).
    """
    rows = {}
    for yr in years:
        if yr not in report.entries or (against is not None and yr not in against.entries):
            raise ContractError(f"report lacks the {yr}-year multiplier")
        a = report.multiplier(yr, "high")
        b = against.multiplier(yr, "high") if against is not None else report.multiplier(yr, "low")
        high, low = spend_immediate * a, spend_immediate * b
        rows[yr] = {"gdp_high": high, "gdp_low": low, "difference": high - low}
    labels = ("high", "low") if against is None else (f"tau={report.tau:g}", f"tau={against.tau:g}")
    return CounterfactualTable(float(spend_immediate), rows, labels)
