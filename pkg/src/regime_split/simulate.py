"""Synthetic threshold data and Monte Carlo studies of the estimators."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataio import Dataset, Quarter, build_design
from .errors import ContractError, RegimeSplitError
from .parallel import parallel_map
from .threshold import GridSpec, profile_grid, threshold_ci

logger = logging.getLogger(__name__)

ESTIMATORS = ("threshold", "supwald")


@dataclass(frozen=True)
class DgpSpec:
    """Two-regime data generating process with the regression's lag structure.

    ``delta_star`` is either one number, applied as the regime gap in both
    the intercept and the shock coefficient, or a full coefficient-gap
    vector. ``tau_star=None`` gives a model without a threshold.
    """

    T: int = 400
    tau_star: float | None = 7.0
    tau1_star: float | None = None
    delta_star: object = 1.0
    noise_sd: float = 1.0
    law: str = "ar1"
    rho: float = 0.95
    mean: float = 6.0
    sd: float = 3.0
    empirical: tuple | None = None
    seed: int = 0
    lag_order: int = 4
    break_fraction: float = 0.5
    burn: int = 100
    start: Quarter = Quarter(1900, 1)

    def __post_init__(self):
        if self.T <= 30:
            raise ContractError("T must exceed 30")
        if self.law == "ar1" and not -1 < self.rho < 1:
            raise ContractError("rho must lie in (-1, 1)")
        if self.law == "empirical" and not self.empirical:
            raise ContractError("empirical law needs sample values")
        if self.law not in ("ar1", "empirical"):
            raise ContractError(f"unknown threshold-variable law {self.law!r}")
        if self.noise_sd < 0:
            raise ContractError("noise_sd must be nonnegative")

    @property
    def n_params(self) -> int:
        return 2 + 3 * self.lag_order

    def base_coefficients(self) -> np.ndarray:
        L = self.lag_order
        theta = np.zeros(self.n_params)
        theta[0] = 0.5
        theta[1] = 0.4                      # gdp lag 1
        if L >= 2:
            theta[2] = 0.1                  # gdp lag 2
        theta[1 + L] = 0.1                  # gov lag 1
        theta[1 + 2 * L] = 0.05             # news lag 1
        theta[-1] = 1.0                     # contemporaneous shock
        return theta

    def gap(self) -> np.ndarray:
        if np.ndim(self.delta_star) == 0:
            g = np.zeros(self.n_params)
            g[0] = g[-1] = float(self.delta_star)
            return g
        g = np.asarray(self.delta_star, dtype=float)
        if g.shape != (self.n_params,):
            raise ContractError(f"delta_star needs {self.n_params} entries")
        return g

    def break_quarter(self) -> Quarter:
        q = self.start
        for _ in range(int(self.break_fraction * self.T)):
            q = q.succ()
        return q

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = str(self.start)
        d["delta_star"] = np.asarray(self.delta_star, dtype=float).tolist()
        d["empirical"] = list(self.empirical) if self.empirical else None
        return d


def generate(spec: DgpSpec) -> Dataset:
    """Simulate a dataset whose design obeys the two-regime model exactly."""
    rng = np.random.default_rng(spec.seed)
    L = spec.lag_order
    n = spec.T + spec.burn
    theta_b = spec.base_coefficients()
    theta_a = theta_b + spec.gap()
    break_row = spec.burn + int(spec.break_fraction * spec.T)

    unemp = np.empty(n)
    if spec.law == "ar1":
        innov = rng.standard_normal(n) * spec.sd * np.sqrt(1 - spec.rho ** 2)
        level = spec.mean
        for t in range(n):
            level = spec.mean + spec.rho * (level - spec.mean) + innov[t]
            unemp[t] = max(level, 0.0)
    else:
        unemp[:] = np.abs(rng.choice(np.asarray(spec.empirical, dtype=float), size=n))
    news = rng.standard_normal(n)
    gov_noise = rng.standard_normal(n) * 0.5
    eps = rng.standard_normal(n) * spec.noise_sd

    gdp = np.zeros(n)
    gov = np.zeros(n)
    for t in range(n):
        gov[t] = (0.5 * gov[t - 1] + 0.3 * news[t - 1] if t else 0.0) + gov_noise[t]
        if t < L:
            gdp[t] = theta_b[0] / (1 - 0.5) + eps[t]
            continue
        x = np.concatenate([[1.0], gdp[t - L:t][::-1], gov[t - L:t][::-1],
                            news[t - L:t][::-1], [news[t]]])
        index = unemp[t - 1]
        if spec.tau1_star is not None and t - 1 >= break_row:
            index = index + spec.tau1_star
        high = spec.tau_star is not None and index > spec.tau_star
        gdp[t] = x @ (theta_a if high else theta_b) + eps[t]

    keep = slice(spec.burn, n)
    index = []
    q = spec.start
    for _ in range(spec.T):
        index.append(q)
        q = q.succ()
    return Dataset(index=index, gdp=gdp[keep], gov=gov[keep], unemp=unemp[keep],
                   news=news[keep], scaled=True)


def derive_seed(seed: int, rep: int, stream: int = 0) -> int:
    """Counter-based child seed for replication ``rep``."""
    ss = np.random.SeedSequence(seed, spawn_key=(rep, stream))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class MonteCarloSummary:
    estimator: str
    reps: int
    failures: int
    bias: float | None = None
    median_abs_error: float | None = None
    rmse: float | None = None
    coverage: float | None = None
    mean_ci_width: float | None = None
    grid_step: float | None = None
    median_step_error: float | None = None
    size: float | None = None
    alpha: float = 0.05
    traces: list = field(default_factory=list)

    def to_dict(self, traces: bool = False) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "traces"}
        if traces:
            d["traces"] = self.traces
        return d


def _one_threshold(spec, r, grid, level):
    data = generate(replace(spec, seed=derive_seed(spec.seed, r)))
    design = build_design(data, spec.lag_order)
    fit = profile_grid(design, grid)
    ci = threshold_ci(design, fit, level)
    taus = fit.tau
    step = float((taus[-1] - taus[0]) / (taus.size - 1)) if taus.size > 1 else 0.0
    # grid position of the cell holding the true threshold vs the estimate
    true_pos = int(np.searchsorted(taus, spec.tau_star, side="right")) - 1
    est_pos = int(np.searchsorted(taus, fit.tau_hat, side="right")) - 1
    return {"rep": r, "tau_hat": fit.tau_hat, "ci_lower": ci.lower, "ci_upper": ci.upper,
            "covered": bool(ci.contains(spec.tau_star)), "grid_step": step,
            "step_error": abs(est_pos - true_pos)}


def _one_supwald(spec, r, grid, B, threads):
    from .inference import sup_wald_bootstrap

    data = generate(replace(spec, seed=derive_seed(spec.seed, r)))
    design = build_design(data, spec.lag_order)
    res = sup_wald_bootstrap(design, grid, B=B, seed=derive_seed(spec.seed, r, 1),
                             threads=threads)
    return {"rep": r, "sup_stat": res.sup_stat, "p_value": res.p_value}


def monte_carlo(spec: DgpSpec, reps: int, estimator: str = "threshold",
                grid: GridSpec | None = None, B: int = 499, level: float = 0.95,
                alpha: float = 0.05, threads: int | None = None) -> MonteCarloSummary:
    """Repeat an estimator over independent draws of the DGP and summarize.

    Failed replications are counted, not raised. Every replication's data
    and bootstrap seed derive from ``(spec.seed, rep)``.
    """
    if reps < 1:
        raise ContractError("reps must be at least 1")
    if estimator not in ESTIMATORS:
        raise ContractError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")
    grid = grid or GridSpec()

    def task(r):
        try:
            if estimator == "threshold":
                return _one_threshold(spec, r, grid, level)
            # bootstrap replications stay sequential inside a parallel study
            return _one_supwald(spec, r, grid, B, 1)
        except (RegimeSplitError, np.linalg.LinAlgError) as exc:
            logger.info("replication %d failed: %s", r, exc)
            return {"rep": r, "error": f"{type(exc).__name__}: {exc}"}

    traces = parallel_map(task, range(reps), threads=threads)
    ok = [t for t in traces if "error" not in t]
    summary = MonteCarloSummary(estimator, reps, reps - len(ok), alpha=alpha, traces=traces)
    if not ok:
        return summary
    if estimator == "threshold":
        if spec.tau_star is None:
            raise ContractError("threshold study needs tau_star")
        err = np.array([t["tau_hat"] for t in ok]) - spec.tau_star
        summary.bias = float(err.mean())
        summary.median_abs_error = float(np.median(np.abs(err)))
        summary.rmse = float(np.sqrt(np.mean(err ** 2)))
        summary.coverage = float(np.mean([t["covered"] for t in ok]))
        summary.mean_ci_width = float(np.mean([t["ci_upper"] - t["ci_lower"] for t in ok]))
        summary.grid_step = float(np.median([t["grid_step"] for t in ok]))
        summary.median_step_error = float(np.median([t["step_error"] for t in ok]))
    else:
        summary.size = float(np.mean([t["p_value"] <= alpha for t in ok]))
    return summary
