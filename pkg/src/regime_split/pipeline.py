"""Result documents shared by the CLI and library callers.

Each function runs one analysis and returns plain dicts and row lists; the
CLI only serializes them, so its files match a direct call byte for byte.
"""

from __future__ import annotations

import numpy as np

from .dataio import Dataset, build_design
from .factorsplit import FactorSpec, iterative_estimate, joint_estimate, penalized_select
from .inference import sup_wald_bootstrap
from .localproj import irf
from .multiplier import (INSTRUMENTS, multiplier_path, multiplier_report,
                         policy_counterfactual)
from .serialize import metadata
from .simulate import DgpSpec, monte_carlo
from .threshold import (GridSpec, profile_grid, regime_labels, second_threshold_scan,
                        threshold_ci)

PROFILE_HEADER = ("tau", "sse", "one_minus_r2", "one_minus_r2_uncentered")
IRF_HEADER = ("h", "high", "high_lo", "high_hi", "low", "low_lo", "low_hi")


def _profile_rows(fit):
    return list(zip(fit.tau.tolist(), fit.sse_profile.tolist(), fit.one_minus_r2.tolist(),
                    fit.one_minus_r2_uncentered.tolist()))


def estimate_threshold(dataset: Dataset, grid: GridSpec | None = None, level: float = 0.95,
                       cap: float | None = None, lag_order: int = 4):
    grid = grid or GridSpec()
    design = build_design(dataset, lag_order)
    fit = profile_grid(design, grid)
    ci = threshold_ci(design, fit, level)
    labels = regime_labels(dataset, fit.tau_hat)
    doc = {
        "threshold": fit.to_dict(),
        "ci": ci.to_dict(),
        "slack_spans": [[str(a), str(b)] for a, b in labels.spans()],
        "metadata": metadata(grid=grid.label(), lag_order=lag_order,
                             ci_method="LR inversion, c(a) = -2 log(1 - sqrt(a))",
                             regime_rule="high if unemp[t-1] > tau"),
    }
    sub_rows = None
    if cap is not None:
        sub = second_threshold_scan(design, cap, grid)
        doc["second_scan"] = dict(sub.to_dict(), cap=cap)
        sub_rows = _profile_rows(sub)
    return doc, _profile_rows(fit), sub_rows


def test_threshold(dataset: Dataset, seed: int, B: int = 2000, grid: GridSpec | None = None,
                   cap: float | None = None, lag_order: int = 4, threads=None):
    grid = grid or GridSpec()
    design = build_design(dataset, lag_order)
    if cap is not None:
        design = design.subset(design.threshold_var < cap)
    res = sup_wald_bootstrap(design, grid, B=B, seed=seed, threads=threads)
    doc = res.to_dict()
    doc["cap"] = cap
    doc["metadata"] = metadata(seed=seed, grid=grid.label(), lag_order=lag_order,
                               statistic="heteroskedasticity-robust Wald, delta = 0",
                               bootstrap="fixed-regressor wild, rademacher weights")
    rows = [(t, w, res.critical_95) for t, w in res.wald_curve]
    return doc, rows


def impulse_responses(dataset: Dataset, tau: float, H: int = 19, level: float = 0.95,
                      lag_order: int = 4, responses=("gov", "gdp")):
    doc = {"metadata": metadata(tau=tau, lag_order=lag_order, bandwidth_rule="h+1",
                                bands="pointwise normal", level=level)}
    tables = {}
    for resp in responses:
        res = irf(dataset, tau, H, response=resp, level=level, lag_order=lag_order)
        doc[resp] = res.to_dict()
        paths = res.state_paths
        tables[resp] = [
            (int(h),) + tuple(paths[s][k][i] for s in ("high", "low") for k in ("beta", "lo", "hi"))
            for i, h in enumerate(res.horizons)]
    return doc, tables


def multipliers(dataset: Dataset, tau: float, tau_baseline: float = 6.5,
                instruments=INSTRUMENTS, spend: float = 500.0, lag_order: int = 4,
                path_quarters: int = 20):
    panels = {"A": tau, "B": tau_baseline}
    reports = {}
    table1 = []
    for panel, t in panels.items():
        for inst in instruments:
            rep = multiplier_report(dataset, t, inst, lag_order=lag_order)
            reports[(panel, inst)] = rep
            for yr, e in rep.entries.items():
                table1.append((panel, t, inst, yr, e["high"]["multiplier"], e["high"]["se"],
                               e["low"]["multiplier"], e["low"]["se"], rep.diff_pvalues[yr]))
    main = "military_news" if "military_news" in instruments else instruments[0]
    cf = policy_counterfactual(reports[("A", main)], spend, against=reports[("B", main)])
    table2 = [(yr, r["gdp_high"], r["gdp_low"], r["difference"]) for yr, r in cf.rows.items()]
    fig4 = []
    for panel, t in panels.items():
        for h, s, m, lo, hi in multiplier_path(dataset, t, main, path_quarters,
                                               lag_order=lag_order):
            fig4.append((panel, t, h, s, m, lo, hi))
    doc = {
        "panels": {f"{p}:{inst}": rep.to_dict() for (p, inst), rep in reports.items()},
        "counterfactual": cf.to_dict(),
        "metadata": metadata(tau=tau, tau_baseline=tau_baseline, spend=spend,
                             lag_order=lag_order, bandwidth_rule="h+1",
                             horizon_rule="h = 4*years - 1",
                             combined_rule="both shocks as joint instruments"),
    }
    return doc, table1, table2, fig4


def factor_split(dataset: Dataset, spec: FactorSpec | None = None, lam: float | None = None,
                 lag_order: int = 4):
    spec = spec or FactorSpec()
    design = build_design(dataset, lag_order)
    joint = joint_estimate(design, spec)
    single = profile_grid(design, spec.grid)
    it = iterative_estimate(design, spec, (0.0, single.tau_hat))
    pen = penalized_select(design, spec, lam)
    T = len(design)
    doc = {
        "joint": joint.to_dict(),
        "iterative": it.to_dict(),
        "penalized": pen.to_dict(),
        "single_threshold": {"tau_hat": single.tau_hat, "mse": single.mse},
        "lambda": lam if lam is not None else single.mse * float(np.log(T)) / T,
        "metadata": metadata(dummy_break=str(spec.dummy_break), grid=spec.grid.label(),
                             lag_order=lag_order, solver="exact cut-pair enumeration",
                             representative="midpoint of optimal cell"),
    }
    return doc


def simulate(spec: DgpSpec, reps: int, estimator: str = "threshold", B: int = 499,
             grid: GridSpec | None = None, threads=None):
    grid = grid or GridSpec()
    summary = monte_carlo(spec, reps, estimator, grid=grid, B=B, threads=threads)
    doc = summary.to_dict()
    doc["dgp"] = spec.to_dict()
    doc["metadata"] = metadata(seed=spec.seed, grid=grid.label(), B=B,
                               seed_scheme="SeedSequence(seed, spawn_key=(rep, stream))")
    keys = sorted({k for t in summary.traces for k in t})
    rows = [tuple(t.get(k) for k in keys) for t in summary.traces]
    return doc, keys, rows
