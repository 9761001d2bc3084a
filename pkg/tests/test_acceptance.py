"""Acceptance criteria, one test each.

Criteria 1-5 need the public replication CSV; point REGIME_SPLIT_RZ_DATA at
it (and REGIME_SPLIT_RZ_SCHEMA at a JSON column mapping if its headers
differ; set REGIME_SPLIT_RZ_RAW=1 when gdp/gov/news are raw levels). Without
it those criteria are reported as skipped. A summary line per criterion is
printed at the end of the run.
"""

import json
import os
import time

import numpy as np
import pytest

from regime_split import pipeline
from regime_split.cli import main
from regime_split.dataio import Quarter, build_design, load_dataset
from regime_split.factorsplit import (FactorSpec, iterative_estimate, joint_estimate,
                                      penalized_select)
from regime_split.inference import sup_wald_bootstrap
from regime_split.multiplier import multiplier_report, policy_counterfactual
from regime_split.regress import hac_cov, hc_cov, iv_2sls, ols, wald
from regime_split.simulate import DgpSpec, generate, monte_carlo
from regime_split.threshold import (GridSpec, min_regime_rows, profile_grid,
                                    second_threshold_scan, threshold_ci)
from conftest import brute_factor, brute_profile, random_design

RESULTS = {}
DATASET_CRITERIA = (1, 2, 3, 4, 5)
RZ_PATH = os.environ.get("REGIME_SPLIT_RZ_DATA")
# how far the profile at 6.5 must sit above the global minimum, in SSE units
PROFILE_MARGIN = float(os.environ.get("REGIME_SPLIT_PROFILE_MARGIN", "0"))


def record(n, ok, detail):
    RESULTS[n] = ("PASS" if ok else "FAIL", detail)
    assert ok, detail


@pytest.fixture(scope="module")
def rz():
    if not RZ_PATH:
        pytest.skip("replication CSV not provided (set REGIME_SPLIT_RZ_DATA)")
    schema = None
    if os.environ.get("REGIME_SPLIT_RZ_SCHEMA"):
        with open(os.environ["REGIME_SPLIT_RZ_SCHEMA"]) as fh:
            schema = json.load(fh)
    raw = os.environ.get("REGIME_SPLIT_RZ_RAW", "") not in ("", "0")
    return load_dataset(RZ_PATH, schema, scaled=not raw)


@pytest.mark.criterion(1)
def test_c1_threshold_replication(rz):
    t0 = time.perf_counter()
    design = build_design(rz)
    fit = profile_grid(design)
    elapsed = time.perf_counter() - t0
    i65 = int(np.searchsorted(fit.tau, 6.5))
    s = fit.sse_profile
    local_min = 0 < i65 < s.size - 1 and s[i65] <= s[i65 - 1] and s[i65] <= s[i65 + 1]
    ok = (fit.tau_hat == 11.97 and s[i65] - fit.sse > PROFILE_MARGIN and not local_min
          and elapsed < 10)
    record(1, ok, f"tau_hat={fit.tau_hat}, S(6.5)-S(tau_hat)={s[i65] - fit.sse:.3g}, "
                  f"local min at 6.5: {local_min}, {elapsed:.1f}s")


@pytest.mark.criterion(2)
def test_c2_supwald(rz):
    t0 = time.perf_counter()
    design = build_design(rz)
    full = sup_wald_bootstrap(design, B=2000, seed=20150101)
    sub = sup_wald_bootstrap(design.subset(design.threshold_var < 11.97), B=2000,
                             seed=20150101)
    fit = profile_grid(design)
    ci = threshold_ci(design, fit)
    elapsed = time.perf_counter() - t0
    ok = (abs(full.p_value - 0.053) <= 0.015 and abs(sub.p_value - 0.203) <= 0.03
          and ci.contains(11.97) and abs(ci.upper - 13.56) <= 0.5 and elapsed < 300)
    record(2, ok, f"p_full={full.p_value:.3f}, p_sub={sub.p_value:.3f}, "
                  f"CI=[{ci.lower}, {ci.upper}), {elapsed:.0f}s")


@pytest.mark.criterion(3)
def test_c3_table1(rz):
    t0 = time.perf_counter()
    a = multiplier_report(rz, 11.97, "military_news")
    b = multiplier_report(rz, 6.5, "military_news")
    elapsed = time.perf_counter() - t0
    checks = [
        abs(a.multiplier(2, "high") - 1.58) <= 0.15, abs(a.multiplier(2, "low") - 0.55) <= 0.15,
        abs(a.multiplier(4, "high") - 0.94) <= 0.15, abs(a.multiplier(4, "low") - 0.61) <= 0.15,
        a.diff_pvalues[2] < 0.01, a.diff_pvalues[4] < 0.01,
        abs(b.multiplier(2, "high") - 0.60) <= 0.15, abs(b.multiplier(2, "low") - 0.59) <= 0.15,
        b.diff_pvalues[2] > 0.5, elapsed < 120,
    ]
    record(3, all(checks),
           f"A 2y {a.multiplier(2, 'high'):.2f}/{a.multiplier(2, 'low'):.2f} "
           f"4y {a.multiplier(4, 'high'):.2f}/{a.multiplier(4, 'low'):.2f} "
           f"p={a.diff_pvalues[2]:.3g},{a.diff_pvalues[4]:.3g}; "
           f"B 2y {b.multiplier(2, 'high'):.2f}/{b.multiplier(2, 'low'):.2f} "
           f"p={b.diff_pvalues[2]:.3g}")


@pytest.mark.criterion(4)
def test_c4_table2(rz):
    a = multiplier_report(rz, 11.97, "military_news")
    b = multiplier_report(rz, 6.5, "military_news")
    cf = policy_counterfactual(a, 500.0, against=b)
    exact = all(cf.rows[y]["gdp_high"] == 500.0 * a.multiplier(y)
                and cf.rows[y]["gdp_low"] == 500.0 * b.multiplier(y) for y in cf.rows)
    targets = {2: (790, 300), 3: (510, 355), 4: (470, 340), 5: (465, 395)}
    tol = 500.0 * 0.15
    close = all(abs(cf.rows[y]["gdp_high"] - h) <= tol and abs(cf.rows[y]["gdp_low"] - l) <= tol
                for y, (h, l) in targets.items())
    r2 = cf.rows[2]
    record(4, exact and close, f"2y row {r2['gdp_high']:.0f}/{r2['gdp_low']:.0f}/"
                               f"{r2['difference']:.0f}")


@pytest.mark.criterion(5)
def test_c5_factor_split(rz):
    design = build_design(rz)
    spec = FactorSpec()
    joint = joint_estimate(design, spec)
    it = iterative_estimate(design, spec)
    pen = penalized_select(design, spec)
    single = design.threshold_var > 11.97
    ok = (abs(joint.mse - it.mse) <= 1e-10 and np.array_equal(joint.labels, it.labels)
          and np.array_equal(joint.labels, single) and abs(joint.mse - 0.0002636456) <= 1e-7
          and pen.selected == "single")
    record(5, ok, f"mse joint={joint.mse:.10f} iterative={it.mse:.10f}, "
                  f"selected={pen.selected}")


@pytest.mark.criterion(6)
def test_c6_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    mismatches = 0
    spec = FactorSpec(dummy_break=Quarter(1937, 2))
    for k in range(50):
        n = 30 + k % 31
        d = random_design(n, 3, 1000 + k, ties=k % 3 == 0)
        fit = profile_grid(d)
        ref = brute_profile(d.regressors, d.response, d.threshold_var, fit.tau,
                            min_regime_rows(3))
        if not np.array_equal(np.isnan(ref), np.isnan(fit.sse_profile)):
            mismatches += 1
        ok = ~np.isnan(ref)
        worst = max(worst, float(np.max(np.abs(fit.sse_profile[ok] - ref[ok]))))
        mismatches += fit.tau_hat != fit.tau[np.nanargmin(ref)]
        jf = joint_estimate(d, spec)
        sse, labels = brute_factor(d.regressors, d.response, d.threshold_var, spec.dummy(d),
                                   spec.grid.values(d.threshold_var), min_regime_rows(3))
        worst = max(worst, abs(jf.sse - sse))
        mismatches += not np.array_equal(jf.labels, labels)
    elapsed = time.perf_counter() - t0
    record(6, worst <= 1e-12 and mismatches == 0 and elapsed < 30,
           f"max |sse - brute| = {worst:.2e}, mismatches={mismatches}, {elapsed:.1f}s")


@pytest.mark.criterion(7)
def test_c7_recovery():
    t0 = time.perf_counter()
    res = monte_carlo(DgpSpec(T=400, tau_star=7.0, delta_star=1.0, seed=7), 200)
    elapsed = time.perf_counter() - t0
    ok = (res.failures == 0 and res.median_step_error <= 1 and 0.90 <= res.coverage <= 0.99
          and elapsed < 120)
    record(7, ok, f"median step error={res.median_step_error:g} (grid step ~"
                  f"{res.grid_step:.3f}), median |err|={res.median_abs_error:.3f}, "
                  f"coverage={res.coverage:.3f}, {elapsed:.0f}s")


@pytest.mark.criterion(8)
def test_c8_size():
    t0 = time.perf_counter()
    res = monte_carlo(DgpSpec(T=200, tau_star=None, seed=8), 200, estimator="supwald", B=499)
    elapsed = time.perf_counter() - t0
    ok = res.failures == 0 and 0.02 <= res.size <= 0.09 and elapsed < 600
    record(8, ok, f"rejection rate={res.size:.3f}, {elapsed:.0f}s")


@pytest.mark.criterion(9)
def test_c9_numerical_contracts():
    ds = generate(DgpSpec(T=240, seed=9))
    design = build_design(ds)
    X, y = design.regressors, design.response
    fit = ols(y, X)
    hac0 = float(np.max(np.abs(hac_cov(fit, X, 0).matrix - hc_cov(fit, X).matrix)))
    W = X[:, :-1]
    iv = iv_2sls(y, X[:, -1], W, X[:, -1])
    self_iv = float(np.max(np.abs(iv.coefficients - np.r_[fit.coefficients[-1],
                                                          fit.coefficients[:-1]])))
    R = np.zeros((1, X.shape[1]))
    R[0, -1] = 1.0
    w1 = wald(R, 0, fit.coefficients, hc_cov(fit, X))
    f100 = ols(100 * y, X)
    w2 = wald(R, 0, f100.coefficients, hc_cov(f100, X))
    scale = abs(w2 - w1) / w1
    orth = []
    tf = profile_grid(design)
    for mask in (tf.regime_indicator, ~tf.regime_indicator):
        f = ols(y[mask], X[mask])
        orth.append(np.max(np.abs(X[mask].T @ f.residuals)) / max(1.0, np.abs(y[mask]).max()))
    orth.append(np.max(np.abs(X.T @ fit.residuals)))
    orth.append(np.max(np.abs(iv.projected.T @ iv.residuals)))
    for fs in iv.first_stages:
        orth.append(np.max(np.abs(np.column_stack([X[:, -1], W]).T @ fs.residuals)))
    orth = float(max(orth))
    ok = hac0 <= 1e-12 and self_iv <= 1e-10 and scale <= 1e-8 and orth <= 1e-8
    record(9, ok, f"hac0-hc={hac0:.1e}, iv-ols={self_iv:.1e}, wald scale={scale:.1e}, "
                  f"orthogonality={orth:.1e}")


@pytest.mark.criterion(10)
def test_c10_determinism(tmp_path, sim_csv, capsys):
    runs = {
        "supwald.json": ["test-threshold", "--data", sim_csv, "--seed", "5", "--boot", "199"],
        "summary.json": ["simulate", "--seed", "5", "--reps", "8", "--T", "150"],
    }
    same = []
    for name, args in runs.items():
        out = []
        for threads in ("1", "8"):
            d = tmp_path / f"{name}-{threads}"
            assert main([str(a) for a in args] + ["--out", str(d), "--threads", threads]) == 0
            out.append((d / name).read_bytes())
        again = tmp_path / f"{name}-again"
        main([str(a) for a in args] + ["--out", str(again), "--threads", "8"])
        same.append(out[0] == out[1] == (again / name).read_bytes())
    capsys.readouterr()
    sw = pipeline.simulate(DgpSpec(T=150, seed=5, tau_star=None, lag_order=1), 4, "supwald",
                           B=49, threads=1)[0]
    sw8 = pipeline.simulate(DgpSpec(T=150, seed=5, tau_star=None, lag_order=1), 4, "supwald",
                            B=49, threads=8)[0]
    same.append(sw == sw8)
    record(10, all(same), f"byte-identical across threads: {same}")


def test_second_scan_region(rz):
    """Below 11.97 the profile minimum sits in the low single digits."""
    sub = second_threshold_scan(build_design(rz), 11.97, GridSpec())
    assert 2.0 <= sub.tau_hat <= 6.0
