import itertools

import numpy as np
import pytest

from regime_split.dataio import Quarter, RegressorMatrix, build_design
from regime_split.simulate import DgpSpec, generate


def random_design(n, p, seed, ties=False, start=Quarter(1930, 1)):
    """Small synthetic RegressorMatrix with an intercept and a two-regime response."""
    rng = np.random.default_rng(seed)
    controls = np.column_stack([np.ones(n), rng.standard_normal((n, p - 2))])
    shock = rng.standard_normal(n)
    q = rng.integers(0, 12, n).astype(float) if ties else rng.uniform(0, 12, n)
    X = np.column_stack([controls, shock])
    beta = rng.standard_normal(p)
    y = X @ beta + (q > 6) * (X @ rng.standard_normal(p)) + rng.standard_normal(n)
    index, qq = [], start
    for _ in range(n):
        index.append(qq)
        qq = qq.succ()
    return RegressorMatrix(y, controls, shock, q, tuple(index), np.arange(n) + 1,
                           tuple(f"c{j}" for j in range(p - 1)), 1)


def lstsq_sse(X, y):
    """Independent oracle: SSE via numpy's SVD solver, None when rank deficient."""
    if X.shape[0] < X.shape[1] or np.linalg.matrix_rank(X) < X.shape[1]:
        return None
    b = np.linalg.lstsq(X, y, rcond=None)[0]
    r = y - X @ b
    return float(r @ r)


def brute_profile(X, y, q, taus, floor):
    out = []
    for t in taus:
        hi = q > t
        if hi.sum() < floor or (~hi).sum() < floor:
            out.append(np.nan)
            continue
        a, b = lstsq_sse(X[hi], y[hi]), lstsq_sse(X[~hi], y[~hi])
        out.append(np.nan if a is None or b is None else a + b)
    return np.array(out)


def brute_factor(X, y, q, d, cuts, floor):
    """Every labeling 1{q > c0} for d=0 rows and 1{q > c1} for d=1 rows."""
    best = (np.inf, None)
    seen = set()
    for c0, c1 in itertools.product(cuts, cuts):
        lab = np.where(d, q > c1, q > c0)
        key = lab.tobytes()
        if key in seen:
            continue
        seen.add(key)
        if lab.sum() < floor or (~lab).sum() < floor:
            continue
        a, b = lstsq_sse(X[lab], y[lab]), lstsq_sse(X[~lab], y[~lab])
        if a is None or b is None:
            continue
        if a + b < best[0]:
            best = (a + b, lab)
    return best


@pytest.fixture(scope="session")
def sim_dataset():
    return generate(DgpSpec(T=160, seed=11, delta_star=1.5))


@pytest.fixture(scope="session")
def sim_design(sim_dataset):
    return build_design(sim_dataset, 4)


@pytest.fixture(scope="session")
def sim_csv(tmp_path_factory, sim_dataset):
    from regime_split.dataio import write_dataset

    path = tmp_path_factory.mktemp("data") / "sim.csv"
    write_dataset(sim_dataset, path)
    return path


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        if n in mod.RESULTS:
            status, detail = mod.RESULTS[n]
        elif n in mod.DATASET_CRITERIA and not mod.RZ_PATH:
            status, detail = "SKIP", "replication CSV not provided (REGIME_SPLIT_RZ_DATA)"
        else:
            status, detail = "NOT RUN", "deselected or errored before a verdict"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
