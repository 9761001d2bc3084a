"""Threshold regimes indexed by a factor: ``1{unemp + tau1 * d - tau0 > 0}``.

Here ``d`` is a post-break dummy evaluated at t-1. As a mixed-integer program
the problem carries binaries ``d_t = 1{f_t' tau > 0}`` and products
``l_{j,t} = delta_j * d_t`` and minimizes
``sum_t (y_t - x_t' theta_B - sum_j x_{j,t} l_{j,t})^2``. With a 0/1 dummy
every feasible labeling is a pair of cuts on the threshold variable, one for
``d = 0`` rows (``tau0``) and one for ``d = 1`` rows (``tau0 - tau1``), so the
global optimum is found exactly by enumerating cut pairs. Each pair's SSE
comes from the Givens pair kernel without refitting from scratch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataio import Quarter, RegressorMatrix
from .errors import ContractError, EstimationError, IterationCapError
from .regress import ols
from .threshold import GridSpec, min_regime_rows, profile_grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FactorSpec:
    dummy_break: Quarter = Quarter(1945, 4)
    grid: GridSpec = field(default_factory=GridSpec)

    def dummy(self, design: RegressorMatrix) -> np.ndarray:
        """d_{t-1} for each design row: the previous quarter is on or after the break."""
        return np.array([q > self.dummy_break for q in design.index], dtype=bool)


@dataclass(frozen=True)
class FactorFit:
    tau1: float
    tau0: float
    theta_B: np.ndarray
    delta: np.ndarray
    sse: float
    mse: float
    labels: np.ndarray
    algorithm: str
    cell: dict
    n_enumerated: int = 0
    iterations: int = 0
    objective: float | None = None
    penalty: float = 0.0
    selected: str | None = None

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "tau1": self.tau1,
            "tau0": self.tau0,
            "sse": self.sse,
            "mse": self.mse,
            "objective": self.objective if self.objective is not None else self.mse,
            "penalty": self.penalty,
            "selected": self.selected,
            "cell": self.cell,
            "n_high": int(self.labels.sum()),
            "labels": self.labels.astype(int).tolist(),
            "theta_B": self.theta_B.tolist(),
            "delta": self.delta.tolist(),
            "enumerated": self.n_enumerated,
            "iterations": self.iterations,
        }


class _Groups:
    """Rows split by the dummy, each sorted by the threshold variable."""

    def __init__(self, design, spec):
        X = design.regressors
        y = design.response
        q = design.threshold_var
        d = spec.dummy(design)
        self.n, self.p = X.shape
        self.window = spec.grid.window(q)
        cuts = spec.grid.values(q)
        if spec.grid.points != "observed":
            cuts = np.unique(cuts)
        self.cuts = cuts
        self.d = d
        self.rows, self.qs, self.X, self.y = [], [], [], []
        self.cands, self.first_cut = [], []
        for flag in (False, True):
            idx = np.flatnonzero(d == flag)
            idx = idx[np.argsort(q[idx], kind="stable")]
            self.rows.append(idx)
            self.qs.append(q[idx])
            self.X.append(X[idx])
            self.y.append(y[idx])
            k = np.searchsorted(q[idx], cuts, side="right")
            ks, first = np.unique(k, return_index=True)
            self.cands.append(ks)
            self.first_cut.append(cuts[first])

    def labels(self, k0, k1) -> np.ndarray:
        lab = np.ones(self.n, dtype=bool)
        lab[self.rows[0][:k0]] = False
        lab[self.rows[1][:k1]] = False
        return lab

    def cell(self, g, k):
        """Interval of cut values in the trim window giving ``k`` low rows in group ``g``."""
        lo, hi = self.window
        qs = self.qs[g]
        a = max(lo, qs[k - 1]) if k > 0 else lo
        b = min(hi, qs[k]) if k < qs.size else hi
        return float(a), float(b)

    def representative(self, k0, k1):
        a0, b0 = self.cell(0, k0)
        a1, b1 = self.cell(1, k1)
        c0 = 0.5 * (a0 + b0)
        c1 = 0.5 * (a1 + b1)
        cell = {"cut0": [a0, b0], "cut1": [a1, b1],
                "tau0": [a0, b0], "tau1": [a0 - b1, b0 - a1]}
        return c0 - c1, c0, cell


def _refit(design, labels, algorithm, groups, k0, k1, **extra):
    X = design.regressors
    y = design.response
    fa = ols(y[labels], X[labels], names=design.names)
    fb = ols(y[~labels], X[~labels], names=design.names)
    sse = fa.sse + fb.sse
    tau1, tau0, cell = groups.representative(k0, k1)
    if groups.rows[1].size == 0:
        tau1 = 0.0
    return FactorFit(tau1=float(tau1), tau0=float(tau0), theta_B=fb.coefficients,
                     delta=fa.coefficients - fb.coefficients, sse=float(sse),
                     mse=float(sse) / len(y), labels=labels, algorithm=algorithm,
                     cell=cell, **extra)


def factor_labels(design: RegressorMatrix, spec: FactorSpec, tau1: float, tau0: float):
    return design.threshold_var + tau1 * spec.dummy(design) - tau0 > 0


def fit_sse(design: RegressorMatrix, fit: FactorFit) -> float:
    """SSE implied by a fit's labels and coefficients."""
    X = design.regressors
    pred = X @ fit.theta_B + (X @ fit.delta) * fit.labels
    r = design.response - pred
    return float(r @ r)


def pair_objective(design: RegressorMatrix, spec: FactorSpec):
    """Total SSE for every candidate cut pair (NaN where infeasible)."""
    g = _Groups(design, spec)
    n0, n1 = g.qs[0].size, g.qs[1].size
    low, low_ok = kernels.pair_sse(g.X[0], g.y[0], g.X[1], g.y[1])
    high, high_ok = kernels.pair_sse(g.X[0][::-1], g.y[0][::-1], g.X[1][::-1], g.y[1][::-1])
    k0 = g.cands[0][:, None]
    k1 = g.cands[1][None, :]
    m0, m1 = n0 - k0, n1 - k1
    floor = min_regime_rows(g.p)
    ok = ((k0 + k1) >= floor) & ((m0 + m1) >= floor) & low_ok[k0, k1] & high_ok[m0, m1]
    total = np.where(ok, low[k0, k1] + high[m0, m1], np.nan)
    return g, total


def joint_estimate(design: RegressorMatrix, spec: FactorSpec | None = None) -> FactorFit:
    """Global least-squares optimum over (tau1, tau0) by cut-pair enumeration.

    Ties go to the smaller group-0 cut, then the smaller group-1 cut. The
    reported (tau1, tau0) is the midpoint of the optimal labeling's cell of
    cut values; the cell itself is returned in ``cell``.
    """
    spec = spec or FactorSpec()
    g, total = pair_objective(design, spec)
    if not np.isfinite(total).any():
        raise EstimationError("no feasible labeling for the factor threshold")
    i, j = np.unravel_index(int(np.nanargmin(total)), total.shape)
    k0, k1 = int(g.cands[0][i]), int(g.cands[1][j])
    logger.debug("joint optimum at cuts (%d, %d) of %d pairs", k0, k1, total.size)
    return _refit(design, g.labels(k0, k1), "joint", g, k0, k1, n_enumerated=int(total.size))


def _best_cuts(g, resid_low, resid_high, floor):
    """Cut pair minimizing SSE for fixed regime coefficients."""
    costs = []
    for grp in (0, 1):
        rows = g.rows[grp]
        lo = np.concatenate([[0.0], np.cumsum(resid_low[rows])])
        hi = np.concatenate([[0.0], np.cumsum(resid_high[rows][::-1])])[::-1]
        k = g.cands[grp]
        costs.append(lo[k] + hi[k])
    k0 = g.cands[0][:, None]
    k1 = g.cands[1][None, :]
    n0, n1 = g.qs[0].size, g.qs[1].size
    ok = ((k0 + k1) >= floor) & ((n0 - k0 + n1 - k1) >= floor)
    total = np.where(ok, costs[0][:, None] + costs[1][None, :], np.nan)
    if not np.isfinite(total).any():
        raise EstimationError("no feasible cut pair")
    i, j = np.unravel_index(int(np.nanargmin(total)), total.shape)
    return int(g.cands[0][i]), int(g.cands[1][j]), float(total[i, j])


def iterative_estimate(design: RegressorMatrix, spec: FactorSpec | None = None,
                       init=(0.0, None), max_iter: int = 100, tol: float = 1e-12) -> FactorFit:
    """Alternate between regime coefficients and the best cut pair.

    Step one fits both regimes by OLS for the current labels; step two picks
    the cut pair minimizing the SSE of those coefficients. The SSE never
    increases; iteration stops once the labels repeat or the decrease falls
    below ``tol``. ``init`` is ``(tau1, tau0)``; ``tau0=None`` starts from the
    single-threshold estimate.
    """
    spec = spec or FactorSpec()
    g = _Groups(design, spec)
    X = design.regressors
    y = design.response
    floor = min_regime_rows(g.p)
    tau1, tau0 = init
    if tau0 is None:
        tau0 = profile_grid(design, spec.grid).tau_hat
    labels = factor_labels(design, spec, tau1, tau0)
    if labels.sum() < floor or (~labels).sum() < floor:
        raise EstimationError(f"initial labeling ({tau1:g}, {tau0:g}) is infeasible")
    fa = ols(y[labels], X[labels])
    fb = ols(y[~labels], X[~labels])
    sse = fa.sse + fb.sse
    best = (sse, labels)
    seen = {labels.tobytes()}
    for it in range(1, max_iter + 1):
        ra = (y - X @ fa.coefficients) ** 2
        rb = (y - X @ fb.coefficients) ** 2
        k0, k1, cost = _best_cuts(g, rb, ra, floor)
        if float(np.sum(np.where(labels, ra, rb))) <= cost:
            return _finish(design, g, labels, it)
        labels = g.labels(k0, k1)
        if labels.tobytes() in seen:
            return _finish(design, g, best[1], it)
        seen.add(labels.tobytes())
        fa = ols(y[labels], X[labels])
        fb = ols(y[~labels], X[~labels])
        new_sse = fa.sse + fb.sse
        if new_sse < best[0]:
            best = (new_sse, labels)
        if sse - new_sse < tol:
            return _finish(design, g, best[1], it)
        sse = new_sse
    fit = _finish(design, g, best[1], max_iter)
    raise IterationCapError(f"no convergence after {max_iter} iterations", best=fit)


def _cuts_of(g, labels):
    """Group cut indices reproducing ``labels`` (labels are prefix/suffix per group)."""
    ks = []
    for grp in (0, 1):
        lab = labels[g.rows[grp]]
        k = int((~lab).sum())
        if lab[:k].any() or not lab[k:].all():
            raise EstimationError("labels are not generated by a cut pair")
        ks.append(k)
    return ks


def _finish(design, g, labels, iterations):
    k0, k1 = _cuts_of(g, labels)
    return _refit(design, labels, "iterative", g, k0, k1, iterations=iterations)


def penalized_select(design: RegressorMatrix, spec: FactorSpec | None = None,
                     lam: float | None = None, sigma2: float | None = None) -> FactorFit:
    """l0-penalized choice between the single threshold and the factor threshold.

    The objective is ``mse + lam * #{tau1 != 0}``. Labelings attainable with
    ``tau1 = 0`` are exactly the single-threshold ones, so the penalized
    optimum is the better of the single-threshold fit and the joint fit plus
    ``lam``; ties keep the smaller model. ``lam`` defaults to
    ``sigma2 * log(T) / T`` with ``sigma2`` the single-threshold mse.
    """
    spec = spec or FactorSpec()
    restricted = profile_grid(design, spec.grid)
    T = len(design)
    if lam is None:
        if sigma2 is None:
            sigma2 = restricted.mse
        lam = sigma2 * np.log(T) / T
    if lam < 0:
        raise ContractError("lambda must be nonnegative")
    joint = joint_estimate(design, spec)
    g = _Groups(design, spec)
    reachable = _reachable_single(g, joint.labels)
    if lam == 0 or (not reachable and joint.mse + lam < restricted.mse):
        if reachable:
            return _as_single(joint, g, joint.labels, joint.n_enumerated)
        return FactorFit(joint.tau1, joint.tau0, joint.theta_B, joint.delta, joint.sse,
                         joint.mse, joint.labels, "penalized", joint.cell,
                         joint.n_enumerated, 0, joint.mse + lam, lam, "factor")
    k0, k1 = _cuts_of(g, restricted.regime_indicator)
    fit = _refit(design, restricted.regime_indicator, "penalized", g, k0, k1)
    return _as_single(fit, g, fit.labels, joint.n_enumerated)


def _as_single(fit, g, labels, enumerated):
    lo, hi = _single_cell(g, labels)
    cell = {"tau0": [lo, hi], "tau1": [0.0, 0.0]}
    return FactorFit(0.0, 0.5 * (lo + hi), fit.theta_B, fit.delta, fit.sse, fit.mse, labels,
                     "penalized", cell, enumerated, 0, fit.mse, 0.0, "single")


def _single_cell(g, labels):
    k0, k1 = _cuts_of(g, labels)
    a0, b0 = g.cell(0, k0)
    a1, b1 = g.cell(1, k1)
    return max(a0, a1), min(b0, b1)


def _reachable_single(g, labels) -> bool:
    lo, hi = _single_cell(g, labels)
    return lo < hi or (lo == hi and lo == g.window[1])
