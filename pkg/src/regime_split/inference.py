"""Sup-Wald test for a threshold effect with a fixed-regressor wild bootstrap."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .dataio import RegressorMatrix
from .errors import ContractError, EstimationError, SingularDesignError, SingularityError
from .parallel import parallel_map
from .regress import ols, sandwich, wald
from .threshold import GridSpec, min_regime_rows

logger = logging.getLogger(__name__)

CHUNK = 64  # replications per batch; fixed so results never depend on thread count
WEIGHT_SCHEMES = ("rademacher", "mammen", "normal")


@dataclass(frozen=True)
class WaldCurve:
    tau: np.ndarray
    wald: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.nanmax(self.wald))

    @property
    def argsup(self) -> float:
        return float(self.tau[int(np.nanargmax(self.wald))])

    def __iter__(self):
        return iter(zip(self.tau.tolist(), self.wald.tolist()))


@dataclass(frozen=True)
class SupWaldResult:
    wald_curve: WaldCurve
    sup_stat: float
    bootstrap_stats: np.ndarray
    p_value: float
    critical_95: float
    seed: int
    trimming: float
    weights: str = "rademacher"
    recenter: bool = False

    @property
    def B(self) -> int:
        return int(self.bootstrap_stats.size)

    def to_dict(self) -> dict:
        return {
            "sup_stat": self.sup_stat,
            "tau_at_sup": self.wald_curve.argsup,
            "p_value": self.p_value,
            "critical_95": self.critical_95,
            "B": self.B,
            "seed": self.seed,
            "trimming": self.trimming,
            "bootstrap": {"scheme": "fixed-regressor wild", "weights": self.weights,
                          "recenter": self.recenter},
            "bootstrap_stats": self.bootstrap_stats.tolist(),
        }


def _regime_wald(X, y, high):
    fit_a = ols(y[high], X[high])
    fit_b = ols(y[~high], X[~high])
    cov = sandwich(X[high], fit_a.residuals).matrix + sandwich(X[~high], fit_b.residuals).matrix
    p = X.shape[1]
    return wald(np.eye(p), np.zeros(p), fit_a.coefficients - fit_b.coefficients, cov)


def wald_curve(design: RegressorMatrix, grid: GridSpec | None = None) -> WaldCurve:
    """Heteroskedasticity-robust Wald statistic for equal regime coefficients.

    Regimes share no rows, so the White covariance of the coefficient gap is
    the sum of the per-regime sandwiches. Grid points where a regime is too
    small or a covariance is singular are reported as NaN.
    """
    grid = grid or GridSpec()
    X = design.regressors
    y = design.response
    q = design.threshold_var
    taus = grid.values(q)
    floor = min_regime_rows(X.shape[1])
    out = np.full(taus.size, np.nan)
    for i, tau in enumerate(taus):
        high = q > tau
        if high.sum() < floor or (~high).sum() < floor:
            continue
        try:
            out[i] = _regime_wald(X, y, high)
        except (SingularDesignError, SingularityError) as exc:
            logger.debug("wald skipped at tau=%g: %s", tau, exc)
    if not np.isfinite(out).any():
        raise EstimationError("no feasible grid point for the Wald curve")
    return WaldCurve(taus, out)


class _BatchWald:
    """Sup-Wald statistics for many response vectors sharing one design.

    For each candidate split the per-regime projection ``(X'X)^-1 X'`` and
    bread are prepared once; a batch of responses then needs only matrix
    products plus one small batched solve per split.
    """

    def __init__(self, X, q, taus):
        n, p = X.shape
        self.order = np.argsort(q, kind="stable")
        Xs = X[self.order]
        self.Xs = Xs
        self.p = p
        iu = np.triu_indices(p)
        self.iu = iu
        self.Z = Xs[:, iu[0]] * Xs[:, iu[1]]
        qs = q[self.order]
        floor = min_regime_rows(p)
        self.splits = []
        for tau in taus:
            k = int(np.searchsorted(qs, tau, side="right"))
            if k < floor or n - k < floor:
                continue
            try:
                blocks = [self._prepare(Xs[:k]), self._prepare(Xs[k:])]
            except SingularDesignError:
                continue
            self.splits.append((k, blocks))

    def _prepare(self, Xb):
        Q, R, piv = linalg.qr(Xb, mode="economic", pivoting=True)
        d = np.abs(np.diag(R))
        if d.size == 0 or d.min() <= np.finfo(float).eps * max(Xb.shape) * d.max():
            raise SingularDesignError("regime design is rank deficient")
        Rinv = linalg.solve_triangular(R, np.eye(self.p))
        proj = np.empty((self.p, Xb.shape[0]))
        proj[piv] = Rinv @ Q.T
        inv = np.empty((self.p, self.p))
        inv[np.ix_(piv, piv)] = Rinv @ Rinv.T
        return proj, inv

    def _vcov(self, inv, meat_tri):
        m = meat_tri.shape[1]
        meat = np.zeros((m, self.p, self.p))
        meat[:, self.iu[0], self.iu[1]] = meat_tri.T
        meat[:, self.iu[1], self.iu[0]] = meat_tri.T
        return inv @ meat @ inv

    def sup(self, Y):
        """Sup over splits of the Wald statistic, one per column of ``Y``."""
        Ys = Y[self.order]
        best = np.full(Y.shape[1], -np.inf)
        for k, blocks in self.splits:
            thetas = []
            cov = 0.0
            for (proj, inv), rows in zip(blocks, (slice(0, k), slice(k, None))):
                yb = Ys[rows]
                theta = proj @ yb
                resid = yb - self.Xs[rows] @ theta
                meat_tri = self.Z[rows].T @ (resid * resid)
                cov = cov + self._vcov(inv, meat_tri)
                thetas.append(theta)
            gap = (thetas[1] - thetas[0]).T  # high minus low
            cov = 0.5 * (cov + np.swapaxes(cov, 1, 2))
            try:
                sol = np.linalg.solve(cov, gap[:, :, None])[:, :, 0]
                stat = np.einsum("bi,bi->b", gap, sol)
            except np.linalg.LinAlgError:
                stat = np.array([_safe_quad(c, g) for c, g in zip(cov, gap)])
            best = np.fmax(best, stat)
        return best


def _safe_quad(cov, gap):
    try:
        return float(gap @ np.linalg.solve(cov, gap))
    except np.linalg.LinAlgError:
        return np.nan


def _draw_weights(seed, r, n, scheme):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))
    if scheme == "rademacher":
        return 2.0 * rng.integers(0, 2, size=n) - 1.0
    if scheme == "mammen":
        s5 = np.sqrt(5.0)
        lo, hi = -(s5 - 1) / 2, (s5 + 1) / 2
        return np.where(rng.random(n) < (s5 + 1) / (2 * s5), lo, hi)
    if scheme == "normal":
        return rng.standard_normal(n)
    raise ContractError(f"unknown weight scheme {scheme!r}")


def sup_wald_bootstrap(design: RegressorMatrix, grid: GridSpec | None = None, B: int = 2000,
                       seed: int = 0, weights: str = "rademacher", recenter: bool = False,
                       threads: int | None = None) -> SupWaldResult:
    """Sup-Wald statistic and its wild-bootstrap p-value.

    Under the null of no threshold the bootstrap response is the pooled fit
    plus pooled residuals times independent weights; the regressors and
    threshold variable are held fixed. Replication ``r`` draws its weights
    from a stream keyed on ``(seed, r)``, so the statistics do not depend on
    thread count and a larger ``B`` only appends replications.
    """
    if B < 1:
        raise ContractError("B must be at least 1")
    if weights not in WEIGHT_SCHEMES:
        raise ContractError(f"unknown weight scheme {weights!r}")
    grid = grid or GridSpec()
    curve = wald_curve(design, grid)
    X = design.regressors
    y = design.response
    null = ols(y, X, names=design.names)
    resid = null.residuals - null.residuals.mean() if recenter else null.residuals
    batch = _BatchWald(X, design.threshold_var, curve.tau[np.isfinite(curve.wald)])
    if not batch.splits:
        raise EstimationError("no feasible split for the bootstrap")
    n = len(y)

    def run(start):
        stop = min(start + CHUNK, B)
        eta = np.column_stack([_draw_weights(seed, r, n, weights) for r in range(start, stop)])
        ystar = null.fitted[:, None] + resid[:, None] * eta
        return batch.sup(ystar)

    stats = np.concatenate(parallel_map(run, range(0, B, CHUNK), threads=threads))
    sup_stat = curve.sup
    p_value = float(np.mean(stats >= sup_stat))
    crit = float(np.quantile(stats, 0.95))
    return SupWaldResult(curve, sup_stat, stats, p_value, crit, int(seed),
                         float(grid.lower_quantile), weights, recenter)
