"""Dense least squares, two-stage least squares and robust covariances."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .errors import ContractError, RankError, SingularDesignError, SingularityError


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    sse: float
    r_squared: float
    dof: int


@dataclass(frozen=True)
class CovMatrix:
    matrix: np.ndarray
    kind: str
    bandwidth: int | None = None

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.matrix))


@dataclass(frozen=True)
class IvFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    first_stages: tuple
    instrument_names: tuple
    projected: np.ndarray
    first_stage_f: tuple

    @property
    def first_stage(self) -> OlsFit:
        return self.first_stages[0]


def _pivoted_qr(X):
    Q, R, piv = linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = np.finfo(float).eps * max(X.shape) * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    return Q, R, piv, rank


def _check_rank(X, names=None):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ContractError("design must be a 2-d array")
    n, p = X.shape
    if n <= p:
        raise SingularDesignError(f"design has {n} rows for {p} columns")
    Q, R, piv, rank = _pivoted_qr(X)
    if rank < p:
        bad = int(piv[rank])
        label = names[bad] if names is not None else f"column {bad}"
        raise SingularDesignError(f"design is rank deficient ({rank} < {p}); "
                                  f"{label} is collinear with the others", column=bad)
    return Q, R, piv


def ols(y, X, names=None) -> OlsFit:
    """Least squares through a column-pivoted QR decomposition.

    Raises :class:`SingularDesignError` naming a collinear column when the
    design is numerically rank deficient.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if y.shape != (X.shape[0],):
        raise ContractError("y and X have incompatible shapes")
    Q, R, piv = _check_rank(X, names)
    beta_p = linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty_like(beta_p)
    beta[piv] = beta_p
    fitted = X @ beta
    resid = y - fitted
    sse = float(resid @ resid)
    centered = y - y.mean()
    tss = float(centered @ centered)
    r2 = 1.0 - sse / tss if tss > 0 else 0.0
    return OlsFit(beta, resid, fitted, sse, r2, X.shape[0] - X.shape[1])


def bread(X) -> np.ndarray:
    """(X'X)^-1 computed from the pivoted R factor."""
    _, R, piv = _check_rank(X)
    Rinv = linalg.solve_triangular(R, np.eye(R.shape[0]))
    inv_p = Rinv @ Rinv.T
    out = np.empty_like(inv_p)
    out[np.ix_(piv, piv)] = inv_p
    return out


def sandwich(X, resid, bandwidth: int | None = None, small_sample: bool = False) -> CovMatrix:
    """Robust sandwich covariance for coefficients fitted on ``X``.

    With ``bandwidth=None`` the meat is White's; otherwise Newey-West with
    Bartlett weights ``1 - j/(bandwidth + 1)`` for lags ``j <= bandwidth``.
    """
    X = np.asarray(X, dtype=float)
    e = np.asarray(resid, dtype=float)
    n, p = X.shape
    if e.shape != (n,):
        raise ContractError(f"residual length {e.shape} does not match {n} design rows")
    if bandwidth is not None:
        if bandwidth < 0:
            raise ContractError("bandwidth must be nonnegative")
        if bandwidth >= n:
            raise ContractError(f"bandwidth {bandwidth} must be below the sample size {n}")
    u = X * e[:, None]
    meat = u.T @ u
    if bandwidth:
        for j in range(1, bandwidth + 1):
            gamma = u[j:].T @ u[:-j]
            meat += (1.0 - j / (bandwidth + 1)) * (gamma + gamma.T)
    B = bread(X)
    V = B @ meat @ B
    if small_sample:
        V *= n / (n - p)
    V = 0.5 * (V + V.T)
    kind = "hc" if bandwidth is None else "hac"
    return CovMatrix(V, kind, bandwidth)


def hc_cov(fit: OlsFit, X, small_sample: bool = False) -> CovMatrix:
    X = np.asarray(X, dtype=float)
    if X.shape[0] != fit.residuals.shape[0] or X.shape[1] != fit.coefficients.shape[0]:
        raise ContractError("fit was not produced from this design")
    return sandwich(X, fit.residuals, None, small_sample)


def hac_cov(fit: OlsFit, X, bandwidth: int, small_sample: bool = False) -> CovMatrix:
    X = np.asarray(X, dtype=float)
    if X.shape[0] != fit.residuals.shape[0] or X.shape[1] != fit.coefficients.shape[0]:
        raise ContractError("fit was not produced from this design")
    if bandwidth < 0:
        raise ContractError("bandwidth must be nonnegative")
    cov = sandwich(X, fit.residuals, bandwidth, small_sample)
    return CovMatrix(cov.matrix, "hac", bandwidth)


def iv_2sls(y, endog, exog, instruments, instrument_names=None, f_floor: float = 0.0) -> IvFit:
    """Two-stage least squares.

    ``endog`` columns are instrumented by ``instruments`` together with the
    included ``exog`` columns. Structural residuals use the original
    endogenous regressors.
    """
    y = np.asarray(y, dtype=float)
    endog = np.atleast_2d(np.asarray(endog, dtype=float).T).T
    exog = np.atleast_2d(np.asarray(exog, dtype=float).T).T
    instruments = np.atleast_2d(np.asarray(instruments, dtype=float).T).T
    n = y.shape[0]
    if not (endog.shape[0] == exog.shape[0] == instruments.shape[0] == n):
        raise ContractError("all IV inputs need the same number of rows")
    k_end, k_inst = endog.shape[1], instruments.shape[1]
    if k_inst < k_end:
        raise RankError(f"{k_inst} instruments cannot identify {k_end} endogenous regressors")
    Z = np.column_stack([instruments, exog])
    try:
        _check_rank(Z)
    except SingularDesignError as exc:
        raise RankError(f"instrument matrix is rank deficient: {exc}") from None

    first = []
    fstats = []
    for j in range(k_end):
        fs = ols(endog[:, j], Z)
        first.append(fs)
        if exog.shape[1]:
            r_sse = ols(endog[:, j], exog).sse
        else:
            r_sse = float(endog[:, j] @ endog[:, j])
        dfd = n - Z.shape[1]
        f = ((r_sse - fs.sse) / k_inst) / (fs.sse / dfd) if fs.sse > 0 else np.inf
        fstats.append(float(f))
        if f < f_floor:
            warnings.warn(f"weak first stage for endogenous column {j}: F = {f:.2f}",
                          stacklevel=2)
    endog_hat = np.column_stack([fs.fitted for fs in first])
    Xhat = np.column_stack([endog_hat, exog])
    try:
        Q, R, piv = _check_rank(Xhat)
    except SingularDesignError as exc:
        raise RankError(f"projected design is rank deficient: {exc}") from None
    beta_p = linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty_like(beta_p)
    beta[piv] = beta_p
    resid = y - np.column_stack([endog, exog]) @ beta
    names = tuple(instrument_names) if instrument_names is not None else tuple(
        f"z{j}" for j in range(k_inst))
    return IvFit(beta, resid, tuple(first), names, Xhat, tuple(fstats))


def iv_cov(fit: IvFit, bandwidth: int | None = None, small_sample: bool = False) -> CovMatrix:
    """Sandwich covariance for 2SLS using the projected regressors."""
    return sandwich(fit.projected, fit.residuals, bandwidth, small_sample)


def wald(R, r, coefficients, cov) -> float:
    """Wald statistic (Rb - r)' (R V R')^-1 (Rb - r)."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    b = np.asarray(coefficients, dtype=float)
    V = cov.matrix if isinstance(cov, CovMatrix) else np.asarray(cov, dtype=float)
    r = np.broadcast_to(np.asarray(r, dtype=float), (R.shape[0],))
    if R.shape[1] != b.shape[0] or V.shape != (b.shape[0], b.shape[0]):
        raise ContractError("restriction, coefficients and covariance are not conformable")
    d = R @ b - r
    middle = R @ V @ R.T
    middle = 0.5 * (middle + middle.T)
    w = np.linalg.eigvalsh(middle)
    if w.size == 0 or w.min() <= np.finfo(float).eps * max(w.max(), 0.0) * middle.shape[0] \
            or w.max() <= 0:
        raise SingularityError("restriction covariance R V R' is singular")
    stat = float(d @ linalg.solve(middle, d, assume_a="pos"))
    return max(stat, 0.0)


def wald_pvalue(stat: float, df: int) -> float:
    return float(stats.chi2.sf(stat, df))
