"""Augmented Dickey-Fuller unit-root test (constant, no trend).

Fits  dy_t = a + g*y_{t-1} + sum_j phi_j * dy_{t-j} + e_t  by least squares
and reports the t-statistic of g. The null (unit root) is rejected at a
level when the statistic falls below that level's critical value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError, NumericalError

CRITICAL_VALUES = {"1%": -3.430, "5%": -2.862, "10%": -2.567}

# Asymptotic quantiles of the constant-case statistic under the null,
# Monte-Carlo calibrated (250k replications, series length 2500); the 1/5/10%
# entries are the tabulated critical values. Used only for the interpolated
# p-value; reject_at is decided by CRITICAL_VALUES alone.
_NULL_QUANTILES = (
    (0.001, -4.093),
    (0.010, -3.430),
    (0.025, -3.119),
    (0.050, -2.862),
    (0.100, -2.567),
    (0.200, -2.218),
    (0.300, -1.972),
    (0.400, -1.763),
    (0.500, -1.567),
    (0.600, -1.367),
    (0.700, -1.144),
    (0.800, -0.861),
    (0.900, -0.439),
    (0.950, -0.075),
    (0.975, 0.241),
    (0.990, 0.609),
    (0.999, 1.397),
)


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lags_used: int
    n_effective: int
    critical_values: dict[str, float]
    reject_at: tuple[str, ...]
    p_value: float

    def rejects(self, level: str = "5%") -> bool:
        return level in self.reject_at


def ols_solve(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Least squares via QR; returns (coefficients, standard errors, rss).

    Standard errors come from sigma2 * (X'X)^-1 with sigma2 = rss/(n-k);
    for a saturated fit (n == k) they are zero.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, k = x.shape
    if n < k:
        raise DataValidationError(f"need rows >= cols, got {n} x {k}")
    if len(y) != n:
        raise DataValidationError("response length does not match design rows")

    q, r = np.linalg.qr(x)
    diag = np.abs(np.diag(r))
    if np.any(diag < max(n, k) * np.finfo(float).eps * diag.max(initial=1.0)):
        raise NumericalError("design matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - x @ beta
    rss = float(resid @ resid)
    if n > k:
        sigma2 = rss / (n - k)
        rinv = np.linalg.solve(r, np.eye(k))
        se = np.sqrt(sigma2 * np.sum(rinv * rinv, axis=1))
    else:
        se = np.zeros(k)
    return beta, se, rss


def _lag_stack(dy: np.ndarray, level: np.ndarray, lags: int) -> tuple[np.ndarray, np.ndarray]:
    """Design [1, y_{t-1}, dy_{t-1}, ..., dy_{t-lags}] and response dy_t."""
    n = len(dy) - lags
    cols = [np.ones(n), level[lags:]]
    for j in range(1, lags + 1):
        cols.append(dy[lags - j : len(dy) - j])
    return np.column_stack(cols), dy[lags:]


def _aic(rss: float, n: int, k: int) -> float:
    return n * math.log(rss / n) + 2 * k


def adf_test(
    series: np.ndarray,
    max_lag: int | None = None,
    lag_rule: str = "aic",
) -> AdfResult:
    """Unit-root test of a series.

    max_lag defaults to floor(12 * (n/100)^(1/4)). With lag_rule="aic" the
    lag order is selected by minimising AIC over 0..max_lag on a common
    sample; "fixed" uses max_lag as given.
    """
    y = np.asarray(series, dtype=float).ravel()
    n = len(y)
    if not np.all(np.isfinite(y)):
        raise DataValidationError("series contains non-finite values")
    if np.min(y) == np.max(y):
        raise DataValidationError("series is constant")
    if lag_rule not in ("aic", "fixed"):
        raise DataValidationError(f"unknown lag rule {lag_rule!r}")

    if max_lag is None:
        if lag_rule == "fixed":
            raise DataValidationError("lag_rule='fixed' requires max_lag")
        max_lag = int(math.floor(12.0 * (n / 100.0) ** 0.25))
        max_lag = max(0, min(max_lag, n // 2 - 3))
    if max_lag < 0:
        raise DataValidationError("max_lag must be >= 0")
    if n < max_lag + 10:
        raise DataValidationError(f"series length {n} < max_lag + 10 = {max_lag + 10}")

    dy = np.diff(y)
    level = y[:-1]

    if lag_rule == "aic" and max_lag > 0:
        # candidates scored on the sample trimmed for the largest lag; they are
        # nested column prefixes of one design, so a single QR yields every RSS
        x_full, resp = _lag_stack(dy, level, max_lag)
        q, _ = np.linalg.qr(x_full)
        proj = q.T @ resp
        rss_prefix = float(resp @ resp) - np.cumsum(proj**2)
        n_common = len(resp)
        best_lag, best_aic = 0, math.inf
        for lag in range(0, max_lag + 1):
            k = lag + 2
            aic = _aic(float(rss_prefix[k - 1]), n_common, k)
            if aic < best_aic:
                best_aic, best_lag = aic, lag
        lags = best_lag
    else:
        lags = max_lag

    x, resp = _lag_stack(dy, level, lags)
    beta, se, _ = ols_solve(x, resp)
    if se[1] <= 0:
        raise NumericalError("zero standard error for the unit-root coefficient")
    statistic = float(beta[1] / se[1])

    reject = tuple(
        lvl for lvl, cv in CRITICAL_VALUES.items() if statistic < cv
    )
    return AdfResult(
        statistic=statistic,
        lags_used=lags,
        n_effective=n - lags - 1,
        critical_values=dict(CRITICAL_VALUES),
        reject_at=reject,
        p_value=_interp_p_value(statistic),
    )


def _interp_p_value(statistic: float) -> float:
    probs = np.array([p for p, _ in _NULL_QUANTILES])
    quants = np.array([q for _, q in _NULL_QUANTILES])
    if statistic <= quants[0]:
        return float(probs[0])
    if statistic >= quants[-1]:
        return float(probs[-1])
    return float(np.interp(statistic, quants, probs))
