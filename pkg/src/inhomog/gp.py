"""Squared-exponential correlation kernel, Gaussian log-likelihood, closed-form prediction.

Outputs are assumed standardized, so covariance matrices are correlation
matrices (unit diagonal, zero mean) and the only hyperparameters are the
per-dimension length scales. There is no observation-noise term; a small
diagonal jitter keeps factorizations alive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .dataset import StandardizedOutputs
from .errors import DataValidationError, NumericalError

JITTER_START = 1e-8
JITTER_MAX = 1e-4


@dataclass(frozen=True)
class SqeKernel:
    """corr(x, x') = exp(-sum_m (x_m - x'_m)^2 / ell_m), one ell per input dimension."""

    lengthscales: np.ndarray

    def __post_init__(self):
        ell = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if np.any(ell <= 0) or not np.all(np.isfinite(ell)):
            raise DataValidationError("length scales must be positive and finite")
        object.__setattr__(self, "lengthscales", ell)

    @property
    def d(self) -> int:
        return len(self.lengthscales)


@dataclass(frozen=True)
class CorrMatrix:
    """Kernel correlation matrix with a fixed diagonal jitter."""

    entries: np.ndarray
    jitter: float

    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor at exactly this jitter; no escalation."""
        try:
            return np.linalg.cholesky(self.entries)
        except np.linalg.LinAlgError:
            raise NumericalError(
                f"matrix not PD at jitter {self.jitter:g}"
            ) from None


def sqe_corr(x: np.ndarray, x_other: np.ndarray, kernel: SqeKernel) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_other = np.atleast_1d(np.asarray(x_other, dtype=float))
    if x.shape != x_other.shape or x.shape != (kernel.d,):
        raise DataValidationError(
            f"dimension mismatch: {x.shape} vs {x_other.shape} vs kernel d={kernel.d}"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(x_other))):
        raise DataValidationError("non-finite input point")
    return float(np.exp(-np.sum((x - x_other) ** 2 / kernel.lengthscales)))


def squared_distances(x_a: np.ndarray, x_b: np.ndarray) -> np.ndarray:
    """Per-dimension squared differences, shape (d, len(a), len(b)).

    Precompute once per design; correlation matrices for any length scales
    then cost only an exp over the weighted sum.
    """
    x_a = np.atleast_2d(np.asarray(x_a, dtype=float))
    x_b = np.atleast_2d(np.asarray(x_b, dtype=float))
    diff = x_a[:, None, :] - x_b[None, :, :]
    return np.moveaxis(diff**2, 2, 0)


def corr_from_distances(d2: np.ndarray, kernel: SqeKernel) -> np.ndarray:
    return np.exp(-np.tensordot(1.0 / kernel.lengthscales, d2, axes=1))


def corr_matrix(x: np.ndarray, kernel: SqeKernel, jitter: float = 0.0) -> CorrMatrix:
    """N x N correlation matrix of the design, plus jitter on the diagonal."""
    if jitter < 0:
        raise DataValidationError("jitter must be nonnegative")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != kernel.d:
        raise DataValidationError(f"design has d={x.shape[1]}, kernel has d={kernel.d}")
    entries = corr_from_distances(squared_distances(x, x), kernel)
    if jitter:
        entries = entries + jitter * np.eye(x.shape[0])
    return CorrMatrix(entries=entries, jitter=jitter)


def cholesky_with_ladder(
    matrix: np.ndarray,
    jitter_start: float = JITTER_START,
    jitter_max: float = JITTER_MAX,
) -> tuple[np.ndarray, float]:
    """Cholesky of matrix + jitter*I, escalating jitter x10 up to jitter_max.

    Returns the factor and the jitter that succeeded.
    """
    jitter = jitter_start
    n = matrix.shape[0]
    while True:
        try:
            chol = np.linalg.cholesky(matrix + jitter * np.eye(n) if jitter else matrix)
            return chol, jitter
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = JITTER_START
            elif jitter * 10 <= jitter_max * (1 + 1e-12):
                jitter *= 10
            else:
                raise NumericalError(f"matrix not PD up to jitter {jitter_max:g}") from None


def log_likelihood(chol: np.ndarray, y: np.ndarray) -> float:
    """Zero-mean Gaussian log density -(N ln 2pi + ln|S| + y' S^-1 y) / 2 from a factor."""
    y = np.asarray(y, dtype=float).ravel()
    n = chol.shape[0]
    if y.shape != (n,):
        raise DataValidationError(f"y has length {len(y)}, factor is {n} x {n}")
    w = solve_triangular(chol, y, lower=True, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    value = -0.5 * (n * math.log(2.0 * math.pi) + logdet + float(w @ w))
    if not math.isfinite(value):
        raise NumericalError("non-finite log-likelihood")
    return value


@dataclass(frozen=True)
class GpPrediction:
    mean: float
    variance: float


class GpPredictor:
    """Factor the training correlation once, then predict at many test points.

    mean = k' S^-1 y, variance = 1 + jitter - k' S^-1 k, in standardized
    units; un-standardized on output when standardization constants are
    supplied.
    """

    def __init__(
        self,
        x_train: np.ndarray,
        y_train: np.ndarray,
        kernel: SqeKernel,
        jitter: float = 0.0,
        standardization: StandardizedOutputs | None = None,
    ):
        self.x_train = np.atleast_2d(np.asarray(x_train, dtype=float))
        self.y_train = np.asarray(y_train, dtype=float).ravel()
        if self.x_train.shape[0] != len(self.y_train):
            raise DataValidationError("x_train and y_train disagree on N")
        self.kernel = kernel
        self.jitter = float(jitter)
        self.standardization = standardization
        self._chol = corr_matrix(self.x_train, kernel, jitter).cholesky()
        self._alpha = cho_solve((self._chol, True), self.y_train, check_finite=False)

    def predict(self, x_test: np.ndarray) -> GpPrediction:
        x_test = np.atleast_1d(np.asarray(x_test, dtype=float))
        if x_test.shape != (self.kernel.d,):
            raise DataValidationError(f"test point has shape {x_test.shape}, want ({self.kernel.d},)")
        k = corr_from_distances(
            squared_distances(self.x_train, x_test[None, :]), self.kernel
        ).ravel()
        mean = float(k @ self._alpha)
        variance = 1.0 + self.jitter - float(k @ cho_solve((self._chol, True), k, check_finite=False))
        if variance < -1e-10:
            raise NumericalError(f"negative predictive variance {variance:g}")
        variance = max(variance, 0.0)
        if self.standardization is not None:
            sd = float(self.standardization.sd[0])
            mean = mean * sd + float(self.standardization.mean[0])
            variance = variance * sd * sd
        return GpPrediction(mean=mean, variance=variance)


def gp_predict(
    x_train: np.ndarray,
    y_train: np.ndarray,
    kernel: SqeKernel,
    jitter: float,
    x_test: np.ndarray,
    standardization: StandardizedOutputs | None = None,
) -> GpPrediction:
    """One-shot closed-form predictive mean and variance at a single test input."""
    return GpPredictor(x_train, y_train, kernel, jitter, standardization).predict(x_test)
