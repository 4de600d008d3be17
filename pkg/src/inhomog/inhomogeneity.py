"""Inhomogeneity diagnostics for a training set.

The pipeline is: estimate the absolute correlation between consecutive
outputs of the index-reduced data, map it through the log-correlation
distance L = sqrt(-log|corr|), put a tolerance band around every L-value,
and count the L-values whose band intersects no other band. The count,
normalised by the number of L-values, is the inhomogeneity parameter of
the dataset - a number in [0, 1] measuring how strongly the data forces an
uneven correlation structure on any function fitted through it.

Correlation between two single realisations is not estimable, so an
estimator has to be chosen. Two are provided:

* ``windowed-pairs`` (scalar outputs): the Pearson correlation of the
  lag-1 pair set {(y_c, y_{c+1})} over a window of indices centred at the
  pair of interest. Adjacent windows overlap, which is what makes single
  wild estimates decay gradually across neighbouring L-values instead of
  isolating spuriously.
* ``elementwise-tensor`` (outputs with >= 3 components): the Pearson
  correlation across the components of the two output tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import ReducedDataset, StandardizedOutputs
from .errors import DataValidationError, NumericalError

WINDOWED = "windowed-pairs"
TENSOR = "elementwise-tensor"

# Sample variance below this is treated as a degenerate (constant) window.
_VAR_EPS = 1e-30


class DegenerateWindowError(NumericalError):
    """Zero variance in one coordinate of a correlation window."""


@dataclass(frozen=True)
class CorrEstimatorConfig:
    """How |corr(Y_i, Y_j)| is estimated from single realisations.

    half_width applies to the windowed-pairs kind only: the window holds
    the lag-1 pairs with index in [i-h, i+h], at most 2h+1 of them.
    corr_floor keeps the log-distance finite when the estimate hits zero.
    """

    kind: str = WINDOWED
    half_width: int = 5
    corr_floor: float = 1e-12

    def __post_init__(self):
        if self.kind not in (WINDOWED, TENSOR):
            raise DataValidationError(f"unknown estimator kind {self.kind!r}")
        if self.half_width < 1:
            raise DataValidationError("half_width must be >= 1")
        if not (0.0 < self.corr_floor < 1.0):
            raise DataValidationError("corr_floor must be in (0, 1)")


@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerance band put around every L-value.

    constant: band half-width delta for every index.
    proportional: half-width beta * L_i.
    explicit: one half-width per index (length N-1), e.g. per-index noise
    amplitudes of a synthetic generator.
    """

    mode: str = "constant"
    delta: float = 0.05
    beta: float | None = None
    deltas: np.ndarray | None = None

    def __post_init__(self):
        if self.mode == "constant":
            if self.delta < 0:
                raise DataValidationError("constant tolerance requires delta >= 0")
        elif self.mode == "proportional":
            if self.beta is None or not (0.0 < self.beta < 1.0):
                raise DataValidationError("proportional tolerance requires beta in (0, 1)")
        elif self.mode == "explicit":
            if self.deltas is None:
                raise DataValidationError("explicit tolerance requires a deltas vector")
            deltas = np.asarray(self.deltas, dtype=float)
            if deltas.ndim != 1 or np.any(deltas < 0) or not np.all(np.isfinite(deltas)):
                raise DataValidationError("explicit deltas must be finite and nonnegative")
            object.__setattr__(self, "deltas", deltas)
        else:
            raise DataValidationError(f"unknown tolerance mode {self.mode!r}")

    def half_widths(self, values: np.ndarray) -> np.ndarray:
        if self.mode == "constant":
            return np.full(values.shape, self.delta)
        if self.mode == "proportional":
            return self.beta * values
        if len(self.deltas) != len(values):
            raise DataValidationError(
                f"explicit deltas length {len(self.deltas)} != number of L-values {len(values)}"
            )
        return self.deltas


@dataclass(frozen=True)
class LSeries:
    """The N-1 log-correlation distances between consecutive outputs, with bands."""

    values: np.ndarray       # (N-1,)
    band_lo: np.ndarray      # (N-1,)
    band_hi: np.ndarray      # (N-1,)
    corr_values: np.ndarray  # (N-1,) the |corr| estimates

    def __post_init__(self):
        for name in ("values", "band_lo", "band_hi", "corr_values"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (len(self.values) == len(self.band_lo) == len(self.band_hi) == len(self.corr_values)):
            raise DataValidationError("LSeries arrays must all have length N-1")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise DataValidationError("L-values must be finite and nonnegative")
        if np.any(self.band_lo > self.values) or np.any(self.band_hi < self.values):
            raise DataValidationError("each band must contain its L-value")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class InhomReport:
    """Incompatible index set, its size, and the inhomogeneity parameter m/(N-1)."""

    incompatible: tuple[int, ...]
    m: int
    p: float
    n: int  # dataset size N
    estimator: CorrEstimatorConfig = field(default=CorrEstimatorConfig())
    tolerance: ToleranceConfig = field(default=ToleranceConfig())


def _pearson_abs(u: np.ndarray, v: np.ndarray, context: str) -> float:
    """|Pearson correlation| of two equal-length vectors.

    A window where both coordinates are constant and equal is perfectly
    correlated by convention (a constant series repeats itself exactly);
    any other zero-variance case is degenerate.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    um = u - u.mean()
    vm = v - v.mean()
    suu = float(um @ um)
    svv = float(vm @ vm)
    if suu <= _VAR_EPS or svv <= _VAR_EPS:
        if suu <= _VAR_EPS and svv <= _VAR_EPS and abs(u[0] - v[0]) == 0.0:
            return 1.0
        raise DegenerateWindowError(f"degenerate correlation window ({context})")
    r = float(um @ vm) / math.sqrt(suu * svv)
    return min(abs(r), 1.0)


def abs_corr(
    outputs: StandardizedOutputs,
    i: int,
    j: int,
    cfg: CorrEstimatorConfig = CorrEstimatorConfig(),
) -> float:
    """Estimated |corr(Y_i, Y_j)| in [corr_floor, 1]; indices are 1-based."""
    values = outputs.values
    n, p = values.shape
    if not (1 <= i <= n and 1 <= j <= n):
        raise DataValidationError(f"indices ({i}, {j}) outside 1..{n}")
    if cfg.kind == WINDOWED:
        if j != i + 1:
            raise DataValidationError("windowed-pairs estimator requires j = i + 1")
        if p != 1:
            raise DataValidationError("windowed-pairs estimator requires scalar outputs (P = 1)")
        series = values[:, 0]
        lo = max(1, i - cfg.half_width)
        hi = min(n - 1, i + cfg.half_width)
        u = series[lo - 1 : hi]
        v = series[lo : hi + 1]
        r = _pearson_abs(u, v, f"pair index {i}, window [{lo}, {hi}]")
    else:
        if p < 3:
            raise DataValidationError("elementwise-tensor estimator requires P >= 3")
        r = _pearson_abs(values[i - 1], values[j - 1], f"outputs {i} and {j}")
    return max(r, cfg.corr_floor)


def d_y(corr: float, corr_floor: float = 1e-12) -> float:
    """Log-correlation distance sqrt(-ln corr); 0 at corr = 1, grows as corr drops."""
    if not (corr_floor <= corr <= 1.0):
        raise DataValidationError(f"correlation {corr} outside [{corr_floor}, 1]")
    return math.sqrt(-math.log(corr))


def l_series(
    rd: ReducedDataset,
    so: StandardizedOutputs,
    cfg: CorrEstimatorConfig = CorrEstimatorConfig(),
    tol: ToleranceConfig = ToleranceConfig(),
) -> LSeries:
    """Distances L_i between consecutive outputs, i = 1..N-1, with tolerance bands."""
    n = rd.n
    if so.values.shape[0] != n:
        raise DataValidationError("reduced data and standardized outputs disagree on N")
    if n < 2:
        raise DataValidationError("need N >= 2 for any L-value")

    corr = np.empty(n - 1)
    if cfg.kind == WINDOWED:
        if so.values.shape[1] != 1:
            raise DataValidationError("windowed-pairs estimator requires scalar outputs (P = 1)")
        series = so.values[:, 0]
        u_all = series[:-1]
        v_all = series[1:]
        h = cfg.half_width
        for i in range(1, n):
            lo = max(1, i - h)
            hi = min(n - 1, i + h)
            try:
                r = _pearson_abs(u_all[lo - 1 : hi], v_all[lo - 1 : hi], f"window [{lo}, {hi}]")
            except DegenerateWindowError as exc:
                raise DegenerateWindowError(f"L-index {i}: {exc}") from None
            corr[i - 1] = max(r, cfg.corr_floor)
    else:
        for i in range(1, n):
            try:
                corr[i - 1] = abs_corr(so, i, i + 1, cfg)
            except DegenerateWindowError as exc:
                raise DegenerateWindowError(f"L-index {i}: {exc}") from None

    values = np.sqrt(-np.log(corr))
    half = tol.half_widths(values)
    return LSeries(values=values, band_lo=values - half, band_hi=values + half, corr_values=corr)


def _require_two(ls: LSeries) -> None:
    if len(ls) < 2:
        raise DataValidationError("incompatibility undefined for fewer than two L-values")


def incompatible_set(ls: LSeries) -> set[int]:
    """Indices whose band intersects no other band, via a sorted sweep.

    Bands are closed intervals, so touching endpoints count as
    intersecting. Sorted by lower edge, a band overlaps some earlier band
    iff the running maximum of earlier upper edges reaches its lower edge,
    and overlaps some later band iff the next lower edge is within its
    upper edge. O(N log N).
    """
    _require_two(ls)
    lo, hi = ls.band_lo, ls.band_hi
    order = np.argsort(lo, kind="stable")
    lo_s = lo[order]
    hi_s = hi[order]
    k = len(order)

    prev_max_hi = np.empty(k)
    prev_max_hi[0] = -np.inf
    np.maximum.accumulate(hi_s[:-1], out=prev_max_hi[1:])
    next_lo = np.empty(k)
    next_lo[-1] = np.inf
    next_lo[:-1] = lo_s[1:]

    isolated = (prev_max_hi < lo_s) & (next_lo > hi_s)
    return set(int(order[j]) + 1 for j in np.flatnonzero(isolated))


def brute_force_incompatible(ls: LSeries) -> set[int]:
    """O(N^2) oracle for incompatible_set: exhaustive pairwise intersection."""
    _require_two(ls)
    lo, hi = ls.band_lo, ls.band_hi
    # intervals a, b intersect iff lo_a <= hi_b and lo_b <= hi_a
    inter = (lo[:, None] <= hi[None, :]) & (lo[None, :] <= hi[:, None])
    np.fill_diagonal(inter, False)
    return set(int(j) + 1 for j in np.flatnonzero(~inter.any(axis=1)))


def inhomogeneity_parameter(
    ls: LSeries,
    n: int | None = None,
    estimator: CorrEstimatorConfig = CorrEstimatorConfig(),
    tolerance: ToleranceConfig = ToleranceConfig(),
) -> InhomReport:
    """Fraction of L-values that are incompatible: p = m / (N - 1)."""
    incompatible = sorted(incompatible_set(ls))
    m = len(incompatible)
    n = len(ls) + 1 if n is None else int(n)
    return InhomReport(
        incompatible=tuple(incompatible),
        m=m,
        p=m / (n - 1),
        n=n,
        estimator=estimator,
        tolerance=tolerance,
    )
