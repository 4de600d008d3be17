"""Seeded synthetic generators used by the property and acceptance suites."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DataValidationError
from .gp import SqeKernel, cholesky_with_ladder, corr_matrix

KINDS = ("stationary-gp", "piecewise-gp", "unit-root", "noisy-trend")

_MAX_DENSE_N = 5000


@dataclass(frozen=True)
class SynthSpec:
    """What to generate. Parameters not used by a kind are ignored.

    stationary-gp: lengthscales[0] on an evenly spaced unit grid.
    piecewise-gp: one length scale per segment; boundaries are the 1-based
    start indices of the second and later segments.
    unit-root: random walk with innovation sd noise_sd.
    noisy-trend: slowly varying sinusoid with drifting amplitude plus
    uniform noise whose per-index amplitude is reported alongside the data.
    """

    kind: str
    n: int
    rng_seed: int = 0
    lengthscales: tuple[float, ...] = (5.0,)
    boundaries: tuple[int, ...] = ()
    noise_sd: float = 1.0
    jitter: float = 1e-8
    # noisy-trend shape parameters
    amplitude: float = 20.0
    amp_drift: float = 0.4
    noise_scale: float = 0.15
    noise_drift: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataValidationError(f"unknown synth kind {self.kind!r}")
        if self.n < 2:
            raise DataValidationError("n must be >= 2")
        if any(l <= 0 for l in self.lengthscales):
            raise DataValidationError("length scales must be positive")
        if self.noise_sd < 0 or self.noise_scale < 0:
            raise DataValidationError("noise scales must be nonnegative")
        bounds = tuple(int(b) for b in self.boundaries)
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])) or any(
            not (1 < b <= self.n) for b in bounds
        ):
            raise DataValidationError("boundaries must be strictly increasing in (1, n]")
        object.__setattr__(self, "boundaries", bounds)


def _grid_dataset(y: np.ndarray) -> Dataset:
    n = len(y)
    return Dataset(
        inputs=np.arange(n, dtype=float)[:, None],
        outputs=np.asarray(y, dtype=float)[:, None],
        input_names=("x",),
        output_names=("y",),
        shape=(1,),
    )


def _gp_values(n: int, lengthscale: float, jitter: float, rng: np.random.Generator) -> np.ndarray:
    if n > _MAX_DENSE_N:
        raise DataValidationError(f"dense sampling limited to n <= {_MAX_DENSE_N}")
    if n == 1:
        return rng.standard_normal(1)
    x = np.arange(n, dtype=float)[:, None]
    matrix = corr_matrix(x, SqeKernel([lengthscale]), 0.0).entries
    chol, _ = cholesky_with_ladder(matrix, jitter)
    return chol @ rng.standard_normal(n)


def sample_gp(spec: SynthSpec) -> Dataset:
    """Draw one path of a zero-mean unit-variance GP on the grid 0..n-1."""
    if spec.kind != "stationary-gp":
        raise DataValidationError(f"sample_gp got kind {spec.kind!r}")
    rng = np.random.default_rng(spec.rng_seed)
    return _grid_dataset(_gp_values(spec.n, spec.lengthscales[0], spec.jitter, rng))


def sample_piecewise_gp(spec: SynthSpec) -> Dataset:
    """Independent stationary segments with per-segment length scales, concatenated."""
    if spec.kind != "piecewise-gp":
        raise DataValidationError(f"sample_piecewise_gp got kind {spec.kind!r}")
    if len(spec.lengthscales) != len(spec.boundaries) + 1:
        raise DataValidationError(
            f"{len(spec.boundaries)} boundaries need {len(spec.boundaries) + 1} length scales"
        )
    rng = np.random.default_rng(spec.rng_seed)
    starts = (1,) + spec.boundaries
    ends = spec.boundaries + (spec.n + 1,)
    parts = [
        _gp_values(end - start, ell, spec.jitter, rng)
        for start, end, ell in zip(starts, ends, spec.lengthscales)
    ]
    return _grid_dataset(np.concatenate(parts))


def sample_unit_root(spec: SynthSpec) -> Dataset:
    """Random walk y_t = y_{t-1} + e_t with e_t ~ N(0, noise_sd^2), y_0 = 0."""
    if spec.kind != "unit-root":
        raise DataValidationError(f"sample_unit_root got kind {spec.kind!r}")
    rng = np.random.default_rng(spec.rng_seed)
    return _grid_dataset(np.cumsum(spec.noise_sd * rng.standard_normal(spec.n)))


def sample_example1_like(spec: SynthSpec) -> tuple[Dataset, np.ndarray]:
    """Nonstationary-in-mean series: drifting-amplitude sinusoid plus bounded noise.

    Noise at index t is uniform on [-a_t, a_t]; the returned vector holds
    a_1..a_{N-1}, usable directly as explicit per-index tolerance bands.
    """
    if spec.kind != "noisy-trend":
        raise DataValidationError(f"sample_example1_like got kind {spec.kind!r}")
    rng = np.random.default_rng(spec.rng_seed)
    t = np.arange(spec.n, dtype=float)
    # one slow cycle across the data, amplitude itself drifting even more slowly
    amp = spec.amplitude * (1.0 + spec.amp_drift * np.sin(2.0 * math.pi * t / (2.3 * spec.n) + 0.7))
    trend = amp * np.sin(2.0 * math.pi * t / spec.n + 0.3)
    a = spec.noise_scale * (1.0 + spec.noise_drift * np.sin(2.0 * math.pi * t / (0.81 * spec.n) + 1.9))
    noise = a * rng.uniform(-1.0, 1.0, size=spec.n)
    return _grid_dataset(trend + noise), a[: spec.n - 1].copy()
