"""Random-walk Metropolis chains for the stationary and nested non-stationary models.

Stationary model: one Gaussian random-walk Metropolis chain on the kernel
length scales, targeting the zero-mean Gaussian likelihood of the
standardized outputs times independent Normal priors centred at the seeds.

Non-stationary model: the same chain for the first n_burn + lookback
iterations. After that, every iteration runs two blocks. Block one is the
Metropolis update of the length scales given the data. Block two treats
each length scale as the output of its own one-dimensional process over
iteration index: the last ``lookback`` values form a sliding training
window, an inner Metropolis step updates the window kernel scale delta_m,
and the closed-form predictive mean at the next index becomes the new
length scale. The window then slides forward by one.

Traces are recorded every iteration; summaries are posterior means with
95% highest-density intervals over post-burn-in samples.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve

from .errors import DataValidationError, NumericalError
from .gp import (
    JITTER_START,
    cholesky_with_ladder,
    corr_from_distances,
    log_likelihood,
    squared_distances,
)

STATIONARY = "stationary"
NONSTATIONARY = "nonstationary"

ELL_FLOOR = 1e-6
_WINDOW_VAR_EPS = 1e-12


def _as_param_array(value, d: int, name: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (d,)).copy()
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise DataValidationError(f"{name} must be positive and finite")
    return arr


@dataclass(frozen=True)
class ChainConfig:
    """Everything a chain needs besides the data itself.

    seeds are the initial length scales and the prior centres; prior and
    proposal scales default to 100x and 0.5x the seeds. delta_* control the
    inner window-scale updates of the non-stationary model.
    """

    model: str
    n_iter: int
    n_burn: int
    seeds: np.ndarray
    prior_sd: np.ndarray | None = None
    proposal_sd: np.ndarray | None = None
    lookback: int = 100
    delta_seed: np.ndarray | float = 0.5
    delta_prior_sd: np.ndarray | float | None = None
    delta_proposal_sd: np.ndarray | float | None = None
    jitter: float = JITTER_START
    rng_seed: int = 0

    def __post_init__(self):
        if self.model not in (STATIONARY, NONSTATIONARY):
            raise DataValidationError(f"unknown model {self.model!r}")
        seeds = np.atleast_1d(np.asarray(self.seeds, dtype=float))
        if np.any(seeds <= 0) or not np.all(np.isfinite(seeds)):
            raise DataValidationError("seeds must be positive and finite")
        d = len(seeds)
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(
            self, "prior_sd",
            _as_param_array(self.prior_sd if self.prior_sd is not None else 100.0 * seeds, d, "prior_sd"),
        )
        object.__setattr__(
            self, "proposal_sd",
            _as_param_array(self.proposal_sd if self.proposal_sd is not None else 0.5 * seeds, d, "proposal_sd"),
        )
        object.__setattr__(self, "delta_seed", _as_param_array(self.delta_seed, d, "delta_seed"))
        object.__setattr__(
            self, "delta_prior_sd",
            _as_param_array(
                self.delta_prior_sd if self.delta_prior_sd is not None else 100.0 * self.delta_seed,
                d, "delta_prior_sd",
            ),
        )
        object.__setattr__(
            self, "delta_proposal_sd",
            _as_param_array(
                self.delta_proposal_sd if self.delta_proposal_sd is not None else 0.5 * self.delta_seed,
                d, "delta_proposal_sd",
            ),
        )
        if self.n_iter < 1 or self.n_burn < 0:
            raise DataValidationError("need n_iter >= 1 and n_burn >= 0")
        if self.n_burn >= self.n_iter:
            raise DataValidationError("n_burn must be smaller than n_iter")
        if self.lookback < 2:
            raise DataValidationError("lookback must be >= 2")
        if self.model == NONSTATIONARY and self.n_burn + self.lookback >= self.n_iter:
            raise DataValidationError("nonstationary model needs n_burn + lookback < n_iter")
        if self.jitter < 0:
            raise DataValidationError("jitter must be >= 0")

    @property
    def d(self) -> int:
        return len(self.seeds)


@dataclass
class ChainTrace:
    """Per-iteration parameter values and log-posteriors (length n_iter each).

    delta and log_post_inner exist only for the non-stationary model;
    log_post_inner is NaN until the lookback phase begins.
    """

    ell: np.ndarray                      # (n_iter, d)
    log_post_outer: np.ndarray           # (n_iter,)
    delta: np.ndarray | None = None      # (n_iter, d)
    log_post_inner: np.ndarray | None = None  # (n_iter, d)
    accept_rate: float = 0.0             # post-burn-in block-1 acceptance


@dataclass(frozen=True)
class PosteriorSummary:
    names: tuple[str, ...]
    mean: np.ndarray
    hpd_lo: np.ndarray
    hpd_hi: np.ndarray

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {
            name: {"mean": float(m), "hpd_lo": float(lo), "hpd_hi": float(hi)}
            for name, m, lo, hi in zip(self.names, self.mean, self.hpd_lo, self.hpd_hi)
        }


def normal_logpdf(x, mean, sd) -> float:
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    return float(np.sum(-0.5 * math.log(2.0 * math.pi) - np.log(sd) - 0.5 * ((x - mean) / sd) ** 2))


def mh_update(
    current: np.ndarray,
    log_target: Callable[[np.ndarray], float],
    proposal_sd: np.ndarray,
    rng: np.random.Generator,
    positive_only: bool = False,
    current_log_target: float | None = None,
) -> tuple[np.ndarray, bool, float]:
    """One Gaussian random-walk Metropolis step with a joint block proposal.

    With positive_only, proposals with any nonpositive component are
    rejected outright (no target evaluation, no accept draw). Returns the
    new state, whether the proposal was accepted, and the log-target at
    the new state.
    """
    current = np.atleast_1d(np.asarray(current, dtype=float))
    if current_log_target is None:
        current_log_target = log_target(current)
    if not math.isfinite(current_log_target):
        raise NumericalError("log target is not finite at the current state")

    proposal = current + proposal_sd * rng.standard_normal(current.shape)
    if positive_only and np.any(proposal <= 0.0):
        return current, False, current_log_target
    proposal_lp = log_target(proposal)
    if np.log(rng.random()) < proposal_lp - current_log_target:
        return proposal, True, proposal_lp
    return current, False, current_log_target


def log_posterior_outer(
    ell: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    seeds: np.ndarray,
    prior_sd: np.ndarray,
    jitter: float = JITTER_START,
) -> float:
    """Gaussian log-likelihood of standardized outputs plus Normal priors on ell."""
    ell = np.atleast_1d(np.asarray(ell, dtype=float))
    if np.any(ell <= 0):
        raise DataValidationError("length scales must be positive")
    from .gp import SqeKernel, corr_matrix

    matrix = corr_matrix(np.atleast_2d(x), SqeKernel(ell), 0.0).entries
    chol, _ = cholesky_with_ladder(matrix, jitter)
    return log_likelihood(chol, y) + normal_logpdf(ell, seeds, prior_sd)


@lru_cache(maxsize=8)
def _lookback_geometry(t_l: int) -> tuple[np.ndarray, np.ndarray]:
    # squared index offsets inside the window, and from each slot to the next index
    offs = np.arange(t_l, dtype=float)
    off2 = (offs[:, None] - offs[None, :]) ** 2
    pred2 = (t_l - offs) ** 2
    return off2, pred2


@dataclass
class LookbackWindow:
    """Sliding training window for one length scale: (iteration, value) pairs."""

    indices: np.ndarray  # (T_L,) consecutive iteration indices
    values: np.ndarray   # (T_L,)
    delta: float         # current inner kernel scale

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.indices) != len(self.values):
            raise DataValidationError("window indices and values must have equal length")
        if len(self.indices) >= 2 and np.any(np.diff(self.indices) != 1):
            raise DataValidationError("window indices must be consecutive")
        if np.any(self.values <= 0):
            raise DataValidationError("window values must be positive")
        if self.delta <= 0:
            raise DataValidationError("window delta must be positive")

    def __len__(self) -> int:
        return len(self.indices)

    def slide(self, t: int, value: float) -> None:
        self.indices = np.append(self.indices[1:], t)
        self.values = np.append(self.values[1:], value)


def _inner_logpost(
    z: np.ndarray,
    delta: float,
    off2: np.ndarray,
    prior_mean: float,
    prior_sd: float,
    jitter: float,
) -> tuple[float, np.ndarray]:
    psi = np.exp(-off2 / delta)
    chol, _ = cholesky_with_ladder(psi, jitter)
    return log_likelihood(chol, z) + normal_logpdf(delta, prior_mean, prior_sd), chol


def lookback_step(
    window: LookbackWindow,
    t: int,
    rng: np.random.Generator,
    prior_mean: float,
    prior_sd: float,
    proposal_sd: float,
    jitter: float = JITTER_START,
) -> tuple[float, float | None]:
    """Advance one length scale by one iteration of the inner scheme.

    Standardize the window values, Metropolis-update the window scale
    delta, take the closed-form predictive mean at index t as the new
    length scale (floored at a tiny positive value), and slide the window.
    A zero-variance window skips the update and carries the last value
    forward. Returns (new length scale, inner log-posterior or None).
    """
    if t != int(window.indices[-1]) + 1:
        raise DataValidationError(f"lookback step at t={t}, window ends at {window.indices[-1]}")
    vals = window.values
    mu = float(vals.mean())
    var = float(vals.var(ddof=1))
    if var < _WINDOW_VAR_EPS:
        new_ell = float(vals[-1])
        window.slide(t, new_ell)
        return new_ell, None

    sd = math.sqrt(var)
    z = (vals - mu) / sd
    off2, pred2 = _lookback_geometry(len(window))

    cur_lp, cur_chol = _inner_logpost(z, window.delta, off2, prior_mean, prior_sd, jitter)
    proposal = window.delta + proposal_sd * rng.standard_normal()
    if proposal > 0.0:
        prop_lp, prop_chol = _inner_logpost(z, proposal, off2, prior_mean, prior_sd, jitter)
        if np.log(rng.random()) < prop_lp - cur_lp:
            window.delta = float(proposal)
            cur_lp, cur_chol = prop_lp, prop_chol

    k = np.exp(-pred2 / window.delta)
    mean_z = float(k @ cho_solve((cur_chol, True), z, check_finite=False))
    new_ell = max(mu + sd * mean_z, ELL_FLOOR)
    window.slide(t, new_ell)
    return new_ell, cur_lp


def hpd_interval(samples: np.ndarray, mass: float = 0.95) -> tuple[float, float]:
    """Shortest closed interval containing ceil(mass * n) of the samples.

    Ties are broken toward the lowest starting sample.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    n = len(samples)
    if n < 50:
        raise DataValidationError(f"need at least 50 samples for an HPD interval, got {n}")
    if not (0.0 < mass < 1.0):
        raise DataValidationError("mass must be in (0, 1)")
    s = np.sort(samples)
    k = math.ceil(mass * n)
    widths = s[k - 1 :] - s[: n - k + 1]
    i = int(np.argmin(widths))
    return float(s[i]), float(s[i + k - 1])


def run_chain(
    cfg: ChainConfig,
    x: np.ndarray,
    y: np.ndarray,
    progress: Callable[[int], None] | None = None,
) -> tuple[ChainTrace, PosteriorSummary]:
    """Run one chain on standardized outputs y at raw inputs x.

    Identical configs (including rng_seed) produce bit-identical traces.
    Unrecoverable numerical failures abort with the iteration index.
    ``progress`` (if given) is called with the iteration index each step.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != len(y):
        raise DataValidationError("x and y disagree on N")
    if x.shape[1] != cfg.d:
        raise DataValidationError(f"data has d={x.shape[1]}, config has d={cfg.d}")

    rng = np.random.default_rng(cfg.rng_seed)
    d2 = squared_distances(x, x)
    from .gp import SqeKernel

    def outer_lp(ell: np.ndarray) -> float:
        if np.any(ell <= 0):
            return -math.inf
        matrix = corr_from_distances(d2, SqeKernel(ell))
        chol, _ = cholesky_with_ladder(matrix, cfg.jitter)
        return log_likelihood(chol, y) + normal_logpdf(ell, cfg.seeds, cfg.prior_sd)

    n_iter, d = cfg.n_iter, cfg.d
    nonstat = cfg.model == NONSTATIONARY
    trace = ChainTrace(
        ell=np.empty((n_iter, d)),
        log_post_outer=np.empty(n_iter),
        delta=np.empty((n_iter, d)) if nonstat else None,
        log_post_inner=np.full((n_iter, d), np.nan) if nonstat else None,
    )

    ell = cfg.seeds.copy()
    cur_lp = outer_lp(ell)
    delta = cfg.delta_seed.copy()
    inner_lp = np.full(d, np.nan)
    windows: list[LookbackWindow] = []
    phase1_end = cfg.n_burn + cfg.lookback if nonstat else n_iter
    accepted = 0
    proposals = 0

    for t in range(1, n_iter + 1):
        try:
            if t <= phase1_end:
                ell, acc, cur_lp = mh_update(
                    ell, outer_lp, cfg.proposal_sd, rng,
                    positive_only=True, current_log_target=cur_lp,
                )
            else:
                if not windows:
                    start = phase1_end - cfg.lookback
                    windows = [
                        LookbackWindow(
                            indices=np.arange(start + 1, phase1_end + 1),
                            values=trace.ell[start:phase1_end, m].copy(),
                            delta=float(delta[m]),
                        )
                        for m in range(d)
                    ]
                ell, acc, cur_lp = mh_update(
                    ell, outer_lp, cfg.proposal_sd, rng,
                    positive_only=True, current_log_target=cur_lp,
                )
                ell = ell.copy()
                for m in range(d):
                    new_ell_m, lp_m = lookback_step(
                        windows[m], t, rng,
                        prior_mean=float(cfg.delta_seed[m]),
                        prior_sd=float(cfg.delta_prior_sd[m]),
                        proposal_sd=float(cfg.delta_proposal_sd[m]),
                        jitter=cfg.jitter,
                    )
                    ell[m] = new_ell_m
                    delta[m] = windows[m].delta
                    if lp_m is not None:
                        inner_lp[m] = lp_m
                cur_lp = outer_lp(ell)
        except NumericalError as exc:
            raise NumericalError(f"chain aborted at iteration {t}: {exc}") from exc

        if t > cfg.n_burn:
            proposals += 1
            accepted += int(acc)
        trace.ell[t - 1] = ell
        trace.log_post_outer[t - 1] = cur_lp
        if nonstat:
            trace.delta[t - 1] = delta
            trace.log_post_inner[t - 1] = inner_lp
        if progress is not None:
            progress(t)

    trace.accept_rate = accepted / proposals if proposals else 0.0
    if not (0.05 < trace.accept_rate < 0.9):
        warnings.warn(
            f"post-burn-in acceptance rate {trace.accept_rate:.3f} outside (0.05, 0.9)",
            RuntimeWarning,
            stacklevel=2,
        )

    names = [f"ell_{m + 1}" for m in range(d)]
    sample_sets = [trace.ell[cfg.n_burn :, m] for m in range(d)]
    if nonstat:
        names += [f"delta_{m + 1}" for m in range(d)]
        sample_sets += [trace.delta[phase1_end:, m] for m in range(d)]

    means, los, his = [], [], []
    for name, samples in zip(names, sample_sets):
        lo, hi = hpd_interval(samples)
        mean = float(samples.mean())
        if not (lo <= mean <= hi):
            warnings.warn(f"{name}: mean {mean:g} outside HPD [{lo:g}, {hi:g}]", RuntimeWarning)
        means.append(mean)
        los.append(lo)
        his.append(hi)
    summary = PosteriorSummary(
        names=tuple(names), mean=np.array(means), hpd_lo=np.array(los), hpd_hi=np.array(his)
    )
    return trace, summary
