import numpy as np
import pytest

from inhomog.dataset import reduce, standardize
from inhomog.errors import DataValidationError
from inhomog.inhomogeneity import ToleranceConfig, l_series
from inhomog.stationarity import adf_test
from inhomog.synth import (
    SynthSpec,
    sample_example1_like,
    sample_gp,
    sample_piecewise_gp,
    sample_unit_root,
)


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(DataValidationError, match="kind"):
            SynthSpec(kind="mystery", n=10)

    def test_size_and_scales(self):
        with pytest.raises(DataValidationError):
            SynthSpec(kind="stationary-gp", n=1)
        with pytest.raises(DataValidationError):
            SynthSpec(kind="stationary-gp", n=10, lengthscales=(0.0,))

    def test_boundaries_ordering(self):
        with pytest.raises(DataValidationError, match="boundaries"):
            SynthSpec(kind="piecewise-gp", n=10, lengthscales=(1.0, 1.0, 1.0), boundaries=(7, 4))


class TestStationaryGp:
    def test_deterministic(self):
        spec = SynthSpec(kind="stationary-gp", n=64, rng_seed=5)
        assert np.array_equal(sample_gp(spec).outputs, sample_gp(spec).outputs)

    def test_grid_inputs(self):
        data = sample_gp(SynthSpec(kind="stationary-gp", n=16, rng_seed=0))
        assert np.array_equal(data.inputs[:, 0], np.arange(16.0))

    def test_huge_lengthscale_is_nearly_constant(self):
        flat = 0
        for seed in range(40):
            data = sample_gp(
                SynthSpec(kind="stationary-gp", n=100, rng_seed=seed, lengthscales=(1e12,))
            )
            values = data.outputs[:, 0]
            flat += (values.max() - values.min()) < 0.01
        assert flat >= 38

    def test_marginals_are_standard_normal(self):
        draws = np.array(
            [
                sample_gp(SynthSpec(kind="stationary-gp", n=50, rng_seed=s)).outputs[17, 0]
                for s in range(200)
            ]
        )
        from scipy.stats import kstest

        assert kstest(draws, "norm").statistic < 0.1

    def test_dense_limit(self):
        with pytest.raises(DataValidationError, match="dense"):
            sample_gp(SynthSpec(kind="stationary-gp", n=6000, rng_seed=0))


class TestPiecewiseGp:
    def test_single_segment_equals_stationary(self):
        a = sample_gp(SynthSpec(kind="stationary-gp", n=40, rng_seed=9, lengthscales=(3.0,)))
        b = sample_piecewise_gp(
            SynthSpec(kind="piecewise-gp", n=40, rng_seed=9, lengthscales=(3.0,))
        )
        assert np.array_equal(a.outputs, b.outputs)

    def test_deterministic(self):
        spec = SynthSpec(
            kind="piecewise-gp", n=60, rng_seed=3, lengthscales=(5.0, 0.05), boundaries=(31,)
        )
        assert np.array_equal(
            sample_piecewise_gp(spec).outputs, sample_piecewise_gp(spec).outputs
        )

    def test_scale_count_must_match(self):
        with pytest.raises(DataValidationError, match="length scales"):
            sample_piecewise_gp(
                SynthSpec(kind="piecewise-gp", n=60, rng_seed=3, lengthscales=(5.0,), boundaries=(31,))
            )

    def test_l_series_is_bimodal(self):
        spec = SynthSpec(
            kind="piecewise-gp", n=500, rng_seed=1, lengthscales=(5.0, 0.05), boundaries=(251,)
        )
        data = sample_piecewise_gp(spec)
        ls = l_series(reduce(data), standardize(data))
        smooth = ls.values[:200]
        rough = ls.values[280:]
        assert np.median(rough) > np.median(smooth) + 0.4


class TestUnitRoot:
    def test_zero_noise_is_constant_zero(self):
        data = sample_unit_root(SynthSpec(kind="unit-root", n=50, rng_seed=0, noise_sd=0.0))
        assert np.all(data.outputs == 0.0)

    def test_deterministic(self):
        spec = SynthSpec(kind="unit-root", n=200, rng_seed=8)
        assert np.array_equal(sample_unit_root(spec).outputs, sample_unit_root(spec).outputs)

    def test_walk_usually_keeps_unit_root_null(self):
        kept = 0
        for seed in range(20):
            data = sample_unit_root(SynthSpec(kind="unit-root", n=2000, rng_seed=seed))
            kept += "10%" not in adf_test(data.outputs[:, 0]).reject_at
        assert kept >= 15


class TestExampleOneLike:
    def test_returns_noise_bounds(self):
        data, deltas = sample_example1_like(SynthSpec(kind="noisy-trend", n=300, rng_seed=2))
        assert data.n == 300
        assert deltas.shape == (299,)
        assert np.all(deltas > 0)

    def test_zero_noise_variant_runs(self):
        data, deltas = sample_example1_like(
            SynthSpec(kind="noisy-trend", n=400, rng_seed=0, noise_scale=0.0)
        )
        assert np.all(deltas == 0.0)
        ls = l_series(
            reduce(data), standardize(data), tol=ToleranceConfig(mode="explicit", deltas=deltas)
        )
        assert np.all(ls.band_lo == ls.values) and np.all(ls.band_hi == ls.values)

    def test_deterministic(self):
        spec = SynthSpec(kind="noisy-trend", n=500, rng_seed=4)
        a, da = sample_example1_like(spec)
        b, db = sample_example1_like(spec)
        assert np.array_equal(a.outputs, b.outputs)
        assert np.array_equal(da, db)

    def test_trend_dominates_noise(self):
        data, deltas = sample_example1_like(SynthSpec(kind="noisy-trend", n=2000, rng_seed=6))
        values = data.outputs[:, 0]
        assert values.max() - values.min() > 20 * deltas.max()
