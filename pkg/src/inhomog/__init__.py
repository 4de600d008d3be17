"""Inhomogeneity diagnostics for training data, unit-root testing, and
stationary vs non-stationary Gaussian-process regression with MCMC."""

from .dataset import (
    Dataset,
    ReducedDataset,
    StandardizedOutputs,
    load_csv,
    reduce,
    split,
    standardize,
    write_csv,
)
from .errors import DataValidationError, NumericalError
from .evaluation import PredictionSet, compatibility, emit_prediction_report, rmse
from .gp import (
    CorrMatrix,
    GpPrediction,
    GpPredictor,
    SqeKernel,
    corr_matrix,
    gp_predict,
    log_likelihood,
    sqe_corr,
)
from .inference import (
    ChainConfig,
    ChainTrace,
    LookbackWindow,
    PosteriorSummary,
    hpd_interval,
    log_posterior_outer,
    lookback_step,
    mh_update,
    run_chain,
)
from .inhomogeneity import (
    CorrEstimatorConfig,
    InhomReport,
    LSeries,
    ToleranceConfig,
    abs_corr,
    brute_force_incompatible,
    d_y,
    incompatible_set,
    inhomogeneity_parameter,
    l_series,
)
from .stationarity import AdfResult, adf_test, ols_solve
from .synth import (
    SynthSpec,
    sample_example1_like,
    sample_gp,
    sample_piecewise_gp,
    sample_unit_root,
)

__version__ = "0.1.0"
