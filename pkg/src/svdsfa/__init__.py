"""Slow feature analysis with SVD sphering for rank-deficient data."""

from .driving import (
    EmbeddingSpec,
    LogisticConfig,
    SlownessReport,
    TimeSeries,
    align,
    constraint_report,
    driving_force,
    embed,
    logistic_series,
    slowness_eta,
)
from .io import load_model, save_model
from .sfa import (
    GEN_EIG,
    SVD_SFA,
    Preprocessor,
    SfaModel,
    accumulate_training,
    apply_model,
    expand,
    expansion_dim,
    fit_preprocessor,
    train,
    train_gen_eig,
    train_svd_sfa,
)
from .spectra import (
    DEFAULT_EPSILON,
    DegenerateCovarianceError,
    EigenDecomposition,
    MomentAccumulator,
    SpheringTransform,
    numerical_rank,
    sphering_transform,
    sym_eig,
)

__version__ = "0.1.0"
