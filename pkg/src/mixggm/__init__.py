"""Mixtures of sparse Gaussian graphical models for heterogeneous data.

Estimates an equivalent partial-correlation network per mixture component
by correlation screening plus conditioned partial correlations, imputes
cluster labels and refits in alternation, combines per-cluster evidence
into a single weighted z-score network, and selects the component count
by BIC.
"""

from .data import (
    CorrelationNetwork,
    DataMatrix,
    MixtureParams,
    NeighborhoodMap,
    PsiMatrix,
    as_data,
    check_adjacency,
    check_posterior,
    edge_count,
    edge_list,
    validate_data,
)
from .errors import (
    AllZeroWeightsError,
    ConstantColumnError,
    DataError,
    DegenerateTruthError,
    EmptyClusterError,
    EmptyClusterUnrepairableError,
    EmptyInputError,
    EmptyWindowError,
    InvalidEffectiveSizeError,
    NonFiniteError,
    NotConvergedError,
    NotPositiveDefiniteError,
    NumericalError,
    SingularCovarianceError,
    SingularInputError,
    SingularSubmatrixError,
    TooFewSamplesError,
)
from .fdr import TestOutcome, adaptive_fdr_test, z_to_pvalues
from .graph_cov import constrained_cov
from .integrate import (
    adjacency_from_z,
    average_zscores,
    edge_test,
    fisher_z,
    integrate_clusters,
    stouffer_combine,
    zscore_matrix,
)
from .metrics import (
    EvalReport,
    cluster_rates,
    confusion,
    match_labels,
    norm_losses,
    pr_curve,
)
from .mixture import (
    FitResult,
    ICTrace,
    IterationRecord,
    SelectionResult,
    bic_score,
    em_fit_lowdim,
    ic_fit,
    impute_labels,
    log_likelihood,
    posterior_probs,
    select_m,
    update_moments,
)
from .psi import (
    PsiNetwork,
    conditioning_set,
    correlation_screen,
    empirical_correlations,
    neighborhood_cap,
    partial_correlation,
    psi_learn,
    screen_correlations,
)
from .simulate import SimData, SimDesign, band_adjacency, banded_precision, mean_layout, simulate_mixture

__version__ = "0.1.0"

__all__ = [
    "CorrelationNetwork",
    "DataMatrix",
    "MixtureParams",
    "NeighborhoodMap",
    "PsiMatrix",
    "PsiNetwork",
    "as_data",
    "check_adjacency",
    "check_posterior",
    "edge_count",
    "edge_list",
    "validate_data",
    "DataError",
    "NumericalError",
    "NonFiniteError",
    "ConstantColumnError",
    "TooFewSamplesError",
    "EmptyInputError",
    "DegenerateTruthError",
    "SingularInputError",
    "NotPositiveDefiniteError",
    "SingularSubmatrixError",
    "InvalidEffectiveSizeError",
    "AllZeroWeightsError",
    "EmptyWindowError",
    "NotConvergedError",
    "SingularCovarianceError",
    "EmptyClusterError",
    "EmptyClusterUnrepairableError",
    "TestOutcome",
    "adaptive_fdr_test",
    "z_to_pvalues",
    "constrained_cov",
    "adjacency_from_z",
    "average_zscores",
    "edge_test",
    "fisher_z",
    "integrate_clusters",
    "stouffer_combine",
    "zscore_matrix",
    "EvalReport",
    "cluster_rates",
    "confusion",
    "match_labels",
    "norm_losses",
    "pr_curve",
    "FitResult",
    "ICTrace",
    "IterationRecord",
    "SelectionResult",
    "bic_score",
    "em_fit_lowdim",
    "ic_fit",
    "impute_labels",
    "log_likelihood",
    "posterior_probs",
    "select_m",
    "update_moments",
    "conditioning_set",
    "correlation_screen",
    "empirical_correlations",
    "neighborhood_cap",
    "partial_correlation",
    "psi_learn",
    "screen_correlations",
    "SimData",
    "SimDesign",
    "band_adjacency",
    "banded_precision",
    "mean_layout",
    "simulate_mixture",
    "__version__",
]
