"""Multi-task prediction-powered inference for finite-population means.

Combine abundant machine-predicted scores with scarce ground-truth
labels, across a collection of related tasks, to estimate each task's
mean outcome with valid confidence intervals. Surrogate scores are
recalibrated either globally (pooling the other tasks' labels), locally
(cross-fitted within the task), or adaptively (a data-driven blend),
and the exact finite-population variance theory behind the estimators
ships with brute-force oracles that verify it.
"""
from ._version import __version__
from .data import (
    MultiTaskStudy,
    PopulationMoments,
    TaskDataset,
    finite_pop_cov,
    make_task_dataset,
    population_moments,
    validate_task_dataset,
)
from .errors import MtppiError
from .estimators import (
    EstimateResult,
    Method,
    areppi_estimate,
    classical_estimate,
    greppi_estimate,
    plug_in_lambda,
    ppi_estimate,
    ppipp_estimate,
    rectified_estimate,
    reppi_two_fold_estimate,
)
from .experiments import (
    MethodSpec,
    ReplicationSummary,
    RunConfig,
    SyntheticSpec,
    emit_reports,
    generate_synthetic_study,
    load_semi_synthetic,
    run_replications,
)
from .inference import ConfidenceInterval, student_t_quantile, wald_ci
from .recalibration import (
    ConditionalMeanFit,
    IsotonicFit,
    MixtureRecalibrator,
    affine_recalibrate,
    conditional_mean_fit,
    conditional_mean_values,
    fit_global_recalibrator,
    isotonic_predict,
    pava_fit,
)
from .sampling import Purpose, StreamKey, kfold_assignments, split_two_folds, srs_without_replacement
from .variance import (
    VarianceReport,
    brute_force_estimator_law,
    lambda_star,
    max_gain,
    oracle_variance,
    superpop_lambda_star,
    superpop_variance,
    variance_functional,
)

__all__ = [
    "__version__",
    "MtppiError",
    "TaskDataset",
    "MultiTaskStudy",
    "PopulationMoments",
    "make_task_dataset",
    "validate_task_dataset",
    "population_moments",
    "finite_pop_cov",
    "Purpose",
    "StreamKey",
    "srs_without_replacement",
    "split_two_folds",
    "kfold_assignments",
    "IsotonicFit",
    "ConditionalMeanFit",
    "MixtureRecalibrator",
    "pava_fit",
    "isotonic_predict",
    "affine_recalibrate",
    "conditional_mean_fit",
    "conditional_mean_values",
    "fit_global_recalibrator",
    "VarianceReport",
    "variance_functional",
    "lambda_star",
    "oracle_variance",
    "max_gain",
    "superpop_lambda_star",
    "superpop_variance",
    "brute_force_estimator_law",
    "Method",
    "EstimateResult",
    "rectified_estimate",
    "plug_in_lambda",
    "classical_estimate",
    "ppi_estimate",
    "ppipp_estimate",
    "reppi_two_fold_estimate",
    "greppi_estimate",
    "areppi_estimate",
    "ConfidenceInterval",
    "student_t_quantile",
    "wald_ci",
    "SyntheticSpec",
    "MethodSpec",
    "RunConfig",
    "ReplicationSummary",
    "generate_synthetic_study",
    "load_semi_synthetic",
    "run_replications",
    "emit_reports",
]
