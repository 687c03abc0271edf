"""Batch-mode active learning via kernel dependence maximization.

Policies consume prediction tensors of shape (n_points, m, c): for each
candidate point, m predictive distributions over c classes, one per
posterior draw shared across points.  Any model that can emit such a
tensor can be driven by this package; two reference backends (an exact
discrete-hypothesis posterior and a bootstrap ensemble) and a binary
tensor file format are included.
"""

from ._backend import BACKEND
from .acquisition import (
    POLICIES,
    AcquisitionBatch,
    AcquisitionConfig,
    score_bald,
    score_ical,
    select_bald,
    select_batch,
    select_batchbald,
    select_fass,
    select_ical,
    select_ical_pointwise,
    select_maxent,
    select_random,
)
from .dhsic import DhsicStatistic, center_kernel, dhsic, hsic2, permutation_pvalue
from .errors import (
    ConfigError,
    InconsistentEvidenceError,
    InvalidInputError,
    TensorFormatError,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    MetricsRecord,
    TimingRow,
    accuracy_score,
    label_histogram,
    mean_predictive_entropy,
    negative_log_likelihood,
    run_experiment,
    timing_profile,
    write_report_csv,
    write_results_csv,
    write_summary_json,
)
from .kernels import KernelSpec, kernel_matrix, kernel_stack, mean_kernels, sum_kernels
from .models import (
    DiscreteHypothesisModel,
    EnsembleModel,
    TrainingParams,
    ensemble_predict_samples,
    ensemble_train,
    entropy,
    example1_model,
    example1_stats,
    expected_pool_entropy,
    load_predictions,
    mutual_information,
    posterior_update,
    predictive,
    sample_predictions,
    save_predictions,
)
from .tasks import (
    draw_truth,
    example1_task,
    gaussian_blobs,
    load_dataset_csv,
    plain_split,
    sparse_variant_task,
    stratified_split,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "POLICIES",
    "AcquisitionBatch",
    "AcquisitionConfig",
    "ConfigError",
    "DhsicStatistic",
    "DiscreteHypothesisModel",
    "EnsembleModel",
    "ExperimentConfig",
    "ExperimentResult",
    "InconsistentEvidenceError",
    "InvalidInputError",
    "KernelSpec",
    "MetricsRecord",
    "TensorFormatError",
    "TimingRow",
    "TrainingParams",
    "accuracy_score",
    "center_kernel",
    "dhsic",
    "draw_truth",
    "ensemble_predict_samples",
    "ensemble_train",
    "entropy",
    "example1_model",
    "example1_stats",
    "example1_task",
    "expected_pool_entropy",
    "gaussian_blobs",
    "hsic2",
    "kernel_matrix",
    "kernel_stack",
    "label_histogram",
    "load_dataset_csv",
    "load_predictions",
    "mean_kernels",
    "mean_predictive_entropy",
    "mutual_information",
    "negative_log_likelihood",
    "permutation_pvalue",
    "plain_split",
    "posterior_update",
    "predictive",
    "run_experiment",
    "sparse_variant_task",
    "stratified_split",
    "sample_predictions",
    "save_predictions",
    "score_bald",
    "score_ical",
    "select_bald",
    "select_batch",
    "select_batchbald",
    "select_fass",
    "select_ical",
    "select_ical_pointwise",
    "select_maxent",
    "select_random",
    "sum_kernels",
    "timing_profile",
    "write_report_csv",
    "write_results_csv",
    "write_summary_json",
]
