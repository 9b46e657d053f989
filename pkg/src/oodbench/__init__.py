"""OOD detection benchmarking over embedding files, plus an exact discrete
information engine for verifying when unlabeled representations must fail."""

__version__ = "0.1.0"

from .datamodel import LabeledDataset, load_dataset, validate_pair, write_dataset
from .errors import (
    ConfigError,
    DatasetError,
    MetricError,
    OodbenchError,
    ScorerError,
    SplitError,
    SynthError,
    TheoryError,
)
from .infotheory import (
    BlindnessReport,
    DiscreteJoint,
    Encoder,
    IBConfig,
    conditional_mi,
    entropy,
    fano_error_lower_bound,
    filter_distribution,
    ib_loss,
    minimize_ib,
    mutual_information,
    overlap_risk_exact,
    product_joint,
    simulate_overlap_risk,
    variable_entropy,
    verify_label_blindness,
)
from .metrics import (
    AggregateResult,
    MetricResult,
    aggregate,
    auroc,
    evaluate_scores,
    format_mean_std,
    fpr_at_tpr,
)
from .runner import EvalReport, RunConfig, SplitSpec, ingest_external_scores, run_benchmark
from .scorers import (
    KnnIndex,
    MahalanobisModel,
    ScorerConfig,
    fit_knn_index,
    fit_mahalanobis,
    knn_score,
    mahalanobis_score,
    msp_score,
    score_split,
)
from .splitgen import (
    BenchmarkSplit,
    generate_adjacent_split,
    generate_split_series,
    make_cross_dataset_split,
)
from .synthgen import TwoFactorSpec, blind_projection, generate_two_factor, generate_two_factor_pair
