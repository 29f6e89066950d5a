"""Weather/time-conditioned pedestrian destination and trajectory prediction.

End-to-end pipeline: destination clustering of trajectory endpoints, a
chi-square significance gate for weather/time conditions, a gated-fusion
destination classifier with focal-loss deep supervision, per-destination
encoder-decoder trajectory predictors, and the evaluation and significance
protocol tying it together.
"""

__version__ = "0.1.0"

from .data import (
    ConditionCode,
    DatasetConfig,
    ResampledTrajectory,
    SyntheticScenario,
    Trajectory,
    assign_condition,
    clean,
    generate_synthetic,
    ingest_csv,
    resample,
    split_observed_future,
    write_canonical_csv,
)
from .clustering import (
    ClusterModel,
    LabeledDataset,
    assign_label,
    build_labeled_dataset,
    cluster_and_merge,
    kmeans_endpoints,
    merge_undersampled,
)
from .stats import (
    ChiSquareResult,
    ContingencyTable,
    build_contingency,
    chi_square_log_sf,
    chi_square_test,
    expected_counts,
    mann_whitney_u_one_sided,
    mcnemar_test,
)
from .classifier import (
    ClassifierConfig,
    DestinationClassifier,
    LossConfig,
    bypass_wt,
    gmu_fuse,
)
from .predictor import (
    PredictorEnsemble,
    PredictorTrainSettings,
    PredictorConfig,
    TrajectoryPredictor,
    predict_trajectory,
    train_cluster_models,
)
from .metrics import ConfusionMatrix, MetricsReport, accuracy_and_kappa, ade, fde, relative_metric
from .harness import (
    FoldPlan,
    Hyper,
    PairedRunResult,
    class_weights,
    run_ablation,
    run_cv,
    significance_report,
    stratified_kfold,
)
