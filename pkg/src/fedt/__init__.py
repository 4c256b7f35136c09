"""Mobile-cloud fall detection pipeline.

Stages: an on-device RMS threshold gate, cloud-side time-series feature
extraction over escalated windows, and a regularized additive tree ensemble
for the final verdict, connected by a length-prefixed TCP protocol. The
evaluation kit adds metrics, stratified cross-validation, a PCA ablation and
cross-device runs.
"""

from .boosting import (
    FedtModel,
    FedtParams,
    RegressionTree,
    TrainingSet,
    classify,
    leaf_weight,
    objective,
    predict_margin,
    predict_tree,
    split_gain,
    train,
)
from .errors import FedtError
from .evaluation import (
    ConfusionCounts,
    MetricsReport,
    confusion,
    cross_device_eval,
    kfold_evaluate,
    metrics,
    pca_ablation,
)
from .features import (
    FeatureRegistry,
    FeatureSpec,
    FeatureVector,
    default_registry,
    extract_features,
    extract_matrix,
)
from .gate import GateDecision, Threshold, fit_threshold, gate, gate_stream
from .ingest import ingest
from .modelio import load_model, load_model_file, save_model, save_model_file
from .pca import PcaProjection, pca_apply, pca_fit
from .pipeline import FallPipeline, PipelineConfig
from .signals import (
    DatasetConfig,
    Label,
    RecordingMeta,
    TriaxialRecording,
    TriaxialSample,
    Window,
    rms,
    rms_series,
    segment_adl,
    segment_fall,
)

__version__ = "0.1.0"
