"""Self-supervised pre-training and semi-supervised classification for
aligned multi-view omics tables."""

from .config import ConfigError, RunConfig, load_run_config, write_resolved_config
from .corruption import CorruptionConfig, MaskRecord, corrupt, mask_target, sample_plan
from .data import (
    DataError,
    MultiOmicsDataset,
    OmicsMatrix,
    ScalerState,
    SplitSpec,
    SubsetPartition,
    SynthConfig,
    generate_synthetic,
    load_dataset,
    load_omics_matrix,
    load_partition,
    mean_impute,
    partition_uniform,
    preprocess,
    split,
    standardize_apply,
    standardize_fit,
    subsample_labels,
    write_dataset,
)
from .estimators import FrozenEncoderClassifier, MultiViewPretrainer, OmicsPreprocessor
from .evaluation import (
    MetricsReport,
    compare_aggregation,
    compute_metrics,
    export_embeddings,
    run_ablation,
)
from .losses import (
    LossBreakdown,
    NonFiniteLossError,
    PretextLossWeights,
    barlow_twins_loss,
    classification_loss,
    clip_alignment_loss,
    combine,
    distance_loss,
    mask_prediction_loss,
    nt_xent_loss,
    reconstruction_loss,
    simsiam_loss,
    weighted_reconstruction_loss,
)
from .model import (
    CheckpointError,
    LatentBatch,
    ModelConfig,
    MultiViewNetwork,
    aggregate,
    init_model,
    load_checkpoint,
    save_checkpoint,
)
from .training import (
    ClassLatentTable,
    TrainConfig,
    TrainingError,
    build_class_latent_table,
    encode_aggregate,
    encode_views,
    finetune,
    infer_with_missing,
    predict_proba,
    pretrain,
    resolve_target_views,
    run_semi_supervised,
    write_history_jsonl,
)
from .validation import check_labels, check_views

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ClassLatentTable",
    "ConfigError",
    "CorruptionConfig",
    "DataError",
    "FrozenEncoderClassifier",
    "LatentBatch",
    "LossBreakdown",
    "MaskRecord",
    "MetricsReport",
    "ModelConfig",
    "MultiOmicsDataset",
    "MultiViewNetwork",
    "MultiViewPretrainer",
    "NonFiniteLossError",
    "OmicsMatrix",
    "OmicsPreprocessor",
    "PretextLossWeights",
    "RunConfig",
    "ScalerState",
    "SplitSpec",
    "SubsetPartition",
    "SynthConfig",
    "TrainConfig",
    "TrainingError",
    "aggregate",
    "barlow_twins_loss",
    "build_class_latent_table",
    "check_labels",
    "check_views",
    "classification_loss",
    "clip_alignment_loss",
    "combine",
    "compare_aggregation",
    "compute_metrics",
    "corrupt",
    "distance_loss",
    "encode_aggregate",
    "encode_views",
    "export_embeddings",
    "finetune",
    "generate_synthetic",
    "infer_with_missing",
    "init_model",
    "load_checkpoint",
    "load_dataset",
    "load_omics_matrix",
    "load_partition",
    "load_run_config",
    "mask_prediction_loss",
    "mask_target",
    "mean_impute",
    "nt_xent_loss",
    "partition_uniform",
    "predict_proba",
    "preprocess",
    "pretrain",
    "reconstruction_loss",
    "resolve_target_views",
    "run_ablation",
    "run_semi_supervised",
    "sample_plan",
    "save_checkpoint",
    "simsiam_loss",
    "split",
    "standardize_apply",
    "standardize_fit",
    "subsample_labels",
    "weighted_reconstruction_loss",
    "write_dataset",
    "write_history_jsonl",
    "write_resolved_config",
]
