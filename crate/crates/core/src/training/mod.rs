//! Staged training pipeline with sensor-failure injection.

pub mod config;
pub mod failure;
pub mod metrics;
pub mod stages;

pub use config::TrainConfig;
pub use failure::{apply_failure, sample_failure_mode, substitute_index, FailureMode, FailurePolicy};
pub use metrics::{MetricsLog, MetricsRow};
pub use stages::{
    constant_predictor_baseline, segmentation_accuracy, train_depth, train_fusion,
    train_fusion_variant, train_gated, train_naive_baseline, train_segmentation,
    DepthTrainOutput, FusionTrainOutput, FusionVariant, SegTrainOutput,
};
