//! Run configuration, loadable from a flat JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One training run. The seed fully determines the run: dataset order,
/// weight init, failure-mode draws, and substitution picks.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub huber_delta: f32,
    /// Samples to generate when a command creates its own dataset.
    pub n_train: usize,
    pub n_test: usize,
    /// Fraction of the training set held out for segmentation accuracy.
    pub holdout_fraction: f32,
    /// Ablation: disable failure injection (train on clean pairs only).
    pub no_injection: bool,
    /// Ablation: control consumes the fused vector directly.
    pub no_conditional_net: bool,
    /// Keep the segmentation encoder frozen during fusion training.
    pub freeze_encoder: bool,
    /// Optional default input paths, overridable by CLI flags.
    pub train_data: Option<PathBuf>,
    pub test_data_clear: Option<PathBuf>,
    pub test_data_shifted: Option<PathBuf>,
    pub depth_checkpoint: Option<PathBuf>,
    pub seg_checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 7,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            huber_delta: 1.0,
            n_train: 2000,
            n_test: 3000,
            holdout_fraction: 0.1,
            no_injection: false,
            no_conditional_net: false,
            freeze_encoder: true,
            train_data: None,
            test_data_clear: None,
            test_data_shifted: None,
            depth_checkpoint: None,
            seg_checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            what: "train config",
            detail: e.to_string(),
        })
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format {
            what: "train config",
            detail: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let cfg = TrainConfig {
            seed: 99,
            no_injection: true,
            ..TrainConfig::default()
        };
        cfg.to_file(&path).unwrap();
        assert_eq!(TrainConfig::from_file(&path).unwrap(), cfg);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("partial.json");
        std::fs::write(&path, r#"{"seed": 3, "epochs": 2}"#).unwrap();
        let cfg = TrainConfig::from_file(&path).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.epochs, 2);
        assert_eq!(cfg.batch_size, TrainConfig::default().batch_size);
    }
}
