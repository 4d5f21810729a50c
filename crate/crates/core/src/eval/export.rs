//! Result files: loss table CSV, per-episode traces, and a summary JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::closed_loop::EpisodeResult;
use super::offline::LossTable;
use crate::error::{Error, Result};

/// FNV-1a over the canonical config text, printed as hex.
pub fn config_hash(config_json: &str) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in config_json.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{:016x}", hash)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultSummary {
    pub seed: u64,
    pub config_hash: String,
    /// Episode label -> lane-keeping success.
    pub episode_success: BTreeMap<String, bool>,
}

/// Writes losses.csv, one trace CSV per labeled episode, and summary.json.
/// Returns the created paths.
pub fn export_results(
    loss_table: &LossTable,
    episodes: &[(String, EpisodeResult)],
    seed: u64,
    config_json: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let losses_path = out_dir.join("losses.csv");
    std::fs::write(&losses_path, loss_table.to_csv_string()).map_err(|e| Error::io(&losses_path, e))?;
    written.push(losses_path);

    let mut episode_success = BTreeMap::new();
    for (label, episode) in episodes {
        let trace_path = out_dir.join(format!("trace_{}.csv", label));
        std::fs::write(&trace_path, episode.trace.to_csv_string())
            .map_err(|e| Error::io(&trace_path, e))?;
        written.push(trace_path);
        episode_success.insert(label.clone(), episode.success);
    }

    let summary = ResultSummary {
        seed,
        config_hash: config_hash(config_json),
        episode_success,
    };
    let summary_path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Format {
        what: "result summary",
        detail: e.to_string(),
    })?;
    std::fs::write(&summary_path, json).map_err(|e| Error::io(&summary_path, e))?;
    written.push(summary_path);
    Ok(written)
}

pub fn read_summary(path: &Path) -> Result<ResultSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        what: "result summary",
        detail: e.to_string(),
    })
}
