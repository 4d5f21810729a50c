//! Offline loss tables, closed-loop episodes, gate traces, and exports.

pub mod closed_loop;
pub mod export;
pub mod offline;
pub mod trace;

pub use closed_loop::{
    run_closed_loop, run_expert_episode, ConditionalTrace, EpisodeResult, TraceRow, EPISODE_FRAMES,
};
pub use export::{config_hash, export_results, read_summary, ResultSummary};
pub use offline::{build_loss_table, build_loss_table_cached, evaluate_offline, LossTable, SensorConfig, SteeringPredictor};
pub use trace::{trace_statistics, GateStats, TraceStatistics};
