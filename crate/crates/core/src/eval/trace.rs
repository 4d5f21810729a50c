//! Gate-trace statistics over the turn window.

use super::closed_loop::ConditionalTrace;
use crate::error::{Error, Result};

/// Spread measures for one gate signal.
#[derive(Debug, Clone, Copy, Default)]
pub struct GateStats {
    pub range_full: f32,
    pub stddev_full: f32,
    pub range_window: f32,
    pub stddev_window: f32,
}

#[derive(Debug, Clone, Default)]
pub struct TraceStatistics {
    /// Depth gate, when the trace carries one.
    pub m_d: Option<GateStats>,
    /// Embedding gate or conditional scalar, when present.
    pub m_e_or_c: Option<GateStats>,
}

fn spread(values: &[f32]) -> (f32, f32) {
    let n = values.len() as f64;
    let mut min = f32::MAX;
    let mut max = f32::MIN;
    let mut sum = 0.0f64;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v as f64;
    }
    let mean = sum / n;
    let var: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    (max - min, var.sqrt() as f32)
}

fn stats_for(values: &[f32], window: (usize, usize)) -> GateStats {
    let (range_full, stddev_full) = spread(values);
    let lo = window.0.min(values.len());
    let hi = window.1.min(values.len());
    let (range_window, stddev_window) = spread(&values[lo..hi]);
    GateStats {
        range_full,
        stddev_full,
        range_window,
        stddev_window,
    }
}

/// Range and standard deviation per gate, inside `window` and over the
/// full episode. The trace must be longer than the window end.
pub fn trace_statistics(trace: &ConditionalTrace, window: (usize, usize)) -> Result<TraceStatistics> {
    if trace.rows.len() <= window.1 {
        return Err(Error::Invalid(format!(
            "trace has {} frames, need more than {} for the turn window",
            trace.rows.len(),
            window.1
        )));
    }
    let m_d: Vec<f32> = trace.rows.iter().filter_map(|r| r.m_d).collect();
    let m_e: Vec<f32> = trace.rows.iter().filter_map(|r| r.m_e_or_c).collect();
    Ok(TraceStatistics {
        m_d: if m_d.len() == trace.rows.len() {
            Some(stats_for(&m_d, window))
        } else {
            None
        },
        m_e_or_c: if m_e.len() == trace.rows.len() {
            Some(stats_for(&m_e, window))
        } else {
            None
        },
    })
}
