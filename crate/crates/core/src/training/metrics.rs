//! Per-epoch training metrics and their CSV form.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub epoch: usize,
    pub stage: &'static str,
    pub loss: f32,
    pub loss_both_ok: Option<f32>,
    pub loss_depth_blank: Option<f32>,
    pub loss_rgb_wrong: Option<f32>,
}

#[derive(Debug, Clone, Default)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
}

impl MetricsLog {
    pub fn push(&mut self, row: MetricsRow) {
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("epoch,stage,loss,loss_both_ok,loss_depth_blank,loss_rgb_wrong\n");
        let fmt = |v: Option<f32>| v.map(|x| format!("{:.6e}", x)).unwrap_or_default();
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{:.6e},{},{},{}\n",
                row.epoch,
                row.stage,
                row.loss,
                fmt(row.loss_both_ok),
                fmt(row.loss_depth_blank),
                fmt(row.loss_rgb_wrong),
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    /// Mean loss over the first/last `window` rows, for the monotone-sanity
    /// check that training actually descended.
    pub fn smoothed_endpoints(&self, window: usize) -> Option<(f32, f32)> {
        if self.rows.is_empty() {
            return None;
        }
        let w = window.min(self.rows.len());
        let head: f32 = self.rows[..w].iter().map(|r| r.loss).sum::<f32>() / w as f32;
        let tail: f32 =
            self.rows[self.rows.len() - w..].iter().map(|r| r.loss).sum::<f32>() / w as f32;
        Some((head, tail))
    }
}
