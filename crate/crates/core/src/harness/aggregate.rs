//! Quantile bands of optimality gap and batch size across runs, aligned on the
//! cumulative-evaluation axis.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::format_real;
use crate::error::{Error, Result};
use crate::optimizer::RunRecord;

pub const DEFAULT_CHECKPOINTS: usize = 200;

/// `count` logarithmically spaced values from `start` to `end` inclusive.
pub fn log_checkpoints(start: f64, end: f64, count: usize) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    let start = start.max(1.0);
    let end = end.max(start);
    if count == 1 || start == end {
        return vec![start; count];
    }
    let (a, b) = (start.ln(), end.ln());
    (0..count)
        .map(|i| match i {
            0 => start,
            i if i == count - 1 => end,
            i => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// Quantile `q` of ascending `sorted` by linear interpolation between order
/// statistics at position `(n - 1) q`. NaN for an empty slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = h - lo as f64;
            if frac == 0.0 || sorted[lo] == sorted[hi] {
                sorted[lo]
            } else {
                sorted[lo] + frac * (sorted[hi] - sorted[lo])
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantileSeries {
    pub q35: Vec<f64>,
    pub median: Vec<f64>,
    pub q65: Vec<f64>,
}

impl QuantileSeries {
    fn push(&mut self, mut values: Vec<f64>) {
        values.retain(|v| !v.is_nan());
        values.sort_by(f64::total_cmp);
        self.q35.push(quantile(&values, 0.35));
        self.median.push(quantile(&values, 0.5));
        self.q65.push(quantile(&values, 0.65));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateSeries {
    pub x_axis: Vec<f64>,
    pub gap: QuantileSeries,
    pub batch_size: QuantileSeries,
}

/// Record in force at `checkpoint`: the last one with `cum_evals <= checkpoint`,
/// or the first record when the checkpoint precedes all of them.
pub fn record_at(records: &[RunRecord], checkpoint: f64) -> Option<&RunRecord> {
    let idx = records.partition_point(|r| r.cum_evals as f64 <= checkpoint);
    records.get(idx.saturating_sub(1))
}

pub fn aggregate_quantiles(runs: &[Vec<RunRecord>], checkpoints: &[f64]) -> Result<AggregateSeries> {
    if runs.is_empty() {
        return Err(Error::EmptyRuns);
    }
    let mut gap = QuantileSeries::default();
    let mut batch_size = QuantileSeries::default();
    for &c in checkpoints {
        let at: Vec<&RunRecord> = runs.iter().filter_map(|r| record_at(r, c)).collect();
        gap.push(at.iter().map(|r| r.optgap).collect());
        batch_size.push(at.iter().map(|r| r.batch_size as f64).collect());
    }
    Ok(AggregateSeries {
        x_axis: checkpoints.to_vec(),
        gap,
        batch_size,
    })
}

/// Checkpoints spanning the evaluation range covered by `runs`.
pub fn checkpoints_for(runs: &[Vec<RunRecord>], count: usize) -> Vec<f64> {
    let first = runs.iter().filter_map(|r| r.first()).map(|r| r.cum_evals).min();
    let last = runs.iter().filter_map(|r| r.last()).map(|r| r.cum_evals).max();
    match (first, last) {
        (Some(a), Some(b)) => log_checkpoints(a as f64, b as f64, count),
        _ => Vec::new(),
    }
}

pub fn series_to_csv(series: &AggregateSeries) -> String {
    let mut out = String::from("cum_evals,gap_q35,gap_median,gap_q65,batch_q35,batch_median,batch_q65\n");
    for i in 0..series.x_axis.len() {
        let cols = [
            series.x_axis[i],
            series.gap.q35[i],
            series.gap.median[i],
            series.gap.q65[i],
            series.batch_size.q35[i],
            series.batch_size.median[i],
            series.batch_size.q65[i],
        ];
        let line: Vec<String> = cols.iter().map(|v| format_real(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_series_csv(series: &AggregateSeries, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, series_to_csv(series)).map_err(|e| Error::io(path, e))
}
