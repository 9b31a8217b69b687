use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Per-example record. `error` is the loss of the prediction made before the
/// step on this example; the drifts describe the parameters that made that
/// prediction, so both are exactly 0 at example 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub seed: u64,
    pub example: usize,
    pub task: Arc<str>,
    pub error: f64,
    pub u_drift: f64,
    pub w_drift: f64,
}

pub const METRICS_HEADER: [&str; 6] = ["seed", "example", "task", "error", "u_drift", "w_drift"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub optimizer: String,
    pub seed: u64,
    pub bin_width: usize,
    /// Mean error per bin; bins the run never reached (after divergence) are NaN.
    pub curve: Vec<f64>,
    pub final_u_drift: f64,
    pub final_w_drift: f64,
    /// Step at which the parameters became non-finite.
    pub diverged_at: Option<u64>,
    pub duration_secs: f64,
}

impl RunSummary {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

/// `‖current − initial‖₂` over all entries (Frobenius norm for matrices).
pub fn drift_norm(current: &Matrix, initial: &Matrix) -> Result<f64> {
    if current.shape() != initial.shape() {
        return Err(Error::DimensionMismatch {
            context: "drift norm",
            expected: initial.rows() * initial.cols(),
            actual: current.rows() * current.cols(),
        });
    }
    Ok(current
        .as_slice()
        .iter()
        .zip(initial.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

pub fn bin_count(total: usize, bin_width: usize) -> usize {
    total.div_ceil(bin_width)
}

/// Mean of consecutive `bin_width` errors; missing trailing examples give NaN bins.
pub fn bin_errors(errors: &[f64], total: usize, bin_width: usize) -> Vec<f64> {
    (0..bin_count(total, bin_width))
        .map(|b| {
            let start = b * bin_width;
            let end = ((b + 1) * bin_width).min(total);
            if end > errors.len() {
                return f64::NAN;
            }
            let chunk = &errors[start..end];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub bin_width: usize,
    pub runs: usize,
    pub mean: Vec<f64>,
    /// Sample standard deviation over runs divided by √runs; 0 for one run.
    pub stderr: Vec<f64>,
}

pub fn aggregate_runs(summaries: &[RunSummary]) -> Result<AggregateCurve> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::InvalidInput("no runs to aggregate".into()))?;
    let bins = first.curve.len();
    if summaries
        .iter()
        .any(|s| s.curve.len() != bins || s.bin_width != first.bin_width)
    {
        return Err(Error::InvalidInput("runs have different bin structures".into()));
    }
    let n = summaries.len() as f64;
    let mut mean = vec![0.0; bins];
    let mut stderr = vec![0.0; bins];
    for b in 0..bins {
        let m = summaries.iter().map(|s| s.curve[b]).sum::<f64>() / n;
        mean[b] = m;
        if summaries.len() > 1 {
            let var = summaries
                .iter()
                .map(|s| (s.curve[b] - m) * (s.curve[b] - m))
                .sum::<f64>()
                / (n - 1.0);
            stderr[b] = (var / n).sqrt();
        }
    }
    Ok(AggregateCurve {
        bin_width: first.bin_width,
        runs: summaries.len(),
        mean,
        stderr,
    })
}
