//! Result files.
//!
//! ```text
//! <out>/metadata.json
//! <out>/aggregate_<label>.csv          bin,mean_error,stderr
//! <out>/<label>/seed_<s>.csv           seed,example,task,error,u_drift,w_drift
//! <out>/targets/seed_<s>_task_<id>.json   (GEOFF, when save_targets is set)
//! ```
//!
//! Every file is first written under a temporary name; the final names only
//! appear once all files have been written successfully.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::metrics::{AggregateCurve, MetricsRow, METRICS_HEADER};
use super::runner::ExperimentResult;

pub const SEED_DERIVATION: &str = "ChaCha8 seeded with the run seed; independent streams: \
1 target network, 2 inputs, 3 label noise, 4 task mutation, 5 learner init, 6 MNIST shuffle";

/// Per-example rows, keeping every `stride`-th example (example index divisible by stride).
pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricsRow], stride: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows.iter().filter(|r| r.example % stride.max(1) == 0) {
        w.write_record([
            r.seed.to_string(),
            r.example.to_string(),
            r.task.to_string(),
            r.error.to_string(),
            r.u_drift.to_string(),
            r.w_drift.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<metrics csv>", e))?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(out: W, curve: &AggregateCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin", "mean_error", "stderr"])?;
    for (b, (m, s)) in curve.mean.iter().zip(&curve.stderr).enumerate() {
        w.write_record([b.to_string(), m.to_string(), s.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<aggregate csv>", e))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunMetadata {
    pub optimizer: String,
    pub seed: u64,
    pub examples_run: usize,
    pub diverged_at: Option<u64>,
    pub final_u_drift: f64,
    pub final_w_drift: f64,
    pub duration_secs: f64,
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    pub stride: usize,
    pub bin_width: usize,
    pub shuffle: bool,
    pub seed_derivation: &'static str,
    pub runs: Vec<RunMetadata>,
    pub total_duration_secs: f64,
}

impl<'a> Metadata<'a> {
    pub fn new(cfg: &'a ExperimentConfig, result: &ExperimentResult) -> Self {
        let runs: Vec<RunMetadata> = result
            .runs
            .iter()
            .map(|r| RunMetadata {
                optimizer: r.label.clone(),
                seed: r.seed,
                examples_run: r.rows.len(),
                diverged_at: r.summary.diverged_at,
                final_u_drift: r.summary.final_u_drift,
                final_w_drift: r.summary.final_w_drift,
                duration_secs: r.summary.duration_secs,
            })
            .collect();
        Metadata {
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            stride: cfg.stride,
            bin_width: cfg.bin_width,
            shuffle: cfg.shuffle,
            seed_derivation: SEED_DERIVATION,
            total_duration_secs: runs.iter().map(|r| r.duration_secs).sum(),
            runs,
        }
    }
}

/// Write-then-rename file set.
#[derive(Default)]
struct Staged {
    files: Vec<(PathBuf, PathBuf)>,
}

impl Staged {
    fn add(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = path.with_file_name(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        self.files.push((tmp, path));
        Ok(())
    }

    fn commit(mut self) -> Result<Vec<PathBuf>> {
        let files = std::mem::take(&mut self.files);
        let mut done = Vec::with_capacity(files.len());
        for (tmp, path) in &files {
            fs::rename(tmp, path).map_err(|e| Error::io(path, e))?;
            done.push(path.clone());
        }
        Ok(done)
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        for (tmp, _) in &self.files {
            let _ = fs::remove_file(tmp);
        }
    }
}

/// Write all result files for an experiment; returns the paths written.
pub fn write_experiment(out_dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<Vec<PathBuf>> {
    let mut staged = Staged::default();
    for run in &result.runs {
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &run.rows, cfg.stride)?;
        staged.add(out_dir.join(&run.label).join(format!("seed_{}.csv", run.seed)), &buf)?;
    }
    for label in result.labels() {
        let mut buf = Vec::new();
        write_aggregate_csv(&mut buf, &result.aggregate(&label)?)?;
        staged.add(out_dir.join(format!("aggregate_{label}.csv")), &buf)?;
    }
    if cfg.save_targets {
        let mut seen = std::collections::BTreeSet::new();
        for run in &result.runs {
            if !seen.insert(run.seed) {
                continue;
            }
            for (task, target) in &run.targets {
                let json = serde_json::to_vec_pretty(target)?;
                let name = format!("seed_{}_task_{task}.json", run.seed);
                staged.add(out_dir.join("targets").join(name), &json)?;
            }
        }
    }
    let meta = serde_json::to_vec_pretty(&Metadata::new(cfg, result))?;
    staged.add(out_dir.join("metadata.json"), &meta)?;
    staged.commit()
}
