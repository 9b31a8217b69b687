//! Continual learning on GEOFF: the target network's outgoing weights are
//! partly redrawn every task, and the learner is never told.
//!
//!     cargo run --release --example geoff_continual [seeds]

use crossprop::harness::{run_experiment, ExperimentConfig};

fn main() -> crossprop::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut cfg = ExperimentConfig::paper_geoff();
    cfg.seeds = (0..seeds).collect();
    cfg.apply_text("optimizers = crossprop:0, crossprop:0.5, backprop, adam")?;

    let result = run_experiment(&cfg, None, 1)?;
    let per_task = cfg.schedule[0].examples / cfg.bin_width;

    println!("{:<18} {:>28}   {:>8} {:>8}", "optimizer", "first/last bin error per task", "U drift", "W drift");
    for label in result.labels() {
        let curve = result.aggregate(&label)?;
        let tasks: Vec<String> = (0..cfg.schedule.len())
            .map(|t| format!("{:.0}/{:.0}", curve.mean[t * per_task], curve.mean[(t + 1) * per_task - 1]))
            .collect();
        let runs: Vec<_> = result.runs_for(&label).collect();
        let u = runs.iter().map(|r| r.summary.final_u_drift).sum::<f64>() / runs.len() as f64;
        let w = runs.iter().map(|r| r.summary.final_w_drift).sum::<f64>() / runs.len() as f64;
        println!("{label:<18} {:>28}   {u:>8.3} {w:>8.3}", tasks.join("  "));
    }
    Ok(())
}
