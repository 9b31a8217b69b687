//! Run a config and write the same result files as the command line tool.
//!
//!     cargo run --release --example experiment_files [out_dir]

use std::path::PathBuf;

use crossprop::harness::{run_experiment, write_experiment, ExperimentConfig};

fn main() -> crossprop::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results/example"));
    let cfg = ExperimentConfig::from_text(
        "# small GEOFF sweep\n\
         optimizers = crossprop:0, backprop\n\
         hidden = 64\n\
         schedule = A:2000, B:2000\n\
         seeds = 0..4\n\
         stride = 10\n\
         save_targets = true\n",
    )?;
    let result = run_experiment(&cfg, None, 2)?;
    for path in write_experiment(&out, &cfg, &result)? {
        println!("{}", path.display());
    }
    Ok(())
}
