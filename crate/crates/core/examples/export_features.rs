//! Train on one GEOFF task, then dump hidden activations of 2500 fresh inputs
//! as CSV for an external embedding tool.
//!
//!     cargo run --release --example export_features > features.csv

use crossprop::geoff::GeoffStream;
use crossprop::harness::{export_features, run_single, write_features_csv, ExperimentConfig};

fn main() -> crossprop::Result<()> {
    let cfg = ExperimentConfig::from_text("schedule = A:5000\nhidden = 50\nseeds = 0\n")?;
    let run = run_single(&cfg, "crossprop:0".parse()?, 0, None)?;
    let (_, target) = &run.targets[0];

    let mut probe = GeoffStream::new(1234);
    let xs: Vec<Vec<f64>> = (0..2500).map(|_| probe.sample(target).x).collect();
    let features = export_features(&run.network, xs.iter().map(|x| x.as_slice()))?;
    eprintln!("{} x {} feature matrix", features.rows(), features.cols());
    write_features_csv(std::io::stdout().lock(), &features, None)
}
