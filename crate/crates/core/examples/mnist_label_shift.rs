//! Label-shifted MNIST at desk scale: the same images, labels shifted by 0, 1
//! and 2 across three tasks.
//!
//!     cargo run --release --example mnist_label_shift [mnist_dir]

use std::path::PathBuf;

use crossprop::harness::{run_experiment, ExperimentConfig, MnistData};

fn main() -> crossprop::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    let data = MnistData::load(
        &dir.join("train-images-idx3-ubyte.gz"),
        &dir.join("train-labels-idx1-ubyte.gz"),
        None,
    )?;
    println!("{} training images", data.len());

    let cfg = ExperimentConfig::from_text(
        "problem = mnist\n\
         optimizers = crossprop_approx:0, backprop, rmsprop, adam\n\
         hidden = 128\n\
         schedule = A:2000, B:2000, C:2000\n\
         label_shifts = 0, 1, 2\n\
         bin_width = 500\n",
    )?;
    let result = run_experiment(&cfg, Some(&data), 1)?;
    for label in result.labels() {
        let curve = result.aggregate(&label)?;
        let bins: Vec<String> = curve.mean.iter().map(|v| format!("{v:.2}")).collect();
        println!("{label:<22} cross-entropy per 500 examples: {}", bins.join(" "));
    }
    Ok(())
}
