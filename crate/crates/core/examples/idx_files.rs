//! Read MNIST IDX files (plain or gzipped), inspect one digit, and show the
//! structured error for a damaged file.
//!
//!     cargo run --example idx_files [mnist_dir]

use std::path::PathBuf;

use crossprop::mnist::{load_images, load_labels, parse_idx_labels, shift_labels};

fn main() -> crossprop::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    let images = load_images(&dir.join("train-images-idx3-ubyte.gz"))?;
    let labels = load_labels(&dir.join("train-labels-idx1-ubyte.gz"))?;
    println!("{} images of {}x{}, {} labels", images.len(), images.rows(), images.cols(), labels.len());

    let digit = images.image(0);
    for row in digit.chunks(28).step_by(2) {
        let line: String = row.iter().step_by(2).map(|&p| if p > 0.5 { '#' } else if p > 0.1 { '+' } else { ' ' }).collect();
        println!("{line}");
    }
    let shifted = shift_labels(&labels, 1);
    println!("label {} (task B sees {})", labels.get(0), shifted.get(0));

    let bytes = labels.to_idx();
    match parse_idx_labels(&bytes[..6]) {
        Err(e) => println!("truncated header: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
