//! Backprop gradients against central finite differences.
//!
//!     cargo run --example grad_check

use crossprop::harness::gradcheck::{grad_check, CorruptedSlope, DEFAULT_EPSILON, TOLERANCE};
use crossprop::net::{ActivationKind, Loss, NetShape};
use crossprop::rng::{stream, Stream};

fn main() -> crossprop::Result<()> {
    let mut rng = stream(0, Stream::Probe);
    for (m, n, k) in [(5, 4, 1), (5, 4, 3), (8, 8, 8)] {
        let shape = NetShape::new(m, n, k)?;
        for act in [ActivationKind::Tanh, ActivationKind::Logistic] {
            for loss in [Loss::Squared, Loss::CrossEntropy] {
                let err = grad_check(shape, &act, loss, DEFAULT_EPSILON, &mut rng)?;
                println!("{m}-{n}-{k} {act:<8} {loss:<13} max relative error {err:.2e}");
            }
        }
    }
    let broken = CorruptedSlope(ActivationKind::Tanh);
    let err = grad_check(NetShape::new(5, 4, 1)?, &broken, Loss::Squared, DEFAULT_EPSILON, &mut rng)?;
    println!("with a wrong derivative: {err:.2e} (tolerance {TOLERANCE:e})");
    Ok(())
}
