//! A few crossprop updates on a tiny network, showing how the `h` trace
//! builds up and how η moves the update between meta-gradient and backprop.
//!
//!     cargo run --example crossprop_step

use crossprop::linalg::Matrix;
use crossprop::net::{ActivationKind, Loss, Network, Target};
use crossprop::optim::{Baseline, BaselineRule, Crossprop, Learner};

fn main() -> crossprop::Result<()> {
    let u = Matrix::from_vec(2, 3, vec![0.5, -0.2, 0.1, 0.3, 0.4, -0.6])?;
    let w = Matrix::column(vec![0.5, -0.3, 0.2]);
    let net = Network::with_weights(ActivationKind::Tanh, Loss::Squared, u, w)?;
    let examples = [([1.0, 0.0], 1.0), ([0.0, 1.0], -0.5), ([1.0, 1.0], 0.25)];

    for eta in [0.0, 0.5, 1.0] {
        let mut cp = Crossprop::new(net.clone(), 0.1, eta)?;
        println!("eta = {eta}");
        for (x, y) in &examples {
            let out = cp.step(x, Target::Scalar(*y))?;
            println!(
                "  y = {:+.5}  delta = {:+.5}  h[0] = {:?}",
                out.forward.y[0],
                out.delta.delta[0],
                cp.trace().row(0).iter().map(|v| (v * 1e5).round() / 1e5).collect::<Vec<_>>()
            );
        }
        println!("  U = {:?}", cp.network().u.as_slice());
    }

    // With eta = 1 the incoming-weight update is exactly backprop's.
    let mut cp = Crossprop::new(net.clone(), 0.1, 1.0)?;
    let mut bp = Baseline::new(net, 0.1, BaselineRule::Sgd)?;
    for (x, y) in &examples {
        cp.step(x, Target::Scalar(*y))?;
        bp.step(x, Target::Scalar(*y))?;
    }
    let gap = cp
        .network()
        .u
        .as_slice()
        .iter()
        .zip(bp.network().u.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max |U_crossprop(eta=1) - U_backprop| = {gap:e}");
    Ok(())
}
