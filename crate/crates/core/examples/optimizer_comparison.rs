//! All six learners on an identical GEOFF stream and initialization.
//!
//!     cargo run --release --example optimizer_comparison

use crossprop::geoff::{generate_target, GeoffStream};
use crossprop::harness::drift_norm;
use crossprop::net::{ActivationKind, Loss, NetShape, Network, Target};
use crossprop::optim::{build_learner, BaselineHyper, OptimizerKind};
use crossprop::rng::{stream, Stream};

fn main() -> crossprop::Result<()> {
    let seed = 7;
    let target = generate_target(20, 1000, 0.6, seed)?;
    let shape = NetShape::new(20, 200, 1)?;
    let init = Network::random(shape, ActivationKind::Tanh, Loss::Squared, &mut stream(seed, Stream::Init));

    println!("{:<18} {:>12} {:>12} {:>9} {:>9}", "optimizer", "first 500", "last 500", "U drift", "W drift");
    for kind in OptimizerKind::ALL {
        let mut learner = build_learner(kind, init.clone(), 0.0005, 0.0, &BaselineHyper::default())?;
        let mut examples = GeoffStream::new(seed);
        let mut errors = Vec::with_capacity(5000);
        for _ in 0..5000 {
            let ex = examples.sample(&target);
            errors.push(learner.step(&ex.x, Target::Scalar(ex.y_star))?.error);
        }
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let net = learner.network();
        println!(
            "{:<18} {:>12.2} {:>12.2} {:>9.3} {:>9.3}",
            kind.name(),
            mean(&errors[..500]),
            mean(&errors[4500..]),
            drift_norm(&net.u, &init.u)?,
            drift_norm(&net.w, &init.w)?,
        );
    }
    Ok(())
}
