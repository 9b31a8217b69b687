//! Crossprop: a meta-gradient optimizer for the incoming weights of a
//! single-hidden-layer network, with backprop baselines and the GEOFF and
//! label-shifted MNIST continual-learning experiments used to compare them.
//!
//! ```
//! use crossprop::net::{ActivationKind, Loss, NetShape, Network, Target};
//! use crossprop::optim::{Crossprop, Learner};
//!
//! let shape = NetShape::new(2, 3, 1).unwrap();
//! let mut rng = crossprop::rng::stream(0, crossprop::rng::Stream::Init);
//! let net = Network::random(shape, ActivationKind::Tanh, Loss::Squared, &mut rng);
//! let mut learner = Crossprop::new(net, 0.1, 0.0).unwrap();
//! let out = learner.step(&[1.0, -1.0], Target::Scalar(0.5)).unwrap();
//! assert!(out.error.is_finite());
//! ```

pub mod cli;
pub mod error;
pub mod geoff;
pub mod harness;
pub mod linalg;
pub mod mnist;
pub mod net;
pub mod optim;
pub mod rng;

pub use error::{Error, ParseErrorKind, Result};
pub use harness::{run_experiment, ExperimentConfig};
pub use net::{ActivationKind, Loss, NetShape, Network, Target};
pub use optim::{build_learner, Learner, OptimizerKind};
