//! One-example update rules behind a common [`Learner`] interface.
//!
//! Every learner owns a [`Network`] and consumes one `(x, target)` pair per
//! call to [`Learner::step`]. All right-hand sides of an update read the
//! parameters as they were before the call; nothing within a step observes
//! another update's output.

mod approx;
mod baseline;
mod crossprop;

pub use approx::CrosspropApprox;
pub use baseline::{backprop_gradients, Baseline, BaselineRule, Gradients};
pub use crossprop::Crossprop;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{ErrorSignal, ForwardPass, Network, Target};

/// What a step observed before it changed anything.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub forward: ForwardPass,
    pub delta: ErrorSignal,
    /// Instantaneous error of the pre-update prediction.
    pub error: f64,
}

pub trait Learner: Send {
    fn network(&self) -> &Network;

    /// Number of completed steps.
    fn steps(&self) -> u64;

    /// Consume one example and update the parameters in place.
    fn step(&mut self, x: &[f64], target: Target<'_>) -> Result<StepOutcome>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Crossprop,
    CrosspropApprox,
    Backprop,
    Momentum,
    RmsProp,
    Adam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 6] = [
        OptimizerKind::Crossprop,
        OptimizerKind::CrosspropApprox,
        OptimizerKind::Backprop,
        OptimizerKind::Momentum,
        OptimizerKind::RmsProp,
        OptimizerKind::Adam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Crossprop => "crossprop",
            OptimizerKind::CrosspropApprox => "crossprop_approx",
            OptimizerKind::Backprop => "backprop",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::Adam => "adam",
        }
    }

    pub fn uses_eta(self) -> bool {
        matches!(self, OptimizerKind::Crossprop | OptimizerKind::CrosspropApprox)
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown optimizer `{s}`")))
    }
}

/// Hyperparameters of the backprop variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineHyper {
    pub momentum: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_eps: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for BaselineHyper {
    fn default() -> Self {
        BaselineHyper {
            momentum: 0.9,
            rmsprop_decay: 0.9,
            rmsprop_eps: 1e-8,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

/// Build a boxed learner of the given kind around an initialized network.
pub fn build_learner(
    kind: OptimizerKind,
    net: Network,
    alpha: f64,
    eta: f64,
    hyper: &BaselineHyper,
) -> Result<Box<dyn Learner>> {
    Ok(match kind {
        OptimizerKind::Crossprop => Box::new(Crossprop::new(net, alpha, eta)?),
        OptimizerKind::CrosspropApprox => Box::new(CrosspropApprox::new(net, alpha, eta)?),
        OptimizerKind::Backprop => Box::new(Baseline::new(net, alpha, BaselineRule::Sgd)?),
        OptimizerKind::Momentum => Box::new(Baseline::new(
            net,
            alpha,
            BaselineRule::Momentum { mu: hyper.momentum },
        )?),
        OptimizerKind::RmsProp => Box::new(Baseline::new(
            net,
            alpha,
            BaselineRule::RmsProp {
                decay: hyper.rmsprop_decay,
                eps: hyper.rmsprop_eps,
            },
        )?),
        OptimizerKind::Adam => Box::new(Baseline::new(
            net,
            alpha,
            BaselineRule::Adam {
                beta1: hyper.adam_beta1,
                beta2: hyper.adam_beta2,
                eps: hyper.adam_eps,
            },
        )?),
    })
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidInput(format!("step size {alpha} must be finite and ≥ 0")));
    }
    Ok(())
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!("mixing factor η = {eta} outside [0, 1]")));
    }
    Ok(())
}

/// Iteration direction over parameter indices; results must not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Order {
    Forward,
    Reverse,
}

impl Order {
    #[inline]
    pub(crate) fn indices(self, n: usize) -> impl Iterator<Item = usize> {
        let reverse = self == Order::Reverse;
        (0..n).map(move |i| if reverse { n - 1 - i } else { i })
    }
}
