//! Backprop and its accumulator variants.
//!
//! All four share one gradient routine; they differ only in how the raw
//! gradient `g = ∂L/∂θ` is turned into a parameter change.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::net::{
    forward_with, instantaneous_error, target_vector, Activation, ErrorSignal, ForwardPass, Loss,
    Network, Target,
};

use super::{check_alpha, Learner, StepOutcome};

/// Loss gradients for both weight layers, shaped like the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub u: Matrix,
    pub w: Matrix,
}

/// Forward pass plus `∂L/∂U` and `∂L/∂W` for one example.
///
/// With `δ = target − y`, `∂L/∂w_jk = −δ_k·φ_j` and
/// `∂L/∂u_ij = −(Σ_k δ_k·w_jk)·∂φ_j/∂u_ij` for both losses.
pub fn backprop_gradients(
    u: &Matrix,
    w: &Matrix,
    loss: Loss,
    act: &impl Activation,
    x: &[f64],
    target: &[f64],
) -> Result<(Gradients, ForwardPass, ErrorSignal)> {
    let fwd = forward_with(u, w, loss, act, x)?;
    let t = target_vector(w.cols(), loss, Target::Vector(target))?;
    let delta = ErrorSignal {
        delta: t.iter().zip(&fwd.y).map(|(t, y)| t - y).collect(),
    };
    let mut grads = Gradients {
        u: Matrix::zeros(u.rows(), u.cols()),
        w: Matrix::zeros(w.rows(), w.cols()),
    };
    fill_gradients(w, act, x, &fwd, &delta.delta, &mut grads);
    Ok((grads, fwd, delta))
}

fn fill_gradients(
    w: &Matrix,
    act: &impl Activation,
    x: &[f64],
    fwd: &ForwardPass,
    delta: &[f64],
    grads: &mut Gradients,
) {
    let phi = &fwd.phi;
    // Backpropagated error per hidden unit, scaled by the activation slope.
    let hidden_err: Vec<f64> = (0..phi.len())
        .map(|j| {
            let back: f64 = w.row(j).iter().zip(delta).map(|(w, d)| w * d).sum();
            back * act.slope(phi[j])
        })
        .collect();
    for (i, &xi) in x.iter().enumerate() {
        for (g, e) in grads.u.row_mut(i).iter_mut().zip(&hidden_err) {
            *g = -(e * xi);
        }
    }
    for (j, &p) in phi.iter().enumerate() {
        for (g, d) in grads.w.row_mut(j).iter_mut().zip(delta) {
            *g = -(d * p);
        }
    }
}

/// How a raw gradient becomes a parameter change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BaselineRule {
    /// `θ ← θ − α·g`
    Sgd,
    /// `v ← μ·v + g; θ ← θ − α·v`
    Momentum { mu: f64 },
    /// `s ← ρ·s + (1−ρ)·g²; θ ← θ − α·g/(√s + ε)`
    RmsProp { decay: f64, eps: f64 },
    /// Bias-corrected moments: `θ ← θ − α·m̂/(√v̂ + ε)`
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl BaselineRule {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            BaselineRule::Sgd => true,
            BaselineRule::Momentum { mu } => (0.0..1.0).contains(&mu),
            BaselineRule::RmsProp { decay, eps } => decay > 0.0 && decay < 1.0 && eps > 0.0,
            BaselineRule::Adam { beta1, beta2, eps } => {
                beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0 && eps > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("hyperparameters out of range: {self:?}")))
        }
    }

    fn slots(&self) -> usize {
        match self {
            BaselineRule::Sgd => 0,
            BaselineRule::Momentum { .. } | BaselineRule::RmsProp { .. } => 1,
            BaselineRule::Adam { .. } => 2,
        }
    }
}

/// Auxiliary buffers for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
struct Slots {
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Slots {
    fn new(len: usize, count: usize) -> Self {
        Slots {
            first: if count >= 1 { vec![0.0; len] } else { Vec::new() },
            second: if count >= 2 { vec![0.0; len] } else { Vec::new() },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Baseline {
    net: Network,
    alpha: f64,
    rule: BaselineRule,
    u_slots: Slots,
    w_slots: Slots,
    grads: Gradients,
    steps: u64,
}

impl Baseline {
    pub fn new(net: Network, alpha: f64, rule: BaselineRule) -> Result<Self> {
        check_alpha(alpha)?;
        rule.validate()?;
        let (m, n, k) = (net.shape.inputs, net.shape.hidden, net.shape.outputs);
        Ok(Baseline {
            u_slots: Slots::new(m * n, rule.slots()),
            w_slots: Slots::new(n * k, rule.slots()),
            grads: Gradients {
                u: Matrix::zeros(m, n),
                w: Matrix::zeros(n, k),
            },
            net,
            alpha,
            rule,
            steps: 0,
        })
    }

    pub fn rule(&self) -> BaselineRule {
        self.rule
    }

    /// First accumulator (velocity, squared-gradient average or first moment) for `U` then `W`.
    pub fn first_moments(&self) -> (&[f64], &[f64]) {
        (&self.u_slots.first, &self.w_slots.first)
    }

    pub fn second_moments(&self) -> (&[f64], &[f64]) {
        (&self.u_slots.second, &self.w_slots.second)
    }

    /// Raw gradients from the most recent step.
    pub fn last_gradients(&self) -> &Gradients {
        &self.grads
    }

    /// Apply a precomputed gradient through the accumulator rule.
    pub fn apply_gradients(&mut self, grads: &Gradients) {
        self.steps += 1;
        let t = self.steps;
        update(
            self.rule,
            self.alpha,
            t,
            self.net.u.as_mut_slice(),
            grads.u.as_slice(),
            &mut self.u_slots,
        );
        update(
            self.rule,
            self.alpha,
            t,
            self.net.w.as_mut_slice(),
            grads.w.as_slice(),
            &mut self.w_slots,
        );
    }
}

fn update(rule: BaselineRule, alpha: f64, t: u64, params: &mut [f64], g: &[f64], s: &mut Slots) {
    match rule {
        BaselineRule::Sgd => {
            for (p, g) in params.iter_mut().zip(g) {
                *p -= alpha * g;
            }
        }
        BaselineRule::Momentum { mu } => {
            for ((p, g), v) in params.iter_mut().zip(g).zip(&mut s.first) {
                *v = mu * *v + g;
                *p -= alpha * *v;
            }
        }
        BaselineRule::RmsProp { decay, eps } => {
            for ((p, g), sq) in params.iter_mut().zip(g).zip(&mut s.first) {
                *sq = decay * *sq + (1.0 - decay) * g * g;
                *p -= alpha * g / (sq.sqrt() + eps);
            }
        }
        BaselineRule::Adam { beta1, beta2, eps } => {
            let t = t.min(i32::MAX as u64) as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            for (((p, g), m), v) in params
                .iter_mut()
                .zip(g)
                .zip(&mut s.first)
                .zip(&mut s.second)
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= alpha * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

impl Learner for Baseline {
    fn network(&self) -> &Network {
        &self.net
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn step(&mut self, x: &[f64], target: Target<'_>) -> Result<StepOutcome> {
        let t = self.net.target_vector(target)?;
        let forward = self.net.forward(x)?;
        let delta = self.net.error(&forward, Target::Vector(&t))?;
        let error = instantaneous_error(self.net.loss, &t, &forward.y);
        let mut grads = std::mem::replace(
            &mut self.grads,
            Gradients {
                u: Matrix::zeros(0, 0),
                w: Matrix::zeros(0, 0),
            },
        );
        fill_gradients(
            &self.net.w,
            &self.net.activation,
            x,
            &forward,
            &delta.delta,
            &mut grads,
        );
        self.apply_gradients(&grads);
        self.grads = grads;
        if !self.net.is_finite() {
            return Err(Error::Divergence { step: self.steps });
        }
        Ok(StepOutcome {
            forward,
            delta,
            error,
        })
    }
}
