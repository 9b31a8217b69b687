use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::net::{instantaneous_error, Activation, ForwardPass, Network, Target};

use super::{check_alpha, check_eta, Learner, Order, StepOutcome};

/// Multi-output crossprop with one trace per (hidden, output) pair.
///
/// ```text
/// u_ij ← u_ij + α·Σ_k δ_k·[(1−η)·φ_j·h_jk + η·w_jk]·∂φ_j/∂u_ij
/// h_jk ← h_jk·(1 − α·(1−η)·φ_j²) + α·(δ_k − η·w_jk·φ_j)
/// w_jk ← w_jk + α·δ_k·φ_j
/// ```
///
/// The trace term here is multiplied by `∂φ_j/∂u_ij`, unlike the scalar
/// [`Crossprop`](super::Crossprop), so the two do not coincide at `k = 1`.
#[derive(Debug, Clone)]
pub struct CrosspropApprox {
    net: Network,
    h: Matrix,
    alpha: f64,
    eta: f64,
    steps: u64,
}

impl CrosspropApprox {
    pub fn new(net: Network, alpha: f64, eta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_eta(eta)?;
        let h = Matrix::zeros(net.shape.hidden, net.shape.outputs);
        Ok(CrosspropApprox {
            net,
            h,
            alpha,
            eta,
            steps: 0,
        })
    }

    pub fn trace(&self) -> &Matrix {
        &self.h
    }

    pub(crate) fn step_ordered(
        &mut self,
        x: &[f64],
        target: Target<'_>,
        order: Order,
    ) -> Result<StepOutcome> {
        let forward = self.net.forward(x)?;
        let t = self.net.target_vector(target)?;
        let delta = self.net.error(&forward, Target::Vector(&t))?;
        let error = instantaneous_error(self.net.loss, &t, &forward.y);
        self.apply(x, &forward, &delta.delta, order);
        self.steps += 1;
        if !(self.net.is_finite() && self.h.is_finite()) {
            return Err(Error::Divergence { step: self.steps });
        }
        Ok(StepOutcome {
            forward,
            delta,
            error,
        })
    }

    pub(crate) fn apply(&mut self, x: &[f64], fwd: &ForwardPass, delta: &[f64], order: Order) {
        let (alpha, eta) = (self.alpha, self.eta);
        let act = self.net.activation;
        let n = self.net.shape.hidden;
        let k = self.net.shape.outputs;
        let phi = &fwd.phi;

        // Per-hidden-unit credit Σ_k δ_k·[(1−η)·φ_j·h_jk + η·w_jk] from time-t values.
        let credit: Vec<f64> = (0..n)
            .map(|j| {
                let (h_row, w_row) = (self.h.row(j), self.net.w.row(j));
                (0..k)
                    .map(|c| delta[c] * ((1.0 - eta) * phi[j] * h_row[c] + eta * w_row[c]))
                    .sum()
            })
            .collect();
        let slope: Vec<f64> = phi.iter().map(|&p| act.slope(p)).collect();

        for i in order.indices(x.len()) {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let u_row = self.net.u.row_mut(i);
            for j in order.indices(n) {
                u_row[j] += alpha * credit[j] * (slope[j] * xi);
            }
        }
        for j in order.indices(n) {
            let decay = 1.0 - alpha * (1.0 - eta) * phi[j] * phi[j];
            let h_row = self.h.row_mut(j);
            let w_row = self.net.w.row_mut(j);
            for c in order.indices(k) {
                let w = w_row[c];
                h_row[c] = h_row[c] * decay + alpha * (delta[c] - eta * w * phi[j]);
                w_row[c] = w + alpha * delta[c] * phi[j];
            }
        }
    }
}

impl Learner for CrosspropApprox {
    fn network(&self) -> &Network {
        &self.net
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn step(&mut self, x: &[f64], target: Target<'_>) -> Result<StepOutcome> {
        self.step_ordered(x, target, Order::Forward)
    }
}
