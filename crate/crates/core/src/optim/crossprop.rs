use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::net::{instantaneous_error, Activation, ForwardPass, Loss, Network, Target};

use super::{check_alpha, check_eta, Learner, Order, StepOutcome};

/// Crossprop for a single linear output trained on squared error.
///
/// Outgoing weights follow LMS, `w_j ← w_j + α·δ·φ_j`. Each incoming weight
/// `u_ij` carries a trace `h_ij ≈ ∂w_j/∂u_ij` that credits its past values
/// for the current error:
///
/// ```text
/// u_ij ← u_ij + α·δ·[(1−η)·φ_j·h_ij + η·w_j·∂φ_j/∂u_ij]
/// h_ij ← h_ij·(1 − α·(1−η)·φ_j²) + α·(δ − η·w_j·φ_j)·∂φ_j/∂u_ij
/// ```
///
/// `η = 1` is plain backprop; `η = 0` is the pure meta-gradient update.
#[derive(Debug, Clone)]
pub struct Crossprop {
    net: Network,
    h: Matrix,
    alpha: f64,
    eta: f64,
    steps: u64,
}

impl Crossprop {
    pub fn new(net: Network, alpha: f64, eta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_eta(eta)?;
        if net.shape.outputs != 1 || net.loss != Loss::Squared {
            return Err(Error::InvalidInput(
                "crossprop needs a single linear output with squared loss; \
                 use crossprop_approx for multiple outputs"
                    .into(),
            ));
        }
        let h = Matrix::zeros(net.shape.inputs, net.shape.hidden);
        Ok(Crossprop {
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

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub(crate) fn step_ordered(
        &mut self,
        x: &[f64],
        y_star: f64,
        order: Order,
    ) -> Result<StepOutcome> {
        let forward = self.net.forward(x)?;
        let delta = self.net.error(&forward, Target::Scalar(y_star))?;
        let error = instantaneous_error(Loss::Squared, &[y_star], &forward.y);
        self.apply(x, &forward, delta.delta[0], order);
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

    /// Apply one update for a given forward pass and error.
    pub(crate) fn apply(&mut self, x: &[f64], fwd: &ForwardPass, delta: f64, order: Order) {
        let (alpha, eta) = (self.alpha, self.eta);
        let act = self.net.activation;
        let n = self.net.shape.hidden;
        let phi = &fwd.phi;
        // Time-t outgoing weights and per-unit slopes.
        let w: Vec<f64> = self.net.w.as_slice().to_vec();
        let slope: Vec<f64> = phi.iter().map(|&p| act.slope(p)).collect();

        for i in order.indices(x.len()) {
            let xi = x[i];
            let u_row = self.net.u.row_mut(i);
            let h_row = self.h.row_mut(i);
            for j in order.indices(n) {
                let dphi = slope[j] * xi;
                let h = h_row[j];
                u_row[j] += alpha * delta * ((1.0 - eta) * phi[j] * h + eta * w[j] * dphi);
                h_row[j] = h * (1.0 - alpha * (1.0 - eta) * phi[j] * phi[j])
                    + alpha * (delta - eta * w[j] * phi[j]) * dphi;
            }
        }
        let w_out = self.net.w.as_mut_slice();
        for j in order.indices(n) {
            w_out[j] = w[j] + alpha * delta * phi[j];
        }
    }
}

impl Learner for Crossprop {
    fn network(&self) -> &Network {
        &self.net
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn step(&mut self, x: &[f64], target: Target<'_>) -> Result<StepOutcome> {
        let y_star = match target {
            Target::Scalar(v) => v,
            Target::Vector(v) if v.len() == 1 => v[0],
            Target::Vector(v) => {
                return Err(Error::DimensionMismatch {
                    context: "crossprop target",
                    expected: 1,
                    actual: v.len(),
                })
            }
        };
        self.step_ordered(x, y_star, Order::Forward)
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]
mod tests {
    use super::*;
    use crate::net::{ActivationKind, NetShape};
    use crate::optim::{Baseline, BaselineRule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Straight-line transcription of the crossprop update, one scalar at a time.
    fn oracle_step(
        u: &[Vec<f64>],
        w: &[f64],
        h: &[Vec<f64>],
        alpha: f64,
        eta: f64,
        x: &[f64],
        y_star: f64,
        kind: ActivationKind,
    ) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
        let m = x.len();
        let n = w.len();
        let mut phi = vec![0.0; n];
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..m {
                s += x[i] * u[i][j];
            }
            phi[j] = match kind {
                ActivationKind::Tanh => s.tanh(),
                ActivationKind::Logistic => 1.0 / (1.0 + (-s).exp()),
            };
        }
        let mut y = 0.0;
        for j in 0..n {
            y += phi[j] * w[j];
        }
        let delta = y_star - y;
        let mut u1 = u.to_vec();
        let mut h1 = h.to_vec();
        let mut w1 = w.to_vec();
        for j in 0..n {
            for i in 0..m {
                let dphi = match kind {
                    ActivationKind::Tanh => (1.0 - phi[j] * phi[j]) * x[i],
                    ActivationKind::Logistic => phi[j] * (1.0 - phi[j]) * x[i],
                };
                u1[i][j] = u[i][j]
                    + alpha * delta * ((1.0 - eta) * phi[j] * h[i][j] + eta * w[j] * dphi);
                h1[i][j] = h[i][j] * (1.0 - alpha * (1.0 - eta) * phi[j] * phi[j])
                    + alpha * (delta - eta * w[j] * phi[j]) * dphi;
            }
            w1[j] = w[j] + alpha * delta * phi[j];
        }
        (u1, w1, h1)
    }

    fn random_state(rng: &mut ChaCha8Rng, kind: ActivationKind) -> (Crossprop, Vec<f64>, f64) {
        let m = rng.random_range(1..=8);
        let n = rng.random_range(1..=8);
        let shape = NetShape::new(m, n, 1).unwrap();
        let net = Network::random(shape, kind, Loss::Squared, rng);
        let alpha = rng.random_range(0.001..0.5);
        let eta = rng.random_range(0.0..=1.0);
        let mut cp = Crossprop::new(net, alpha, eta).unwrap();
        for v in cp.h.as_mut_slice() {
            *v = rng.random_range(-1.0..1.0);
        }
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y_star = rng.random_range(-2.0..2.0);
        (cp, x, y_star)
    }

    fn rows(m: &Matrix) -> Vec<Vec<f64>> {
        (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
    }

    #[test]
    fn tiny_step_matches_high_precision_reference() {
        let net = Network::with_weights(
            ActivationKind::Tanh,
            Loss::Squared,
            Matrix::from_vec(1, 1, vec![0.5]).unwrap(),
            Matrix::from_vec(1, 1, vec![0.5]).unwrap(),
        )
        .unwrap();
        let mut cp = Crossprop::new(net, 0.1, 0.0).unwrap();
        // 40-digit references (two consecutive steps, x = [1], y* = 1).
        let out = cp.step(&[1.0], Target::Scalar(1.0)).unwrap();
        assert!((out.delta.delta[0] - 0.768_941_421_369_995_1).abs() < 1e-15);
        assert_eq!(cp.network().u.get(0, 0), 0.5);
        assert!((cp.trace().get(0, 0) - 0.060_473_223_762_003_06).abs() < 1e-15);
        assert!((cp.network().w.get(0, 0) - 0.535_534_102_374_297_3).abs() < 1e-15);

        let out = cp.step(&[1.0], Target::Scalar(1.0)).unwrap();
        assert!((out.delta.delta[0] - 0.752_520_502_994_998_7).abs() < 1e-15);
        assert!((cp.network().u.get(0, 0) - 0.502_102_972_294_791_2).abs() < 1e-15);
        assert!((cp.trace().get(0, 0) - 0.118_363_608_718_159_2).abs() < 1e-15);
        assert!((cp.network().w.get(0, 0) - 0.570_309_365_936_689_5).abs() < 1e-15);
    }

    #[test]
    fn matches_straight_line_oracle_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let kind = if trial % 2 == 0 {
                ActivationKind::Tanh
            } else {
                ActivationKind::Logistic
            };
            let (mut cp, x, y_star) = random_state(&mut rng, kind);
            let w0: Vec<f64> = cp.net.w.as_slice().to_vec();
            let (u1, w1, h1) = oracle_step(
                &rows(&cp.net.u),
                &w0,
                &rows(&cp.h),
                cp.alpha,
                cp.eta,
                &x,
                y_star,
                kind,
            );
            cp.step(&x, Target::Scalar(y_star)).unwrap();
            assert_eq!(rows(&cp.net.u), u1);
            assert_eq!(cp.net.w.as_slice(), &w1[..]);
            assert_eq!(rows(&cp.h), h1);
        }
    }

    #[test]
    fn zero_delta_freezes_weights_and_decays_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut cp, x, _) = random_state(&mut rng, ActivationKind::Tanh);
        let before = cp.clone();
        let fwd = cp.net.forward(&x).unwrap();
        cp.apply(&x, &fwd, 0.0, Order::Forward);
        assert_eq!(cp.net.u, before.net.u);
        assert_eq!(cp.net.w, before.net.w);
        let (a, e) = (cp.alpha, cp.eta);
        for i in 0..x.len() {
            for j in 0..fwd.phi.len() {
                let p = fwd.phi[j];
                let w = before.net.w.get(j, 0);
                let dphi = (1.0 - p * p) * x[i];
                let expected =
                    before.h.get(i, j) * (1.0 - a * (1.0 - e) * p * p) - a * e * w * p * dphi;
                assert!((cp.h.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn eta_one_is_backprop() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..100 {
            let kind = if trial % 2 == 0 {
                ActivationKind::Tanh
            } else {
                ActivationKind::Logistic
            };
            let (cp, x, y_star) = random_state(&mut rng, kind);
            let mut cp = Crossprop::new(cp.net.clone(), cp.alpha, 1.0).unwrap();
            let mut bp = Baseline::new(cp.net.clone(), cp.alpha, BaselineRule::Sgd).unwrap();
            cp.step(&x, Target::Scalar(y_star)).unwrap();
            bp.step(&x, Target::Scalar(y_star)).unwrap();
            let pairs = cp
                .net
                .u
                .as_slice()
                .iter()
                .chain(cp.net.w.as_slice())
                .zip(bp.network().u.as_slice().iter().chain(bp.network().w.as_slice()));
            for (a, b) in pairs {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300));
            }
        }
    }

    #[test]
    fn iteration_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (cp, x, y_star) = random_state(&mut rng, ActivationKind::Tanh);
            let mut fwd = cp.clone();
            let mut rev = cp.clone();
            fwd.step_ordered(&x, y_star, Order::Forward).unwrap();
            rev.step_ordered(&x, y_star, Order::Reverse).unwrap();
            assert_eq!(fwd.net, rev.net);
            assert_eq!(fwd.h, rev.h);
        }
    }

    #[test]
    fn trace_decays_geometrically_when_error_is_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let shape = NetShape::new(3, 4, 1).unwrap();
        let net = Network::random(shape, ActivationKind::Tanh, Loss::Squared, &mut rng);
        let mut cp = Crossprop::new(net, 0.5, 0.0).unwrap();
        for v in cp.h.as_mut_slice() {
            *v = rng.random_range(-1.0..1.0);
        }
        let x = [0.9, -0.4, 0.7];
        let fwd = cp.net.forward(&x).unwrap();
        assert!(fwd.phi.iter().all(|p| *p != 0.0));
        let mut prev: Vec<f64> = cp.h.as_slice().iter().map(|v| v.abs()).collect();
        for _ in 0..100 {
            cp.apply(&x, &fwd, 0.0, Order::Forward);
            let now: Vec<f64> = cp.h.as_slice().iter().map(|v| v.abs()).collect();
            for (a, b) in now.iter().zip(&prev) {
                assert!(a < b || *b == 0.0);
            }
            prev = now;
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        let shape = NetShape::new(2, 2, 2).unwrap();
        let net = Network::zeros(shape, ActivationKind::Tanh, Loss::Squared);
        assert!(Crossprop::new(net, 0.1, 0.0).is_err());
        let net = Network::zeros(NetShape::new(2, 2, 1).unwrap(), ActivationKind::Tanh, Loss::Squared);
        assert!(Crossprop::new(net.clone(), 0.1, 1.5).is_err());
        assert!(Crossprop::new(net.clone(), -0.1, 0.5).is_err());
        let mut cp = Crossprop::new(net, 0.1, 0.5).unwrap();
        assert!(cp.step(&[1.0, 2.0, 3.0], Target::Scalar(0.0)).is_err());
    }

    #[test]
    fn divergence_reports_step() {
        let net = Network::with_weights(
            ActivationKind::Tanh,
            Loss::Squared,
            Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
        )
        .unwrap();
        let mut cp = Crossprop::new(net, 1e300, 0.0).unwrap();
        let err = cp.step(&[1.0], Target::Scalar(1e300)).unwrap_err();
        assert!(matches!(err, Error::Divergence { step: 1 }));
    }
}
