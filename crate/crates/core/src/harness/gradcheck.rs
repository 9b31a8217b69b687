//! Finite-difference verification of the backprop gradients.

use rand::Rng;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::net::{forward_with, one_hot, objective, Activation, Loss, NetShape};
use crate::optim::backprop_gradients;

/// Denominator floor for the relative error, so that parameters whose true
/// gradient is ~0 are judged on absolute error instead.
pub const RELATIVE_FLOOR: f64 = 1e-4;

pub const DEFAULT_EPSILON: f64 = 1e-5;

pub const TOLERANCE: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Draw a random instance of `shape` and return the largest relative error
/// between the analytic gradients and central differences with step `epsilon`.
pub fn grad_check<A: Activation, R: Rng + ?Sized>(
    shape: NetShape,
    act: &A,
    loss: Loss,
    epsilon: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut u = Matrix::from_fn(shape.inputs, shape.hidden, |_, _| rng.random_range(-1.0..1.0));
    let mut w = Matrix::from_fn(shape.hidden, shape.outputs, |_, _| rng.random_range(-1.0..1.0));
    let x: Vec<f64> = (0..shape.inputs).map(|_| rng.random_range(-1.0..1.0)).collect();
    let target = match loss {
        Loss::Squared => (0..shape.outputs).map(|_| rng.random_range(-1.0..1.0)).collect(),
        Loss::CrossEntropy => one_hot(rng.random_range(0..shape.outputs), shape.outputs),
    };

    let (grads, _, _) = backprop_gradients(&u, &w, loss, act, &x, &target)?;

    let eval = |u: &Matrix, w: &Matrix| -> Result<f64> {
        Ok(objective(loss, &target, &forward_with(u, w, loss, act, &x)?.y))
    };
    let mut worst: f64 = 0.0;
    for layer in 0..2 {
        let len = if layer == 0 { u.as_slice().len() } else { w.as_slice().len() };
        for p in 0..len {
            let orig = *slot(&mut u, &mut w, layer, p);
            *slot(&mut u, &mut w, layer, p) = orig + epsilon;
            let plus = eval(&u, &w)?;
            *slot(&mut u, &mut w, layer, p) = orig - epsilon;
            let minus = eval(&u, &w)?;
            *slot(&mut u, &mut w, layer, p) = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let analytic = if layer == 0 {
                grads.u.as_slice()[p]
            } else {
                grads.w.as_slice()[p]
            };
            worst = worst.max(relative_error(analytic, numeric));
        }
    }
    Ok(worst)
}

fn slot<'a>(u: &'a mut Matrix, w: &'a mut Matrix, layer: usize, p: usize) -> &'a mut f64 {
    if layer == 0 {
        &mut u.as_mut_slice()[p]
    } else {
        &mut w.as_mut_slice()[p]
    }
}

/// Wraps an activation and perturbs its derivative; exists so the failure
/// path of the gradient check can be exercised.
#[doc(hidden)]
#[derive(Debug, Clone, Copy)]
pub struct CorruptedSlope<A>(pub A);

impl<A: Activation> Activation for CorruptedSlope<A> {
    fn activate(&self, z: f64) -> f64 {
        self.0.activate(z)
    }

    fn slope(&self, phi: f64) -> f64 {
        1.1 * self.0.slope(phi) + 0.01
    }
}
