//! Forward computation for a single-hidden-layer network.
//!
//! Hidden units compute `φ_j = act(Σ_i x_i·u_ij)`; outputs are either linear
//! (`y = Wᵀφ`, squared loss) or softmax over `Wᵀφ` (cross-entropy loss). The
//! error signal is always `δ = target − y`, which is the negative gradient of
//! the loss with respect to the output pre-activations in both cases, so every
//! optimizer consumes δ the same way.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Layer sizes: `inputs` (m), `hidden` (n), `outputs` (k).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl NetShape {
    pub fn new(inputs: usize, hidden: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || hidden == 0 || outputs == 0 {
            return Err(Error::InvalidInput(format!(
                "network shape {inputs}-{hidden}-{outputs} has an empty layer"
            )));
        }
        Ok(NetShape {
            inputs,
            hidden,
            outputs,
        })
    }
}

/// A hidden-unit nonlinearity whose derivative can be written in terms of its
/// own output.
pub trait Activation {
    fn activate(&self, z: f64) -> f64;
    /// `dφ/dz` expressed through `φ = activate(z)`.
    fn slope(&self, phi: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Tanh,
    Logistic,
}

impl Activation for ActivationKind {
    #[inline]
    fn activate(&self, z: f64) -> f64 {
        match self {
            ActivationKind::Tanh => z.tanh(),
            ActivationKind::Logistic => 1.0 / (1.0 + (-z).exp()),
        }
    }

    #[inline]
    fn slope(&self, phi: f64) -> f64 {
        match self {
            ActivationKind::Tanh => 1.0 - phi * phi,
            ActivationKind::Logistic => phi * (1.0 - phi),
        }
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(ActivationKind::Tanh),
            "logistic" | "sigmoid" => Ok(ActivationKind::Logistic),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Logistic => "logistic",
        })
    }
}

/// Output layer and loss pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Linear outputs, squared error.
    Squared,
    /// Softmax outputs, cross-entropy against a one-hot target.
    CrossEntropy,
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squared" | "mse" => Ok(Loss::Squared),
            "cross_entropy" | "cross-entropy" | "xent" => Ok(Loss::CrossEntropy),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

impl std::fmt::Display for Loss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Loss::Squared => "squared",
            Loss::CrossEntropy => "cross_entropy",
        })
    }
}

/// Supervised target for one example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<'a> {
    Scalar(f64),
    Vector(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub preact: Vec<f64>,
    pub phi: Vec<f64>,
    pub y: Vec<f64>,
}

/// `δ_k = target_k − y_k` for every output.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSignal {
    pub delta: Vec<f64>,
}

impl ErrorSignal {
    pub fn is_finite(&self) -> bool {
        self.delta.iter().all(|d| d.is_finite())
    }
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

fn preactivations(x: &[f64], u: &Matrix) -> Result<Vec<f64>> {
    check_len("input vector", u.rows(), x.len())?;
    Ok(u.transpose_mul_vec(x))
}

/// `φ_j = act(Σ_i x_i·u_ij)` for an `m × n` incoming weight matrix.
pub fn hidden_activations(x: &[f64], u: &Matrix, act: &impl Activation) -> Result<Vec<f64>> {
    Ok(preactivations(x, u)?
        .into_iter()
        .map(|z| act.activate(z))
        .collect())
}

pub fn predict_scalar(phi: &[f64], w: &[f64]) -> Result<f64> {
    check_len("outgoing weights", phi.len(), w.len())?;
    Ok(dot(phi, w))
}

/// Linear outputs `z = Wᵀφ` for an `n × k` outgoing matrix.
pub fn output_logits(phi: &[f64], w: &Matrix) -> Result<Vec<f64>> {
    check_len("hidden vector", w.rows(), phi.len())?;
    Ok(w.transpose_mul_vec(phi))
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn predict_softmax(phi: &[f64], w: &Matrix) -> Result<Vec<f64>> {
    Ok(softmax(&output_logits(phi, w)?))
}

/// `∂φ_j/∂u_ij` from the closed form in `φ_j` and `x_i`.
#[inline]
pub fn activation_derivative(act: &impl Activation, phi_j: f64, x_i: f64) -> f64 {
    act.slope(phi_j) * x_i
}

pub fn error_scalar(y_star: f64, y: f64) -> ErrorSignal {
    ErrorSignal {
        delta: vec![y_star - y],
    }
}

/// Index of the hot entry, or an error if `target` is not exactly one-hot.
pub fn one_hot_class(target: &[f64]) -> Result<usize> {
    let mut hot = None;
    for (i, &t) in target.iter().enumerate() {
        if t == 1.0 {
            if hot.is_some() {
                return Err(Error::NotOneHot("more than one entry equals 1".into()));
            }
            hot = Some(i);
        } else if t != 0.0 {
            return Err(Error::NotOneHot(format!("entry {i} is {t}")));
        }
    }
    hot.ok_or_else(|| Error::NotOneHot("no entry equals 1".into()))
}

pub fn one_hot(class: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[class] = 1.0;
    v
}

pub fn error_softmax(target_onehot: &[f64], y: &[f64]) -> Result<ErrorSignal> {
    check_len("one-hot target", y.len(), target_onehot.len())?;
    one_hot_class(target_onehot)?;
    Ok(ErrorSignal {
        delta: target_onehot.iter().zip(y).map(|(t, p)| t - p).collect(),
    })
}

/// Learner parameters: incoming `U` (m × n) and outgoing `W` (n × k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub shape: NetShape,
    pub activation: ActivationKind,
    pub loss: Loss,
    pub u: Matrix,
    pub w: Matrix,
}

impl Network {
    pub fn zeros(shape: NetShape, activation: ActivationKind, loss: Loss) -> Self {
        Network {
            shape,
            activation,
            loss,
            u: Matrix::zeros(shape.inputs, shape.hidden),
            w: Matrix::zeros(shape.hidden, shape.outputs),
        }
    }

    /// Uniform initialization: `U ~ U[−1/√m, 1/√m]`, `W ~ U[−1/√n, 1/√n]`.
    pub fn random<R: Rng + ?Sized>(
        shape: NetShape,
        activation: ActivationKind,
        loss: Loss,
        rng: &mut R,
    ) -> Self {
        let bu = 1.0 / (shape.inputs as f64).sqrt();
        let bw = 1.0 / (shape.hidden as f64).sqrt();
        let u = Matrix::from_fn(shape.inputs, shape.hidden, |_, _| rng.random_range(-bu..=bu));
        let w = Matrix::from_fn(shape.hidden, shape.outputs, |_, _| rng.random_range(-bw..=bw));
        Network {
            shape,
            activation,
            loss,
            u,
            w,
        }
    }

    pub fn with_weights(
        activation: ActivationKind,
        loss: Loss,
        u: Matrix,
        w: Matrix,
    ) -> Result<Self> {
        check_len("outgoing weight rows", u.cols(), w.rows())?;
        let shape = NetShape::new(u.rows(), u.cols(), w.cols())?;
        Ok(Network {
            shape,
            activation,
            loss,
            u,
            w,
        })
    }

    pub fn hidden(&self, x: &[f64]) -> Result<Vec<f64>> {
        hidden_activations(x, &self.u, &self.activation)
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardPass> {
        forward_with(&self.u, &self.w, self.loss, &self.activation, x)
    }

    /// Target as a dense length-k vector, validated against the loss.
    pub fn target_vector(&self, target: Target<'_>) -> Result<Vec<f64>> {
        target_vector(self.shape.outputs, self.loss, target)
    }

    pub fn error(&self, fwd: &ForwardPass, target: Target<'_>) -> Result<ErrorSignal> {
        let t = self.target_vector(target)?;
        Ok(ErrorSignal {
            delta: t.iter().zip(&fwd.y).map(|(t, y)| t - y).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.w.is_finite()
    }
}

pub(crate) fn forward_with(
    u: &Matrix,
    w: &Matrix,
    loss: Loss,
    act: &impl Activation,
    x: &[f64],
) -> Result<ForwardPass> {
    let preact = preactivations(x, u)?;
    let phi: Vec<f64> = preact.iter().map(|&z| act.activate(z)).collect();
    let logits = output_logits(&phi, w)?;
    let y = match loss {
        Loss::Squared => logits,
        Loss::CrossEntropy => softmax(&logits),
    };
    Ok(ForwardPass { preact, phi, y })
}

pub(crate) fn target_vector(k: usize, loss: Loss, target: Target<'_>) -> Result<Vec<f64>> {
    let t = match target {
        Target::Scalar(v) => {
            if k != 1 {
                return Err(Error::InvalidInput(format!(
                    "scalar target given to a network with {k} outputs"
                )));
            }
            vec![v]
        }
        Target::Vector(v) => {
            check_len("target vector", k, v.len())?;
            v.to_vec()
        }
    };
    if loss == Loss::CrossEntropy {
        one_hot_class(&t)?;
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite target".into()));
    }
    Ok(t)
}

/// Per-example error recorded in metrics: `Σ_k δ_k²` for squared loss,
/// `−Σ_k t_k ln y_k` for cross-entropy.
pub fn instantaneous_error(loss: Loss, target: &[f64], y: &[f64]) -> f64 {
    match loss {
        Loss::Squared => target.iter().zip(y).map(|(t, p)| (t - p) * (t - p)).sum(),
        Loss::CrossEntropy => cross_entropy(target, y),
    }
}

/// The function whose negative gradient the updates follow:
/// `½Σ_k δ_k²` for squared loss, cross-entropy otherwise.
pub fn objective(loss: Loss, target: &[f64], y: &[f64]) -> f64 {
    match loss {
        Loss::Squared => 0.5 * instantaneous_error(loss, target, y),
        Loss::CrossEntropy => cross_entropy(target, y),
    }
}

fn cross_entropy(target: &[f64], y: &[f64]) -> f64 {
    target
        .iter()
        .zip(y)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, p)| -t * p.max(f64::MIN_POSITIVE).ln())
        .sum()
}
