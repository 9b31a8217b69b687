//! GEOFF: a frozen random target network of linear threshold units that
//! produces noisy scalar targets from binary inputs.
//!
//! Unit `j` fires when `Σ_i x_i·u*_ij ≥ θ_j` with `θ_j = β·m − S_j`, where
//! `S_j` counts the `−1` entries in column `j` of `U*`. Under this threshold
//! a unit fires exactly when at least `β·m` of its inputs "agree" with their
//! weights, so `β` sets the sparsity of the feature layer.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// One frozen task. Construct with [`generate_target`] and derive follow-up
/// tasks with [`mutate_task`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TargetJson", into = "TargetJson")]
pub struct GeoffTarget {
    m: usize,
    n_star: usize,
    beta: f64,
    seed: u64,
    /// Row-major `m × n*`, entries ±1.
    u_star: Vec<i8>,
    /// Entries in {−1, 0, +1}.
    w_star: Vec<i8>,
    theta: Vec<f64>,
}

/// Documented JSON layout: `U*` as `m` rows of length `n*`; `θ` is rederived.
#[derive(Serialize, Deserialize)]
struct TargetJson {
    m: usize,
    n_star: usize,
    beta: f64,
    seed: u64,
    u_star: Vec<Vec<i8>>,
    w_star: Vec<i8>,
}

impl From<GeoffTarget> for TargetJson {
    fn from(t: GeoffTarget) -> Self {
        TargetJson {
            m: t.m,
            n_star: t.n_star,
            beta: t.beta,
            seed: t.seed,
            u_star: t.u_star.chunks(t.n_star).map(<[i8]>::to_vec).collect(),
            w_star: t.w_star,
        }
    }
}

impl TryFrom<TargetJson> for GeoffTarget {
    type Error = Error;

    fn try_from(j: TargetJson) -> Result<Self> {
        if j.u_star.len() != j.m || j.u_star.iter().any(|r| r.len() != j.n_star) {
            return Err(Error::InvalidInput(format!(
                "U* must have {} rows of length {}",
                j.m, j.n_star
            )));
        }
        GeoffTarget::from_parts(j.m, j.beta, j.seed, j.u_star.concat(), j.w_star)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidInput(format!("β = {beta} outside (0, 1)")));
    }
    Ok(())
}

/// `θ_j = β·m − S_j`.
fn thresholds(m: usize, n_star: usize, beta: f64, u_star: &[i8]) -> Vec<f64> {
    let mut negatives = vec![0usize; n_star];
    for row in u_star.chunks(n_star) {
        for (s, &u) in negatives.iter_mut().zip(row) {
            if u < 0 {
                *s += 1;
            }
        }
    }
    negatives
        .into_iter()
        .map(|s| beta * m as f64 - s as f64)
        .collect()
}

impl GeoffTarget {
    /// Assemble a target from explicit weights; `θ` is derived.
    pub fn from_parts(
        m: usize,
        beta: f64,
        seed: u64,
        u_star: Vec<i8>,
        w_star: Vec<i8>,
    ) -> Result<Self> {
        check_beta(beta)?;
        let n_star = w_star.len();
        if m == 0 || n_star == 0 || u_star.len() != m * n_star {
            return Err(Error::InvalidInput(format!(
                "target shape m = {m}, n* = {n_star} does not match {} input weights",
                u_star.len()
            )));
        }
        if u_star.iter().any(|&u| u != 1 && u != -1) {
            return Err(Error::InvalidInput("U* entries must be ±1".into()));
        }
        if w_star.iter().any(|&w| !(-1..=1).contains(&w)) {
            return Err(Error::InvalidInput("W* entries must be −1, 0 or +1".into()));
        }
        let theta = thresholds(m, n_star, beta, &u_star);
        Ok(GeoffTarget {
            m,
            n_star,
            beta,
            seed,
            u_star,
            w_star,
            theta,
        })
    }

    pub fn inputs(&self) -> usize {
        self.m
    }

    pub fn features(&self) -> usize {
        self.n_star
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn u_star(&self, i: usize, j: usize) -> i8 {
        self.u_star[i * self.n_star + j]
    }

    pub fn w_star(&self) -> &[i8] {
        &self.w_star
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Noise-free target `Σ_j φ*_j·w*_j`.
    pub fn clean_output(&self, x: &[f64]) -> Result<f64> {
        let phi = ltu_features(self, x)?;
        Ok(phi
            .iter()
            .zip(&self.w_star)
            .map(|(p, &w)| p * w as f64)
            .sum())
    }
}

/// Draw `U*` uniformly from {−1,+1} and `W*` uniformly from {−1,0,+1}.
pub fn generate_target(m: usize, n_star: usize, beta: f64, seed: u64) -> Result<GeoffTarget> {
    check_beta(beta)?;
    if m == 0 || n_star == 0 {
        return Err(Error::InvalidInput("GEOFF target needs m ≥ 1 and n* ≥ 1".into()));
    }
    let mut rng = stream(seed, Stream::Target);
    let u_star: Vec<i8> = (0..m * n_star)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    let w_star: Vec<i8> = (0..n_star).map(|_| rng.random_range(-1..=1)).collect();
    GeoffTarget::from_parts(m, beta, seed, u_star, w_star)
}

/// Binary LTU activations `φ*_j = [Σ_i x_i·u*_ij ≥ θ_j]`.
pub fn ltu_features(target: &GeoffTarget, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != target.m {
        return Err(Error::DimensionMismatch {
            context: "GEOFF input",
            expected: target.m,
            actual: x.len(),
        });
    }
    let n = target.n_star;
    let mut sums = vec![0.0f64; n];
    for (row, &xi) in target.u_star.chunks(n).zip(x) {
        if xi == 0.0 {
            continue;
        }
        for (s, &u) in sums.iter_mut().zip(row) {
            *s += xi * u as f64;
        }
    }
    Ok(sums
        .into_iter()
        .zip(&target.theta)
        .map(|(s, &t)| if s >= t { 1.0 } else { 0.0 })
        .collect())
}

/// One supervised example.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub x: Vec<f64>,
    pub y_star: f64,
}

/// Example source for a run: binary inputs and Gaussian target noise come
/// from separate streams of the run seed.
#[derive(Debug, Clone)]
pub struct GeoffStream {
    inputs: rand_chacha::ChaCha8Rng,
    noise: rand_chacha::ChaCha8Rng,
    noise_std: f64,
}

impl GeoffStream {
    pub fn new(seed: u64) -> Self {
        GeoffStream {
            inputs: stream(seed, Stream::Inputs),
            noise: stream(seed, Stream::Noise),
            noise_std: 1.0,
        }
    }

    /// Scale of the additive Gaussian noise (1 by default; 0 disables it).
    pub fn with_noise_std(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn sample(&mut self, target: &GeoffTarget) -> LabeledExample {
        sample_example(target, &mut self.inputs, &mut self.noise, self.noise_std)
    }
}

/// `x ~ U{0,1}^m`, `y* = Σ_j φ*_j(x)·w*_j + σ·N(0,1)`.
pub fn sample_example<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    target: &GeoffTarget,
    input_rng: &mut R1,
    noise_rng: &mut R2,
    noise_std: f64,
) -> LabeledExample {
    let x: Vec<f64> = (0..target.m)
        .map(|_| if input_rng.random_bool(0.5) { 1.0 } else { 0.0 })
        .collect();
    let clean = target
        .clean_output(&x)
        .expect("sampled input matches target width");
    let z: f64 = noise_rng.sample(StandardNormal);
    LabeledExample {
        x,
        y_star: clean + noise_std * z,
    }
}

/// New task: `⌊fraction·n*⌋` distinct outgoing weights, chosen uniformly,
/// redrawn from {−1,0,+1}. `U*` and `θ` are untouched.
pub fn mutate_task<R: Rng + ?Sized>(
    target: &GeoffTarget,
    fraction: f64,
    rng: &mut R,
) -> Result<GeoffTarget> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("mutation fraction {fraction} outside (0, 1]")));
    }
    let count = mutation_count(target.n_star, fraction);
    let mut next = target.clone();
    for j in index::sample(rng, target.n_star, count) {
        next.w_star[j] = rng.random_range(-1..=1);
    }
    Ok(next)
}

pub fn mutation_count(n_star: usize, fraction: f64) -> usize {
    ((fraction * n_star as f64 + 1e-9).floor() as usize).min(n_star)
}
