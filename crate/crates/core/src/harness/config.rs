//! Experiment configuration and its flat `key = value` text format.
//!
//! ```text
//! # comment
//! problem = geoff
//! optimizers = crossprop:0, crossprop:0.5, backprop, adam
//! schedule = A:5000, B:5000, C:5000
//! seeds = 0..30
//! ```
//!
//! Every key is optional; missing keys keep the preset default for the
//! problem. See [`KEYS`] for the full list.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{ActivationKind, Loss, NetShape};
use crate::optim::{BaselineHyper, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Geoff,
    Mnist,
}

impl Problem {
    pub fn loss(self) -> Loss {
        match self {
            Problem::Geoff => Loss::Squared,
            Problem::Mnist => Loss::CrossEntropy,
        }
    }
}

/// An optimizer entry; crossprop variants carry their own η when given as
/// `crossprop:0.5`, otherwise they use the config-wide `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub eta: Option<f64>,
}

impl OptimizerSpec {
    pub fn new(kind: OptimizerKind) -> Self {
        OptimizerSpec { kind, eta: None }
    }

    pub fn with_eta(kind: OptimizerKind, eta: f64) -> Self {
        OptimizerSpec {
            kind,
            eta: Some(eta),
        }
    }

    pub fn eta_or(&self, default: f64) -> f64 {
        self.eta.unwrap_or(default)
    }

    /// File-name-safe label, e.g. `crossprop_eta0.5` or `adam`.
    pub fn label(&self, default_eta: f64) -> String {
        if self.kind.uses_eta() {
            format!("{}_eta{}", self.kind.name(), self.eta_or(default_eta))
        } else {
            self.kind.name().to_string()
        }
    }

    fn to_text(self) -> String {
        match self.eta {
            Some(e) => format!("{}:{e}", self.kind.name()),
            None => self.kind.name().to_string(),
        }
    }
}

impl std::str::FromStr for OptimizerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, eta) = match s.split_once(':') {
            Some((n, e)) => (n, Some(parse_num::<f64>("optimizers", e)?)),
            None => (s, None),
        };
        let kind: OptimizerKind = name.parse()?;
        if eta.is_some() && !kind.uses_eta() {
            return Err(Error::Config(format!("optimizer `{name}` takes no η")));
        }
        Ok(OptimizerSpec { kind, eta })
    }
}

/// One schedule entry. Consecutive entries with the same id form one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub examples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub optimizers: Vec<OptimizerSpec>,
    pub eta: f64,
    pub alpha: f64,
    pub activation: ActivationKind,
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub schedule: Vec<TaskSpec>,
    pub seeds: Vec<u64>,
    pub mutation_fraction: f64,
    pub target_features: usize,
    pub beta: f64,
    pub noise_std: f64,
    pub label_shifts: Vec<i64>,
    pub shuffle: bool,
    pub mnist_images: Option<PathBuf>,
    pub mnist_labels: Option<PathBuf>,
    pub mnist_limit: Option<usize>,
    pub bin_width: usize,
    pub stride: usize,
    pub save_targets: bool,
    pub hyper: BaselineHyper,
}

/// Every config key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("problem", "geoff or mnist"),
    ("optimizers", "comma list of crossprop[:eta], crossprop_approx[:eta], backprop, momentum, rmsprop, adam"),
    ("eta", "default crossprop mixing factor in [0, 1] (0 = meta-gradient, 1 = backprop)"),
    ("alpha", "step size shared by every optimizer"),
    ("activation", "hidden nonlinearity: tanh or logistic"),
    ("inputs", "learner input units (GEOFF: also the target's input count)"),
    ("hidden", "learner hidden units"),
    ("outputs", "learner output units (1 for GEOFF, 10 for MNIST)"),
    ("schedule", "comma list of task_id:examples; a task switch happens when the id changes"),
    ("seeds", "comma list of run seeds, or a range a..b"),
    ("mutation_fraction", "GEOFF: fraction of W* redrawn at each task switch"),
    ("target_features", "GEOFF: number of LTUs in the target network"),
    ("beta", "GEOFF: LTU threshold parameter in (0, 1)"),
    ("noise_std", "GEOFF: standard deviation of the target noise"),
    ("label_shifts", "MNIST: label shift per schedule entry"),
    ("shuffle", "MNIST: seeded shuffle of the example order within each task"),
    ("mnist_images", "MNIST: IDX image file (optionally gzipped)"),
    ("mnist_labels", "MNIST: IDX label file (optionally gzipped)"),
    ("mnist_limit", "MNIST: use only the first N training examples (none = all)"),
    ("bin_width", "examples per learning-curve bin"),
    ("stride", "write every stride-th metrics row"),
    ("save_targets", "GEOFF: write each task's target network as JSON"),
    ("momentum", "momentum coefficient"),
    ("rmsprop_decay", "RMSProp squared-gradient decay"),
    ("rmsprop_eps", "RMSProp denominator fuzz"),
    ("adam_beta1", "ADAM first-moment decay"),
    ("adam_beta2", "ADAM second-moment decay"),
    ("adam_eps", "ADAM denominator fuzz"),
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{}`", v.trim())))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::Config(format!("`{key}`: expected a boolean, got `{other}`"))),
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = v.split_once("..") {
        let a: u64 = parse_num("seeds", a)?;
        let b: u64 = parse_num("seeds", b)?;
        return Ok((a..b).collect());
    }
    list(v).map(|s| parse_num("seeds", s)).collect()
}

fn parse_schedule(v: &str) -> Result<Vec<TaskSpec>> {
    list(v)
        .map(|entry| {
            let (id, n) = entry
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("schedule entry `{entry}` is not id:count")))?;
            let id = id.trim();
            if id.is_empty() || id.contains(',') {
                return Err(Error::Config(format!("bad task id in `{entry}`")));
            }
            Ok(TaskSpec {
                id: id.to_string(),
                examples: parse_num("schedule", n)?,
            })
        })
        .collect()
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// GEOFF continual protocol: target 20–1000 with β = 0.6, learner
    /// 20–500–1 tanh, α = 0.0005, tasks A/B/C × 5000 examples, 30 seeds.
    pub fn paper_geoff() -> Self {
        ExperimentConfig {
            problem: Problem::Geoff,
            optimizers: vec![
                OptimizerSpec::with_eta(OptimizerKind::Crossprop, 0.0),
                OptimizerSpec::with_eta(OptimizerKind::Crossprop, 0.5),
                OptimizerSpec::with_eta(OptimizerKind::CrosspropApprox, 0.0),
                OptimizerSpec::new(OptimizerKind::Backprop),
                OptimizerSpec::new(OptimizerKind::Momentum),
                OptimizerSpec::new(OptimizerKind::RmsProp),
                OptimizerSpec::new(OptimizerKind::Adam),
            ],
            eta: 0.0,
            alpha: 0.0005,
            activation: ActivationKind::Tanh,
            inputs: 20,
            hidden: 500,
            outputs: 1,
            schedule: ["A", "B", "C"]
                .iter()
                .map(|id| TaskSpec {
                    id: id.to_string(),
                    examples: 5000,
                })
                .collect(),
            seeds: (0..30).collect(),
            mutation_fraction: 0.5,
            target_features: 1000,
            beta: 0.6,
            noise_std: 1.0,
            label_shifts: vec![0, 1, 2],
            shuffle: true,
            mnist_images: None,
            mnist_labels: None,
            mnist_limit: None,
            bin_width: 100,
            stride: 1,
            save_targets: false,
            hyper: BaselineHyper::default(),
        }
    }

    /// MNIST label-shift protocol: 784–1024–10 tanh/softmax, shifts 0/1/2,
    /// one pass over the training set per task, a single run.
    pub fn paper_mnist() -> Self {
        ExperimentConfig {
            problem: Problem::Mnist,
            optimizers: vec![
                OptimizerSpec::with_eta(OptimizerKind::CrosspropApprox, 0.0),
                OptimizerSpec::with_eta(OptimizerKind::CrosspropApprox, 0.5),
                OptimizerSpec::new(OptimizerKind::Backprop),
                OptimizerSpec::new(OptimizerKind::Momentum),
                OptimizerSpec::new(OptimizerKind::RmsProp),
                OptimizerSpec::new(OptimizerKind::Adam),
            ],
            inputs: 784,
            hidden: 1024,
            outputs: 10,
            schedule: ["A", "B", "C"]
                .iter()
                .map(|id| TaskSpec {
                    id: id.to_string(),
                    examples: 60000,
                })
                .collect(),
            seeds: vec![0],
            mnist_images: Some(PathBuf::from("data/mnist/train-images-idx3-ubyte.gz")),
            mnist_labels: Some(PathBuf::from("data/mnist/train-labels-idx1-ubyte.gz")),
            ..Self::paper_geoff()
        }
    }

    pub fn preset(problem: Problem) -> Self {
        match problem {
            Problem::Geoff => Self::paper_geoff(),
            Problem::Mnist => Self::paper_mnist(),
        }
    }

    pub fn shape(&self) -> Result<NetShape> {
        NetShape::new(self.inputs, self.hidden, self.outputs)
    }

    pub fn loss(&self) -> Loss {
        self.problem.loss()
    }

    pub fn total_examples(&self) -> usize {
        self.schedule.iter().map(|t| t.examples).sum()
    }

    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "problem" => {
                self.problem = match v.to_ascii_lowercase().as_str() {
                    "geoff" => Problem::Geoff,
                    "mnist" => Problem::Mnist,
                    other => return Err(Error::Config(format!("unknown problem `{other}`"))),
                }
            }
            "optimizers" => self.optimizers = list(v).map(str::parse).collect::<Result<_>>()?,
            "eta" => self.eta = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "activation" => self.activation = v.parse()?,
            "inputs" => self.inputs = parse_num(key, v)?,
            "hidden" => self.hidden = parse_num(key, v)?,
            "outputs" => self.outputs = parse_num(key, v)?,
            "schedule" => self.schedule = parse_schedule(v)?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "mutation_fraction" => self.mutation_fraction = parse_num(key, v)?,
            "target_features" => self.target_features = parse_num(key, v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "noise_std" => self.noise_std = parse_num(key, v)?,
            "label_shifts" => {
                self.label_shifts = list(v).map(|s| parse_num(key, s)).collect::<Result<_>>()?
            }
            "shuffle" => self.shuffle = parse_bool(key, v)?,
            "mnist_images" => self.mnist_images = non_empty(v).map(PathBuf::from),
            "mnist_labels" => self.mnist_labels = non_empty(v).map(PathBuf::from),
            "mnist_limit" => {
                self.mnist_limit = match non_empty(v) {
                    None => None,
                    Some(s) if s.eq_ignore_ascii_case("none") => None,
                    Some(s) => Some(parse_num(key, s)?),
                }
            }
            "bin_width" => self.bin_width = parse_num(key, v)?,
            "stride" => self.stride = parse_num(key, v)?,
            "save_targets" => self.save_targets = parse_bool(key, v)?,
            "momentum" => self.hyper.momentum = parse_num(key, v)?,
            "rmsprop_decay" => self.hyper.rmsprop_decay = parse_num(key, v)?,
            "rmsprop_eps" => self.hyper.rmsprop_eps = parse_num(key, v)?,
            "adam_beta1" => self.hyper.adam_beta1 = parse_num(key, v)?,
            "adam_beta2" => self.hyper.adam_beta2 = parse_num(key, v)?,
            "adam_eps" => self.hyper.adam_eps = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Text form of one key's current value.
    pub fn get(&self, key: &str) -> Option<String> {
        let opt_path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        Some(match key {
            "problem" => match self.problem {
                Problem::Geoff => "geoff".into(),
                Problem::Mnist => "mnist".into(),
            },
            "optimizers" => join(self.optimizers.iter().map(|o| o.to_text())),
            "eta" => self.eta.to_string(),
            "alpha" => self.alpha.to_string(),
            "activation" => self.activation.to_string(),
            "inputs" => self.inputs.to_string(),
            "hidden" => self.hidden.to_string(),
            "outputs" => self.outputs.to_string(),
            "schedule" => join(self.schedule.iter().map(|t| format!("{}:{}", t.id, t.examples))),
            "seeds" => seeds_text(&self.seeds),
            "mutation_fraction" => self.mutation_fraction.to_string(),
            "target_features" => self.target_features.to_string(),
            "beta" => self.beta.to_string(),
            "noise_std" => self.noise_std.to_string(),
            "label_shifts" => join(&self.label_shifts),
            "shuffle" => self.shuffle.to_string(),
            "mnist_images" => opt_path(&self.mnist_images),
            "mnist_labels" => opt_path(&self.mnist_labels),
            "mnist_limit" => self.mnist_limit.map_or("none".into(), |n| n.to_string()),
            "bin_width" => self.bin_width.to_string(),
            "stride" => self.stride.to_string(),
            "save_targets" => self.save_targets.to_string(),
            "momentum" => self.hyper.momentum.to_string(),
            "rmsprop_decay" => self.hyper.rmsprop_decay.to_string(),
            "rmsprop_eps" => self.hyper.rmsprop_eps.to_string(),
            "adam_beta1" => self.hyper.adam_beta1.to_string(),
            "adam_beta2" => self.hyper.adam_beta2.to_string(),
            "adam_eps" => self.hyper.adam_eps.to_string(),
            _ => return None,
        })
    }

    /// Apply a config file's text on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Parse a config file: the `problem` key selects the preset, then all
    /// keys are applied on top of it.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut probe = Self::paper_geoff();
        probe.apply_text(text)?;
        let mut cfg = Self::preset(probe.problem);
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, help) in KEYS {
            let _ = writeln!(out, "# {help}");
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        self.shape()?;
        if self.schedule.is_empty() {
            return fail("schedule is empty".into());
        }
        if self.seeds.is_empty() {
            return fail("no seeds".into());
        }
        if self.optimizers.is_empty() {
            return fail("no optimizers".into());
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return fail(format!("alpha = {} must be finite and ≥ 0", self.alpha));
        }
        for spec in &self.optimizers {
            let eta = spec.eta_or(self.eta);
            if !(0.0..=1.0).contains(&eta) {
                return fail(format!("eta = {eta} outside [0, 1]"));
            }
            if spec.kind == OptimizerKind::Crossprop && self.outputs != 1 {
                return fail("crossprop needs a single output; use crossprop_approx".into());
            }
        }
        let mut labels: Vec<String> = self.optimizers.iter().map(|o| o.label(self.eta)).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return fail("duplicate optimizer entries".into());
        }
        if self.bin_width == 0 || self.stride == 0 {
            return fail("bin_width and stride must be ≥ 1".into());
        }
        match self.problem {
            Problem::Geoff => {
                if self.outputs != 1 {
                    return fail("GEOFF learners have exactly one output".into());
                }
                if !(self.beta > 0.0 && self.beta < 1.0) {
                    return fail(format!("beta = {} outside (0, 1)", self.beta));
                }
                if !(self.mutation_fraction > 0.0 && self.mutation_fraction <= 1.0) {
                    return fail(format!(
                        "mutation_fraction = {} outside (0, 1]",
                        self.mutation_fraction
                    ));
                }
                if self.target_features == 0 {
                    return fail("target_features must be ≥ 1".into());
                }
                if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
                    return fail("noise_std must be ≥ 0".into());
                }
            }
            Problem::Mnist => {
                if self.inputs != crate::mnist::PIXELS || self.outputs != crate::mnist::CLASSES {
                    return fail(format!(
                        "MNIST learners need 784 inputs and 10 outputs, got {}-{}",
                        self.inputs, self.outputs
                    ));
                }
                if self.label_shifts.len() != self.schedule.len() {
                    return fail(format!(
                        "{} label shifts for {} schedule entries",
                        self.label_shifts.len(),
                        self.schedule.len()
                    ));
                }
                for (w, s) in self.schedule.windows(2).zip(self.label_shifts.windows(2)) {
                    if w[0].id == w[1].id && s[0] != s[1] {
                        return fail(format!("task `{}` has two different label shifts", w[0].id));
                    }
                }
                if self.mnist_limit == Some(0) {
                    return fail("mnist_limit must be ≥ 1".into());
                }
            }
        }
        Ok(())
    }
}

fn non_empty(v: &str) -> Option<&str> {
    let v = v.trim();
    (!v.is_empty()).then_some(v)
}

fn seeds_text(seeds: &[u64]) -> String {
    let contiguous = seeds.len() > 2 && seeds.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous {
        format!("{}..{}", seeds[0], seeds[seeds.len() - 1] + 1)
    } else {
        join(seeds)
    }
}
