//! Continual-learning runs: one learner, one seed, a schedule of tasks.
//!
//! The learner sees only `(x, target)` pairs. Task switches happen inside
//! the [`ExampleStream`] (GEOFF: outgoing target weights are partly redrawn;
//! MNIST: labels are shifted) and are never signalled to the learner.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geoff::{generate_target, mutate_task, GeoffStream, GeoffTarget};
use crate::mnist::{load_images, load_labels, ImageSet, LabelSet, CLASSES};
use crate::net::{one_hot, Network, Target};
use crate::optim::build_learner;
use crate::rng::{stream, Stream};

use super::config::{ExperimentConfig, OptimizerSpec, Problem};
use super::metrics::{aggregate_runs, bin_errors, drift_norm, AggregateCurve, MetricsRow, RunSummary};

/// Paired MNIST images and labels.
#[derive(Debug, Clone)]
pub struct MnistData {
    pub images: ImageSet,
    pub labels: LabelSet,
}

impl MnistData {
    pub fn new(images: ImageSet, labels: LabelSet, limit: Option<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        let (images, labels) = match limit {
            Some(n) => (images.truncated(n), labels.truncated(n)),
            None => (images, labels),
        };
        if images.is_empty() {
            return Err(Error::InvalidInput("MNIST data set is empty".into()));
        }
        Ok(MnistData { images, labels })
    }

    pub fn load(images: &Path, labels: &Path, limit: Option<usize>) -> Result<Self> {
        Self::new(load_images(images)?, load_labels(labels)?, limit)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One example as produced by the stream; `task` is metadata for metrics only.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub task: Arc<str>,
    pub x: Vec<f64>,
    pub target: Vec<f64>,
    /// MNIST: the (shifted) class label.
    pub class: Option<usize>,
}

#[allow(clippy::large_enum_variant)]
enum Source<'a> {
    Geoff {
        target: GeoffTarget,
        stream: GeoffStream,
        mutation: ChaCha8Rng,
        fraction: f64,
    },
    Mnist {
        data: &'a MnistData,
        shuffle: Option<ChaCha8Rng>,
        order: Vec<usize>,
        pos: usize,
        shift: i64,
    },
}

/// The ordered examples of one run.
pub struct ExampleStream<'a> {
    source: Source<'a>,
    tasks: Vec<(Arc<str>, usize, i64)>,
    entry: usize,
    left: usize,
    started: bool,
    targets: Vec<(Arc<str>, GeoffTarget)>,
}

impl<'a> ExampleStream<'a> {
    pub fn new(cfg: &ExperimentConfig, seed: u64, data: Option<&'a MnistData>) -> Result<Self> {
        let source = match cfg.problem {
            Problem::Geoff => Source::Geoff {
                target: generate_target(cfg.inputs, cfg.target_features, cfg.beta, seed)?,
                stream: GeoffStream::new(seed).with_noise_std(cfg.noise_std),
                mutation: stream(seed, Stream::Mutation),
                fraction: cfg.mutation_fraction,
            },
            Problem::Mnist => {
                let data = data.ok_or_else(|| Error::Config("MNIST run without data".into()))?;
                Source::Mnist {
                    data,
                    shuffle: cfg.shuffle.then(|| stream(seed, Stream::Shuffle)),
                    order: (0..data.len()).collect(),
                    pos: 0,
                    shift: 0,
                }
            }
        };
        let tasks = cfg
            .schedule
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let shift = cfg.label_shifts.get(i).copied().unwrap_or(0);
                (Arc::<str>::from(t.id.as_str()), t.examples, shift)
            })
            .collect();
        Ok(ExampleStream {
            source,
            tasks,
            entry: 0,
            left: 0,
            started: false,
            targets: Vec::new(),
        })
    }

    /// GEOFF target networks in effect for each task, in order.
    pub fn targets(&self) -> &[(Arc<str>, GeoffTarget)] {
        &self.targets
    }

    fn enter(&mut self, idx: usize) -> Result<()> {
        let switched = idx == 0 || self.tasks[idx].0 != self.tasks[idx - 1].0;
        self.left = self.tasks[idx].1;
        if !switched {
            return Ok(());
        }
        let task = self.tasks[idx].0.clone();
        match &mut self.source {
            Source::Geoff {
                target,
                mutation,
                fraction,
                ..
            } => {
                if idx > 0 {
                    *target = mutate_task(target, *fraction, mutation)?;
                }
                self.targets.push((task, target.clone()));
            }
            Source::Mnist {
                shuffle,
                order,
                pos,
                shift,
                ..
            } => {
                *shift = self.tasks[idx].2;
                *pos = 0;
                if let Some(rng) = shuffle {
                    order.shuffle(rng);
                }
            }
        }
        Ok(())
    }

    fn draw(&mut self) -> Example {
        let task = self.tasks[self.entry].0.clone();
        match &mut self.source {
            Source::Geoff { target, stream, .. } => {
                let ex = stream.sample(target);
                Example {
                    task,
                    x: ex.x,
                    target: vec![ex.y_star],
                    class: None,
                }
            }
            Source::Mnist {
                data,
                shuffle,
                order,
                pos,
                shift,
            } => {
                if *pos == order.len() {
                    *pos = 0;
                    if let Some(rng) = shuffle {
                        order.shuffle(rng);
                    }
                }
                let idx = order[*pos];
                *pos += 1;
                let class = (data.labels.get(idx) as i64 + *shift).rem_euclid(CLASSES as i64) as usize;
                Example {
                    task,
                    x: data.images.image(idx),
                    target: one_hot(class, CLASSES),
                    class: Some(class),
                }
            }
        }
    }

    pub fn next_example(&mut self) -> Result<Option<Example>> {
        if !self.started {
            self.started = true;
            self.enter(0)?;
        }
        while self.left == 0 {
            if self.entry + 1 >= self.tasks.len() {
                return Ok(None);
            }
            self.entry += 1;
            let e = self.entry;
            self.enter(e)?;
        }
        self.left -= 1;
        Ok(Some(self.draw()))
    }
}

impl Iterator for ExampleStream<'_> {
    type Item = Result<Example>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_example().transpose()
    }
}

/// Initial learner parameters for a seed; shared by every optimizer.
pub fn initial_network(cfg: &ExperimentConfig, seed: u64) -> Result<Network> {
    Ok(Network::random(
        cfg.shape()?,
        cfg.activation,
        cfg.loss(),
        &mut stream(seed, Stream::Init),
    ))
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub label: String,
    pub spec: OptimizerSpec,
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    pub summary: RunSummary,
    pub network: Network,
    pub targets: Vec<(Arc<str>, GeoffTarget)>,
}

/// Train one learner through the whole schedule.
pub fn run_single(
    cfg: &ExperimentConfig,
    spec: OptimizerSpec,
    seed: u64,
    data: Option<&MnistData>,
) -> Result<RunResult> {
    let started = Instant::now();
    let net0 = initial_network(cfg, seed)?;
    let (u0, w0) = (net0.u.clone(), net0.w.clone());
    let mut learner = build_learner(spec.kind, net0, cfg.alpha, spec.eta_or(cfg.eta), &cfg.hyper)?;
    let mut examples = ExampleStream::new(cfg, seed, data)?;
    let total = cfg.total_examples();
    let mut rows = Vec::with_capacity(total);
    let mut diverged_at = None;

    while let Some(ex) = examples.next_example()? {
        let net = learner.network();
        let u_drift = drift_norm(&net.u, &u0)?;
        let w_drift = drift_norm(&net.w, &w0)?;
        match learner.step(&ex.x, Target::Vector(&ex.target)) {
            Ok(out) => rows.push(MetricsRow {
                seed,
                example: rows.len(),
                task: ex.task,
                error: out.error,
                u_drift,
                w_drift,
            }),
            Err(Error::Divergence { step }) => {
                diverged_at = Some(step);
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let net = learner.network().clone();
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let summary = RunSummary {
        optimizer: spec.label(cfg.eta),
        seed,
        bin_width: cfg.bin_width,
        curve: bin_errors(&errors, total, cfg.bin_width),
        final_u_drift: drift_norm(&net.u, &u0)?,
        final_w_drift: drift_norm(&net.w, &w0)?,
        diverged_at,
        duration_secs: started.elapsed().as_secs_f64(),
    };
    Ok(RunResult {
        label: spec.label(cfg.eta),
        spec,
        seed,
        rows,
        summary,
        network: net,
        targets: examples.targets().to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Ordered by optimizer (config order), then seed (config order).
    pub runs: Vec<RunResult>,
}

impl ExperimentResult {
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.label) {
                out.push(r.label.clone());
            }
        }
        out
    }

    pub fn runs_for<'s>(&'s self, label: &'s str) -> impl Iterator<Item = &'s RunResult> + 's {
        self.runs.iter().filter(move |r| r.label == label)
    }

    pub fn aggregate(&self, label: &str) -> Result<AggregateCurve> {
        let summaries: Vec<RunSummary> = self.runs_for(label).map(|r| r.summary.clone()).collect();
        aggregate_runs(&summaries)
    }

    pub fn any_diverged(&self) -> bool {
        self.runs.iter().any(|r| r.summary.diverged())
    }
}

/// Run every (optimizer, seed) pair, using up to `parallel` threads. The
/// result order, and therefore every output byte, is independent of `parallel`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    data: Option<&MnistData>,
    parallel: usize,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let jobs: Vec<(OptimizerSpec, u64)> = cfg
        .optimizers
        .iter()
        .flat_map(|&spec| cfg.seeds.iter().map(move |&seed| (spec, seed)))
        .collect();
    let runs = if parallel <= 1 {
        jobs.iter()
            .map(|&(spec, seed)| run_single(cfg, spec, seed, data))
            .collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            jobs.par_iter()
                .map(|&(spec, seed)| run_single(cfg, spec, seed, data))
                .collect::<Result<Vec<_>>>()
        })?
    };
    Ok(ExperimentResult { runs })
}
