//! Acceptance suite. Each test checks one criterion and prints a single
//! `[PASS]` / `[FAIL]` line before asserting.
//!
//! MNIST data is read from `$CROSSPROP_MNIST_DIR`, falling back to the
//! repository's `data/mnist`.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crossprop::harness::gradcheck::{grad_check, DEFAULT_EPSILON, TOLERANCE};
use crossprop::harness::{drift_norm, run_experiment, ExperimentConfig, MnistData};
use crossprop::linalg::Matrix;
use crossprop::mnist::{parse_idx_images, parse_idx_labels, ImageSet, LabelSet};
use crossprop::net::{Activation, ActivationKind, Loss, NetShape, Network, Target};
use crossprop::optim::{Baseline, BaselineRule, Crossprop, CrosspropApprox, Learner};
use crossprop::{Error, ParseErrorKind};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "[{}] criterion {id}: {name} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn pick_activation(rng: &mut ChaCha8Rng) -> ActivationKind {
    if rng.random_bool(0.5) {
        ActivationKind::Tanh
    } else {
        ActivationKind::Logistic
    }
}

#[test]
fn criterion_1_eta_one_equals_backprop() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    for _ in 0..100 {
        let (m, n) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let act = pick_activation(&mut rng);
        let net = Network::with_weights(
            act,
            Loss::Squared,
            random_matrix(&mut rng, m, n),
            random_matrix(&mut rng, n, 1),
        )
        .unwrap();
        let alpha = rng.random_range(0.001..0.5);
        let mut cp = Crossprop::new(net.clone(), alpha, 1.0).unwrap();
        let mut bp = Baseline::new(net, alpha, BaselineRule::Sgd).unwrap();
        for _ in 0..3 {
            let x = random_vec(&mut rng, m);
            let y_star = rng.random_range(-2.0..2.0);
            cp.step(&x, Target::Scalar(y_star)).unwrap();
            bp.step(&x, Target::Scalar(y_star)).unwrap();
            let (a, b) = (cp.network(), bp.network());
            for (p, q) in a
                .u
                .as_slice()
                .iter()
                .chain(a.w.as_slice())
                .zip(b.u.as_slice().iter().chain(b.w.as_slice()))
            {
                worst = worst.max((p - q).abs() / p.abs().max(q.abs()).max(f64::MIN_POSITIVE));
                compared += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12;
    report(
        1,
        "crossprop with eta=1 matches backprop",
        pass,
        &format!("100 states, {compared} parameters, max rel err {worst:.2e}, {secs:.3}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_gradient_check() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let shape = NetShape::new(
            rng.random_range(1..=8),
            rng.random_range(1..=8),
            rng.random_range(1..=8),
        )
        .unwrap();
        for act in [ActivationKind::Tanh, ActivationKind::Logistic] {
            for loss in [Loss::Squared, Loss::CrossEntropy] {
                worst = worst.max(grad_check(shape, &act, loss, DEFAULT_EPSILON, &mut rng).unwrap());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= TOLERANCE;
    report(
        2,
        "backprop gradients match central differences",
        pass,
        &format!("20 shapes x 2 activations x 2 losses, step {DEFAULT_EPSILON:e}, max rel err {worst:.2e}, {secs:.3}s"),
    );
    assert!(pass);
}

/// Straight-line crossprop step on nested vectors.
#[allow(clippy::too_many_arguments)]
fn oracle_crossprop(
    act: ActivationKind,
    u: &mut [Vec<f64>],
    w: &mut [f64],
    h: &mut [Vec<f64>],
    x: &[f64],
    y_star: f64,
    alpha: f64,
    eta: f64,
) {
    let (m, n) = (u.len(), w.len());
    let mut phi = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..m {
            s += x[i] * u[i][j];
        }
        phi[j] = act.activate(s);
    }
    let mut y = 0.0;
    for j in 0..n {
        y += phi[j] * w[j];
    }
    let delta = y_star - y;
    let u_old: Vec<Vec<f64>> = u.to_vec();
    let h_old: Vec<Vec<f64>> = h.to_vec();
    let w_old: Vec<f64> = w.to_vec();
    for i in 0..m {
        for j in 0..n {
            let d = match act {
                ActivationKind::Tanh => (1.0 - phi[j] * phi[j]) * x[i],
                ActivationKind::Logistic => phi[j] * (1.0 - phi[j]) * x[i],
            };
            u[i][j] = u_old[i][j]
                + alpha * delta * ((1.0 - eta) * phi[j] * h_old[i][j] + eta * w_old[j] * d);
            h[i][j] = h_old[i][j] * (1.0 - alpha * (1.0 - eta) * phi[j] * phi[j])
                + alpha * (delta - eta * w_old[j] * phi[j]) * d;
        }
    }
    for j in 0..n {
        w[j] = w_old[j] + alpha * delta * phi[j];
    }
}

/// Straight-line crossprop-approx step; `h` and `w` are n × k.
#[allow(clippy::too_many_arguments)]
fn oracle_approx(
    act: ActivationKind,
    loss: Loss,
    u: &mut [Vec<f64>],
    w: &mut [Vec<f64>],
    h: &mut [Vec<f64>],
    x: &[f64],
    target: &[f64],
    alpha: f64,
    eta: f64,
) {
    let (m, n, k) = (u.len(), w.len(), target.len());
    let mut phi = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..m {
            s += x[i] * u[i][j];
        }
        phi[j] = act.activate(s);
    }
    let mut z = vec![0.0; k];
    for c in 0..k {
        for j in 0..n {
            z[c] += phi[j] * w[j][c];
        }
    }
    let y: Vec<f64> = match loss {
        Loss::Squared => z,
        Loss::CrossEntropy => {
            let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = z.iter().map(|v| (v - mx).exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        }
    };
    let delta: Vec<f64> = (0..k).map(|c| target[c] - y[c]).collect();
    let u_old: Vec<Vec<f64>> = u.to_vec();
    let h_old: Vec<Vec<f64>> = h.to_vec();
    let w_old: Vec<Vec<f64>> = w.to_vec();
    for i in 0..m {
        for j in 0..n {
            let d = match act {
                ActivationKind::Tanh => (1.0 - phi[j] * phi[j]) * x[i],
                ActivationKind::Logistic => phi[j] * (1.0 - phi[j]) * x[i],
            };
            let mut sum = 0.0;
            for c in 0..k {
                sum += delta[c] * ((1.0 - eta) * phi[j] * h_old[j][c] + eta * w_old[j][c]);
            }
            u[i][j] = u_old[i][j] + alpha * sum * d;
        }
    }
    for j in 0..n {
        for c in 0..k {
            h[j][c] = h_old[j][c] * (1.0 - alpha * (1.0 - eta) * phi[j] * phi[j])
                + alpha * (delta[c] - eta * w_old[j][c] * phi[j]);
            w[j][c] = w_old[j][c] + alpha * delta[c] * phi[j];
        }
    }
}

fn nested(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn matches(actual: &Matrix, expected: &[Vec<f64>], worst: &mut f64) -> bool {
    let mut ok = true;
    for (r, row) in expected.iter().enumerate() {
        for (c, &e) in row.iter().enumerate() {
            let a = actual.get(r, c);
            *worst = worst.max((a - e).abs() / a.abs().max(e.abs()).max(1.0));
            ok &= close(a, e, 1e-12);
        }
    }
    ok
}

#[test]
fn criterion_3_single_step_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..50 {
        let (m, n) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let act = pick_activation(&mut rng);
        let alpha = rng.random_range(0.01..0.5);
        let eta = [0.0, 0.5, 1.0, rng.random_range(0.0..1.0)][rng.random_range(0..4)];

        let u0 = random_matrix(&mut rng, m, n);
        let w0 = random_matrix(&mut rng, n, 1);
        let mut cp = Crossprop::new(
            Network::with_weights(act, Loss::Squared, u0.clone(), w0.clone()).unwrap(),
            alpha,
            eta,
        )
        .unwrap();
        let (mut u, mut h) = (nested(&u0), vec![vec![0.0; n]; m]);
        let mut w: Vec<f64> = w0.as_slice().to_vec();
        for _ in 0..3 {
            let x = random_vec(&mut rng, m);
            let y_star = rng.random_range(-2.0..2.0);
            cp.step(&x, Target::Scalar(y_star)).unwrap();
            oracle_crossprop(act, &mut u, &mut w, &mut h, &x, y_star, alpha, eta);
            ok &= matches(&cp.network().u, &u, &mut worst);
            ok &= matches(&cp.network().w, &w.iter().map(|&v| vec![v]).collect::<Vec<_>>(), &mut worst);
            ok &= matches(cp.trace(), &h, &mut worst);
        }

        let k = rng.random_range(1..=4);
        let loss = if rng.random_bool(0.5) { Loss::Squared } else { Loss::CrossEntropy };
        let u0 = random_matrix(&mut rng, m, n);
        let w0 = random_matrix(&mut rng, n, k);
        let mut ap = CrosspropApprox::new(
            Network::with_weights(act, loss, u0.clone(), w0.clone()).unwrap(),
            alpha,
            eta,
        )
        .unwrap();
        let (mut u, mut w, mut h) = (nested(&u0), nested(&w0), vec![vec![0.0; k]; n]);
        for _ in 0..3 {
            let x = random_vec(&mut rng, m);
            let target: Vec<f64> = match loss {
                Loss::Squared => random_vec(&mut rng, k),
                Loss::CrossEntropy => {
                    let c = rng.random_range(0..k);
                    (0..k).map(|i| if i == c { 1.0 } else { 0.0 }).collect()
                }
            };
            ap.step(&x, Target::Vector(&target)).unwrap();
            oracle_approx(act, loss, &mut u, &mut w, &mut h, &x, &target, alpha, eta);
            ok &= matches(&ap.network().u, &u, &mut worst);
            ok &= matches(&ap.network().w, &w, &mut worst);
            ok &= matches(ap.trace(), &h, &mut worst);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        3,
        "crossprop and crossprop-approx match straight-line transcriptions",
        ok,
        &format!("50 instances x 3 steps each, max rel err {worst:.2e}, {secs:.3}s"),
    );
    assert!(ok);
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn criterion_4_geoff_qualitative() {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::paper_geoff();
    cfg.seeds = (0..10).collect();
    let result = run_experiment(&cfg, None, 1).unwrap();
    let per_task = cfg.schedule[0].examples / cfg.bin_width;

    let mut a_ok = true;
    let mut a_detail = Vec::new();
    for label in result.labels() {
        let curve = result.aggregate(&label).unwrap();
        for (t, task) in cfg.schedule.iter().enumerate() {
            let first = curve.mean[t * per_task];
            let last = curve.mean[(t + 1) * per_task - 1];
            if last.partial_cmp(&first) != Some(std::cmp::Ordering::Less) {
                a_ok = false;
                a_detail.push(format!("{label} task {}: {first:.2} -> {last:.2}", task.id));
            }
        }
    }

    let u_increase = |label: &str| -> f64 {
        let v: Vec<f64> = result
            .runs_for(label)
            .map(|r| r.summary.final_u_drift - r.rows[5000].u_drift)
            .collect();
        mean(&v)
    };
    let final_w = |label: &str| -> f64 {
        let v: Vec<f64> = result.runs_for(label).map(|r| r.summary.final_w_drift).collect();
        mean(&v)
    };
    let (cp_du, bp_du) = (u_increase("crossprop_eta0"), u_increase("backprop"));
    let (cp_w, bp_w) = (final_w("crossprop_eta0"), final_w("backprop"));
    let b_ok = cp_du < bp_du;
    let c_ok = cp_w > bp_w;
    let secs = start.elapsed().as_secs_f64();

    report(
        4,
        "(a) every optimizer's error falls within each task",
        a_ok,
        &if a_ok {
            format!("{} optimizers x 3 tasks, 10 seeds", result.labels().len())
        } else {
            a_detail.join("; ")
        },
    );
    report(
        4,
        "(b) crossprop changes U less than backprop after example 5000",
        b_ok,
        &format!("mean u_drift increase crossprop_eta0 {cp_du:.4}, backprop {bp_du:.4}"),
    );
    report(
        4,
        "(c) crossprop changes W more than backprop",
        c_ok,
        &format!("mean final w_drift crossprop_eta0 {cp_w:.4}, backprop {bp_w:.4}; {secs:.1}s total"),
    );
    println!(
        "note: criterion 4 (not gated): crossprop_eta0.5 mean u_drift increase {:.4}, mean final w_drift {:.4}",
        u_increase("crossprop_eta0.5"),
        final_w("crossprop_eta0.5")
    );
    assert!(!result.any_diverged(), "a GEOFF run diverged");
    assert!(a_ok && b_ok && c_ok, "criterion 4 failed");
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("CROSSPROP_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

#[test]
fn criterion_5_mnist_scaled() {
    let start = Instant::now();
    let dir = mnist_dir();
    let data = MnistData::load(
        &dir.join("train-images-idx3-ubyte.gz"),
        &dir.join("train-labels-idx1-ubyte.gz"),
        None,
    )
    .unwrap_or_else(|e| panic!("MNIST data in {}: {e}", dir.display()));
    let cfg = ExperimentConfig::from_text(crossprop::cli::bundled_config("mnist-scaled").unwrap()).unwrap();
    assert_eq!((cfg.inputs, cfg.hidden, cfg.outputs), (784, 128, 10));
    assert_eq!(cfg.alpha, 0.0005);
    assert_eq!(cfg.label_shifts, vec![0, 1, 2]);
    assert!(cfg.schedule.iter().all(|t| t.examples == 2000));

    let result = run_experiment(&cfg, Some(&data), 1).unwrap();
    let per_task = cfg.schedule[0].examples / cfg.bin_width;
    let mut ok = !result.any_diverged();
    let mut detail = Vec::new();
    for label in result.labels() {
        let curve = result.aggregate(&label).unwrap();
        let (first, last) = (curve.mean[0], curve.mean[per_task - 1]);
        ok &= last < first;
        detail.push(format!("{label} {first:.3}->{last:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        5,
        "MNIST 784-128-10 label-shift runs finish and learn task A",
        ok,
        &format!("{} examples available; task A first->last bin: {}; {secs:.1}s", data.len(), detail.join(", ")),
    );
    assert!(ok);
}

#[test]
fn criterion_6_drift_identities() {
    let u0 = Matrix::from_fn(20, 5, |r, c| (r * 5 + c) as f64 * 0.01 - 0.3);
    let zero = drift_norm(&u0, &u0).unwrap();
    let threes = drift_norm(
        &Matrix::from_vec(2, 2, vec![3.0; 4]).unwrap(),
        &Matrix::zeros(2, 2),
    )
    .unwrap();
    let pass = zero == 0.0 && threes == 6.0;
    report(6, "drift norm identities", pass, &format!("|U0-U0| = {zero}, 2x2 of threes = {threes}"));
    assert!(pass);
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_crossprop"))
        .args(args)
        .output()
        .expect("spawn crossprop")
}

fn csv_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_7_determinism() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (name, parallel) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let dir = tmp.path().join(name);
        let out = run_cli(&[
            "run-geoff",
            "--config",
            "geoff-quick",
            "--out",
            dir.to_str().unwrap(),
            "--parallel",
            parallel,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(csv_files(&dir));
    }
    let files = outputs[0].len();
    let pass = files > 0 && outputs[0] == outputs[1] && outputs[0] == outputs[2];
    let secs = start.elapsed().as_secs_f64();
    report(
        7,
        "run-geoff output is byte-identical across runs and --parallel 4",
        pass,
        &format!("{files} CSV files compared, {secs:.1}s"),
    );
    assert!(pass);
}

fn parse_kind(e: Error) -> Option<(usize, ParseErrorKind)> {
    match e {
        Error::Parse { offset, kind } => Some((offset, kind)),
        _ => None,
    }
}

#[test]
fn criterion_8_idx_parsing() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let count = 5;
    let images = ImageSet::from_bytes(count, (0..count * 784).map(|_| rng.random()).collect()).unwrap();
    let labels = LabelSet::new((0..count).map(|_| rng.random_range(0..10)).collect()).unwrap();
    let (img_bytes, lbl_bytes) = (images.to_idx(), labels.to_idx());
    let mut failures = Vec::new();

    if parse_idx_images(&img_bytes).unwrap() != images {
        failures.push("image round trip".to_string());
    }
    if parse_idx_labels(&lbl_bytes).unwrap() != labels {
        failures.push("label round trip".to_string());
    }

    for cut in 0..img_bytes.len() {
        match parse_idx_images(&img_bytes[..cut]).map_err(parse_kind) {
            Err(Some((_, ParseErrorKind::Truncated { needed, available })))
                if needed > available => {}
            other => {
                failures.push(format!("image prefix {cut}: {other:?}"));
                break;
            }
        }
    }
    for cut in 0..lbl_bytes.len() {
        match parse_idx_labels(&lbl_bytes[..cut]).map_err(parse_kind) {
            Err(Some((_, ParseErrorKind::Truncated { .. }))) => {}
            other => failures.push(format!("label prefix {cut}: {other:?}")),
        }
    }

    let mut bad = img_bytes.clone();
    bad[3] = 0x01;
    if !matches!(
        parse_idx_images(&bad).map_err(parse_kind),
        Err(Some((0, ParseErrorKind::BadMagic { expected: 2051, found: 0x0801 })))
    ) {
        failures.push("image bad magic".into());
    }
    if !matches!(
        parse_idx_labels(&img_bytes).map_err(parse_kind),
        Err(Some((0, ParseErrorKind::BadMagic { expected: 2049, .. })))
    ) {
        failures.push("label bad magic".into());
    }
    let mut dims = img_bytes.clone();
    dims[11] = 27;
    if !matches!(
        parse_idx_images(&dims).map_err(parse_kind),
        Err(Some((8, ParseErrorKind::BadDimensions { rows: 27, cols: 28 })))
    ) {
        failures.push("bad dimensions".into());
    }
    let mut range = lbl_bytes.clone();
    range[10] = 10;
    if !matches!(
        parse_idx_labels(&range).map_err(parse_kind),
        Err(Some((10, ParseErrorKind::LabelOutOfRange { label: 10 })))
    ) {
        failures.push("label out of range".into());
    }
    let mut extra = lbl_bytes.clone();
    extra.push(0);
    if !matches!(
        parse_idx_labels(&extra).map_err(parse_kind),
        Err(Some((_, ParseErrorKind::TrailingBytes { extra: 1 })))
    ) {
        failures.push("trailing bytes".into());
    }

    let pass = failures.is_empty();
    report(
        8,
        "IDX round trip and structured errors for malformed input",
        pass,
        &if pass {
            format!("{} image and {} label prefixes rejected", img_bytes.len(), lbl_bytes.len())
        } else {
            failures.join("; ")
        },
    );
    assert!(pass);
}
