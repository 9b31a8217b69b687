//! The `crossprop` command line.
//!
//! Exit codes: 0 success, 1 gradient check failed, 2 configuration error,
//! 3 data or parse error, 4 an optimizer diverged, 5 could not write output.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::error::{Error, Result};
use crate::harness::gradcheck::{grad_check, CorruptedSlope, DEFAULT_EPSILON, TOLERANCE};
use crate::harness::{
    export_features, run_experiment, run_single, write_experiment, write_features_csv,
    ExperimentConfig, MnistData, OptimizerSpec, Problem, KEYS,
};
use crate::net::{ActivationKind, Loss, NetShape};
use crate::rng::{stream, Stream};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GRAD_CHECK: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;
pub const EXIT_OUTPUT: i32 = 5;

pub const OUT_DIR_ENV: &str = "CROSSPROP_OUT_DIR";

/// Largest layer width accepted by `grad-check`.
pub const GRAD_CHECK_MAX_WIDTH: usize = 32;

/// Config files shipped with the crate, usable by name with `--config`.
pub const BUNDLED_CONFIGS: &[(&str, &str)] = &[
    ("paper-geoff", include_str!("../configs/paper-geoff.conf")),
    ("paper-mnist", include_str!("../configs/paper-mnist.conf")),
    ("mnist-scaled", include_str!("../configs/mnist-scaled.conf")),
    ("geoff-quick", include_str!("../configs/geoff-quick.conf")),
];

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED_CONFIGS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Failure together with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

fn fail(code: i32) -> impl FnOnce(Error) -> CliError {
    move |error| CliError { code, error }
}

fn config_err(error: Error) -> CliError {
    let code = match error {
        Error::Parse { .. } | Error::Io { .. } => EXIT_DATA,
        _ => EXIT_CONFIG,
    };
    CliError { code, error }
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn key_args(defaults: &ExperimentConfig) -> Vec<Arg> {
    KEYS.iter()
        .map(|(key, help)| {
            let default = defaults.get(key).unwrap_or_default();
            let default = if default.is_empty() { "none".to_string() } else { default };
            let mut arg = Arg::new(*key)
                .long(flag_name(key))
                .value_name("VALUE")
                .help(format!("{help} [default: {default}]"))
                .help_heading("Config keys (override the config file)");
            if *key == "mnist_images" {
                arg = arg.visible_alias("images");
            }
            if *key == "mnist_labels" {
                arg = arg.visible_alias("labels");
            }
            arg
        })
        .collect()
}

fn run_args(defaults: &ExperimentConfig) -> Vec<Arg> {
    let mut args = vec![
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .help(format!(
                "config file, or a bundled config name ({})",
                BUNDLED_CONFIGS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            )),
        Arg::new("out")
            .long("out")
            .value_name("DIR")
            .env(OUT_DIR_ENV)
            .default_value("results")
            .value_parser(clap::value_parser!(PathBuf))
            .help("output directory"),
        Arg::new("parallel")
            .long("parallel")
            .value_name("N")
            .default_value("1")
            .value_parser(clap::value_parser!(usize))
            .help("maximum number of runs executed concurrently; results do not depend on it"),
    ];
    args.extend(key_args(defaults));
    args
}

pub fn command() -> Command {
    let geoff = ExperimentConfig::paper_geoff();
    let mnist = ExperimentConfig::paper_mnist();
    Command::new("crossprop")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Crossprop and backprop-family learners on continual GEOFF and MNIST tasks")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .after_help(
            "Exit codes: 0 ok, 1 grad-check failed, 2 config error, 3 data/parse error, \
             4 divergence, 5 output error",
        )
        .subcommand(
            Command::new("run-geoff")
                .about("Run the GEOFF continual-learning experiment")
                .args(run_args(&geoff)),
        )
        .subcommand(
            Command::new("run-mnist")
                .about("Run the label-shifted MNIST continual-learning experiment")
                .args(run_args(&mnist)),
        )
        .subcommand(
            Command::new("grad-check")
                .about("Compare backprop gradients with central finite differences")
                .arg(shape_arg("inputs"))
                .arg(shape_arg("hidden"))
                .arg(shape_arg("outputs"))
                .arg(
                    Arg::new("activation")
                        .long("activation")
                        .value_parser(["tanh", "logistic", "all"])
                        .default_value("all"),
                )
                .arg(
                    Arg::new("loss")
                        .long("loss")
                        .value_parser(["squared", "cross_entropy", "all"])
                        .default_value("all"),
                )
                .arg(
                    Arg::new("trials")
                        .long("trials")
                        .value_parser(clap::value_parser!(usize))
                        .default_value("20")
                        .help("random instances per activation/loss pair"),
                )
                .arg(
                    Arg::new("epsilon")
                        .long("epsilon")
                        .value_parser(clap::value_parser!(f64))
                        .default_value(DEFAULT_EPSILON.to_string())
                        .help("finite-difference step"),
                )
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_parser(clap::value_parser!(u64))
                        .default_value("0"),
                )
                .arg(
                    Arg::new("corrupt-derivative")
                        .long("corrupt-derivative")
                        .action(ArgAction::SetTrue)
                        .hide(true),
                ),
        )
        .subcommand(
            Command::new("export-features")
                .about("Train one learner through the schedule and export hidden activations as CSV")
                .args(run_args(&geoff))
                .arg(
                    Arg::new("optimizer")
                        .long("optimizer")
                        .value_name("SPEC")
                        .help("optimizer to train [default: first entry of `optimizers`]"),
                )
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_parser(clap::value_parser!(u64))
                        .help("run seed [default: first entry of `seeds`]"),
                )
                .arg(
                    Arg::new("samples")
                        .long("samples")
                        .value_parser(clap::value_parser!(usize))
                        .default_value("2500")
                        .help("examples drawn uniformly for the export"),
                ),
        )
        .subcommand(
            Command::new("gen-config")
                .about("Print a complete config file")
                .arg(
                    Arg::new("preset")
                        .long("preset")
                        .value_parser(BUNDLED_CONFIGS.iter().map(|(n, _)| *n).collect::<Vec<_>>())
                        .default_value("paper-geoff"),
                )
                .arg(
                    Arg::new("output")
                        .long("output")
                        .value_name("FILE")
                        .value_parser(clap::value_parser!(PathBuf))
                        .help("write to FILE instead of stdout"),
                )
                .args(key_args(&geoff)),
        )
}

fn shape_arg(name: &'static str) -> Arg {
    Arg::new(name)
        .long(name)
        .value_parser(clap::value_parser!(usize))
        .help(format!("fixed {name} width (1..={GRAD_CHECK_MAX_WIDTH}) [default: random in 1..=8 per trial]"))
}

/// Build the effective config: preset < config file < flags.
pub fn resolve_config(m: &ArgMatches, forced: Option<Problem>) -> Result<ExperimentConfig> {
    let text = match m.get_one::<String>("config") {
        None => None,
        Some(c) => Some(read_config_text(c)?),
    };
    let mut cfg = match (&text, forced) {
        (Some(t), _) => ExperimentConfig::from_text(t)?,
        (None, Some(p)) => ExperimentConfig::preset(p),
        (None, None) => ExperimentConfig::paper_geoff(),
    };
    if let Some(v) = m.get_one::<String>("problem") {
        let mut probe = cfg.clone();
        probe.set("problem", v)?;
        if probe.problem != cfg.problem {
            cfg = ExperimentConfig::preset(probe.problem);
            if let Some(t) = &text {
                cfg.apply_text(t)?;
            }
            cfg.problem = probe.problem;
        }
    }
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    if let Some(p) = forced {
        if cfg.problem != p {
            return Err(Error::Config(format!(
                "config is for problem `{}`, this subcommand runs `{}`",
                cfg.get("problem").unwrap_or_default(),
                if p == Problem::Geoff { "geoff" } else { "mnist" }
            )));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_config_text(name: &str) -> Result<String> {
    let path = Path::new(name);
    if !path.exists() {
        if let Some(text) = bundled_config(name) {
            return Ok(text.to_string());
        }
    }
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read config {name}: {e}")))
}

fn load_mnist(cfg: &ExperimentConfig) -> std::result::Result<Option<MnistData>, CliError> {
    if cfg.problem != Problem::Mnist {
        return Ok(None);
    }
    let (Some(images), Some(labels)) = (&cfg.mnist_images, &cfg.mnist_labels) else {
        return Err(CliError {
            code: EXIT_CONFIG,
            error: Error::Config("mnist_images and mnist_labels must be set".into()),
        });
    };
    MnistData::load(images, labels, cfg.mnist_limit).map(Some).map_err(fail(EXIT_DATA))
}

fn cmd_run(m: &ArgMatches, problem: Problem) -> std::result::Result<i32, CliError> {
    let cfg = resolve_config(m, Some(problem)).map_err(config_err)?;
    let out = m.get_one::<PathBuf>("out").expect("defaulted");
    let parallel = *m.get_one::<usize>("parallel").expect("defaulted");
    let data = load_mnist(&cfg)?;
    let result = run_experiment(&cfg, data.as_ref(), parallel).map_err(config_err)?;
    for r in &result.runs {
        eprintln!(
            "{} seed {}: {} examples, final u_drift {:.6}, w_drift {:.6}, {:.2}s{}",
            r.label,
            r.seed,
            r.rows.len(),
            r.summary.final_u_drift,
            r.summary.final_w_drift,
            r.summary.duration_secs,
            r.summary.diverged_at.map_or(String::new(), |s| format!(", DIVERGED at step {s}")),
        );
    }
    let written = write_experiment(out, &cfg, &result).map_err(fail(EXIT_OUTPUT))?;
    eprintln!("wrote {} files to {}", written.len(), out.display());
    if result.any_diverged() {
        eprintln!("error: at least one optimizer diverged; partial metrics were written");
        return Ok(EXIT_DIVERGED);
    }
    Ok(EXIT_OK)
}

fn cmd_grad_check(m: &ArgMatches) -> std::result::Result<i32, CliError> {
    let trials = *m.get_one::<usize>("trials").expect("defaulted");
    let epsilon = *m.get_one::<f64>("epsilon").expect("defaulted");
    let seed = *m.get_one::<u64>("seed").expect("defaulted");
    let corrupt = m.get_flag("corrupt-derivative");
    let fixed: Vec<Option<usize>> = ["inputs", "hidden", "outputs"]
        .iter()
        .map(|k| m.get_one::<usize>(k).copied())
        .collect();
    for (k, v) in ["inputs", "hidden", "outputs"].iter().zip(&fixed) {
        if let Some(v) = v {
            if *v == 0 || *v > GRAD_CHECK_MAX_WIDTH {
                return Err(CliError {
                    code: EXIT_CONFIG,
                    error: Error::Config(format!("--{k} must be in 1..={GRAD_CHECK_MAX_WIDTH}")),
                });
            }
        }
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(CliError {
            code: EXIT_CONFIG,
            error: Error::Config("--epsilon must be positive".into()),
        });
    }
    let acts: Vec<ActivationKind> = match m.get_one::<String>("activation").unwrap().as_str() {
        "all" => vec![ActivationKind::Tanh, ActivationKind::Logistic],
        a => vec![a.parse().map_err(fail(EXIT_CONFIG))?],
    };
    let losses: Vec<Loss> = match m.get_one::<String>("loss").unwrap().as_str() {
        "all" => vec![Loss::Squared, Loss::CrossEntropy],
        l => vec![l.parse().map_err(fail(EXIT_CONFIG))?],
    };
    if trials == 0 {
        eprintln!("warning: --trials 0, nothing to check");
        return Ok(EXIT_OK);
    }
    use rand::Rng;
    let mut rng = stream(seed, Stream::Probe);
    let mut worst: f64 = 0.0;
    for &act in &acts {
        for &loss in &losses {
            for t in 0..trials {
                let mut dim = |i: usize| fixed[i].unwrap_or_else(|| rng.random_range(1..=8));
                let (a, b, c) = (dim(0), dim(1), dim(2));
                let shape = NetShape::new(a, b, c).map_err(fail(EXIT_CONFIG))?;
                let err = if corrupt {
                    grad_check(shape, &CorruptedSlope(act), loss, epsilon, &mut rng)
                } else {
                    grad_check(shape, &act, loss, epsilon, &mut rng)
                }
                .map_err(fail(EXIT_CONFIG))?;
                worst = worst.max(err);
                println!(
                    "{act} {loss} trial {t} shape {a}-{b}-{c}: max relative error {err:.3e} {}",
                    if err <= TOLERANCE { "ok" } else { "FAIL" }
                );
            }
        }
    }
    let ok = worst <= TOLERANCE;
    println!(
        "max relative error {worst:.3e} (tolerance {TOLERANCE:e}): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    Ok(if ok { EXIT_OK } else { EXIT_GRAD_CHECK })
}

fn cmd_export(m: &ArgMatches) -> std::result::Result<i32, CliError> {
    let cfg = resolve_config(m, None).map_err(config_err)?;
    let out = m.get_one::<PathBuf>("out").expect("defaulted");
    let samples = *m.get_one::<usize>("samples").expect("defaulted");
    let spec: OptimizerSpec = match m.get_one::<String>("optimizer") {
        Some(s) => s.parse().map_err(fail(EXIT_CONFIG))?,
        None => cfg.optimizers[0],
    };
    let seed = m.get_one::<u64>("seed").copied().unwrap_or(cfg.seeds[0]);
    let data = load_mnist(&cfg)?;
    let run = run_single(&cfg, spec, seed, data.as_ref()).map_err(config_err)?;
    if let Some(step) = run.summary.diverged_at {
        eprintln!("error: {} diverged at step {step}", run.label);
        return Ok(EXIT_DIVERGED);
    }

    use rand::Rng;
    let mut rng = stream(seed, Stream::Probe);
    let (xs, labels): (Vec<Vec<f64>>, Option<Vec<usize>>) = match &data {
        Some(d) => {
            let idx: Vec<usize> = (0..samples).map(|_| rng.random_range(0..d.len())).collect();
            (
                idx.iter().map(|&i| d.images.image(i)).collect(),
                Some(idx.iter().map(|&i| d.labels.get(i)).collect()),
            )
        }
        None => {
            let target = &run
                .targets
                .last()
                .ok_or_else(|| CliError {
                    code: EXIT_CONFIG,
                    error: Error::Config("empty schedule".into()),
                })?
                .1;
            let mut noise = stream(seed, Stream::Noise);
            let xs = (0..samples)
                .map(|_| crate::geoff::sample_example(target, &mut rng, &mut noise, 0.0).x)
                .collect();
            (xs, None)
        }
    };
    let features = export_features(&run.network, xs.iter().map(|x| x.as_slice())).map_err(config_err)?;
    let mut buf = Vec::new();
    write_features_csv(&mut buf, &features, labels.as_deref()).map_err(fail(EXIT_OUTPUT))?;
    let path = out.join(format!("features_{}_seed_{seed}.csv", run.label));
    write_atomic(&path, &buf).map_err(fail(EXIT_OUTPUT))?;
    eprintln!("wrote {} × {} features to {}", features.rows(), features.cols(), path.display());
    Ok(EXIT_OK)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn cmd_gen_config(m: &ArgMatches) -> std::result::Result<i32, CliError> {
    let preset = m.get_one::<String>("preset").expect("defaulted");
    let mut cfg = ExperimentConfig::from_text(bundled_config(preset).expect("validated by clap"))
        .map_err(config_err)?;
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v).map_err(config_err)?;
        }
    }
    let text = cfg.to_text();
    match m.get_one::<PathBuf>("output") {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError {
            code: EXIT_OUTPUT,
            error: Error::io(p, e),
        })?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

/// Run the CLI on explicit arguments and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match matches.subcommand() {
        Some(("run-geoff", m)) => cmd_run(m, Problem::Geoff),
        Some(("run-mnist", m)) => cmd_run(m, Problem::Mnist),
        Some(("grad-check", m)) => cmd_grad_check(m),
        Some(("export-features", m)) => cmd_export(m),
        Some(("gen-config", m)) => cmd_gen_config(m),
        _ => unreachable!("subcommand required"),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError { code, error }) => {
            eprintln!("error: {error}");
            code
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        command().debug_assert();
    }

    #[test]
    fn bundled_configs_parse_and_validate() {
        for (name, text) in BUNDLED_CONFIGS {
            let cfg = ExperimentConfig::from_text(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert_eq!(
            ExperimentConfig::from_text(bundled_config("paper-geoff").unwrap()).unwrap(),
            ExperimentConfig::paper_geoff()
        );
        assert_eq!(
            ExperimentConfig::from_text(bundled_config("paper-mnist").unwrap()).unwrap(),
            ExperimentConfig::paper_mnist()
        );
    }

    #[test]
    fn precedence_is_flags_over_file_over_preset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "alpha = 0.01\nhidden = 7\n").unwrap();
        let m = command()
            .try_get_matches_from([
                "crossprop",
                "run-geoff",
                "--config",
                path.to_str().unwrap(),
                "--hidden",
                "9",
            ])
            .unwrap();
        let cfg = resolve_config(m.subcommand_matches("run-geoff").unwrap(), Some(Problem::Geoff)).unwrap();
        assert_eq!((cfg.alpha, cfg.hidden, cfg.inputs), (0.01, 9, 20));
    }

    #[test]
    fn problem_mismatch_is_a_config_error() {
        let m = command()
            .try_get_matches_from(["crossprop", "run-geoff", "--config", "paper-mnist"])
            .unwrap();
        assert!(resolve_config(m.subcommand_matches("run-geoff").unwrap(), Some(Problem::Geoff)).is_err());
    }

    #[test]
    fn grad_check_exit_codes() {
        assert_eq!(run(["crossprop", "grad-check", "--trials", "3"]), EXIT_OK);
        assert_eq!(run(["crossprop", "grad-check", "--trials", "0"]), EXIT_OK);
        assert_eq!(
            run(["crossprop", "grad-check", "--trials", "2", "--corrupt-derivative"]),
            EXIT_GRAD_CHECK
        );
        assert_eq!(run(["crossprop", "grad-check", "--inputs", "0"]), EXIT_CONFIG);
    }
}
