use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use gsdlab::data::Dataset;
use gsdlab::gep::{gep_train, trace_csv, GepConfig};
use gsdlab::gsd::{gsd, DEFAULT_K};
use gsdlab::harness::{run_experiment, ExperimentConfig};
use gsdlab::models::{init_model, zero_model, Batch, ModelParams, ModelSpec};
use gsdlab::privacy::{dp_gsd, PrivacyParams};
use gsdlab::synth::{write_task, SynthSpec};

/// Gradient subspace distance, its private variant, and GEP training.
#[derive(Parser)]
#[command(name = "gsdlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct PairArgs {
    /// Model spec (JSON).
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    private: PathBuf,
    #[arg(long)]
    public: PathBuf,
    /// Seed for the starting weights of non-convex models (convex models start at zero).
    #[arg(long, default_value_t = 0)]
    init_seed: u64,
    /// Replace labels of both batches by uniformly random ones.
    #[arg(long)]
    random_labels: bool,
    /// Show the raw distance in `distance` instead of the normalized one.
    #[arg(long)]
    raw: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two datasets' gradient subspaces.
    Gsd {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
    },
    /// Differentially private distance (k = 1).
    DpGsd {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        clip: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Private training with gradient embedding perturbation.
    GepTrain {
        /// JSON with `model`, `gep` and `privacy` sections.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        private: PathBuf,
        #[arg(long)]
        public: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Trace CSV; defaults to `<out stem>.trace.csv`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Synthetic task generation.
    Synth {
        #[command(subcommand)]
        action: SynthAction,
    },
    /// Run an experiment config; exit code 1 when a check fails.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Report path; falls back to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SynthAction {
    /// Write train/test/public CSVs and a manifest.
    Make {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GepTrainConfig {
    model: ModelSpec,
    gep: GepConfig,
    privacy: PrivacyParams,
    #[serde(default)]
    init_seed: u64,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_dataset(path: &Path, spec: &ModelSpec) -> anyhow::Result<Dataset> {
    Dataset::read_csv(path, spec.num_classes).with_context(|| format!("reading {}", path.display()))
}

fn start_model(spec: &ModelSpec, seed: u64) -> anyhow::Result<ModelParams<f64>> {
    Ok(if spec.is_convex() { zero_model(spec)? } else { init_model(spec, seed)? })
}

struct Pair {
    model: ModelParams<f64>,
    private: Batch<f64>,
    public: Batch<f64>,
}

fn load_pair(a: &PairArgs) -> anyhow::Result<Pair> {
    let spec: ModelSpec = read_json(&a.model)?;
    spec.validate()?;
    let mut private = read_dataset(&a.private, &spec)?.as_batch();
    let mut public = read_dataset(&a.public, &spec)?.as_batch();
    if a.random_labels {
        private = private.with_random_labels(&spec, 1);
        public = public.with_random_labels(&spec, 2);
    }
    Ok(Pair { model: start_model(&spec, a.init_seed)?, private, public })
}

fn with_distance(mut v: Value, raw: bool) -> Value {
    let key = if raw { "distance_raw" } else { "distance_normalized" };
    if let Some(d) = v.get(key).cloned() {
        v["distance"] = d;
    }
    v
}

fn print_json(v: &Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Gsd { pair, k } => {
            let p = load_pair(&pair)?;
            let report = gsd(&p.private, &p.public, &p.model, k)?;
            print_json(&with_distance(serde_json::to_value(report)?, pair.raw))?;
        }
        Command::DpGsd { pair, epsilon, delta, clip, seed } => {
            let p = load_pair(&pair)?;
            let params = PrivacyParams::new(epsilon, delta, clip, 1)?;
            let report = dp_gsd(&p.private, &p.public, &p.model, &params, seed)?;
            print_json(&with_distance(serde_json::to_value(report)?, pair.raw))?;
        }
        Command::GepTrain { config, private, public, test, out, trace } => {
            let cfg: GepTrainConfig = read_json(&config)?;
            cfg.model.validate()?;
            let train = read_dataset(&private, &cfg.model)?;
            let public = read_dataset(&public, &cfg.model)?;
            let test = test.map(|t| read_dataset(&t, &cfg.model)).transpose()?;
            let model0 = start_model(&cfg.model, cfg.init_seed)?;
            let result = gep_train(&train, &public, test.as_ref(), &model0, &cfg.gep, &cfg.privacy)?;
            std::fs::write(&out, serde_json::to_string_pretty(&result)?)?;
            let trace = trace.unwrap_or_else(|| {
                let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "result".into());
                out.with_file_name(format!("{stem}.trace.csv"))
            });
            std::fs::write(&trace, trace_csv(&result.trace))?;
            let summary = serde_json::json!({
                "train": result.train_metrics,
                "test": result.test_metrics,
                "noise": result.noise,
                "max_lemma1_excess": result.max_lemma1_violation(),
            });
            print_json(&summary)?;
        }
        Command::Synth { action: SynthAction::Make { spec, out } } => {
            let spec: SynthSpec = read_json(&spec)?;
            let manifest = write_task(&spec, &out)?;
            eprintln!("wrote {} datasets to {}", manifest.datasets.len(), out.display());
        }
        Command::Experiment { config, out } => {
            let cfg = ExperimentConfig::from_file(&config).with_context(|| format!("loading {}", config.display()))?;
            let Some(out) = out.or_else(|| cfg.output.clone()) else {
                bail!("no report path: pass --out or set `output` in the config");
            };
            let report = run_experiment(&cfg)?;
            report.write(&out)?;
            for c in &report.checks {
                let status = match c.passed {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "n/a",
                };
                eprintln!("{status:4} {} = {:?} (threshold {})", c.name, c.value, c.threshold);
            }
            eprintln!("{} in {:.1}s -> {}", if report.passed { "PASSED" } else { "FAILED" }, report.wall_clock_seconds, out.display());
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
