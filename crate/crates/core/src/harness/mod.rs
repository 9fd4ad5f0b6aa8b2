//! Experiment runner: configs in, JSON reports with pass/fail checks out.
//!
//! Seeds run in parallel on a rayon pool whose size can be capped with the
//! `GSDLAB_THREADS` environment variable. Per-seed results are collected in
//! seed order, so reports do not depend on the worker count.

mod experiments;
pub mod spiked;
pub mod stats;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gep::GepConfig;
use crate::models::ModelSpec;
use crate::privacy::PrivacyParams;
use crate::synth::{ShiftKind, ShiftSpec, TaskSpec};

pub use experiments::{
    run_dpgsd_closeness, run_dppca_utility, run_lemma1_audit, run_monotonicity, run_ordering_stability, run_spectrum,
};
pub use spiked::Spike;

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "GSDLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Monotonicity,
    OrderingStability,
    Lemma1Audit,
    Spectrum,
    DppcaUtility,
    DpgsdCloseness,
}

/// Knobs that only some experiments read; each has a default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentOptions {
    /// Model to train or differentiate; logistic/softmax regression by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    /// Subspace dimension for distances and spectra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<usize>,
    /// Random instances per seed for the bound audit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample_sizes: Vec<usize>,
    /// Ambient dimension of planted-spectrum gradients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spike: Option<Spike>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Angle between private and public top directions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub public_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub public_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shifts: Vec<ShiftSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gep: Option<GepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy: Option<PrivacyParams>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub options: ExperimentOptions,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{:?} experiment needs `{what}`", self.experiment)))
            }
        };
        match self.experiment {
            ExperimentKind::Monotonicity => {
                need(self.task.is_some(), "task")?;
                need(self.gep.is_some(), "gep")?;
                need(self.privacy.is_some(), "privacy")?;
                need(!self.shifts.is_empty(), "shifts")?;
            }
            ExperimentKind::OrderingStability => {
                need(self.task.is_some(), "task")?;
                need(self.shifts.len() >= 2, "shifts (at least two)")?;
            }
            ExperimentKind::Spectrum => need(self.task.is_some(), "task")?,
            ExperimentKind::Lemma1Audit => {
                if self.gep.is_some() {
                    need(self.task.is_some(), "task")?;
                    need(self.privacy.is_some(), "privacy")?;
                }
            }
            ExperimentKind::DppcaUtility | ExperimentKind::DpgsdCloseness => need(self.privacy.is_some(), "privacy")?,
        }
        if let Some(t) = &self.task {
            t.validate()?;
        }
        if let Some(g) = &self.gep {
            g.validate()?;
        }
        if let Some(p) = &self.privacy {
            p.validate()?;
        }
        self.shifts.iter().try_for_each(|s| s.validate())
    }

    /// Shifts in canonical order: by kind, then magnitude.
    pub fn sorted_shifts(&self) -> Vec<ShiftSpec> {
        let mut s = self.shifts.clone();
        s.sort_by(|a, b| kind_rank(a.kind).cmp(&kind_rank(b.kind)).then(a.magnitude.total_cmp(&b.magnitude)));
        s
    }

    pub(crate) fn model_for(&self, task: &TaskSpec) -> ModelSpec {
        self.options.model.clone().unwrap_or_else(|| {
            if task.num_classes == 2 {
                ModelSpec::logistic(task.input_dim)
            } else {
                ModelSpec::softmax(task.input_dim, task.num_classes)
            }
        })
    }
}

fn kind_rank(k: ShiftKind) -> u8 {
    match k {
        ShiftKind::Rotation => 0,
        ShiftKind::LabelFlip => 1,
        ShiftKind::FeatureMask => 2,
    }
}

/// Child seed for one shift, derived from its content rather than its position.
pub fn shift_seed(seed: u64, shift: &ShiftSpec) -> u64 {
    stats::derive_seed(&[seed, kind_rank(shift.kind) as u64, shift.magnitude.to_bits()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Observed value; `None` when it could not be computed.
    pub value: Option<f64>,
    pub threshold: f64,
    pub passed: Option<bool>,
}

impl Check {
    pub fn at_least(name: &str, value: Option<f64>, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value.map(|v| v >= threshold) }
    }

    pub fn at_most(name: &str, value: Option<f64>, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value.map(|v| v <= threshold) }
    }

    /// A yes/no property, reported as 1 or 0.
    pub fn holds(name: &str, ok: Option<bool>) -> Self {
        Self { name: name.into(), value: ok.map(|b| if b { 1.0 } else { 0.0 }), threshold: 1.0, passed: ok }
    }
}

/// CSV side table written next to the JSON report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub per_seed: Vec<Value>,
    pub aggregates: Value,
    pub checks: Vec<Check>,
    /// All computable checks passed and at least one check was computable.
    pub passed: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub(crate) fn new(
        config: &ExperimentConfig,
        per_seed: Vec<Value>,
        aggregates: Value,
        checks: Vec<Check>,
        warnings: Vec<String>,
        tables: Vec<Table>,
    ) -> Self {
        let evaluated: Vec<bool> = checks.iter().filter_map(|c| c.passed).collect();
        let passed = !evaluated.is_empty() && evaluated.iter().all(|&b| b);
        for w in &warnings {
            log::warn!("{w}");
        }
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: config.experiment,
            config: config.clone(),
            per_seed,
            aggregates,
            checks,
            passed,
            warnings,
            wall_clock_seconds: 0.0,
            tables,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Report JSON without the wall-clock field, for reproducibility comparisons.
    pub fn canonical_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("wall_clock_seconds");
        }
        Ok(serde_json::to_string(&v)?)
    }

    /// Writes the JSON report and one `<stem>.<table>.csv` per side table.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
        for t in &self.tables {
            std::fs::write(path.with_file_name(format!("{stem}.{}.csv", t.name)), t.to_csv())?;
        }
        Ok(())
    }
}

/// Worker count from `GSDLAB_THREADS`, or `None` to use rayon's default.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Runs `f` on a pool sized by [`thread_limit`].
pub fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Validates, dispatches and times one experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = with_thread_pool(|| match cfg.experiment {
        ExperimentKind::Monotonicity => run_monotonicity(cfg),
        ExperimentKind::OrderingStability => run_ordering_stability(cfg),
        ExperimentKind::Lemma1Audit => run_lemma1_audit(cfg),
        ExperimentKind::Spectrum => run_spectrum(cfg),
        ExperimentKind::DppcaUtility => run_dppca_utility(cfg),
        ExperimentKind::DpgsdCloseness => run_dpgsd_closeness(cfg),
    })??;
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_and_validation() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": "dppca-utility", "privacy": {"epsilon": 1, "delta": 1e-5, "clip_norm": 1}, "seeds": [1]}"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::DppcaUtility);
        assert!(ExperimentConfig::from_json(r#"{"experiment": "spectrum", "seeds": [1]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "dppca-utility", "seeds": []}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "spectrum", "seeds": [1], "bogus": 1}"#).is_err());
    }

    #[test]
    fn shift_order_and_seeds_are_canonical() {
        let mut cfg = ExperimentConfig::from_json(
            r#"{"experiment": "lemma1-audit", "seeds": [1],
                "shifts": [{"kind": "label-flip", "magnitude": 0.1}, {"kind": "rotation", "magnitude": 1.0},
                           {"kind": "rotation", "magnitude": 0.5}]}"#,
        )
        .unwrap();
        let a = cfg.sorted_shifts();
        cfg.shifts.reverse();
        assert_eq!(a, cfg.sorted_shifts());
        assert_eq!(a[0], ShiftSpec::rotation(0.5));
        assert_ne!(shift_seed(1, &a[0]), shift_seed(1, &a[1]));
    }

    #[test]
    fn pass_requires_some_evaluated_check() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "lemma1-audit", "seeds": [1]}"#).unwrap();
        let r = ExperimentReport::new(&cfg, vec![], Value::Null, vec![Check::at_least("x", None, 1.0)], vec![], vec![]);
        assert!(!r.passed);
        let r = ExperimentReport::new(&cfg, vec![], Value::Null, vec![Check::at_least("x", Some(2.0), 1.0)], vec![], vec![]);
        assert!(r.passed);
    }

    #[test]
    fn table_csv() {
        let t = Table { name: "t".into(), header: vec!["a".into(), "b".into()], rows: vec![vec![1.0, 0.5]] };
        assert_eq!(t.to_csv(), "a,b\n1,0.5\n");
    }
}
