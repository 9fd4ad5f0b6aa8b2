mod common;

use common::config_path;
use gsdlab::harness::stats::median;
use gsdlab::harness::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport, THREADS_ENV};

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_file(config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(name: &str) -> ExperimentReport {
    run_experiment(&load(name)).unwrap()
}

#[test]
fn every_shipped_config_validates() {
    let dir = config_path("");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 18, "only {seen} configs");
}

#[test]
fn single_shift_monotonicity_evaluates_nothing() {
    let r = run("monotonicity-single-shift.json");
    assert!(r.checks.iter().all(|c| c.passed.is_none()));
    assert!(!r.passed);
    assert!(r.aggregates["median_spearman"].is_null());
    assert_eq!(r.per_seed.len(), 1);
}

#[test]
fn single_step_ordering_agrees_with_itself() {
    let r = run("ordering-stability-single-step.json");
    assert_eq!(r.aggregates["median_agreement"], 1.0);
    let seed = &r.per_seed[0];
    assert_eq!(seed["initial_distances"], seed["final_distances"]);
    assert!(r.passed);
}

#[test]
fn minimal_audit_has_no_training() {
    let r = run("lemma1-audit-minimal.json");
    assert_eq!(r.aggregates["instances"], 3);
    assert_eq!(r.aggregates["gep_steps"], 0);
    assert!(r.passed);
}

#[test]
fn single_checkpoint_spectrum() {
    let r = run("spectrum-single-checkpoint.json");
    assert_eq!(r.per_seed[0]["checkpoints"].as_array().unwrap().len(), 1);
    assert!(r.passed);
}

#[test]
fn single_seed_dppca_utility() {
    let r = run("dppca-utility-single.json");
    assert_eq!(r.aggregates["median_alignment"].as_array().unwrap().len(), 1);
    assert!(r.passed);
}

#[test]
fn single_trial_closeness() {
    let r = run("dpgsd-closeness-single-trial.json");
    assert_eq!(r.aggregates["trials"], 1);
    assert_eq!(r.aggregates["m"], 2231);
}

#[test]
fn variant_configs() {
    for name in ["lemma1-audit-many-seeds.json", "dppca-utility-fine-grid.json", "spectrum-softmax.json", "ordering-stability-multiclass.json"] {
        let r = run(name);
        assert!(r.passed, "{name}: {:?}", r.checks);
    }
}

#[test]
fn orthogonal_public_sweep_keeps_gsd_ordering() {
    let r = run("monotonicity-sweep.json");
    assert_eq!(r.check("gsd_strictly_increasing").unwrap().passed, Some(true));
    let mags: Vec<f64> = r.aggregates["shifts"].as_array().unwrap().iter().map(|s| s["magnitude"].as_f64().unwrap()).collect();
    assert!(mags.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn aggregates_follow_from_per_seed() {
    let r = run("dppca-utility-fine-grid.json");
    let sizes = r.aggregates["sample_sizes"].as_array().unwrap().len();
    for j in 0..sizes {
        let column: Vec<f64> = r.per_seed.iter().map(|s| s["alignments"][j].as_f64().unwrap()).collect();
        assert_eq!(r.aggregates["median_alignment"][j].as_f64(), median(&column));
    }
    let cfg = load("dppca-utility-fine-grid.json");
    assert_eq!(cfg.experiment, ExperimentKind::DppcaUtility);
    assert_eq!(r.config, cfg);
}

#[test]
fn report_independent_of_thread_count() {
    let cfg = load("lemma1-audit.json");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        std::env::set_var(THREADS_ENV, threads);
        outputs.push(run_experiment(&cfg).unwrap().canonical_json().unwrap());
    }
    std::env::remove_var(THREADS_ENV);
    outputs.push(run_experiment(&cfg).unwrap().canonical_json().unwrap());
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn written_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.json");
    let r = run("lemma1-audit-minimal.json");
    r.write(&path).unwrap();
    let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back["schema_version"], 1);
    assert_eq!(back["experiment"], "lemma1-audit");
    assert!(back["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}
