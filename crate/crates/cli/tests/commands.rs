use std::path::Path;
use std::process::Command;

use seiv_cli::config::{GraphSource, InitialCondition, ScenarioConfig};
use seiv_cli::{bounds, simulate, CliError};

fn small() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.graph = GraphSource::ErdosRenyi { n: 8, p: 0.5, seed: Some(3) };
    cfg.trials = 3;
    cfg.simulate.horizon = 4.0;
    cfg.controller.horizon = 10.0;
    cfg
}

fn seiv(args: &[&str], config: Option<&Path>, out: &Path) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_seiv"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

#[test]
fn toml_and_json_configs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("a.toml");
    std::fs::write(
        &toml_path,
        r#"
trials = 5
[graph]
kind = "erdos_renyi"
n = 10
p = 0.3
[initial]
kind = "labels"
labels = "SEISVSSSSI"
[controller]
r = 0.07
dt = 0.375
horizon = 20.0
optimizer_budget = 2
seed = 4
[controller.integrator]
step_divisor = 8
"#,
    )
    .unwrap();
    let from_toml = ScenarioConfig::load(&toml_path).unwrap();
    let json_path = dir.path().join("a.json");
    std::fs::write(&json_path, serde_json::to_string(&from_toml).unwrap()).unwrap();
    let from_json = ScenarioConfig::load(&json_path).unwrap();
    assert_eq!(from_toml, from_json);
    assert_eq!(from_toml.controller.k_max, 2);
    assert_eq!(from_toml.controller.integrator.step_divisor, 8);
    assert_eq!(from_toml.build().unwrap().x0.to_string(), "SEISVSSSSI");
}

#[test]
fn unknown_keys_and_extensions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "trails = 3\n").unwrap();
    assert!(matches!(ScenarioConfig::load(&bad), Err(CliError::Validation(_))));
    let yaml = dir.path().join("c.yaml");
    std::fs::write(&yaml, "trials: 3\n").unwrap();
    assert!(matches!(ScenarioConfig::load(&yaml), Err(CliError::Validation(_))));
}

#[test]
fn default_initial_condition_is_a_quarter_each() {
    let sc = ScenarioConfig::default().build().unwrap();
    assert_eq!(sc.graph.node_count(), 50);
    assert_eq!(sc.x0.count(seiv_core::Compartment::I), 13);
    assert_eq!(sc.x0.count(seiv_core::Compartment::E), 13);
}

#[test]
fn disease_free_simulation_has_no_disease_events() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.initial = InitialCondition::Labels { labels: "SSVSSVSS".into() };
    simulate::cmd_simulate(&cfg, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| !l.contains(",E") && !l.contains(",I")));
}

#[test]
fn refined_trace_stays_in_unit_interval_and_nests() {
    let dir = tempfile::tempdir().unwrap();
    let s = bounds::cmd_bounds(&small(), dir.path()).unwrap();
    assert!(s.nested_everywhere);
    assert!(s.refined_max_upper <= 1.0 + 1e-6);
    let checks = std::fs::read_to_string(dir.path().join("checks.csv")).unwrap();
    assert!(checks.lines().skip(1).all(|l| l.split(',').nth(1) == Some("true")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.toml");
    std::fs::write(&zero, "trials = 0\n").unwrap();
    let out = seiv(&["control"], Some(&zero), &dir.path().join("z"));
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("z").exists());

    let big = dir.path().join("big.toml");
    std::fs::write(&big, "[verify]\nn_max = 9\n").unwrap();
    let out = seiv(&["verify"], Some(&big), &dir.path().join("b"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle limit"));

    let fault = dir.path().join("fault.toml");
    std::fs::write(&fault, "[verify]\ninstances = 3\nsoundness_cases = 2\nsurvival_trials = 10\ninject_fault = true\n").unwrap();
    let out = seiv(&["verify"], Some(&fault), &dir.path().join("f"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("containment"));

    let missing = dir.path().join("missing.toml");
    let out = seiv(&["simulate"], Some(&missing), &dir.path().join("m"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn control_writes_expected_files_and_seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.json");
    std::fs::write(&cfg_path, serde_json::to_string(&small()).unwrap()).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(seiv(&["control", "--seed", "1"], Some(&cfg_path), &a).status.success());
    assert!(seiv(&["control", "--seed", "2"], Some(&cfg_path), &b).status.success());
    for f in ["ensemble.csv", "runs.csv", "report.json", "metadata.json", "record_0000.json", "record_0000_actions.csv"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    assert_ne!(std::fs::read(a.join("runs.csv")).unwrap(), std::fs::read(b.join("runs.csv")).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    for key in ["tau_one", "elim_bound", "empirical_mean", "ci"] {
        assert!(report.get(key).is_some(), "{key}");
    }
}
