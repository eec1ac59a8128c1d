use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn rpnvsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpnvsim")).args(args).output().expect("spawn rpnvsim")
}

fn write_config(dir: &Path, value: &Value) -> String {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.display().to_string()
}

fn small() -> Value {
    json!({
        "experiment": {
            "signal": { "t_max_us": 1.0, "n_points": 21 },
            "keff": { "t_max_us": 20.0, "n_points": 201 },
            "keff_phi": { "n_phi": 3 },
            "montecarlo": { "n_t_m": 3, "n_events": 400, "trajectory_events": 10 }
        }
    })
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &json!({ "model": { "rates": { "k_q_mhz": 1.0 } } }));
    let out = rpnvsim(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let run = rpnvsim(&["signal", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn out_of_range_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &json!({ "experiment": { "signal": { "n_points": 1 } } }));
    assert_eq!(rpnvsim(&["validate", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = rpnvsim(&["validate", "--config", "/nonexistent/rpnv.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_flags_regime_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &json!({ "model": { "b_field": { "b0_mt": 100.0 } } }));
    let out = rpnvsim(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("warning: Zeeman"), "{}", stdout(&out));

    let cfg = write_config(dir.path(), &json!({ "model": { "rates": { "gamma_mhz": 10.0 } } }));
    let out = rpnvsim(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("overdamped"), "{}", stdout(&out));
}

#[test]
fn defaults_validate_cleanly_and_schema_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let defaults = rpnvsim(&["defaults"]);
    assert!(defaults.status.success());
    let path = dir.path().join("defaults.json");
    fs::write(&path, &defaults.stdout).unwrap();
    let out = rpnvsim(&["validate", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("(0 warnings)"));

    let schema: Value = serde_json::from_slice(&rpnvsim(&["schema"]).stdout).unwrap();
    assert!(schema["properties"]["model"].is_object());
}

#[test]
fn csv_files_carry_provenance_and_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small());
    let root = dir.path().join("out");
    let out = rpnvsim(&["run", "signal", "--config", &cfg, "--out", root.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(root.join("signal/signal.csv")).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# rpnvsim ") && first.contains("experiment=signal config_sha256="));
    assert!(lines.next().unwrap().starts_with("t_us,P_numeric,P_analytic"));
    assert_eq!(lines.count(), 21);

    let summary: Value = serde_json::from_str(&fs::read_to_string(root.join("signal/summary.json")).unwrap()).unwrap();
    let hash = summary["config_sha256"].as_str().unwrap();
    assert!(first.ends_with(hash));
    assert_eq!(summary["partial"], Value::Bool(false));
}

#[test]
fn runs_are_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small());
    let mut outputs = Vec::new();
    for jobs in ["1", "2"] {
        let root = dir.path().join(jobs);
        for exp in ["montecarlo", "keff-phi"] {
            let out = rpnvsim(&[exp, "--config", &cfg, "--out", root.to_str().unwrap(), "--jobs", jobs]);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        }
        outputs.push([
            fs::read(root.join("montecarlo/montecarlo_average.csv")).unwrap(),
            fs::read(root.join("montecarlo/montecarlo_events.csv")).unwrap(),
            fs::read(root.join("keff-phi/keff_phi.csv")).unwrap(),
            fs::read(root.join("montecarlo/summary.json")).unwrap(),
        ]);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_override_changes_monte_carlo_events() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(rpnvsim(&["montecarlo", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(rpnvsim(&["montecarlo", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "7"]).status.success());
    let read = |p: &Path| fs::read_to_string(p.join("montecarlo/montecarlo_events.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}
