use std::path::Path;
use std::process::{Command, Output};

fn amctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amctl"))
        .args(args)
        .env_remove("AMTRACK_SCENARIO")
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_preset_succeeds_and_reports_one_seed() {
    let out = amctl(&["run", "--scenario", "example3", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["method"], "preset");
    assert_eq!(report["runs"].as_array().unwrap().len(), 1);
    assert_eq!(report["runs"][0]["seed"], 3);
    assert_eq!(report["envelope_violations"], 0);
}

#[test]
fn seed_range_runs_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = amctl(&["run", "--scenario", "example1", "--seeds", "2..5", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    for seed in 2..5 {
        assert!(dir.path().join(format!("run_seed{seed}.csv")).is_file());
    }
    assert!(!dir.path().join("run_seed5.csv").exists());
    assert!(dir.path().join("scenario.toml").is_file());
    assert!(dir.path().join("report.json").is_file());
}

#[test]
fn missing_scenario_is_a_config_error() {
    let out = amctl(&["run", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = amctl(&["run", "--scenario", "no-such-preset"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_scenario_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    std::fs::write(
        &file,
        "name = \"bad\"\nstart_p_e = [0.0, 0.0, -2.0]\ntarget_p_o = [1.0, 0.0, -2.0]\n\
         t_p = 5.0\nrho0 = [0.5, 0.1, 0.1]\nduration = 10.0\n",
    )
    .unwrap();
    // ρ0 does not exceed the initial error on x.
    let out = amctl(&["run", "--scenario", path(&file)]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&file, "name = \"bad\"\nunknown_field = 1\n").unwrap();
    let out = amctl(&["run", "--scenario", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_seed_list_is_a_config_error() {
    let out = amctl(&["run", "--scenario", "example1", "--seeds", "a..b"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn envelope_violation_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("slow.toml");
    // A tiny c leaves α far outside the envelope, so the rig cannot stay in it.
    let text = format!("c = [0.001, 0.001, 0.001]\n{}", include_str!("../../core/scenarios/example1.toml"));
    std::fs::write(&file, text).unwrap();
    let out = amctl(&["run", "--scenario", path(&file), "--seed", "0"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["envelope_violations"].as_u64().unwrap() > 0);
}

#[test]
fn environment_variable_selects_the_scenario() {
    let out = Command::new(env!("CARGO_BIN_EXE_amctl"))
        .args(["run", "--seed", "0"])
        .env("AMTRACK_SCENARIO", "example2")
        .env("RUST_LOG", "error")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["scenario"], "example2");
}

#[test]
fn clik_method_override() {
    let out = amctl(&["run", "--scenario", "example1", "--method", "clik", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["method"], "clik");
}

#[test]
fn report_recomputes_written_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let run = amctl(&["run", "--scenario", "example1", "--seeds", "0,1", "--out", path(dir.path())]);
    assert_eq!(run.status.code(), Some(0));
    let written = json(&run);

    let out = amctl(&["report", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("report_recomputed.json").is_file());
    let recomputed = json(&out);
    let runs = recomputed["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for (i, entry) in runs.iter().enumerate() {
        let original = &written["runs"][i]["metrics"];
        let fresh = &entry[1];
        for key in ["avg_error", "convergence_time", "terminal_error"] {
            let a = original[key].as_f64().unwrap();
            let b = fresh[key].as_f64().unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{key}: {a} vs {b}");
        }
        assert_eq!(fresh["rows_outside"], 0);
    }
}

#[test]
fn report_on_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = amctl(&["report", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_directory_per_preset_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = amctl(&["sweep", "--scenario", "example3", "--tp", "5,8", "--seed", "0", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out);
    let points = summary["points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[1]["t_p"], 8.0);
    assert!(dir.path().join("tp_5/run_seed0.csv").is_file());
    assert!(dir.path().join("tp_8/report.json").is_file());
    assert!(dir.path().join("sweep.json").is_file());
}

#[test]
fn sweep_requires_preset_times() {
    let out = amctl(&["sweep", "--scenario", "example1"]);
    assert_eq!(out.status.code(), Some(2));
}
