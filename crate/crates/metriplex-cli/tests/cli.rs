//! End-to-end tests of the batch runner through the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metriplex"))
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

fn report_without_timestamp(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("report.json")).expect("report.json exists");
    let mut value: Value = serde_json::from_str(&text).expect("report.json parses");
    let object = value.as_object_mut().unwrap();
    assert!(object.remove("timestamp").is_some(), "timestamp field present");
    value
}

fn check_passes(report: &Value, name: &str) -> bool {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("check {name} missing"))["pass"]
        .as_bool()
        .unwrap()
}

#[test]
fn full_run_writes_three_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "--scenario",
        "damped_oscillator_thermal",
        "--h",
        "0.01",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    for artifact in ["trajectory.csv", "report.json", "summary.txt"] {
        assert!(dir.path().join(artifact).exists(), "{artifact} missing");
    }

    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,q_1,p_1,S,H,T,sigma,totalN"));
    assert_eq!(csv.lines().count(), 1002); // header + 1001 samples

    let report = report_without_timestamp(dir.path());
    assert_eq!(report["system"], "damped_oscillator_thermal");
    assert_eq!(report["seed"], 42);
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"].as_bool().unwrap()));
    assert!(report.get("bracket_extremes").is_some());

    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("overall: PASS"));
}

#[test]
fn reduced_scenario_full_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "--scenario",
        "rigid_body_double_bracket",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_timestamp(dir.path());
    assert!(check_passes(&report, "casimir_drift"));
    assert!(check_passes(&report, "orbit_hg_zero"));
    assert!(check_passes(&report, "equiv_orbit"));

    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,mu_1,mu_2,mu_3,S,h,casimir_half_norm_squared"));
}

#[test]
fn linear_friction_body_reports_orbit_decay_as_expected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "--scenario",
        "rigid_body_linear_friction",
        "--suite",
        "casimir",
        "--suite",
        "laws",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_timestamp(dir.path());
    // Orbits must NOT be preserved here; the check encodes the required
    // decrease, so pass means the decay was observed.
    assert!(check_passes(&report, "casimir_decrease"));
    assert!(check_passes(&report, "energy_conservation"));
}

#[test]
fn unknown_scenario_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "--scenario",
        "perpetuum_mobile",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
}

#[test]
fn config_file_drives_the_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.json");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "scenario": "compartment_diffusion",
            "params": {"g": 1.0},
            "integration": {"h": 0.01, "t_end": 2.0},
            "suites": ["laws", "axioms"],
            "seed": 7,
            "out": dir.path().join("from_config")
        })
        .to_string(),
    )
    .unwrap();

    let out = run(&["run", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_timestamp(&dir.path().join("from_config"));
    assert_eq!(report["seed"], 7);
    assert!(check_passes(&report, "mass_conservation"));

    // Flag overrides beat the file.
    let out = run(&[
        "run",
        config_path.to_str().unwrap(),
        "--seed",
        "11",
        "--out",
        dir.path().join("overridden").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = report_without_timestamp(&dir.path().join("overridden"));
    assert_eq!(report["seed"], 11);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.json");
    std::fs::write(
        &config_path,
        r#"{"scenario": "damped_oscillator_thermal", "tolerance": 0.1}"#,
    )
    .unwrap();
    let out = run(&["run", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["run", "--scenario", "damped_oscillator_thermal", "--suite", "vibes"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));

    let out = run(&[
        "run",
        "--scenario",
        "damped_oscillator_thermal",
        "--param",
        "made_up=3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sabotage_fails_second_law_checks_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "--scenario",
        "damped_oscillator_thermal",
        "--sabotage",
        "--h",
        "0.01",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = report_without_timestamp(dir.path());
    assert!(!check_passes(&report, "secondlaw_friction"));
    assert!(!check_passes(&report, "single_sh_nonneg"));
    // Structural degeneracies survive the sabotage.
    assert!(check_passes(&report, "single_hh_zero"));
    assert!(check_passes(&report, "double_hs_zero"));
    assert!(check_passes(&report, "double_symmetry"));
}

#[test]
fn divergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // The anti-dissipative oscillator grows like exp(t/2); far past t = 1400
    // the momentum overflows and the state stops being finite.
    let out = run(&[
        "run",
        "--scenario",
        "damped_oscillator_thermal",
        "--sabotage",
        "--h",
        "0.05",
        "--t-end",
        "2000",
        "--stride",
        "100",
        "--suite",
        "laws",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn reports_are_deterministic_for_fixed_seed() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "run",
            "--scenario",
            "compartment_diffusion",
            "--seed",
            "1234",
            "--h",
            "0.01",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = report_without_timestamp(dir_a.path());
    let b = report_without_timestamp(dir_b.path());
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn seed_env_var_is_the_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary()
        .args([
            "run",
            "--scenario",
            "damped_oscillator_thermal",
            "--h",
            "0.01",
            "--suite",
            "axioms",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("METRIPLEX_SEED", "777")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = report_without_timestamp(dir.path());
    assert_eq!(report["seed"], 777);

    // An explicit flag still wins over the environment.
    let out = binary()
        .args([
            "run",
            "--scenario",
            "damped_oscillator_thermal",
            "--h",
            "0.01",
            "--suite",
            "axioms",
            "--seed",
            "5",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("METRIPLEX_SEED", "777")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = report_without_timestamp(dir.path());
    assert_eq!(report["seed"], 5);

    // A garbage value is a configuration error.
    let out = binary()
        .args(["run", "--scenario", "damped_oscillator_thermal"])
        .env("METRIPLEX_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn list_scenarios_names_all_four() {
    let out = run(&["list-scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "damped_oscillator_thermal",
        "compartment_diffusion",
        "rigid_body_linear_friction",
        "rigid_body_double_bracket",
    ] {
        assert!(text.contains(name), "{name} missing from listing");
    }
    assert!(text.contains("parameters:"));
}

#[test]
fn explain_describes_known_checks() {
    let out = run(&["explain", "single_hh_zero"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[H,H] = 0"));

    let out = run(&["explain", "no_such_check"]);
    assert_eq!(out.status.code(), Some(2));
}
