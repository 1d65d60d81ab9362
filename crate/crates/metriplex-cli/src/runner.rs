//! One run = one scenario: build, integrate, verify, write artifacts.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use metriplex::brackets::sample_axioms;
use metriplex::dynamics::{integrate, IntegrateOptions, Trajectory};
use metriplex::error::Error;
use metriplex::reduction::{
    casimir_drift, integrate_reduced, lie_poisson_structure, ReducedTrajectory,
};
use metriplex::rng::SeededRng;
use metriplex::scenarios::{build, BuiltScenario};
use metriplex::systems::StateRegion;
use metriplex::verify::{
    check_axioms, check_axioms_reduced, check_equivalence, check_equivalence_reduced, check_laws,
    check_laws_reduced, jacobi_residual, CheckResult, Tolerances, VerificationReport,
};

use crate::config::{RunConfig, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUITE_FAILURE: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;
pub const EXIT_RUNTIME_ERROR: i32 = 3;

const VERIFY_STATES: usize = 100;
const VERIFY_OBSERVABLES: usize = 20;
const CASIMIR_DECREASE_MIN: f64 = 1e-2;

pub fn execute(config: RunConfig) -> i32 {
    match run_inner(&config) {
        Ok(all_pass) => {
            if all_pass {
                EXIT_OK
            } else {
                EXIT_SUITE_FAILURE
            }
        }
        Err(RunError::Config(message)) => {
            eprintln!("configuration error: {message}");
            EXIT_CONFIG_ERROR
        }
        Err(RunError::Runtime(message)) => {
            eprintln!("runtime error: {message}");
            EXIT_RUNTIME_ERROR
        }
    }
}

enum RunError {
    Config(String),
    Runtime(String),
}

impl From<Error> for RunError {
    fn from(err: Error) -> Self {
        match err {
            Error::UnknownScenario(_) | Error::InvalidParameter(_) | Error::InvalidState(_) => {
                RunError::Config(err.to_string())
            }
            Error::DivergedAt { .. }
            | Error::ZeroTemperatureAt { .. }
            | Error::NegativeMoles { .. } => RunError::Runtime(err.to_string()),
            other => RunError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(err: std::io::Error) -> Self {
        RunError::Runtime(format!("i/o failure: {err}"))
    }
}

enum RecordedTrajectory {
    Canonical(Trajectory),
    Reduced(ReducedTrajectory),
}

fn run_inner(config: &RunConfig) -> Result<bool, RunError> {
    let built = build(&config.scenario, &config.params)?;
    let spec = built.spec().clone();
    let h = config.h.unwrap_or(spec.step);
    let t_end = config.t_end.unwrap_or(spec.t_end);

    fs::create_dir_all(&config.out)?;

    // Integrate once; the trajectory feeds the CSV artifact and the laws and
    // casimir suites.
    let trajectory = match &built {
        BuiltScenario::Canonical {
            system, initial, ..
        } => {
            let options = IntegrateOptions {
                stride: config.stride,
                ..Default::default()
            };
            RecordedTrajectory::Canonical(integrate(system, initial, t_end, h, &options)?)
        }
        BuiltScenario::Reduced {
            system, initial, ..
        } => RecordedTrajectory::Reduced(integrate_reduced(
            system,
            initial,
            t_end,
            h,
            config.stride,
        )?),
    };

    let csv_path = config.out.join("trajectory.csv");
    {
        let mut file = fs::File::create(&csv_path)?;
        match &trajectory {
            RecordedTrajectory::Canonical(traj) => traj.write_csv(&mut file)?,
            RecordedTrajectory::Reduced(traj) => traj.write_csv(&mut file)?,
        }
    }

    let mut report = VerificationReport::new(config.seed, spec.name, built.gradient_mode());
    let tolerances = Tolerances::for_mode(built.gradient_mode() == "analytic");
    let mut suite_notes: Vec<String> = Vec::new();
    let mut bracket_extremes = None;

    for suite in &config.suites {
        match (suite, &built, &trajectory) {
            (Suite::Laws, _, RecordedTrajectory::Canonical(traj)) => {
                report.extend(check_laws(
                    traj,
                    tolerances.energy_drift,
                    tolerances.entropy_decrement,
                ));
            }
            (Suite::Laws, _, RecordedTrajectory::Reduced(traj)) => {
                report.extend(check_laws_reduced(
                    traj,
                    tolerances.energy_drift,
                    tolerances.entropy_decrement,
                ));
            }
            (Suite::Axioms, BuiltScenario::Canonical { system, .. }, _) => {
                report.extend(check_axioms(
                    system,
                    VERIFY_STATES,
                    VERIFY_OBSERVABLES,
                    config.seed,
                )?);
                let mut rng = SeededRng::new(config.seed);
                let region = StateRegion::standard(system.dims());
                let states: Vec<_> = (0..VERIFY_STATES).map(|_| region.sample(&mut rng)).collect();
                bracket_extremes =
                    Some(sample_axioms(system, &states, VERIFY_OBSERVABLES, config.seed)?);
            }
            (Suite::Axioms, BuiltScenario::Reduced { system, .. }, _) => {
                report.extend(check_axioms_reduced(
                    system,
                    VERIFY_STATES,
                    VERIFY_OBSERVABLES,
                    config.seed,
                )?);
            }
            (Suite::Equivalence, BuiltScenario::Canonical { system, .. }, _) => {
                report.extend(check_equivalence(system, VERIFY_STATES, config.seed)?);
            }
            (Suite::Equivalence, BuiltScenario::Reduced { system, .. }, _) => {
                report.extend(check_equivalence_reduced(system, VERIFY_STATES, config.seed)?);
            }
            (Suite::Jacobi, BuiltScenario::Canonical { system, initial, .. }, _) => {
                let poisson = metriplex::brackets::canonical_poisson(system.dims());
                let residual = jacobi_residual(&poisson, &initial.flatten(), config.seed)?;
                report.checks.push(threshold_check(
                    "jacobi_residual",
                    residual,
                    tolerances.fd_limited,
                ));
            }
            (Suite::Jacobi, BuiltScenario::Reduced { system, initial, .. }, _) => {
                let poisson = lie_poisson_structure(system);
                let residual = jacobi_residual(&poisson, &initial.flatten(), config.seed)?;
                report.checks.push(threshold_check(
                    "jacobi_residual",
                    residual,
                    tolerances.fd_limited,
                ));
            }
            (
                Suite::Casimir,
                BuiltScenario::Reduced { system, .. },
                RecordedTrajectory::Reduced(traj),
            ) => {
                let drifts = casimir_drift(traj, system.casimirs());
                let max_drift = drifts.iter().map(|(_, d)| *d).fold(0.0, f64::max);
                match spec.orbit_preserving {
                    Some(true) => report.checks.push(threshold_check(
                        "casimir_drift",
                        max_drift,
                        tolerances.casimir_drift,
                    )),
                    // Negative control: the orbit must visibly decay. The
                    // residual is the shortfall below the required decrease,
                    // so pass still means residual <= threshold.
                    Some(false) => report.checks.push(threshold_check(
                        "casimir_decrease",
                        (CASIMIR_DECREASE_MIN - max_drift).max(0.0),
                        0.0,
                    )),
                    None => {}
                }
            }
            (Suite::Casimir, BuiltScenario::Canonical { .. }, _) => {
                suite_notes.push("casimir: not applicable to canonical scenarios".to_string());
            }
            _ => unreachable!("trajectory kind always matches the scenario kind"),
        }
    }

    let all_pass = report.all_pass();
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    write_report_json(
        &config.out.join("report.json"),
        &report,
        bracket_extremes.as_ref(),
        timestamp,
    )?;
    write_summary(
        &config.out.join("summary.txt"),
        config,
        spec.name,
        h,
        t_end,
        &report,
        &suite_notes,
        &trajectory,
        timestamp,
    )?;

    Ok(all_pass)
}

fn threshold_check(name: &str, residual: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        residual,
        threshold,
        pass: residual <= threshold,
        worst_state: None,
    }
}

/// report.json is the library report plus a timestamp (excluded from the
/// determinism contract) and, when the axioms suite ran on a canonical
/// system, the sampled bracket extremes.
fn write_report_json(
    path: &Path,
    report: &VerificationReport,
    bracket_extremes: Option<&metriplex::brackets::DissipationBracketReport>,
    timestamp: u64,
) -> Result<(), RunError> {
    let mut value = serde_json::to_value(report)
        .map_err(|e| RunError::Runtime(format!("report serialization failed: {e}")))?;
    let object = value.as_object_mut().expect("report serializes to an object");
    object.insert("timestamp".to_string(), serde_json::json!(timestamp));
    if let Some(extremes) = bracket_extremes {
        object.insert(
            "bracket_extremes".to_string(),
            serde_json::to_value(extremes)
                .map_err(|e| RunError::Runtime(format!("report serialization failed: {e}")))?,
        );
    }
    let text = serde_json::to_string_pretty(&value)
        .map_err(|e| RunError::Runtime(format!("report serialization failed: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn write_summary(
    path: &Path,
    config: &RunConfig,
    scenario: &str,
    h: f64,
    t_end: f64,
    report: &VerificationReport,
    suite_notes: &[String],
    trajectory: &RecordedTrajectory,
    timestamp: u64,
) -> Result<(), RunError> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "scenario: {scenario}")?;
    writeln!(out, "seed: {}", config.seed)?;
    writeln!(out, "integration: h = {h}, t_end = {t_end}, stride = {}", config.stride)?;
    writeln!(out, "gradient mode: {}", report.gradient_mode)?;
    writeln!(out, "unix timestamp: {timestamp}")?;
    let samples = match trajectory {
        RecordedTrajectory::Canonical(traj) => traj.len(),
        RecordedTrajectory::Reduced(traj) => traj.len(),
    };
    writeln!(out, "trajectory samples: {samples}")?;
    if let RecordedTrajectory::Canonical(traj) = trajectory {
        for warning in &traj.warnings {
            writeln!(out, "warning: {warning}")?;
        }
    }
    writeln!(out)?;
    writeln!(
        out,
        "{:<34} {:>14} {:>14}  result",
        "check", "residual", "threshold"
    )?;
    for check in &report.checks {
        writeln!(
            out,
            "{:<34} {:>14.6e} {:>14.6e}  {}",
            check.name,
            check.residual,
            check.threshold,
            if check.pass { "PASS" } else { "FAIL" }
        )?;
    }
    for note in suite_notes {
        writeln!(out, "note: {note}")?;
    }
    writeln!(out)?;
    writeln!(
        out,
        "overall: {}",
        if report.all_pass() { "PASS" } else { "FAIL" }
    )?;
    Ok(())
}
