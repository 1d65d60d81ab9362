//! Config-driven batch runner: builds a scenario, integrates it, runs the
//! requested verification suites, and writes `trajectory.csv`,
//! `report.json`, and `summary.txt` into the output directory.
//!
//! Exit codes: 0 all requested suites pass, 1 suite failure, 2 configuration
//! error, 3 runtime divergence.

mod config;
mod runner;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, RunConfig};

#[derive(Parser)]
#[command(
    name = "metriplex",
    version,
    about = "Dissipation-bracket scenarios: integrate, verify, report"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a JSON config plus flag overrides.
    Run(RunArgs),
    /// List built-in scenarios with their parameters and defaults.
    ListScenarios,
    /// Describe a named check from the verification catalog.
    Explain {
        /// Check name as it appears in report.json.
        check: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; all fields can also be given as flags.
    config: Option<PathBuf>,

    /// Scenario name (see list-scenarios).
    #[arg(long)]
    scenario: Option<String>,

    /// Integration step.
    #[arg(long)]
    h: Option<f64>,

    /// Integration horizon.
    #[arg(long = "t-end")]
    t_end: Option<f64>,

    /// Record every n-th step of the trajectory.
    #[arg(long)]
    stride: Option<usize>,

    /// Seed for every randomized check (default: config, then the
    /// METRIPLEX_SEED environment variable, then 42).
    #[arg(long)]
    seed: Option<u64>,

    /// Suite to run; repeatable. One of laws, axioms, equivalence, jacobi,
    /// casimir, all (default: all).
    #[arg(long = "suite")]
    suite: Vec<String>,

    /// Output directory for trajectory.csv, report.json, summary.txt.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Scenario parameter override, key=value; repeatable.
    #[arg(long = "param")]
    param: Vec<String>,

    /// Flip the friction sign: a designed negative control that violates
    /// the second law while keeping the bracket structure intact.
    #[arg(long)]
    sabotage: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => run_command(args),
        Command::ListScenarios => list_scenarios(),
        Command::Explain { check } => explain(&check),
    };
    std::process::exit(code);
}

fn run_command(args: RunArgs) -> i32 {
    let file = match &args.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(text) => text,
                Err(err) => {
                    eprintln!("configuration error: cannot read {}: {err}", path.display());
                    return runner::EXIT_CONFIG_ERROR;
                }
            };
            match serde_json::from_str::<FileConfig>(&text) {
                Ok(file) => file,
                Err(err) => {
                    eprintln!("configuration error: {}: {err}", path.display());
                    return runner::EXIT_CONFIG_ERROR;
                }
            }
        }
        None => FileConfig::default(),
    };

    let config = match RunConfig::resolve(
        file,
        args.scenario,
        &args.param,
        args.h,
        args.t_end,
        args.stride,
        &args.suite,
        args.seed,
        args.out,
        args.sabotage,
    ) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("configuration error: {message}");
            return runner::EXIT_CONFIG_ERROR;
        }
    };

    runner::execute(config)
}

fn list_scenarios() -> i32 {
    for name in metriplex::scenarios::SCENARIO_NAMES {
        let (summary, params) = metriplex::scenarios::describe(name).expect("built-in scenario");
        println!("{name}");
        println!("    {summary}");
        let rendered: Vec<String> = params
            .iter()
            .map(|(key, default)| format!("{key}={default}"))
            .collect();
        println!("    parameters: {}", rendered.join(", "));
    }
    runner::EXIT_OK
}

fn explain(check: &str) -> i32 {
    match metriplex::verify::explain_check(check) {
        Some(description) => {
            println!("{check}: {description}");
            runner::EXIT_OK
        }
        None => {
            eprintln!("unknown check '{check}'; names appear in report.json and in the list below:");
            for (name, _) in metriplex::verify::check_catalog() {
                eprintln!("  {name}");
            }
            runner::EXIT_CONFIG_ERROR
        }
    }
}
