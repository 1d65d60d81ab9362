//! Run configuration: JSON file fields plus flat command-line overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;

/// JSON config file schema. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub integration: IntegrationConfig,
    pub suites: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub sabotage: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub h: Option<f64>,
    pub t_end: Option<f64>,
    pub stride: Option<usize>,
}

/// Verification suites selectable per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Laws,
    Axioms,
    Equivalence,
    Jacobi,
    Casimir,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Laws,
        Suite::Axioms,
        Suite::Equivalence,
        Suite::Jacobi,
        Suite::Casimir,
    ];

    pub fn parse(name: &str) -> Result<Vec<Suite>, String> {
        match name {
            "laws" => Ok(vec![Suite::Laws]),
            "axioms" => Ok(vec![Suite::Axioms]),
            "equivalence" => Ok(vec![Suite::Equivalence]),
            "jacobi" => Ok(vec![Suite::Jacobi]),
            "casimir" => Ok(vec![Suite::Casimir]),
            "all" => Ok(Suite::ALL.to_vec()),
            other => Err(format!(
                "unknown suite '{other}' (expected laws, axioms, equivalence, jacobi, casimir, or all)"
            )),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: String,
    pub params: BTreeMap<String, f64>,
    pub h: Option<f64>,
    pub t_end: Option<f64>,
    pub stride: usize,
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub out: PathBuf,
}

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV_VAR: &str = "METRIPLEX_SEED";

impl RunConfig {
    /// Merges the config file, the `METRIPLEX_SEED` environment variable,
    /// and command-line overrides (highest precedence).
    #[allow(clippy::too_many_arguments)]
    pub fn resolve(
        file: FileConfig,
        scenario: Option<String>,
        cli_params: &[String],
        h: Option<f64>,
        t_end: Option<f64>,
        stride: Option<usize>,
        suites: &[String],
        seed: Option<u64>,
        out: Option<PathBuf>,
        sabotage: bool,
    ) -> Result<Self, String> {
        let scenario = scenario
            .or(file.scenario)
            .ok_or("no scenario given (config file field 'scenario' or flag --scenario)")?;

        let mut params = file.params;
        for entry in cli_params {
            let (key, value) = entry
                .split_once('=')
                .ok_or_else(|| format!("--param expects key=value, got '{entry}'"))?;
            let value: f64 = value
                .parse()
                .map_err(|_| format!("--param {key}: '{value}' is not a number"))?;
            params.insert(key.to_string(), value);
        }
        if sabotage || file.sabotage {
            params.insert("sabotage".to_string(), 1.0);
        }

        let suite_names: Vec<String> = if suites.is_empty() {
            file.suites.unwrap_or_else(|| vec!["all".to_string()])
        } else {
            suites.to_vec()
        };
        let mut resolved_suites = Vec::new();
        for name in &suite_names {
            for suite in Suite::parse(name)? {
                if !resolved_suites.contains(&suite) {
                    resolved_suites.push(suite);
                }
            }
        }

        let env_seed = match std::env::var(SEED_ENV_VAR) {
            Ok(text) => Some(
                text.parse::<u64>()
                    .map_err(|_| format!("{SEED_ENV_VAR}='{text}' is not a valid seed"))?,
            ),
            Err(_) => None,
        };
        let seed = seed.or(file.seed).or(env_seed).unwrap_or(DEFAULT_SEED);

        let h = h.or(file.integration.h);
        let t_end = t_end.or(file.integration.t_end);
        if let Some(h) = h {
            if h.is_nan() || h <= 0.0 {
                return Err(format!("step must be positive, got {h}"));
            }
        }
        if let Some(t_end) = t_end {
            if t_end.is_nan() || t_end <= 0.0 {
                return Err(format!("t_end must be positive, got {t_end}"));
            }
        }
        let stride = stride.or(file.integration.stride).unwrap_or(1);
        if stride == 0 {
            return Err("stride must be at least 1".to_string());
        }

        Ok(Self {
            scenario,
            params,
            h,
            t_end,
            stride,
            suites: resolved_suites,
            seed,
            out: out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        })
    }
}
