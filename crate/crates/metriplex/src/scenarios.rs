//! Canonical example systems with known analytic behavior.
//!
//! Four parameterized scenarios back the test suite and the command-line
//! runner:
//!
//! * `damped_oscillator_thermal` - one mechanical degree of freedom with
//!   linear friction heating a thermal reservoir;
//! * `compartment_diffusion` - frozen mechanics, `K` compartments exchanging
//!   matter down chemical-potential differences;
//! * `rigid_body_linear_friction` - so(3) rigid body with isotropic linear
//!   friction (coadjoint orbits not preserved);
//! * `rigid_body_double_bracket` - the same body with orbit-preserving
//!   double-bracket friction.
//!
//! Entropy enters the energy linearly (`α S`, constant temperature) by
//! default, which keeps the temperature bounded away from zero and makes the
//! hand oracles tractable; setting `exp_entropy = 1` switches the thermal
//! term to `α exp(S)` for temperature-dependence tests. Every default
//! parameter is chosen so characteristic times are order one.
//!
//! The `sabotage = 1` parameter flips the sign of the friction (or flux) law
//! and drops the linear-transport declaration. The result is a structurally
//! intact system that violates the second law: degeneracy checks still pass
//! while the sign checks fail, which is the designed negative path for the
//! verification suite.

use std::collections::BTreeMap;

use nalgebra::{dvector, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::reduction::{
    Casimir, LieAlgebraStructure, ReducedObservable, ReducedState, ReducedSystem, ReducedVector,
};
use crate::systems::{
    Dims, HamiltonianSystem, Observable, StateVector, ThermoMechState,
};

pub const SCENARIO_NAMES: [&str; 4] = [
    "damped_oscillator_thermal",
    "compartment_diffusion",
    "rigid_body_linear_friction",
    "rigid_body_double_bracket",
];

/// Resolved description of a scenario instance.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: &'static str,
    /// Fully resolved parameters (defaults merged with overrides).
    pub parameters: BTreeMap<String, f64>,
    /// Recommended integration step.
    pub step: f64,
    /// Recommended integration horizon.
    pub t_end: f64,
    /// Headline checks this instance is expected to pass when built without
    /// sabotage.
    pub expected_checks: Vec<&'static str>,
    /// Whether the friction law preserves coadjoint orbits (rigid-body
    /// scenarios only).
    pub orbit_preserving: Option<bool>,
}

/// A built scenario: either a canonical system on `T*Q × R^{K+1}` or a
/// reduced system on `g* × R`.
#[derive(Debug)]
pub enum BuiltScenario {
    Canonical {
        spec: ScenarioSpec,
        system: HamiltonianSystem,
        initial: ThermoMechState,
    },
    Reduced {
        spec: ScenarioSpec,
        system: ReducedSystem,
        initial: ReducedState,
    },
}

impl BuiltScenario {
    pub fn spec(&self) -> &ScenarioSpec {
        match self {
            BuiltScenario::Canonical { spec, .. } => spec,
            BuiltScenario::Reduced { spec, .. } => spec,
        }
    }

    pub fn gradient_mode(&self) -> &'static str {
        match self {
            BuiltScenario::Canonical { system, .. } => system.gradient_mode(),
            BuiltScenario::Reduced { system, .. } => system.gradient_mode(),
        }
    }
}

/// One-line summaries and parameter tables for `list-scenarios`.
pub fn describe(name: &str) -> Option<(&'static str, Vec<(&'static str, f64)>)> {
    match name {
        "damped_oscillator_thermal" => Some((
            "mechanical oscillator with linear friction heating a thermal degree of freedom",
            vec![
                ("mass", 1.0),
                ("spring", 1.0),
                ("alpha", 1.0),
                ("lambda", 1.0),
                ("exp_entropy", 0.0),
                ("q0", 0.0),
                ("p0", 2.0),
                ("s0", 0.0),
                ("fd_gradients", 0.0),
                ("sabotage", 0.0),
            ],
        )),
        "compartment_diffusion" => Some((
            "K compartments exchanging one species down chemical-potential differences; mechanics frozen",
            vec![
                ("compartments", 2.0),
                ("alpha", 1.0),
                ("g", 1.0),
                ("c1", 1.0),
                ("c2", 1.0),
                ("n0_1", 2.0),
                ("n0_2", 0.0),
                ("exp_entropy", 0.0),
                ("fd_gradients", 0.0),
                ("sabotage", 0.0),
            ],
        )),
        "rigid_body_linear_friction" => Some((
            "so(3) rigid body with isotropic linear friction; coadjoint orbits decay",
            vec![
                ("i1", 1.0),
                ("i2", 2.0),
                ("i3", 3.0),
                ("alpha", 1.0),
                ("gamma", 1.0),
                ("exp_entropy", 0.0),
                ("mu0_1", 1.0),
                ("mu0_2", 0.0),
                ("mu0_3", 0.2),
                ("s0", 0.0),
                ("fd_gradients", 0.0),
                ("sabotage", 0.0),
            ],
        )),
        "rigid_body_double_bracket" => Some((
            "so(3) rigid body with orbit-preserving double-bracket friction",
            vec![
                ("i1", 1.0),
                ("i2", 2.0),
                ("i3", 3.0),
                ("alpha", 1.0),
                ("gamma", 1.0),
                ("exp_entropy", 0.0),
                ("mu0_1", 1.0),
                ("mu0_2", 0.0),
                ("mu0_3", 0.2),
                ("s0", 0.0),
                ("fd_gradients", 0.0),
                ("sabotage", 0.0),
            ],
        )),
        _ => None,
    }
}

/// Parameter resolver: merges overrides into defaults and rejects unknown
/// keys.
struct Params {
    resolved: BTreeMap<String, f64>,
}

impl Params {
    fn resolve(
        name: &str,
        defaults: Vec<(String, f64)>,
        overrides: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let mut resolved: BTreeMap<String, f64> = defaults.into_iter().collect();
        for (key, value) in overrides {
            if !resolved.contains_key(key) {
                return Err(Error::InvalidParameter(format!(
                    "unknown parameter '{key}' for scenario '{name}'"
                )));
            }
            resolved.insert(key.clone(), *value);
        }
        Ok(Self { resolved })
    }

    fn get(&self, key: &str) -> f64 {
        self.resolved[key]
    }

    fn flag(&self, key: &str) -> Result<bool> {
        let v = self.get(key);
        if v == 0.0 {
            Ok(false)
        } else if v == 1.0 {
            Ok(true)
        } else {
            Err(Error::InvalidParameter(format!(
                "parameter '{key}' must be 0 or 1, got {v}"
            )))
        }
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v = self.get(key);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!(
                "parameter '{key}' must be positive, got {v}"
            )))
        }
    }

    fn nonnegative(&self, key: &str) -> Result<f64> {
        let v = self.get(key);
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!(
                "parameter '{key}' must be nonnegative, got {v}"
            )))
        }
    }
}

/// Thermal term `U(S)` and its derivative: `α S` or `α exp(S)`.
#[derive(Clone, Copy)]
struct ThermalTerm {
    alpha: f64,
    exponential: bool,
}

impl ThermalTerm {
    fn value(&self, s: f64) -> f64 {
        if self.exponential {
            self.alpha * s.exp()
        } else {
            self.alpha * s
        }
    }

    fn derivative(&self, s: f64) -> f64 {
        if self.exponential {
            self.alpha * s.exp()
        } else {
            self.alpha
        }
    }
}

/// Builds a scenario from its name and parameter overrides.
pub fn build(name: &str, overrides: &BTreeMap<String, f64>) -> Result<BuiltScenario> {
    match name {
        "damped_oscillator_thermal" => build_damped_oscillator(overrides),
        "compartment_diffusion" => build_compartment_diffusion(overrides),
        "rigid_body_linear_friction" => build_rigid_body(overrides, false),
        "rigid_body_double_bracket" => build_rigid_body(overrides, true),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn build_damped_oscillator(overrides: &BTreeMap<String, f64>) -> Result<BuiltScenario> {
    let name = "damped_oscillator_thermal";
    let (_, defaults) = describe(name).unwrap();
    let defaults = defaults.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let params = Params::resolve(name, defaults, overrides)?;
    let mass = params.positive("mass")?;
    let spring = params.nonnegative("spring")?;
    let alpha = params.positive("alpha")?;
    let lambda = params.nonnegative("lambda")?;
    let thermal = ThermalTerm {
        alpha,
        exponential: params.flag("exp_entropy")?,
    };
    let sabotage = params.flag("sabotage")?;
    let fd_gradients = params.flag("fd_gradients")?;

    let dims = Dims::new(1, 0);
    let value = move |x: &ThermoMechState| {
        x.p[0] * x.p[0] / (2.0 * mass) + 0.5 * spring * x.q[0] * x.q[0] + thermal.value(x.s)
    };
    let hamiltonian = if fd_gradients {
        Observable::numeric(value)
    } else {
        Observable::new(value, move |x: &ThermoMechState| StateVector {
            q: dvector![spring * x.q[0]],
            p: dvector![x.p[0] / mass],
            s: thermal.derivative(x.s),
            n: DVector::zeros(0),
        })
    };

    let builder = HamiltonianSystem::builder(dims, hamiltonian).label(name);
    let system = if sabotage {
        builder
            .friction(move |_, v: &DVector<f64>, _| v * lambda)
            .build()?
    } else {
        builder
            .linear_laws(
                move |_, _| DMatrix::from_element(1, 1, lambda),
                |_, _| DMatrix::zeros(0, 0),
            )
            .build()?
    };

    let initial = ThermoMechState::mechanical(&[params.get("q0")], &[params.get("p0")], params.get("s0"));
    Ok(BuiltScenario::Canonical {
        spec: ScenarioSpec {
            name,
            parameters: params.resolved,
            step: 1e-3,
            t_end: 10.0,
            expected_checks: vec![
                "single_hh_zero",
                "single_sh_nonneg",
                "double_hs_zero",
                "double_ss_nonneg",
                "met_hg_zero",
                "met_gg_nonneg",
                "energy_conservation",
                "entropy_monotonicity",
                "equiv_single",
                "equiv_double",
                "equiv_metriplectic",
            ],
            orbit_preserving: None,
        },
        system,
        initial,
    })
}

fn build_compartment_diffusion(overrides: &BTreeMap<String, f64>) -> Result<BuiltScenario> {
    let name = "compartment_diffusion";
    // The parameter table grows with the compartment count, so resolve the
    // count first and then expand the defaults.
    let count = match overrides.get("compartments") {
        None => 2usize,
        Some(v) if *v >= 1.0 && v.fract() == 0.0 && *v <= 16.0 => *v as usize,
        Some(v) => {
            return Err(Error::InvalidParameter(format!(
                "parameter 'compartments' must be an integer in 1..=16, got {v}"
            )))
        }
    };
    let mut defaults: Vec<(String, f64)> = [
        ("compartments", count as f64),
        ("alpha", 1.0),
        ("g", 1.0),
        ("exp_entropy", 0.0),
        ("fd_gradients", 0.0),
        ("sabotage", 0.0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    // Per-compartment keys: stiffness c_k (default 1) and initial moles
    // n0_k (default: 2 moles in the first compartment, the rest empty).
    let c_keys: Vec<String> = (1..=count).map(|k| format!("c{k}")).collect();
    let n_keys: Vec<String> = (1..=count).map(|k| format!("n0_{k}")).collect();
    for key in &c_keys {
        defaults.push((key.clone(), 1.0));
    }
    for (i, key) in n_keys.iter().enumerate() {
        defaults.push((key.clone(), if i == 0 { 2.0 } else { 0.0 }));
    }
    let params = Params::resolve(name, defaults, overrides)?;
    let alpha = params.positive("alpha")?;
    let g = params.nonnegative("g")?;
    let thermal = ThermalTerm {
        alpha,
        exponential: params.flag("exp_entropy")?,
    };
    let sabotage = params.flag("sabotage")?;
    let fd_gradients = params.flag("fd_gradients")?;
    let stiffness =
        DVector::from_iterator(count, c_keys.iter().map(|k| params.get(k)));
    let initial_moles = {
        let mut n0 = DVector::zeros(count);
        for (i, key) in n_keys.iter().enumerate() {
            n0[i] = params.nonnegative(key)?;
        }
        n0
    };

    let dims = Dims::new(1, count);
    let c_val = stiffness.clone();
    let value = move |x: &ThermoMechState| {
        thermal.value(x.s) + 0.5 * x.n.iter().zip(c_val.iter()).map(|(n, c)| c * n * n).sum::<f64>()
    };
    let hamiltonian = if fd_gradients {
        Observable::numeric(value)
    } else {
        let c_grad = stiffness.clone();
        Observable::new(value, move |x: &ThermoMechState| StateVector {
            q: DVector::zeros(1),
            p: DVector::zeros(1),
            s: thermal.derivative(x.s),
            n: x.n.component_mul(&c_grad),
        })
    };

    let builder = HamiltonianSystem::builder(dims, hamiltonian).label(name);
    let system = if sabotage {
        // Fluxes run up the chemical-potential gradient.
        builder
            .flux(move |_, _: &DVector<f64>, mu: &DVector<f64>| {
                let k = mu.len();
                let mut j = DMatrix::zeros(k, k);
                for a in 0..k {
                    for b in (a + 1)..k {
                        let val = g * (mu[a] - mu[b]);
                        j[(a, b)] = val;
                        j[(b, a)] = -val;
                    }
                }
                j
            })
            .build()?
    } else {
        builder
            .linear_laws(
                |_, _| DMatrix::zeros(1, 1),
                move |_, n: &DVector<f64>| {
                    let k = n.len();
                    DMatrix::from_fn(k, k, |a, b| if a == b { 0.0 } else { g })
                },
            )
            .build()?
    };

    let initial = ThermoMechState::new(dvector![0.0], dvector![0.0], 0.0, initial_moles);
    Ok(BuiltScenario::Canonical {
        spec: ScenarioSpec {
            name,
            parameters: params.resolved,
            step: 1e-3,
            t_end: 5.0,
            expected_checks: vec![
                "single_hh_zero",
                "single_sh_nonneg",
                "double_hs_zero",
                "double_ss_nonneg",
                "met_hg_zero",
                "met_gg_nonneg",
                "secondlaw_flux",
                "mass_conservation",
                "entropy_monotonicity",
                "equiv_single",
                "equiv_double",
                "equiv_metriplectic",
            ],
            orbit_preserving: None,
        },
        system,
        initial,
    })
}

fn build_rigid_body(
    overrides: &BTreeMap<String, f64>,
    double_bracket: bool,
) -> Result<BuiltScenario> {
    let name = if double_bracket {
        "rigid_body_double_bracket"
    } else {
        "rigid_body_linear_friction"
    };
    let (_, defaults) = describe(name).unwrap();
    let defaults = defaults.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let params = Params::resolve(name, defaults, overrides)?;
    let inertia = [
        params.positive("i1")?,
        params.positive("i2")?,
        params.positive("i3")?,
    ];
    let alpha = params.positive("alpha")?;
    let gamma = params.positive("gamma")?;
    let thermal = ThermalTerm {
        alpha,
        exponential: params.flag("exp_entropy")?,
    };
    let sabotage = params.flag("sabotage")?;
    let fd_gradients = params.flag("fd_gradients")?;

    let value = move |x: &ReducedState| {
        0.5 * (0..3).map(|i| x.mu[i] * x.mu[i] / inertia[i]).sum::<f64>() + thermal.value(x.s)
    };
    let h = if fd_gradients {
        ReducedObservable::numeric(value)
    } else {
        ReducedObservable::new(value, move |x: &ReducedState| ReducedVector {
            mu: DVector::from_fn(3, |i, _| x.mu[i] / inertia[i]),
            n: DVector::zeros(0),
            s: thermal.derivative(x.s),
        })
    };

    // `gamma` scales the friction map for linear friction and the algebra
    // inner product (hence the sharp map) for double-bracket friction.
    let algebra = if double_bracket {
        LieAlgebraStructure::so3_with_gamma(DMatrix::identity(3, 3) * gamma)?
    } else {
        LieAlgebraStructure::so3()
    };

    let builder = ReducedSystem::builder(algebra, h).casimir(Casimir::half_norm_squared());
    let system = match (double_bracket, sabotage) {
        (false, false) => builder
            .friction_linear(move |_, _| DMatrix::identity(3, 3) * gamma)
            .build()?,
        (true, false) => builder.friction_double_bracket().build()?,
        // Sabotage: anti-dissipative friction +γΩ regardless of the nominal
        // friction law; the sign checks fail, the degeneracies survive.
        (_, true) => builder
            .friction_custom(move |xi: &DVector<f64>, _, _| xi * gamma)
            .build()?,
    };

    let mut mu0 = dvector![params.get("mu0_1"), params.get("mu0_2"), params.get("mu0_3")];
    let norm = mu0.norm();
    if norm == 0.0 {
        return Err(Error::InvalidParameter(
            "initial momentum must be nonzero".into(),
        ));
    }
    mu0 /= norm;
    let initial = ReducedState::new(mu0, DVector::zeros(0), params.get("s0"));

    let mut expected_checks = vec![
        "red_single_hh_zero",
        "red_single_sh_nonneg",
        "red_double_hs_zero",
        "red_double_ss_nonneg",
        "energy_conservation",
        "entropy_monotonicity",
        "equiv_red_single",
        "equiv_red_double",
    ];
    if double_bracket {
        expected_checks.extend(["orbit_hg_zero", "orbit_gg_nonneg", "equiv_orbit", "casimir_drift"]);
    } else {
        expected_checks.extend(["red_met_hg_zero", "red_met_gg_nonneg", "equiv_red_metriplectic", "casimir_decrease"]);
    }

    Ok(BuiltScenario::Reduced {
        spec: ScenarioSpec {
            name,
            parameters: params.resolved,
            step: 1e-3,
            t_end: 10.0,
            expected_checks,
            orbit_preserving: Some(double_bracket),
        },
        system,
        initial,
    })
}
