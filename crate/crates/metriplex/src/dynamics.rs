//! Direct time evolution and thermodynamic diagnostics.
//!
//! The evolution equations read, with `v = ∂H/∂p`, `T = ∂H/∂S`, and
//! `μ_k = ∂H/∂N_k`:
//!
//! ```text
//! q̇ = ∂H/∂p
//! ṗ = -∂H/∂q + F^fr(q, v, S) + F^ext(q, v, S)
//! Ṅ_k = Σ_l J[k][l]
//! Ṡ = -(1/T) [ ⟨F^fr, v⟩ + Σ_{k<l} J[k][l] (μ_k - μ_l) ]
//! ```
//!
//! Integration uses classical fixed-step RK4: equivalence tests between the
//! bracket formulations require identical time grids, which adaptive
//! stepping would break.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::systems::{HamiltonianSystem, StateVector, ThermoMechState};
use crate::TEMPERATURE_FLOOR;

/// Σ_{k<l} J[k][l] (w_k - w_l) for an antisymmetric flux matrix and
/// compartment weights `w`.
pub(crate) fn flux_pair_sum(flux: &DMatrix<f64>, weights: &DVector<f64>) -> f64 {
    let k = weights.len();
    let mut total = 0.0;
    for a in 0..k {
        for b in (a + 1)..k {
            total += flux[(a, b)] * (weights[a] - weights[b]);
        }
    }
    total
}

pub(crate) fn check_temperature(t: f64) -> Result<f64> {
    if t.abs() < TEMPERATURE_FLOOR {
        Err(Error::ZeroTemperature {
            value: t.abs(),
            floor: TEMPERATURE_FLOOR,
        })
    } else {
        Ok(t)
    }
}

/// Right-hand side of the evolution equations at `x`.
pub fn direct_vector_field(sys: &HamiltonianSystem, x: &ThermoMechState) -> Result<StateVector> {
    let grad = sys.gradient(x)?;
    let temperature = check_temperature(grad.s)?;
    let velocity = &grad.p;
    let friction = sys.friction_force(&x.q, velocity, x.s);
    let flux = sys.flux_matrix(x.s, &x.n, &grad.n);

    let dims = sys.dims();
    let mut n_dot = DVector::zeros(dims.compartments);
    for k in 0..dims.compartments {
        n_dot[k] = flux.row(k).sum();
    }
    let dissipation = friction.dot(velocity) + flux_pair_sum(&flux, &grad.n);
    let mut p_dot = -&grad.q + friction;
    if sys.has_external_force() {
        p_dot += sys.external_force(&x.q, velocity, x.s);
    }

    Ok(StateVector {
        q: grad.p.clone(),
        p: p_dot,
        s: -dissipation / temperature,
        n: n_dot,
    })
}

/// Entropy production rate `Ṡ = -(1/T)⟨F^fr, q̇⟩ - (1/T)Σ_{k<l} J (μ_k - μ_l)`.
pub fn entropy_production_rate(sys: &HamiltonianSystem, x: &ThermoMechState) -> Result<f64> {
    let grad = sys.gradient(x)?;
    let temperature = check_temperature(grad.s)?;
    let friction = sys.friction_force(&x.q, &grad.p, x.s);
    let flux = sys.flux_matrix(x.s, &x.n, &grad.n);
    Ok(-(friction.dot(&grad.p) + flux_pair_sum(&flux, &grad.n)) / temperature)
}

/// Second-law audit over a sample of states: reports the largest observed
/// friction power `⟨F^fr, v⟩` and flux affinity product `J (μ_k - μ_l)`.
/// Any value above the threshold flags the system as inadmissible. This is
/// report-only; it never fails, so sabotaged systems can be characterized.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub max_friction_power: f64,
    pub max_flux_affinity: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub fn admissibility_audit(
    sys: &HamiltonianSystem,
    states: &[ThermoMechState],
) -> Result<AdmissibilityReport> {
    let threshold = 1e-12;
    let mut max_friction_power = 0.0f64;
    let mut max_flux_affinity = 0.0f64;
    for x in states {
        let grad = sys.gradient(x)?;
        let friction = sys.friction_force(&x.q, &grad.p, x.s);
        max_friction_power = max_friction_power.max(friction.dot(&grad.p));
        let flux = sys.flux_matrix(x.s, &x.n, &grad.n);
        for a in 0..x.n.len() {
            for b in (a + 1)..x.n.len() {
                max_flux_affinity = max_flux_affinity.max(flux[(a, b)] * (grad.n[a] - grad.n[b]));
            }
        }
    }
    let pass = max_friction_power <= threshold && max_flux_affinity <= threshold;
    Ok(AdmissibilityReport {
        max_friction_power,
        max_flux_affinity,
        threshold,
        pass,
    })
}

/// What to do when a mole number crosses zero during integration. The
/// equations place no positivity mechanism on `N_k`, so crossings indicate a
/// modeling choice rather than a numerical bug.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MolePolicy {
    /// Record a warning on the trajectory and keep integrating.
    #[default]
    Warn,
    /// Stop with [`Error::NegativeMoles`].
    Abort,
    Ignore,
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    /// Record every `stride`-th step (the initial and final states are
    /// always recorded).
    pub stride: usize,
    pub mole_policy: MolePolicy,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            mole_policy: MolePolicy::default(),
        }
    }
}

/// Per-sample diagnostics recorded along a trajectory.
#[derive(Debug, Clone)]
pub struct SampleDiagnostics {
    pub energy: f64,
    pub entropy: f64,
    pub total_moles: f64,
    /// Entropy production rate σ.
    pub entropy_production: f64,
    /// Temperature `T = ∂H/∂S`.
    pub temperature: f64,
    pub chemical_potentials: DVector<f64>,
    /// Thermodynamic displacements `W_k`, the time primitives of the
    /// chemical potentials with the gauge `W_k(t_1) = 0`.
    pub displacements: DVector<f64>,
}

/// A recorded trajectory with diagnostics, sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ThermoMechState>,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV export with the fixed column order
    /// `t, q_1..q_n, p_1..p_n, S, N_1..N_K, H, T, sigma, W_1..W_K, totalN`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let dims = self.states[0].dims();
        let mut header: Vec<String> = vec!["t".into()];
        header.extend((1..=dims.dof).map(|i| format!("q_{i}")));
        header.extend((1..=dims.dof).map(|i| format!("p_{i}")));
        header.push("S".into());
        header.extend((1..=dims.compartments).map(|k| format!("N_{k}")));
        header.extend(["H".into(), "T".into(), "sigma".into()]);
        header.extend((1..=dims.compartments).map(|k| format!("W_{k}")));
        header.push("totalN".into());
        writeln!(out, "{}", header.join(","))?;

        for ((t, state), diag) in self.times.iter().zip(&self.states).zip(&self.diagnostics) {
            let mut row: Vec<String> = vec![format!("{t}")];
            row.extend(state.q.iter().map(|v| format!("{v}")));
            row.extend(state.p.iter().map(|v| format!("{v}")));
            row.push(format!("{}", state.s));
            row.extend(state.n.iter().map(|v| format!("{v}")));
            row.push(format!("{}", diag.energy));
            row.push(format!("{}", diag.temperature));
            row.push(format!("{}", diag.entropy_production));
            row.extend(diag.displacements.iter().map(|v| format!("{v}")));
            row.push(format!("{}", diag.total_moles));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Minimal trajectory for a caller-supplied vector field, without
/// system-level diagnostics.
#[derive(Debug, Clone)]
pub struct FieldTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ThermoMechState>,
}

/// Step count and effective step for a run to exactly `t_end`.
pub(crate) fn grid(t_end: f64, h: f64) -> Result<(usize, f64)> {
    if h.is_nan() || h <= 0.0 || t_end.is_nan() || t_end <= 0.0 {
        return Err(Error::InvalidParameter(
            "integration requires h > 0 and t_end > 0".into(),
        ));
    }
    let steps = (t_end / h).round().max(1.0) as usize;
    Ok((steps, t_end / steps as f64))
}

pub(crate) fn rk4_step<F>(field: &F, x: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = field(x)?;
    let k2 = field(&(x + &k1 * (h / 2.0)))?;
    let k3 = field(&(x + &k2 * (h / 2.0)))?;
    let k4 = field(&(x + &k3 * h))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Fixed-step RK4 integration of an arbitrary state field.
///
/// The step is adjusted to `t_end / round(t_end / h)` so the final sample
/// lands exactly on `t_end`.
pub fn integrate_field<F>(
    field: F,
    x0: &ThermoMechState,
    t_end: f64,
    h: f64,
    stride: usize,
) -> Result<FieldTrajectory>
where
    F: Fn(&ThermoMechState) -> Result<StateVector>,
{
    let dims = x0.dims();
    let (steps, h) = grid(t_end, h)?;
    let stride = stride.max(1);
    let flat_field = |flat: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(field(&ThermoMechState::from_flat(dims, flat))?.flatten())
    };
    let mut flat = x0.flatten();
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    for step in 1..=steps {
        let t = step as f64 * h;
        flat = rk4_step(&flat_field, &flat, h).map_err(|e| e.with_time(t))?;
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergedAt { time: t });
        }
        if step % stride == 0 || step == steps {
            times.push(t);
            states.push(ThermoMechState::from_flat(dims, &flat));
        }
    }
    Ok(FieldTrajectory { times, states })
}

/// Integrates a system with full diagnostics.
///
/// Displacements `W_k` are accumulated by the trapezoidal rule over the
/// chemical potentials at every internal step, not only at recorded samples.
pub fn integrate(
    sys: &HamiltonianSystem,
    x0: &ThermoMechState,
    t_end: f64,
    h: f64,
    options: &IntegrateOptions,
) -> Result<Trajectory> {
    x0.validate_initial()?;
    let dims = sys.dims();
    let (steps, h) = grid(t_end, h)?;
    let stride = options.stride.max(1);

    let flat_field = |flat: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(direct_vector_field(sys, &ThermoMechState::from_flat(dims, flat))?.flatten())
    };

    let diagnostics_at = |x: &ThermoMechState, w: &DVector<f64>| -> Result<SampleDiagnostics> {
        let grad = sys.gradient(x)?;
        Ok(SampleDiagnostics {
            energy: sys.energy(x),
            entropy: x.s,
            total_moles: x.n.sum(),
            entropy_production: entropy_production_rate(sys, x)?,
            temperature: grad.s,
            chemical_potentials: grad.n,
            displacements: w.clone(),
        })
    };

    let mut flat = x0.flatten();
    let mut displacements = DVector::zeros(dims.compartments);
    let mut mu_prev = sys.gradient(x0)?.n;
    let mut was_nonnegative: Vec<bool> = x0.n.iter().map(|&v| v >= 0.0).collect();

    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut diagnostics = vec![diagnostics_at(x0, &displacements)?];
    let mut warnings = Vec::new();

    for step in 1..=steps {
        let t = step as f64 * h;
        flat = rk4_step(&flat_field, &flat, h).map_err(|e| e.with_time(t))?;
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergedAt { time: t });
        }
        let state = ThermoMechState::from_flat(dims, &flat);

        for (k, nonnegative) in was_nonnegative.iter_mut().enumerate() {
            if state.n[k] < 0.0 && *nonnegative {
                match options.mole_policy {
                    MolePolicy::Abort => {
                        return Err(Error::NegativeMoles {
                            compartment: k,
                            time: t,
                        })
                    }
                    MolePolicy::Warn => {
                        warnings.push(format!("mole number N_{k} crossed zero at t = {t}"));
                        *nonnegative = false;
                    }
                    MolePolicy::Ignore => *nonnegative = false,
                }
            }
        }

        let mu = sys.gradient(&state).map_err(|e| e.with_time(t))?.n;
        displacements += (&mu_prev + &mu) * (h / 2.0);
        mu_prev = mu;

        if step % stride == 0 || step == steps {
            times.push(t);
            diagnostics.push(diagnostics_at(&state, &displacements).map_err(|e| e.with_time(t))?);
            states.push(state);
        }
    }

    Ok(Trajectory {
        times,
        states,
        diagnostics,
        warnings,
    })
}
