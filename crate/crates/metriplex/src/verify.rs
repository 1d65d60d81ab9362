//! Named, seeded, reportable numerical checks of every bracket axiom and
//! conservation law.
//!
//! Checks never throw on violation; they record residuals, so sabotaged
//! systems can be characterized by the same machinery that certifies sound
//! ones. Reports are deterministic given a seed: identical inputs produce
//! byte-identical JSON.

use nalgebra::DVector;
use serde::Serialize;

use crate::brackets::{
    self, canonical_poisson, dissipative_field_double, dissipative_field_metriplectic,
    dissipative_field_single, hamiltonian_field, FlatObservable, PoissonStructure,
};
use crate::dynamics::{direct_vector_field, Trajectory};
use crate::error::Result;
use crate::reduction::{
    self, lie_poisson_bracket, orbit_metriplectic_bracket, reduced_double_bracket,
    reduced_dissipative_field_double, reduced_dissipative_field_metriplectic,
    reduced_dissipative_field_orbit, reduced_dissipative_field_single, reduced_hamiltonian_field,
    reduced_metriplectic_bracket, reduced_single_bracket, reduced_vector_field, ReducedObservable,
    ReducedRegion, ReducedSystem, ReducedTrajectory,
};
use crate::rng::SeededRng;
use crate::systems::{HamiltonianSystem, Observable, StateRegion};

/// Thresholds used by the check suites, pinned at construction.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    /// Algebraic identities evaluated with analytic gradients.
    pub algebraic: f64,
    /// Degeneracy magnitudes (`[H,H]`, `(H,S)`, metriplectic rows).
    pub degeneracy: f64,
    /// Sign violations of the second-law inequalities.
    pub sign: f64,
    /// Sign violations of the metriplectic positivity.
    pub met_sign: f64,
    /// Leibniz-rule residuals.
    pub leibniz: f64,
    /// Bilinearity residuals.
    pub bilinear: f64,
    /// Assembled-field comparisons against the direct vector field.
    pub assembled: f64,
    /// Checks limited by finite-difference accuracy.
    pub fd_limited: f64,
    /// Relative energy drift along a trajectory.
    pub energy_drift: f64,
    /// Permitted per-step entropy decrease.
    pub entropy_decrement: f64,
    /// Total-mole drift along a trajectory.
    pub mole_drift: f64,
    /// Casimir drift for orbit-preserving friction.
    pub casimir_drift: f64,
}

impl Tolerances {
    /// Defaults for systems with analytic gradients.
    pub fn analytic() -> Self {
        Self {
            algebraic: 1e-12,
            degeneracy: 1e-10,
            sign: 1e-12,
            met_sign: 1e-10,
            leibniz: 1e-9,
            bilinear: 1e-10,
            assembled: 1e-9,
            fd_limited: 1e-6,
            energy_drift: 1e-6,
            entropy_decrement: 1e-9,
            mole_drift: 1e-9,
            casimir_drift: 1e-8,
        }
    }

    /// Defaults for finite-difference gradients: assembled-field agreement
    /// is limited by the difference step.
    pub fn finite_difference() -> Self {
        Self {
            assembled: 1e-5,
            ..Self::analytic()
        }
    }

    pub fn for_mode(analytic: bool) -> Self {
        if analytic {
            Self::analytic()
        } else {
            Self::finite_difference()
        }
    }
}

/// One named check: `pass == (residual <= threshold)`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Flat coordinates of the state that realized the residual, when the
    /// check samples states.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_state: Option<Vec<f64>>,
}

/// Collection of checks for one system, serializable to the report schema.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub system: String,
    pub gradient_mode: String,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn new(seed: u64, system: impl Into<String>, gradient_mode: &str) -> Self {
        Self {
            seed,
            system: system.into(),
            gradient_mode: gradient_mode.to_string(),
            checks: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Appends the checks of another report (suite fragments are merged
    /// into one document by the batch runner).
    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Residual accumulator tracking the worst offending state.
struct Tracker {
    residual: f64,
    worst: Option<Vec<f64>>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            residual: 0.0,
            worst: None,
        }
    }

    fn update(&mut self, value: f64, state: &DVector<f64>) {
        if value > self.residual || self.worst.is_none() {
            self.residual = self.residual.max(value);
            self.worst = Some(state.iter().cloned().collect());
        }
    }

    fn into_check(self, name: &str, threshold: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            residual: self.residual,
            threshold,
            pass: self.residual <= threshold,
            worst_state: self.worst,
        }
    }
}

fn violation(value: f64) -> f64 {
    (-value).max(0.0)
}

/// Check names emitted by [`check_axioms`] for a canonical system.
pub fn expected_canonical_checks(has_transport: bool) -> Vec<&'static str> {
    let mut names = vec![
        "poisson_antisymmetry",
        "poisson_leibniz",
        "poisson_hs_zero",
        "poisson_gs_zero",
        "single_hh_zero",
        "single_sh_nonneg",
        "single_bilinear",
        "single_leibniz",
        "double_symmetry",
        "double_bilinear",
        "double_leibniz",
        "double_hs_zero",
        "double_ss_nonneg",
        "double_matches_single",
        "flux_antisymmetry",
        "secondlaw_friction",
        "secondlaw_flux",
    ];
    if has_transport {
        names.extend(["met_hg_zero", "met_gg_nonneg", "met_ss_matches_double"]);
    }
    names.push("temperature_floor");
    names
}

/// Check names emitted by [`check_axioms_reduced`].
pub fn expected_reduced_checks(
    linear_friction: bool,
    double_bracket: bool,
    has_quotient: bool,
    has_casimirs: bool,
) -> Vec<&'static str> {
    let mut names = vec![
        "lp_antisymmetry",
        "lp_leibniz",
        "lp_hs_zero",
        "red_single_hh_zero",
        "red_single_sh_nonneg",
        "red_single_bilinear",
        "red_single_leibniz",
        "red_double_symmetry",
        "red_double_bilinear",
        "red_double_leibniz",
        "red_double_hs_zero",
        "red_double_ss_nonneg",
        "red_double_matches_single",
        "secondlaw_reduced_friction",
    ];
    if has_quotient {
        names.push("generator_momentum_identity");
    }
    if has_casimirs {
        names.push("casimir_commutes");
    }
    if linear_friction {
        names.extend(["red_met_hg_zero", "red_met_gg_nonneg", "red_met_ss_matches_double"]);
    }
    if double_bracket {
        names.extend([
            "orbit_hg_zero",
            "orbit_gg_nonneg",
            "orbit_symmetry",
            "dbf_dissipative",
            "dbf_orbit_tangency",
        ]);
    }
    names.push("temperature_floor");
    names
}

fn assert_ledger_complete(report: &VerificationReport, expected: &[&str]) {
    let emitted: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(
        emitted, expected,
        "axiom ledger mismatch: a registered bracket is missing its checks"
    );
}

/// Runs the full degeneracy/symmetry/sign/Leibniz/bilinearity ledger for a
/// canonical system at seeded random states and observables.
pub fn check_axioms(
    sys: &HamiltonianSystem,
    n_states: usize,
    n_observables: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let tol = Tolerances::for_mode(sys.gradient_mode() == "analytic");
    let dims = sys.dims();
    let mut rng = SeededRng::new(seed);
    let region = StateRegion::standard(dims);
    let states: Vec<_> = (0..n_states).map(|_| region.sample(&mut rng)).collect();
    let observables: Vec<Observable> = (0..n_observables.max(3))
        .map(|_| Observable::random_quadratic(dims, &mut rng))
        .collect();
    let flats: Vec<FlatObservable> = observables.iter().map(|o| o.to_flat(dims)).collect();
    let entropy = Observable::entropy(dims);
    let flat_entropy = entropy.to_flat(dims);
    let flat_h = sys.hamiltonian().to_flat(dims);
    let poisson = canonical_poisson(dims);
    let has_transport = sys.linear_transport().is_some();

    let mut poisson_antisymmetry = Tracker::new();
    let mut poisson_leibniz = Tracker::new();
    let mut poisson_hs = Tracker::new();
    let mut poisson_gs = Tracker::new();
    let mut single_hh = Tracker::new();
    let mut single_sh = Tracker::new();
    let mut single_bilinear = Tracker::new();
    let mut single_leibniz = Tracker::new();
    let mut double_symmetry = Tracker::new();
    let mut double_bilinear = Tracker::new();
    let mut double_leibniz = Tracker::new();
    let mut double_hs = Tracker::new();
    let mut double_ss = Tracker::new();
    let mut double_matches = Tracker::new();
    let mut flux_antisym = Tracker::new();
    let mut friction_power = Tracker::new();
    let mut flux_affinity = Tracker::new();
    let mut met_hg = Tracker::new();
    let mut met_gg = Tracker::new();
    let mut met_ss = Tracker::new();
    let mut temperature_floor = Tracker::new();

    for x in &states {
        let flat = x.flatten();
        // A state below the temperature floor is recorded as a failure of
        // the temperature_floor check, not a crash; the brackets are simply
        // not evaluated there.
        let evaluated = evaluate_canonical_state(
            sys,
            x,
            &observables,
            &flats,
            &entropy,
            &flat_entropy,
            &flat_h,
            &poisson,
            has_transport,
            CanonicalTrackers {
                poisson_antisymmetry: &mut poisson_antisymmetry,
                poisson_leibniz: &mut poisson_leibniz,
                poisson_hs: &mut poisson_hs,
                poisson_gs: &mut poisson_gs,
                single_hh: &mut single_hh,
                single_sh: &mut single_sh,
                single_bilinear: &mut single_bilinear,
                single_leibniz: &mut single_leibniz,
                double_symmetry: &mut double_symmetry,
                double_bilinear: &mut double_bilinear,
                double_leibniz: &mut double_leibniz,
                double_hs: &mut double_hs,
                double_ss: &mut double_ss,
                double_matches: &mut double_matches,
                flux_antisym: &mut flux_antisym,
                friction_power: &mut friction_power,
                flux_affinity: &mut flux_affinity,
                met_hg: &mut met_hg,
                met_gg: &mut met_gg,
                met_ss: &mut met_ss,
            },
        );
        match evaluated {
            Ok(()) => {}
            Err(crate::Error::ZeroTemperature { .. }) => {
                temperature_floor.update(temperature_floor.residual + 1.0, &flat);
            }
            Err(other) => return Err(other),
        }
    }

    let mut report = VerificationReport::new(seed, "canonical", sys.gradient_mode());
    report.checks.push(poisson_antisymmetry.into_check("poisson_antisymmetry", tol.algebraic));
    report.checks.push(poisson_leibniz.into_check("poisson_leibniz", tol.fd_limited.min(1e-10)));
    report.checks.push(poisson_hs.into_check("poisson_hs_zero", tol.degeneracy));
    report.checks.push(poisson_gs.into_check("poisson_gs_zero", tol.degeneracy));
    report.checks.push(single_hh.into_check("single_hh_zero", tol.degeneracy));
    report.checks.push(single_sh.into_check("single_sh_nonneg", tol.sign));
    report.checks.push(single_bilinear.into_check("single_bilinear", tol.bilinear));
    report.checks.push(single_leibniz.into_check("single_leibniz", tol.leibniz));
    report.checks.push(double_symmetry.into_check("double_symmetry", tol.algebraic));
    report.checks.push(double_bilinear.into_check("double_bilinear", tol.bilinear));
    report.checks.push(double_leibniz.into_check("double_leibniz", tol.leibniz));
    report.checks.push(double_hs.into_check("double_hs_zero", tol.degeneracy));
    report.checks.push(double_ss.into_check("double_ss_nonneg", tol.sign));
    report.checks.push(double_matches.into_check("double_matches_single", tol.algebraic));
    report.checks.push(flux_antisym.into_check("flux_antisymmetry", tol.algebraic));
    report.checks.push(friction_power.into_check("secondlaw_friction", tol.sign));
    report.checks.push(flux_affinity.into_check("secondlaw_flux", tol.sign));
    if has_transport {
        report.checks.push(met_hg.into_check("met_hg_zero", tol.degeneracy));
        report.checks.push(met_gg.into_check("met_gg_nonneg", tol.met_sign));
        report.checks.push(met_ss.into_check("met_ss_matches_double", tol.algebraic));
    }
    report.checks.push(temperature_floor.into_check("temperature_floor", 0.0));
    assert_ledger_complete(&report, &expected_canonical_checks(has_transport));
    Ok(report)
}

struct CanonicalTrackers<'a> {
    poisson_antisymmetry: &'a mut Tracker,
    poisson_leibniz: &'a mut Tracker,
    poisson_hs: &'a mut Tracker,
    poisson_gs: &'a mut Tracker,
    single_hh: &'a mut Tracker,
    single_sh: &'a mut Tracker,
    single_bilinear: &'a mut Tracker,
    single_leibniz: &'a mut Tracker,
    double_symmetry: &'a mut Tracker,
    double_bilinear: &'a mut Tracker,
    double_leibniz: &'a mut Tracker,
    double_hs: &'a mut Tracker,
    double_ss: &'a mut Tracker,
    double_matches: &'a mut Tracker,
    flux_antisym: &'a mut Tracker,
    friction_power: &'a mut Tracker,
    flux_affinity: &'a mut Tracker,
    met_hg: &'a mut Tracker,
    met_gg: &'a mut Tracker,
    met_ss: &'a mut Tracker,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_canonical_state(
    sys: &HamiltonianSystem,
    x: &crate::systems::ThermoMechState,
    observables: &[Observable],
    flats: &[FlatObservable],
    entropy: &Observable,
    flat_entropy: &FlatObservable,
    flat_h: &FlatObservable,
    poisson: &PoissonStructure,
    has_transport: bool,
    t: CanonicalTrackers<'_>,
) -> Result<()> {
    let dims = sys.dims();
    let flat = x.flatten();
    let grad = sys.gradient(x)?;

    // Reversible-bracket structure.
    for i in 0..flats.len() {
        let j = (i + 1) % flats.len();
        let fg = poisson.evaluate(&flats[i], &flats[j], &flat)?;
        let gf = poisson.evaluate(&flats[j], &flats[i], &flat)?;
        t.poisson_antisymmetry.update((fg + gf).abs(), &flat);
        t.poisson_gs.update(
            poisson.evaluate(&flats[i], flat_entropy, &flat)?.abs(),
            &flat,
        );

        let k = (i + 2) % flats.len();
        let product = FlatObservable::product(&flats[i], &flats[j]);
        let lhs = poisson.evaluate(&product, &flats[k], &flat)?;
        let rhs = flats[i].value(&flat) * poisson.evaluate(&flats[j], &flats[k], &flat)?
            + flats[j].value(&flat) * poisson.evaluate(&flats[i], &flats[k], &flat)?;
        t.poisson_leibniz.update((lhs - rhs).abs(), &flat);
    }
    t.poisson_hs
        .update(poisson.evaluate(flat_h, flat_entropy, &flat)?.abs(), &flat);

    // Dissipation brackets.
    t.single_hh.update(
        brackets::single_generator_bracket(sys, sys.hamiltonian(), x)?.abs(),
        &flat,
    );
    t.single_sh.update(
        violation(brackets::single_generator_bracket(sys, entropy, x)?),
        &flat,
    );
    t.double_hs.update(
        brackets::double_generator_bracket(sys, sys.hamiltonian(), entropy, x)?.abs(),
        &flat,
    );
    let ss = brackets::double_generator_bracket(sys, entropy, entropy, x)?;
    t.double_ss.update(violation(ss), &flat);

    for i in 0..observables.len() {
        let j = (i + 1) % observables.len();
        let k = (i + 2) % observables.len();
        let (f, g, h) = (&observables[i], &observables[j], &observables[k]);

        let fg = brackets::double_generator_bracket(sys, f, g, x)?;
        let gf = brackets::double_generator_bracket(sys, g, f, x)?;
        t.double_symmetry.update((fg - gf).abs(), &flat);

        let fs = brackets::double_generator_bracket(sys, f, entropy, x)?;
        let fh = brackets::single_generator_bracket(sys, f, x)?;
        t.double_matches.update((fs - fh).abs(), &flat);

        let combo = Observable::linear_combination(0.75, f, -1.25, g);
        let lhs = brackets::single_generator_bracket(sys, &combo, x)?;
        let rhs = 0.75 * fh - 1.25 * brackets::single_generator_bracket(sys, g, x)?;
        t.single_bilinear.update((lhs - rhs).abs(), &flat);
        let lhs = brackets::double_generator_bracket(sys, &combo, h, x)?;
        let rhs = 0.75 * brackets::double_generator_bracket(sys, f, h, x)?
            - 1.25 * brackets::double_generator_bracket(sys, g, h, x)?;
        t.double_bilinear.update((lhs - rhs).abs(), &flat);

        let product = Observable::product(f, g);
        let lhs = brackets::single_generator_bracket(sys, &product, x)?;
        let rhs = f.value(x) * brackets::single_generator_bracket(sys, g, x)? + g.value(x) * fh;
        t.single_leibniz.update((lhs - rhs).abs(), &flat);
        let lhs = brackets::double_generator_bracket(sys, &product, h, x)?;
        let rhs = f.value(x) * brackets::double_generator_bracket(sys, g, h, x)?
            + g.value(x) * brackets::double_generator_bracket(sys, f, h, x)?;
        t.double_leibniz.update((lhs - rhs).abs(), &flat);

        if has_transport {
            t.met_hg.update(
                brackets::metriplectic_bracket(sys, sys.hamiltonian(), f, x)?.abs(),
                &flat,
            );
            t.met_gg.update(
                violation(brackets::metriplectic_bracket(sys, f, f, x)?),
                &flat,
            );
        }
    }

    if has_transport {
        let met_ss_value = brackets::metriplectic_bracket(sys, entropy, entropy, x)?;
        t.met_ss.update((met_ss_value - ss).abs(), &flat);
    }

    // Second-law admissibility and flux structure.
    let friction = sys.friction_force(&x.q, &grad.p, x.s);
    t.friction_power.update(friction.dot(&grad.p), &flat);
    let flux = sys.flux_matrix(x.s, &x.n, &grad.n);
    t.flux_antisym
        .update((&flux + flux.transpose()).amax(), &flat);
    for a in 0..dims.compartments {
        for b in (a + 1)..dims.compartments {
            t.flux_affinity
                .update(flux[(a, b)] * (grad.n[a] - grad.n[b]), &flat);
        }
    }
    Ok(())
}


/// Reduced-system analogue of [`check_axioms`].
pub fn check_axioms_reduced(
    sys: &ReducedSystem,
    n_states: usize,
    n_observables: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let tol = Tolerances::for_mode(sys.gradient_mode() == "analytic");
    let dims = sys.dims();
    let mut rng = SeededRng::new(seed);
    let region = ReducedRegion::standard(dims);
    let states: Vec<_> = (0..n_states).map(|_| region.sample(&mut rng)).collect();
    let observables: Vec<ReducedObservable> = (0..n_observables.max(3))
        .map(|_| ReducedObservable::random_quadratic(dims, &mut rng))
        .collect();
    let entropy = ReducedObservable::entropy(dims);
    let linear = sys.has_linear_friction();
    let double_bracket = sys.has_double_bracket_friction();
    let has_quotient = dims.quotient > 0;
    let has_casimirs = !sys.casimirs().is_empty();

    let mut lp_antisymmetry = Tracker::new();
    let mut lp_leibniz = Tracker::new();
    let mut lp_hs = Tracker::new();
    let mut single_hh = Tracker::new();
    let mut single_sh = Tracker::new();
    let mut single_bilinear = Tracker::new();
    let mut single_leibniz = Tracker::new();
    let mut double_symmetry = Tracker::new();
    let mut double_bilinear = Tracker::new();
    let mut double_leibniz = Tracker::new();
    let mut double_hs = Tracker::new();
    let mut double_ss = Tracker::new();
    let mut double_matches = Tracker::new();
    let mut reduced_friction_power = Tracker::new();
    let mut generator_identity = Tracker::new();
    let mut casimir_commutes = Tracker::new();
    let mut met_hg = Tracker::new();
    let mut met_gg = Tracker::new();
    let mut met_ss = Tracker::new();
    let mut orbit_hg = Tracker::new();
    let mut orbit_gg = Tracker::new();
    let mut orbit_symmetry = Tracker::new();
    let mut dbf_dissipative = Tracker::new();
    let mut dbf_tangency = Tracker::new();
    let mut temperature_floor = Tracker::new();

    for x in &states {
        let flat = x.flatten();
        let evaluated = {
        let mut body = || -> Result<()> {
        let grad = sys.gradient(x)?;

        lp_hs.update(
            lie_poisson_bracket(sys, sys.hamiltonian(), &entropy, x)?.abs(),
            &flat,
        );
        single_hh.update(
            reduced_single_bracket(sys, sys.hamiltonian(), x)?.abs(),
            &flat,
        );
        single_sh.update(violation(reduced_single_bracket(sys, &entropy, x)?), &flat);
        double_hs.update(
            reduced_double_bracket(sys, sys.hamiltonian(), &entropy, x)?.abs(),
            &flat,
        );
        let ss = reduced_double_bracket(sys, &entropy, &entropy, x)?;
        double_ss.update(violation(ss), &flat);

        for i in 0..observables.len() {
            let j = (i + 1) % observables.len();
            let k = (i + 2) % observables.len();
            let (f, g, h) = (&observables[i], &observables[j], &observables[k]);

            let fg = lie_poisson_bracket(sys, f, g, x)?;
            let gf = lie_poisson_bracket(sys, g, f, x)?;
            lp_antisymmetry.update((fg + gf).abs(), &flat);
            let product = ReducedObservable::product(f, g);
            let lhs = lie_poisson_bracket(sys, &product, h, x)?;
            let rhs = f.value(x) * lie_poisson_bracket(sys, g, h, x)?
                + g.value(x) * lie_poisson_bracket(sys, f, h, x)?;
            lp_leibniz.update((lhs - rhs).abs(), &flat);

            let fg = reduced_double_bracket(sys, f, g, x)?;
            let gf = reduced_double_bracket(sys, g, f, x)?;
            double_symmetry.update((fg - gf).abs(), &flat);

            let fs = reduced_double_bracket(sys, f, &entropy, x)?;
            let fh = reduced_single_bracket(sys, f, x)?;
            double_matches.update((fs - fh).abs(), &flat);

            let combo = ReducedObservable::linear_combination(0.75, f, -1.25, g);
            let lhs = reduced_single_bracket(sys, &combo, x)?;
            let rhs = 0.75 * fh - 1.25 * reduced_single_bracket(sys, g, x)?;
            single_bilinear.update((lhs - rhs).abs(), &flat);
            let lhs = reduced_double_bracket(sys, &combo, h, x)?;
            let rhs = 0.75 * reduced_double_bracket(sys, f, h, x)?
                - 1.25 * reduced_double_bracket(sys, g, h, x)?;
            double_bilinear.update((lhs - rhs).abs(), &flat);

            let lhs = reduced_single_bracket(sys, &product, x)?;
            let rhs = f.value(x) * reduced_single_bracket(sys, g, x)? + g.value(x) * fh;
            single_leibniz.update((lhs - rhs).abs(), &flat);
            let lhs = reduced_double_bracket(sys, &product, h, x)?;
            let rhs = f.value(x) * reduced_double_bracket(sys, g, h, x)?
                + g.value(x) * reduced_double_bracket(sys, f, h, x)?;
            double_leibniz.update((lhs - rhs).abs(), &flat);

            if linear {
                met_hg.update(
                    reduced_metriplectic_bracket(sys, sys.hamiltonian(), f, x)?.abs(),
                    &flat,
                );
                met_gg.update(
                    violation(reduced_metriplectic_bracket(sys, f, f, x)?),
                    &flat,
                );
            }
            if double_bracket {
                orbit_hg.update(
                    orbit_metriplectic_bracket(sys, sys.hamiltonian(), f, &x.mu, x.s)?.abs(),
                    &flat,
                );
                orbit_gg.update(
                    violation(orbit_metriplectic_bracket(sys, f, f, &x.mu, x.s)?),
                    &flat,
                );
                let fg = orbit_metriplectic_bracket(sys, f, g, &x.mu, x.s)?;
                let gf = orbit_metriplectic_bracket(sys, g, f, &x.mu, x.s)?;
                orbit_symmetry.update((fg - gf).abs(), &flat);
            }

            if has_casimirs {
                for casimir in sys.casimirs() {
                    let c = casimir.as_observable();
                    casimir_commutes.update(lie_poisson_bracket(sys, &c, f, x)?.abs(), &flat);
                }
            }
        }

        if linear {
            let met_ss_value = reduced_metriplectic_bracket(sys, &entropy, &entropy, x)?;
            met_ss.update((met_ss_value - ss).abs(), &flat);
        }

        let friction = sys.friction_force(x)?;
        reduced_friction_power.update(friction.dot(&grad.mu), &flat);

        if double_bracket {
            dbf_dissipative.update(friction.dot(&grad.mu), &flat);
            for casimir in sys.casimirs() {
                dbf_tangency.update(casimir.gradient(&x.mu).dot(&friction).abs(), &flat);
            }
        }

        if has_quotient {
            // ⟨J(n, α), ξ⟩ = ⟨α, B(n) ξ⟩ for random α, ξ.
            let alpha = rng.uniform_vector(dims.quotient, -1.0, 1.0);
            let xi = rng.uniform_vector(dims.algebra, -1.0, 1.0);
            let j = reduction::momentum_map(sys, &x.n, &alpha)?;
            let defect = (j.dot(&xi) - alpha.dot(&(sys.generator_at(&x.n) * &xi))).abs();
            generator_identity.update(defect, &flat);
        }
        Ok(())
        };
        body()
        };
        match evaluated {
            Ok(()) => {}
            Err(crate::Error::ZeroTemperature { .. }) => {
                temperature_floor.update(temperature_floor.residual + 1.0, &flat);
            }
            Err(other) => return Err(other),
        }
    }

    let mut report = VerificationReport::new(seed, "reduced", sys.gradient_mode());
    report.checks.push(lp_antisymmetry.into_check("lp_antisymmetry", tol.algebraic));
    report.checks.push(lp_leibniz.into_check("lp_leibniz", tol.leibniz.min(1e-10)));
    report.checks.push(lp_hs.into_check("lp_hs_zero", tol.degeneracy));
    report.checks.push(single_hh.into_check("red_single_hh_zero", tol.degeneracy));
    report.checks.push(single_sh.into_check("red_single_sh_nonneg", tol.sign));
    report.checks.push(single_bilinear.into_check("red_single_bilinear", tol.bilinear));
    report.checks.push(single_leibniz.into_check("red_single_leibniz", tol.leibniz));
    report.checks.push(double_symmetry.into_check("red_double_symmetry", tol.algebraic));
    report.checks.push(double_bilinear.into_check("red_double_bilinear", tol.bilinear));
    report.checks.push(double_leibniz.into_check("red_double_leibniz", tol.leibniz));
    report.checks.push(double_hs.into_check("red_double_hs_zero", tol.degeneracy));
    report.checks.push(double_ss.into_check("red_double_ss_nonneg", tol.sign));
    report.checks.push(double_matches.into_check("red_double_matches_single", tol.algebraic));
    report.checks.push(reduced_friction_power.into_check("secondlaw_reduced_friction", tol.sign));
    if has_quotient {
        report.checks.push(generator_identity.into_check("generator_momentum_identity", tol.algebraic));
    }
    if has_casimirs {
        report.checks.push(casimir_commutes.into_check("casimir_commutes", tol.algebraic));
    }
    if linear {
        report.checks.push(met_hg.into_check("red_met_hg_zero", tol.degeneracy));
        report.checks.push(met_gg.into_check("red_met_gg_nonneg", tol.met_sign));
        report.checks.push(met_ss.into_check("red_met_ss_matches_double", tol.algebraic));
    }
    if double_bracket {
        report.checks.push(orbit_hg.into_check("orbit_hg_zero", tol.degeneracy));
        report.checks.push(orbit_gg.into_check("orbit_gg_nonneg", tol.met_sign));
        report.checks.push(orbit_symmetry.into_check("orbit_symmetry", tol.assembled));
        report.checks.push(dbf_dissipative.into_check("dbf_dissipative", tol.sign));
        report.checks.push(dbf_tangency.into_check("dbf_orbit_tangency", tol.algebraic));
    }
    report.checks.push(temperature_floor.into_check("temperature_floor", 0.0));
    assert_ledger_complete(
        &report,
        &expected_reduced_checks(linear, double_bracket, has_quotient, has_casimirs),
    );
    Ok(report)
}

/// First law, second law, and mass conservation along a recorded trajectory.
pub fn check_laws(traj: &Trajectory, tol_energy: f64, tol_entropy: f64) -> VerificationReport {
    let mut report = VerificationReport::new(0, "trajectory", "n/a");
    let h0 = traj.diagnostics[0].energy;
    let mut energy = Tracker::new();
    let mut entropy = Tracker::new();
    let mut moles = Tracker::new();
    let n0 = traj.diagnostics[0].total_moles;
    for (i, diag) in traj.diagnostics.iter().enumerate() {
        let flat = traj.states[i].flatten();
        energy.update((diag.energy - h0).abs() / h0.abs().max(1.0), &flat);
        if i > 0 {
            entropy.update(violation(diag.entropy - traj.diagnostics[i - 1].entropy), &flat);
        }
        moles.update((diag.total_moles - n0).abs(), &flat);
    }
    report.checks.push(energy.into_check("energy_conservation", tol_energy));
    report.checks.push(entropy.into_check("entropy_monotonicity", tol_entropy));
    if traj.states[0].dims().compartments > 0 {
        report
            .checks
            .push(moles.into_check("mass_conservation", Tolerances::analytic().mole_drift));
    }
    report
}

/// Reduced-trajectory version of [`check_laws`] (no mole variables).
pub fn check_laws_reduced(
    traj: &ReducedTrajectory,
    tol_energy: f64,
    tol_entropy: f64,
) -> VerificationReport {
    let mut report = VerificationReport::new(0, "reduced trajectory", "n/a");
    let h0 = traj.energies[0];
    let mut energy = Tracker::new();
    let mut entropy = Tracker::new();
    for (i, h) in traj.energies.iter().enumerate() {
        let flat = traj.states[i].flatten();
        energy.update((h - h0).abs() / h0.abs().max(1.0), &flat);
        if i > 0 {
            entropy.update(violation(traj.states[i].s - traj.states[i - 1].s), &flat);
        }
    }
    report.checks.push(energy.into_check("energy_conservation", tol_energy));
    report.checks.push(entropy.into_check("entropy_monotonicity", tol_entropy));
    report
}

/// Componentwise agreement between the direct vector field and the fields
/// assembled from each bracket formulation, maximized over seeded states.
///
/// External forces enter the direct field only; the brackets carry no
/// external term, so the comparison subtracts the external contribution
/// before differencing.
pub fn check_equivalence(
    sys: &HamiltonianSystem,
    n_states: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let tol = Tolerances::for_mode(sys.gradient_mode() == "analytic");
    let mut rng = SeededRng::new(seed);
    let region = StateRegion::standard(sys.dims());
    let has_transport = sys.linear_transport().is_some();

    let mut single = Tracker::new();
    let mut double = Tracker::new();
    let mut double_map = Tracker::new();
    let mut met = Tracker::new();

    for _ in 0..n_states {
        let x = region.sample(&mut rng);
        let flat = x.flatten();
        let mut direct = direct_vector_field(sys, &x)?;
        if sys.has_external_force() {
            let grad = sys.gradient(&x)?;
            direct.p -= sys.external_force(&x.q, &grad.p, x.s);
        }
        let direct = direct.flatten();
        let reversible = hamiltonian_field(sys, &x)?.flatten();

        let assembled = &reversible + dissipative_field_single(sys, &x)?.flatten();
        single.update((&assembled - &direct).amax(), &flat);

        let field = dissipative_field_double(sys, &x)?;
        double_map.update(field.symmetry_defect, &flat);
        let assembled = &reversible + field.field.flatten();
        double.update((&assembled - &direct).amax(), &flat);

        if has_transport {
            let field = dissipative_field_metriplectic(sys, &x)?;
            let assembled = &reversible + field.field.flatten();
            met.update((&assembled - &direct).amax(), &flat);
        }
    }

    let mut report = VerificationReport::new(seed, "canonical", sys.gradient_mode());
    report.checks.push(single.into_check("equiv_single", tol.assembled));
    report.checks.push(double.into_check("equiv_double", tol.assembled));
    report.checks.push(double_map.into_check("double_map_symmetry", tol.algebraic));
    if has_transport {
        report.checks.push(met.into_check("equiv_metriplectic", tol.assembled));
    }
    Ok(report)
}

/// Reduced-system analogue of [`check_equivalence`].
pub fn check_equivalence_reduced(
    sys: &ReducedSystem,
    n_states: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let tol = Tolerances::for_mode(sys.gradient_mode() == "analytic");
    let mut rng = SeededRng::new(seed);
    let region = ReducedRegion::standard(sys.dims());

    let mut single = Tracker::new();
    let mut double = Tracker::new();
    let mut double_map = Tracker::new();
    let mut met = Tracker::new();
    let mut orbit = Tracker::new();
    let mut orbit_map = Tracker::new();

    for _ in 0..n_states {
        let x = region.sample(&mut rng);
        let flat = x.flatten();
        let direct = reduced_vector_field(sys, &x)?.flatten();
        let reversible = reduced_hamiltonian_field(sys, &x)?.flatten();

        let assembled = &reversible + reduced_dissipative_field_single(sys, &x)?.flatten();
        single.update((&assembled - &direct).amax(), &flat);

        let field = reduced_dissipative_field_double(sys, &x)?;
        double_map.update(field.symmetry_defect, &flat);
        let assembled = &reversible + field.field.flatten();
        double.update((&assembled - &direct).amax(), &flat);

        if sys.has_linear_friction() {
            let field = reduced_dissipative_field_metriplectic(sys, &x)?;
            let assembled = &reversible + field.field.flatten();
            met.update((&assembled - &direct).amax(), &flat);
        }
        if sys.has_double_bracket_friction() {
            let field = reduced_dissipative_field_orbit(sys, &x)?;
            orbit_map.update(field.symmetry_defect, &flat);
            let assembled = &reversible + field.field.flatten();
            orbit.update((&assembled - &direct).amax(), &flat);
        }
    }

    let mut report = VerificationReport::new(seed, "reduced", sys.gradient_mode());
    report.checks.push(single.into_check("equiv_red_single", tol.assembled));
    report.checks.push(double.into_check("equiv_red_double", tol.assembled));
    report.checks.push(double_map.into_check("red_double_map_symmetry", tol.algebraic));
    if sys.has_linear_friction() {
        report.checks.push(met.into_check("equiv_red_metriplectic", tol.assembled));
    }
    if sys.has_double_bracket_friction() {
        report.checks.push(orbit.into_check("equiv_orbit", tol.assembled));
        report.checks.push(orbit_map.into_check("orbit_map_symmetry", tol.assembled));
    }
    Ok(report)
}

/// Max Jacobi-cycle residual `|{{f,g},h} + {{g,h},f} + {{h,f},g}|` over
/// seeded random quadratic triples, with the outer derivative taken by
/// finite differences.
pub fn jacobi_residual(poisson: &PoissonStructure, point: &DVector<f64>, seed: u64) -> Result<f64> {
    let dim = poisson.dim();
    let mut rng = SeededRng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let f = FlatObservable::random_quadratic(dim, &mut rng);
        let g = FlatObservable::random_quadratic(dim, &mut rng);
        let h = FlatObservable::random_quadratic(dim, &mut rng);
        let cycle = jacobi_cycle(poisson, &f, &g, &h, point)?;
        worst = worst.max(cycle.abs());
    }
    Ok(worst)
}

fn bracket_observable(
    poisson: &PoissonStructure,
    f: &FlatObservable,
    g: &FlatObservable,
) -> FlatObservable {
    let (poisson, f, g) = (poisson.clone(), f.clone(), g.clone());
    FlatObservable::numeric(move |x: &DVector<f64>| {
        poisson
            .evaluate(&f, &g, x)
            .expect("analytic quadratic arguments")
    })
}

fn jacobi_cycle(
    poisson: &PoissonStructure,
    f: &FlatObservable,
    g: &FlatObservable,
    h: &FlatObservable,
    point: &DVector<f64>,
) -> Result<f64> {
    let fg = bracket_observable(poisson, f, g);
    let gh = bracket_observable(poisson, g, h);
    let hf = bracket_observable(poisson, h, f);
    Ok(poisson.evaluate(&fg, h, point)?
        + poisson.evaluate(&gh, f, point)?
        + poisson.evaluate(&hf, g, point)?)
}

/// A deliberately broken so(3)-like Poisson tensor on `(μ, S)` coordinates:
/// one structure constant gains a spurious component, so the Jacobi identity
/// fails. Negative control for [`jacobi_residual`].
pub fn corrupted_so3_structure() -> PoissonStructure {
    use nalgebra::DMatrix;
    // Structure constants of so(3) plus an extra e_1 component in [e_1, e_2].
    let mut constants = vec![DMatrix::zeros(3, 3); 3];
    constants[0][(1, 2)] = 1.0;
    constants[0][(2, 1)] = -1.0;
    constants[1][(2, 0)] = 1.0;
    constants[1][(0, 2)] = -1.0;
    constants[2][(0, 1)] = 1.0;
    constants[2][(1, 0)] = -1.0;
    constants[0][(0, 1)] = 1.0;
    constants[0][(1, 0)] = -1.0;
    PoissonStructure::from_tensor(4, move |flat: &DVector<f64>| {
        let mut j = DMatrix::zeros(4, 4);
        for a in 0..3 {
            for b in 0..3 {
                let mut value = 0.0;
                for (c, block) in constants.iter().enumerate() {
                    value += flat[c] * block[(a, b)];
                }
                j[(a, b)] = -value;
            }
        }
        j
    })
}

/// Catalog of every check name with a human-readable statement of what it
/// measures. `pass` always means `residual <= threshold`; negative controls
/// are phrased as shortfalls so the same rule applies.
pub fn check_catalog() -> &'static [(&'static str, &'static str)] {
    &[
        ("poisson_antisymmetry", "reversible bracket antisymmetry: {F,G} + {G,F} = 0"),
        ("poisson_leibniz", "reversible bracket Leibniz rule: {FG,H} = F{G,H} + G{F,H}"),
        ("poisson_hs_zero", "compatibility of the generators: {H,S} = 0"),
        ("poisson_gs_zero", "entropy is a Casimir of the reversible bracket: {G,S} = 0 for arbitrary G"),
        ("single_hh_zero", "first law in single-generator form: [H,H] = 0 (energy conserved)"),
        ("single_sh_nonneg", "second law in single-generator form: [S,H] >= 0 (entropy production)"),
        ("single_bilinear", "single-generator bracket is linear in its observable argument"),
        ("single_leibniz", "single-generator bracket is a derivation: [FG,H] = F[G,H] + G[F,H]"),
        ("double_symmetry", "double-generator bracket symmetry: (F,G) = (G,F)"),
        ("double_bilinear", "double-generator bracket is bilinear"),
        ("double_leibniz", "double-generator bracket satisfies the Leibniz rule"),
        ("double_hs_zero", "first law in double-generator form: (H,S) = 0"),
        ("double_ss_nonneg", "second law in double-generator form: (S,S) >= 0"),
        ("double_matches_single", "(F,S) equals [F,H]: the two formulations are one expression read two ways"),
        ("flux_antisymmetry", "compartment flux matrix satisfies J[k][l] = -J[l][k]"),
        ("secondlaw_friction", "friction power <F^fr, v> <= 0 at sampled states"),
        ("secondlaw_flux", "flux-affinity products J (mu_k - mu_l) <= 0 at sampled states"),
        ("met_hg_zero", "metriplectic energy degeneracy: (H,G)_met = 0 for arbitrary G"),
        ("met_gg_nonneg", "metriplectic positivity: (G,G)_met >= 0 for arbitrary G"),
        ("met_ss_matches_double", "(S,S)_met equals (S,S): both equal the entropy production rate"),
        ("lp_antisymmetry", "Lie-Poisson bracket antisymmetry on the reduced space"),
        ("lp_leibniz", "Lie-Poisson bracket Leibniz rule"),
        ("lp_hs_zero", "reduced generator compatibility: {h,S} = 0"),
        ("red_single_hh_zero", "reduced first law: [h,h] = 0"),
        ("red_single_sh_nonneg", "reduced second law: [S,h] >= 0"),
        ("red_single_bilinear", "reduced single-generator bracket linearity"),
        ("red_single_leibniz", "reduced single-generator bracket derivation property"),
        ("red_double_symmetry", "reduced double-generator bracket symmetry"),
        ("red_double_bilinear", "reduced double-generator bracket bilinearity"),
        ("red_double_leibniz", "reduced double-generator bracket Leibniz rule"),
        ("red_double_hs_zero", "reduced first law: (h,S) = 0"),
        ("red_double_ss_nonneg", "reduced second law: (S,S) >= 0"),
        ("red_double_matches_single", "(f,S) equals [f,h] on the reduced space"),
        ("secondlaw_reduced_friction", "reduced friction power <f^fr, xi> <= 0 at sampled states"),
        ("generator_momentum_identity", "momentum map identity <J(n,a), xi> = <a, B(n) xi>"),
        ("casimir_commutes", "attached Casimirs Lie-Poisson-commute with arbitrary observables"),
        ("red_met_hg_zero", "reduced metriplectic energy degeneracy: (h,g)_met = 0"),
        ("red_met_gg_nonneg", "reduced metriplectic positivity: (g,g)_met >= 0"),
        ("red_met_ss_matches_double", "reduced (S,S)_met equals (S,S)"),
        ("orbit_hg_zero", "orbit metriplectic energy degeneracy: (h,g) = 0 on the coadjoint orbit"),
        ("orbit_gg_nonneg", "orbit metriplectic positivity: (g,g) >= 0 on the coadjoint orbit"),
        ("orbit_symmetry", "orbit metriplectic bracket symmetry (audited, the evaluation route is asymmetric)"),
        ("dbf_dissipative", "double-bracket force dissipates: <f^fr, dh/dmu> <= 0"),
        ("dbf_orbit_tangency", "double-bracket force is tangent to the orbit: <grad c, f^fr> = 0 for Casimirs c"),
        ("energy_conservation", "first law along the trajectory: max relative drift of H"),
        ("entropy_monotonicity", "second law along the trajectory: largest per-step entropy decrease"),
        ("mass_conservation", "total moles are conserved along the trajectory (flux antisymmetry)"),
        ("equiv_single", "direct field equals X_H + D_H assembled from the single-generator bracket"),
        ("equiv_double", "direct field equals X_H + K dS assembled from the double-generator bracket"),
        ("equiv_metriplectic", "direct field equals X_H + K_met dS assembled from the metriplectic bracket"),
        ("double_map_symmetry", "assembled double-generator map K satisfies K = K^T"),
        ("equiv_red_single", "reduced direct field equals X_h plus the single-generator dissipative field"),
        ("equiv_red_double", "reduced direct field equals X_h + K dS on the reduced space"),
        ("equiv_red_metriplectic", "reduced direct field equals X_h + K_met dS on the reduced space"),
        ("red_double_map_symmetry", "assembled reduced double-generator map is symmetric"),
        ("equiv_orbit", "reduced direct field equals X_h plus the orbit metriplectic dissipative field"),
        ("orbit_map_symmetry", "assembled orbit metriplectic map is symmetric"),
        ("jacobi_residual", "Jacobi identity of the Poisson structure over random triples (outer derivatives by finite differences)"),
        ("casimir_drift", "Casimir drift along the trajectory stays at integrator-error level (orbits preserved)"),
        ("temperature_floor", "number of sampled states rejected because |dH/dS| fell below the temperature floor (the brackets are undefined there)"),
        ("casimir_decrease", "Casimir visibly decreases along the trajectory (orbits not preserved); the residual is the shortfall below the required decrease"),
    ]
}

/// Description of a named check, if it exists.
pub fn explain_check(name: &str) -> Option<&'static str> {
    check_catalog()
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| *d)
}
