//! Dissipation brackets and their induced vector fields.
//!
//! Three equivalent formulations of the irreversible part of the dynamics:
//!
//! * **single generator** `[F, H]`: linear and a derivation in `F`, with
//!   `[H, H] = 0` (first law) and `[S, H] ≥ 0` (second law);
//! * **double generator** `(F, G)`: symmetric, bilinear, Leibniz, with
//!   `(H, S) = 0` and `(S, S) ≥ 0`; satisfies `(F, S) = [F, H]`;
//! * **metriplectic** `(F, G)_met`: available only when linear transport
//!   laws are declared, with the stronger degeneracies `(H, G)_met = 0` and
//!   `(G, G)_met ≥ 0` for arbitrary `G`.
//!
//! Vector fields are extracted by evaluating a bracket against the flat
//! coordinate observables; derivations are determined by their action on
//! coordinates, so this is exact.

pub mod poisson;

pub use poisson::{canonical_poisson, fd_gradient_flat, FlatObservable, PoissonStructure};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{check_temperature, flux_pair_sum};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::systems::{HamiltonianSystem, Observable, StateVector, ThermoMechState};

/// Per-state quantities shared by every bracket evaluation: the gradient of
/// `H`, the friction force and flux matrix evaluated through `H`, and the
/// total dissipation pairing `⟨F^fr, ∂H/∂p⟩ + Σ J Δμ`.
pub(crate) struct DissipationContext {
    grad_h: StateVector,
    temperature: f64,
    friction: DVector<f64>,
    flux: DMatrix<f64>,
    dissipation: f64,
}

impl DissipationContext {
    pub(crate) fn new(sys: &HamiltonianSystem, x: &ThermoMechState) -> Result<Self> {
        let grad_h = sys.gradient(x)?;
        let temperature = check_temperature(grad_h.s)?;
        let friction = sys.friction_force(&x.q, &grad_h.p, x.s);
        let flux = sys.flux_matrix(x.s, &x.n, &grad_h.n);
        let dissipation = friction.dot(&grad_h.p) + flux_pair_sum(&flux, &grad_h.n);
        Ok(Self {
            grad_h,
            temperature,
            friction,
            flux,
            dissipation,
        })
    }

    fn single(&self, grad_f: &StateVector) -> f64 {
        self.friction.dot(&grad_f.p) + flux_pair_sum(&self.flux, &grad_f.n)
            - (grad_f.s / self.temperature) * self.dissipation
    }

    fn double(&self, grad_f: &StateVector, grad_g: &StateVector) -> f64 {
        let friction_f = self.friction.dot(&grad_f.p);
        let friction_g = self.friction.dot(&grad_g.p);
        let flux_f = flux_pair_sum(&self.flux, &grad_f.n);
        let flux_g = flux_pair_sum(&self.flux, &grad_g.n);
        // Grouped so that swapping F and G permutes only commutative pairs;
        // the computed value is symmetric bit-for-bit.
        let mechanical = friction_f * grad_g.s + friction_g * grad_f.s;
        let matter = flux_f * grad_g.s + flux_g * grad_f.s;
        mechanical + matter
            - (self.dissipation / self.temperature) * (grad_f.s * grad_g.s)
    }
}

struct MetriplecticContext {
    base: DissipationContext,
    lambda: DMatrix<f64>,
    coefficients: DMatrix<f64>,
}

impl MetriplecticContext {
    fn new(sys: &HamiltonianSystem, x: &ThermoMechState) -> Result<Self> {
        let transport = sys
            .linear_transport()
            .ok_or(Error::MissingLinearTransport)?;
        let base = DissipationContext::new(sys, x)?;
        let lambda = transport.lambda_at(&x.q, x.s);
        let coefficients = transport.coefficients_at(x.s, &x.n);
        Ok(Self {
            base,
            lambda,
            coefficients,
        })
    }

    /// `A_F = ∂F/∂p · T - ∂H/∂p · ∂F/∂S`.
    fn mechanical_affinity(&self, grad_f: &StateVector) -> DVector<f64> {
        &grad_f.p * self.base.temperature - &self.base.grad_h.p * grad_f.s
    }

    /// `B_F^{kl} = ΔF_N^{kl} · T - Δμ^{kl} · ∂F/∂S`.
    fn compartment_affinity(&self, grad_f: &StateVector, k: usize, l: usize) -> f64 {
        (grad_f.n[k] - grad_f.n[l]) * self.base.temperature
            - (self.base.grad_h.n[k] - self.base.grad_h.n[l]) * grad_f.s
    }

    fn evaluate(&self, grad_f: &StateVector, grad_g: &StateVector) -> f64 {
        let a_f = self.mechanical_affinity(grad_f);
        let a_g = self.mechanical_affinity(grad_g);
        let mut value = a_f.dot(&(&self.lambda * a_g)) / self.base.temperature;
        let compartments = grad_f.n.len();
        for k in 0..compartments {
            for l in (k + 1)..compartments {
                value += self.coefficients[(k, l)]
                    * self.compartment_affinity(grad_f, k, l)
                    * self.compartment_affinity(grad_g, k, l)
                    / self.base.temperature;
            }
        }
        value
    }
}

/// Single-generator dissipation bracket `[F, H]` at `x`.
pub fn single_generator_bracket(
    sys: &HamiltonianSystem,
    f: &Observable,
    x: &ThermoMechState,
) -> Result<f64> {
    let ctx = DissipationContext::new(sys, x)?;
    Ok(ctx.single(&f.gradient(x)?))
}

/// Double-generator dissipation bracket `(F, G)` at `x`.
pub fn double_generator_bracket(
    sys: &HamiltonianSystem,
    f: &Observable,
    g: &Observable,
    x: &ThermoMechState,
) -> Result<f64> {
    let ctx = DissipationContext::new(sys, x)?;
    Ok(ctx.double(&f.gradient(x)?, &g.gradient(x)?))
}

/// Metriplectic bracket `(F, G)_met` at `x`; requires declared linear
/// transport laws.
pub fn metriplectic_bracket(
    sys: &HamiltonianSystem,
    f: &Observable,
    g: &Observable,
    x: &ThermoMechState,
) -> Result<f64> {
    let ctx = MetriplecticContext::new(sys, x)?;
    Ok(ctx.evaluate(&f.gradient(x)?, &g.gradient(x)?))
}

fn coordinate_gradients(x: &ThermoMechState) -> Vec<StateVector> {
    let dims = x.dims();
    let len = dims.flat_len();
    (0..len)
        .map(|i| {
            let mut flat = DVector::zeros(len);
            flat[i] = 1.0;
            StateVector::from_flat(dims, &flat)
        })
        .collect()
}

/// Hamiltonian vector field `X_H = J dH` through the canonical Poisson
/// tensor.
pub fn hamiltonian_field(sys: &HamiltonianSystem, x: &ThermoMechState) -> Result<StateVector> {
    let dims = sys.dims();
    let grad = sys.gradient(x)?.flatten();
    let field = canonical_poisson(dims).tensor_apply(&x.flatten(), &grad);
    Ok(StateVector::from_flat(dims, &field))
}

/// Dissipative field `D_H` of the single-generator bracket, assembled
/// componentwise from `[x_i, H]`.
pub fn dissipative_field_single(
    sys: &HamiltonianSystem,
    x: &ThermoMechState,
) -> Result<StateVector> {
    let ctx = DissipationContext::new(sys, x)?;
    let components: Vec<f64> = coordinate_gradients(x)
        .iter()
        .map(|grad| ctx.single(grad))
        .collect();
    Ok(StateVector::from_flat(
        sys.dims(),
        &DVector::from_vec(components),
    ))
}

/// The symmetric map `K` of a double-generator-type bracket in flat
/// coordinates, its field `K dS`, and the measured symmetry defect
/// `max |K - K^T|`.
#[derive(Debug, Clone)]
pub struct SymmetricBracketField {
    pub field: StateVector,
    pub matrix: DMatrix<f64>,
    pub symmetry_defect: f64,
}

fn assemble_symmetric_field<E>(x: &ThermoMechState, evaluate: E) -> SymmetricBracketField
where
    E: Fn(&StateVector, &StateVector) -> f64,
{
    let dims = x.dims();
    let len = dims.flat_len();
    let gradients = coordinate_gradients(x);
    let matrix = DMatrix::from_fn(len, len, |i, j| evaluate(&gradients[i], &gradients[j]));
    let symmetry_defect = (&matrix - matrix.transpose()).amax();
    let field = &matrix * DVector::from_fn(len, |i, _| if i == dims.s_index() { 1.0 } else { 0.0 });
    SymmetricBracketField {
        field: StateVector::from_flat(dims, &field),
        matrix,
        symmetry_defect,
    }
}

/// Dissipative field `K dS` of the double-generator bracket, with the
/// symmetry audit of the assembled map.
pub fn dissipative_field_double(
    sys: &HamiltonianSystem,
    x: &ThermoMechState,
) -> Result<SymmetricBracketField> {
    let ctx = DissipationContext::new(sys, x)?;
    Ok(assemble_symmetric_field(x, |gf, gg| ctx.double(gf, gg)))
}

/// Dissipative field `K_met dS` of the metriplectic bracket.
pub fn dissipative_field_metriplectic(
    sys: &HamiltonianSystem,
    x: &ThermoMechState,
) -> Result<SymmetricBracketField> {
    let ctx = MetriplecticContext::new(sys, x)?;
    Ok(assemble_symmetric_field(x, |gf, gg| ctx.evaluate(gf, gg)))
}

/// Sampled extremes of the bracket axioms over random states and random
/// quadratic observables.
#[derive(Debug, Clone, Serialize)]
pub struct DissipationBracketReport {
    pub seed: u64,
    /// max |[H, H]|
    pub single_hh_max: f64,
    /// min [S, H] - nonnegative for admissible systems
    pub single_sh_min: f64,
    /// max |(F, G) - (G, F)|
    pub symmetry_defect_max: f64,
    /// max |(H, S)|
    pub double_hs_max: f64,
    /// min (S, S)
    pub double_ss_min: f64,
    /// max |(F, S) - [F, H]|
    pub double_vs_single_max: f64,
    /// max |(H, G)_met| over random G (linear transport only)
    pub met_hg_max: Option<f64>,
    /// min (G, G)_met over random G (linear transport only)
    pub met_gg_min: Option<f64>,
    /// max |(S, S)_met - (S, S)| (linear transport only)
    pub met_ss_vs_double_max: Option<f64>,
}

/// Evaluates the axiom ledger of both dissipation brackets (and the
/// metriplectic bracket when constructible) on the supplied states with
/// `n_observables` seeded random quadratic observables.
pub fn sample_axioms(
    sys: &HamiltonianSystem,
    states: &[ThermoMechState],
    n_observables: usize,
    seed: u64,
) -> Result<DissipationBracketReport> {
    let dims = sys.dims();
    let mut rng = SeededRng::new(seed);
    let observables: Vec<Observable> = (0..n_observables)
        .map(|_| Observable::random_quadratic(dims, &mut rng))
        .collect();
    let entropy = Observable::entropy(dims);
    let has_transport = sys.linear_transport().is_some();

    let mut report = DissipationBracketReport {
        seed,
        single_hh_max: 0.0,
        single_sh_min: f64::INFINITY,
        symmetry_defect_max: 0.0,
        double_hs_max: 0.0,
        double_ss_min: f64::INFINITY,
        double_vs_single_max: 0.0,
        met_hg_max: has_transport.then_some(0.0),
        met_gg_min: has_transport.then_some(f64::INFINITY),
        met_ss_vs_double_max: has_transport.then_some(0.0),
    };

    for x in states {
        let ctx = DissipationContext::new(sys, x)?;
        let grad_h = sys.gradient(x)?;
        let grad_s = entropy.gradient(x)?;

        report.single_hh_max = report.single_hh_max.max(ctx.single(&grad_h).abs());
        report.single_sh_min = report.single_sh_min.min(ctx.single(&grad_s));
        report.double_hs_max = report
            .double_hs_max
            .max(ctx.double(&grad_h, &grad_s).abs());
        report.double_ss_min = report.double_ss_min.min(ctx.double(&grad_s, &grad_s));

        let grads: Vec<StateVector> = observables
            .iter()
            .map(|f| f.gradient(x))
            .collect::<Result<_>>()?;
        for (i, gf) in grads.iter().enumerate() {
            report.double_vs_single_max = report
                .double_vs_single_max
                .max((ctx.double(gf, &grad_s) - ctx.single(gf)).abs());
            for gg in grads.iter().skip(i + 1) {
                report.symmetry_defect_max = report
                    .symmetry_defect_max
                    .max((ctx.double(gf, gg) - ctx.double(gg, gf)).abs());
            }
        }

        if has_transport {
            let met = MetriplecticContext::new(sys, x)?;
            let mut hg_max: f64 = report.met_hg_max.unwrap();
            let mut gg_min: f64 = report.met_gg_min.unwrap();
            for gf in &grads {
                hg_max = hg_max.max(met.evaluate(&grad_h, gf).abs());
                gg_min = gg_min.min(met.evaluate(gf, gf));
            }
            report.met_hg_max = Some(hg_max);
            report.met_gg_min = Some(gg_min);
            let defect = (met.evaluate(&grad_s, &grad_s) - ctx.double(&grad_s, &grad_s)).abs();
            report.met_ss_vs_double_max = Some(report.met_ss_vs_double_max.unwrap().max(defect));
        }
    }

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::direct_vector_field;
    use crate::systems::{Dims, StateRegion};
    use crate::test_fixtures::{damped_oscillator, mixed_system, reversible_oscillator};
    use approx::assert_relative_eq;

    fn random_states(sys: &HamiltonianSystem, count: usize, seed: u64) -> Vec<ThermoMechState> {
        let mut rng = SeededRng::new(seed);
        let region = StateRegion::standard(sys.dims());
        (0..count).map(|_| region.sample(&mut rng)).collect()
    }

    #[test]
    fn single_bracket_hh_is_exactly_zero() {
        for sys in [damped_oscillator(), mixed_system()] {
            for x in random_states(&sys, 25, 101) {
                let value = single_generator_bracket(&sys, sys.hamiltonian(), &x).unwrap();
                assert_eq!(value, 0.0);
            }
        }
    }

    #[test]
    fn single_bracket_hand_value_on_damped_oscillator() {
        let sys = damped_oscillator();
        let x = ThermoMechState::mechanical(&[0.0], &[2.0], 0.0);
        let entropy = Observable::entropy(sys.dims());
        assert_relative_eq!(single_generator_bracket(&sys, &entropy, &x).unwrap(), 4.0);
    }

    #[test]
    fn single_bracket_ignores_configuration_only_observables() {
        let sys = mixed_system();
        let dims = sys.dims();
        let f = Observable::coordinate(dims, dims.q_index(1));
        for x in random_states(&sys, 10, 3) {
            assert_eq!(single_generator_bracket(&sys, &f, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn double_bracket_is_symmetric_and_matches_single() {
        let sys = mixed_system();
        let mut rng = SeededRng::new(7);
        let entropy = Observable::entropy(sys.dims());
        for x in random_states(&sys, 20, 8) {
            let f = Observable::random_quadratic(sys.dims(), &mut rng);
            let g = Observable::random_quadratic(sys.dims(), &mut rng);
            let fg = double_generator_bracket(&sys, &f, &g, &x).unwrap();
            let gf = double_generator_bracket(&sys, &g, &f, &x).unwrap();
            assert_eq!(fg, gf);

            let fs = double_generator_bracket(&sys, &f, &entropy, &x).unwrap();
            let single = single_generator_bracket(&sys, &f, &x).unwrap();
            assert!((fs - single).abs() <= 1e-12 * single.abs().max(1.0));
        }
    }

    #[test]
    fn double_bracket_degeneracies() {
        let sys = mixed_system();
        let entropy = Observable::entropy(sys.dims());
        for x in random_states(&sys, 25, 12) {
            let hs = double_generator_bracket(&sys, sys.hamiltonian(), &entropy, &x).unwrap();
            assert!(hs.abs() <= 1e-12, "(H,S) = {hs}");
            let ss = double_generator_bracket(&sys, &entropy, &entropy, &x).unwrap();
            assert!(ss >= -1e-12, "(S,S) = {ss}");
        }
    }

    #[test]
    fn double_bracket_ss_hand_value() {
        let sys = damped_oscillator();
        let x = ThermoMechState::mechanical(&[0.0], &[2.0], 0.0);
        let entropy = Observable::entropy(sys.dims());
        assert_relative_eq!(
            double_generator_bracket(&sys, &entropy, &entropy, &x).unwrap(),
            4.0
        );
    }

    #[test]
    fn metriplectic_degeneracies_and_sign() {
        let sys = mixed_system();
        let mut rng = SeededRng::new(21);
        for x in random_states(&sys, 20, 22) {
            let g = Observable::random_quadratic(sys.dims(), &mut rng);
            let hg = metriplectic_bracket(&sys, sys.hamiltonian(), &g, &x).unwrap();
            assert_eq!(hg, 0.0);
            let gg = metriplectic_bracket(&sys, &g, &g, &x).unwrap();
            assert!(gg >= -1e-10, "(G,G)_met = {gg}");
        }
    }

    #[test]
    fn metriplectic_ss_equals_entropy_rate() {
        let sys = damped_oscillator();
        let x = ThermoMechState::mechanical(&[0.0], &[2.0], 0.0);
        let entropy = Observable::entropy(sys.dims());
        assert_relative_eq!(
            metriplectic_bracket(&sys, &entropy, &entropy, &x).unwrap(),
            4.0
        );
    }

    #[test]
    fn metriplectic_requires_transport_declaration() {
        let sys = reversible_oscillator();
        let x = ThermoMechState::mechanical(&[0.1], &[0.2], 0.0);
        let entropy = Observable::entropy(sys.dims());
        assert!(matches!(
            metriplectic_bracket(&sys, &entropy, &entropy, &x),
            Err(Error::MissingLinearTransport)
        ));
    }

    #[test]
    fn dissipative_fields_vanish_in_the_reversible_limit() {
        let sys = reversible_oscillator();
        let x = ThermoMechState::mechanical(&[0.4], &[-0.8], 0.2);
        let single = dissipative_field_single(&sys, &x).unwrap();
        assert_eq!(single.linf_norm(), 0.0);
        let double = dissipative_field_double(&sys, &x).unwrap();
        assert_eq!(double.matrix.amax(), 0.0);
        assert_eq!(double.symmetry_defect, 0.0);
    }

    #[test]
    fn dissipative_field_hand_value() {
        let sys = damped_oscillator();
        let x = ThermoMechState::mechanical(&[0.0], &[2.0], 0.0);
        let d = dissipative_field_single(&sys, &x).unwrap();
        assert_relative_eq!(d.q[0], 0.0);
        assert_relative_eq!(d.p[0], -2.0);
        assert_relative_eq!(d.s, 4.0);
    }

    #[test]
    fn single_field_reproduces_bracket_pairing() {
        let sys = mixed_system();
        let mut rng = SeededRng::new(31);
        for x in random_states(&sys, 10, 32) {
            let d = dissipative_field_single(&sys, &x).unwrap().flatten();
            for _ in 0..5 {
                let f = Observable::random_quadratic(sys.dims(), &mut rng);
                let bracket = single_generator_bracket(&sys, &f, &x).unwrap();
                let pairing = f.gradient(&x).unwrap().flatten().dot(&d);
                assert!((bracket - pairing).abs() <= 1e-10 * bracket.abs().max(1.0));
            }
        }
    }

    #[test]
    fn all_formulations_assemble_the_direct_field() {
        for sys in [damped_oscillator(), mixed_system()] {
            for x in random_states(&sys, 40, 44) {
                let direct = direct_vector_field(&sys, &x).unwrap().flatten();
                let reversible = hamiltonian_field(&sys, &x).unwrap().flatten();

                let single = &reversible + dissipative_field_single(&sys, &x).unwrap().flatten();
                assert!((&single - &direct).amax() <= 1e-9, "single formulation");

                let double = dissipative_field_double(&sys, &x).unwrap();
                assert!(double.symmetry_defect <= 1e-12);
                let assembled = &reversible + double.field.flatten();
                assert!((&assembled - &direct).amax() <= 1e-9, "double formulation");

                let met = dissipative_field_metriplectic(&sys, &x).unwrap();
                let assembled = &reversible + met.field.flatten();
                assert!(
                    (&assembled - &direct).amax() <= 1e-9,
                    "metriplectic formulation"
                );
            }
        }
    }

    #[test]
    fn brackets_are_bilinear_and_leibniz() {
        let sys = mixed_system();
        let dims = sys.dims();
        let mut rng = SeededRng::new(55);
        for x in random_states(&sys, 10, 56) {
            let f = Observable::random_quadratic(dims, &mut rng);
            let g = Observable::random_quadratic(dims, &mut rng);
            let h = Observable::random_quadratic(dims, &mut rng);
            let (a, b) = (rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));

            let combo = Observable::linear_combination(a, &f, b, &g);
            let lhs = single_generator_bracket(&sys, &combo, &x).unwrap();
            let rhs = a * single_generator_bracket(&sys, &f, &x).unwrap()
                + b * single_generator_bracket(&sys, &g, &x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));

            let lhs = double_generator_bracket(&sys, &combo, &h, &x).unwrap();
            let rhs = a * double_generator_bracket(&sys, &f, &h, &x).unwrap()
                + b * double_generator_bracket(&sys, &g, &h, &x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));

            let product = Observable::product(&f, &g);
            let lhs = single_generator_bracket(&sys, &product, &x).unwrap();
            let rhs = f.value(&x) * single_generator_bracket(&sys, &g, &x).unwrap()
                + g.value(&x) * single_generator_bracket(&sys, &f, &x).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0),
                "Leibniz single"
            );

            let lhs = double_generator_bracket(&sys, &product, &h, &x).unwrap();
            let rhs = f.value(&x) * double_generator_bracket(&sys, &g, &h, &x).unwrap()
                + g.value(&x) * double_generator_bracket(&sys, &f, &h, &x).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0),
                "Leibniz double"
            );
        }
    }

    #[test]
    fn axiom_report_extremes_are_tight_for_admissible_systems() {
        let sys = mixed_system();
        let states = random_states(&sys, 30, 77);
        let report = sample_axioms(&sys, &states, 10, 78).unwrap();
        assert!(report.single_hh_max <= 1e-10);
        assert!(report.single_sh_min >= -1e-12);
        assert_eq!(report.symmetry_defect_max, 0.0);
        assert!(report.double_hs_max <= 1e-10);
        assert!(report.double_ss_min >= -1e-12);
        assert!(report.double_vs_single_max <= 1e-12);
        assert!(report.met_hg_max.unwrap() <= 1e-10);
        assert!(report.met_gg_min.unwrap() >= -1e-10);
        assert!(report.met_ss_vs_double_max.unwrap() <= 1e-12);
    }

    #[test]
    fn axiom_report_detects_sabotaged_friction() {
        let sys = crate::test_fixtures::sabotaged_oscillator();
        let states = random_states(&sys, 30, 90);
        let report = sample_axioms(&sys, &states, 8, 91).unwrap();
        // Degeneracies are structural and survive the sabotage...
        assert!(report.single_hh_max <= 1e-10);
        assert!(report.double_hs_max <= 1e-10);
        // ...while the sign axioms fail.
        assert!(report.single_sh_min < -1e-6);
        assert!(report.double_ss_min < -1e-6);
    }

    #[test]
    fn zero_temperature_states_are_rejected() {
        let dims = Dims::new(1, 0);
        let sys = HamiltonianSystem::builder(
            dims,
            Observable::new(
                |x: &ThermoMechState| 0.5 * x.p[0] * x.p[0] + 0.5 * x.s * x.s,
                |x: &ThermoMechState| StateVector {
                    q: DVector::zeros(1),
                    p: nalgebra::dvector![x.p[0]],
                    s: x.s,
                    n: DVector::zeros(0),
                },
            ),
        )
        .friction(|_, v: &DVector<f64>, _| -v.clone())
        .build()
        .unwrap();
        let x = ThermoMechState::mechanical(&[0.0], &[1.0], 0.0); // T = S = 0
        let entropy = Observable::entropy(dims);
        assert!(matches!(
            single_generator_bracket(&sys, &entropy, &x),
            Err(Error::ZeroTemperature { .. })
        ));
    }
}
