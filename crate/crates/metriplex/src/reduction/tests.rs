use super::*;
use approx::assert_relative_eq;
use nalgebra::dvector;

/// Rigid body on so(3)*: h = ½ Σ μ_i²/I_i + α S with I = (1, 2, 3), α = 1.
fn rigid_body_hamiltonian() -> ReducedObservable {
    let inertia = [1.0, 2.0, 3.0];
    ReducedObservable::new(
        move |x: &ReducedState| {
            0.5 * (0..3).map(|i| x.mu[i] * x.mu[i] / inertia[i]).sum::<f64>() + x.s
        },
        move |x: &ReducedState| ReducedVector {
            mu: DVector::from_fn(3, |i, _| x.mu[i] / inertia[i]),
            n: DVector::zeros(x.n.len()),
            s: 1.0,
        },
    )
}

fn rigid_body_linear() -> ReducedSystem {
    ReducedSystem::builder(LieAlgebraStructure::so3(), rigid_body_hamiltonian())
        .friction_linear(|_, _| DMatrix::identity(3, 3))
        .casimir(Casimir::half_norm_squared())
        .build()
        .unwrap()
}

fn rigid_body_double_bracket() -> ReducedSystem {
    ReducedSystem::builder(LieAlgebraStructure::so3(), rigid_body_hamiltonian())
        .friction_double_bracket()
        .casimir(Casimir::half_norm_squared())
        .build()
        .unwrap()
}

/// so(3) acting on R³ by the cross product: B(n) ξ = ξ × n, plus a linear
/// potential in n so the momentum-map term of the field is exercised.
fn quotient_system() -> ReducedSystem {
    let h = ReducedObservable::new(
        |x: &ReducedState| {
            0.5 * (x.mu[0] * x.mu[0] + x.mu[1] * x.mu[1] / 2.0 + x.mu[2] * x.mu[2] / 3.0)
                + 0.7 * x.n[2]
                + 0.2 * x.n.dot(&x.n)
                + x.s
        },
        |x: &ReducedState| ReducedVector {
            mu: dvector![x.mu[0], x.mu[1] / 2.0, x.mu[2] / 3.0],
            n: dvector![
                0.4 * x.n[0],
                0.4 * x.n[1],
                0.7 + 0.4 * x.n[2]
            ],
            s: 1.0,
        },
    );
    ReducedSystem::builder(LieAlgebraStructure::so3(), h)
        .generator(3, |n: &DVector<f64>| {
            // B(n) ξ = ξ × n = -hat(n) ξ
            DMatrix::from_row_slice(
                3,
                3,
                &[0.0, n[2], -n[1], -n[2], 0.0, n[0], n[1], -n[0], 0.0],
            )
        })
        .friction_linear(|_, _| DMatrix::identity(3, 3) * 0.5)
        .build()
        .unwrap()
}

fn random_reduced_states(sys: &ReducedSystem, count: usize, seed: u64) -> Vec<ReducedState> {
    let mut rng = SeededRng::new(seed);
    let region = ReducedRegion::standard(sys.dims());
    (0..count).map(|_| region.sample(&mut rng)).collect()
}

#[test]
fn momentum_map_matches_cross_product_action() {
    let sys = quotient_system();
    let n = dvector![0.0, 0.0, 1.0];
    let alpha = dvector![1.0, 0.0, 0.0];
    // J = n × α for the cross-product action.
    assert_relative_eq!(momentum_map(&sys, &n, &alpha).unwrap(), n.cross(&alpha));

    // Defining identity ⟨J(n, α), ξ⟩ = ⟨α, B(n) ξ⟩ at random inputs.
    let mut rng = SeededRng::new(15);
    for _ in 0..20 {
        let n = rng.uniform_vector(3, -2.0, 2.0);
        let alpha = rng.uniform_vector(3, -2.0, 2.0);
        let xi = rng.uniform_vector(3, -2.0, 2.0);
        let j = momentum_map(&sys, &n, &alpha).unwrap();
        let lhs = j.dot(&xi);
        let rhs = alpha.dot(&(sys.generator_at(&n) * &xi));
        assert!((lhs - rhs).abs() <= 1e-12);
    }
}

#[test]
fn momentum_map_of_trivial_action_is_zero() {
    let h = rigid_body_hamiltonian();
    let sys = ReducedSystem::builder(LieAlgebraStructure::so3(), h)
        .generator(2, |_n: &DVector<f64>| DMatrix::zeros(2, 3))
        .build()
        .unwrap();
    let j = momentum_map(&sys, &dvector![1.0, 2.0], &dvector![3.0, 4.0]).unwrap();
    assert_eq!(j, DVector::zeros(3));
}

#[test]
fn reduced_field_matches_rigid_body_hand_values() {
    let sys = rigid_body_linear();
    let x = ReducedState::momentum(&[0.0, 0.0, 1.0], 0.0);
    let field = reduced_vector_field(&sys, &x).unwrap();
    // Ω = (0, 0, 1/3); μ × Ω = 0; f = -Ω.
    assert_relative_eq!(field.mu, dvector![0.0, 0.0, -1.0 / 3.0], epsilon = 1e-15);
    assert_relative_eq!(field.s, 1.0 / 9.0, epsilon = 1e-15);
}

#[test]
fn zero_friction_reduces_to_lie_poisson_flow() {
    let sys = ReducedSystem::builder(LieAlgebraStructure::so3(), rigid_body_hamiltonian())
        .build()
        .unwrap();
    for x in random_reduced_states(&sys, 10, 5) {
        let field = reduced_vector_field(&sys, &x).unwrap();
        let omega = sys.gradient(&x).unwrap().mu;
        assert_relative_eq!(field.mu, x.mu.cross(&omega), epsilon = 1e-14);
        assert_eq!(field.s, 0.0);
    }
}

#[test]
fn abelian_algebra_gives_static_momentum() {
    let alg = LieAlgebraStructure::from_bracket(
        "abelian",
        2,
        |_: &DVector<f64>, _: &DVector<f64>| DVector::zeros(2),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let h = ReducedObservable::new(
        |x: &ReducedState| 0.5 * x.mu.dot(&x.mu) + x.s,
        |x: &ReducedState| ReducedVector {
            mu: x.mu.clone(),
            n: DVector::zeros(0),
            s: 1.0,
        },
    );
    let sys = ReducedSystem::builder(alg, h).build().unwrap();
    let x = ReducedState::momentum(&[0.7, -0.3], 0.1);
    let field = reduced_vector_field(&sys, &x).unwrap();
    assert_eq!(field.mu, DVector::zeros(2));
}

#[test]
fn lie_poisson_bracket_hand_value_and_antisymmetry() {
    let sys = rigid_body_linear();
    let dims = sys.dims();
    let f = ReducedObservable::coordinate(dims, 0);
    let g = ReducedObservable::coordinate(dims, 1);
    let x = ReducedState::momentum(&[0.0, 0.0, 1.0], 0.0);
    // {μ_1, μ_2} = -⟨μ, e_1 × e_2⟩ = -μ_3.
    assert_relative_eq!(lie_poisson_bracket(&sys, &f, &g, &x).unwrap(), -1.0);

    let mut rng = SeededRng::new(40);
    for x in random_reduced_states(&sys, 10, 41) {
        let f = ReducedObservable::random_quadratic(dims, &mut rng);
        let g = ReducedObservable::random_quadratic(dims, &mut rng);
        let fg = lie_poisson_bracket(&sys, &f, &g, &x).unwrap();
        let gf = lie_poisson_bracket(&sys, &g, &f, &x).unwrap();
        assert!((fg + gf).abs() <= 1e-12);
    }
}

#[test]
fn casimir_commutes_with_everything() {
    let sys = rigid_body_linear();
    let dims = sys.dims();
    let casimir = sys.casimirs()[0].as_observable();
    let mut rng = SeededRng::new(50);
    for x in random_reduced_states(&sys, 15, 51) {
        let g = ReducedObservable::random_quadratic(dims, &mut rng);
        let value = lie_poisson_bracket(&sys, &casimir, &g, &x).unwrap();
        assert!(value.abs() <= 1e-12, "{{c, g}} = {value}");
    }
}

#[test]
fn se2_casimir_commutes() {
    let alg = LieAlgebraStructure::se2();
    let h = ReducedObservable::new(
        |x: &ReducedState| 0.5 * x.mu.dot(&x.mu) + x.s,
        |x: &ReducedState| ReducedVector {
            mu: x.mu.clone(),
            n: DVector::zeros(0),
            s: 1.0,
        },
    );
    let sys = ReducedSystem::builder(alg, h)
        .casimir(Casimir::new(
            "translation_norm",
            |mu: &DVector<f64>| 0.5 * (mu[1] * mu[1] + mu[2] * mu[2]),
            |mu: &DVector<f64>| dvector![0.0, mu[1], mu[2]],
        ))
        .build()
        .unwrap();
    let dims = sys.dims();
    let casimir = sys.casimirs()[0].as_observable();
    let mut rng = SeededRng::new(52);
    for x in random_reduced_states(&sys, 15, 53) {
        let g = ReducedObservable::random_quadratic(dims, &mut rng);
        let value = lie_poisson_bracket(&sys, &casimir, &g, &x).unwrap();
        assert!(value.abs() <= 1e-12, "{{c, g}} = {value}");
    }
}

#[test]
fn reduced_single_bracket_degeneracy_and_hand_value() {
    let sys = rigid_body_linear();
    for x in random_reduced_states(&sys, 20, 60) {
        assert_eq!(
            reduced_single_bracket(&sys, sys.hamiltonian(), &x).unwrap(),
            0.0
        );
    }
    let x = ReducedState::momentum(&[0.0, 0.0, 1.0], 0.0);
    let entropy = ReducedObservable::entropy(sys.dims());
    assert_relative_eq!(
        reduced_single_bracket(&sys, &entropy, &x).unwrap(),
        1.0 / 9.0,
        epsilon = 1e-15
    );

    // Observables independent of μ and S are untouched by dissipation.
    let sys_q = quotient_system();
    let f = ReducedObservable::coordinate(sys_q.dims(), sys_q.dims().n_index(1));
    for x in random_reduced_states(&sys_q, 10, 61) {
        assert_eq!(reduced_single_bracket(&sys_q, &f, &x).unwrap(), 0.0);
    }
}

#[test]
fn reduced_double_bracket_axioms() {
    let sys = rigid_body_linear();
    let dims = sys.dims();
    let entropy = ReducedObservable::entropy(dims);
    let mut rng = SeededRng::new(70);
    for x in random_reduced_states(&sys, 20, 71) {
        let f = ReducedObservable::random_quadratic(dims, &mut rng);
        let g = ReducedObservable::random_quadratic(dims, &mut rng);
        let fg = reduced_double_bracket(&sys, &f, &g, &x).unwrap();
        let gf = reduced_double_bracket(&sys, &g, &f, &x).unwrap();
        assert_eq!(fg, gf);

        let hs = reduced_double_bracket(&sys, sys.hamiltonian(), &entropy, &x).unwrap();
        assert!(hs.abs() <= 1e-12);
        let ss = reduced_double_bracket(&sys, &entropy, &entropy, &x).unwrap();
        assert!(ss >= -1e-12);

        let fs = reduced_double_bracket(&sys, &f, &entropy, &x).unwrap();
        let single = reduced_single_bracket(&sys, &f, &x).unwrap();
        assert!((fs - single).abs() <= 1e-12 * single.abs().max(1.0));
    }
    let x = ReducedState::momentum(&[0.0, 0.0, 1.0], 0.0);
    assert_relative_eq!(
        reduced_double_bracket(&sys, &entropy, &entropy, &x).unwrap(),
        1.0 / 9.0,
        epsilon = 1e-15
    );
}

#[test]
fn reduced_metriplectic_axioms() {
    let sys = rigid_body_linear();
    let dims = sys.dims();
    let entropy = ReducedObservable::entropy(dims);
    let mut rng = SeededRng::new(80);
    for x in random_reduced_states(&sys, 20, 81) {
        let g = ReducedObservable::random_quadratic(dims, &mut rng);
        let hg = reduced_metriplectic_bracket(&sys, sys.hamiltonian(), &g, &x).unwrap();
        assert_eq!(hg, 0.0);
        let gg = reduced_metriplectic_bracket(&sys, &g, &g, &x).unwrap();
        assert!(gg >= -1e-10);

        let ss_met = reduced_metriplectic_bracket(&sys, &entropy, &entropy, &x).unwrap();
        let ss = reduced_double_bracket(&sys, &entropy, &entropy, &x).unwrap();
        assert!((ss_met - ss).abs() <= 1e-12 * ss.abs().max(1.0));
    }
    let x = ReducedState::momentum(&[0.0, 0.0, 1.0], 0.0);
    assert_relative_eq!(
        reduced_metriplectic_bracket(&sys, &entropy, &entropy, &x).unwrap(),
        1.0 / 9.0,
        epsilon = 1e-15
    );
}

#[test]
fn metriplectic_requires_linear_friction() {
    let sys = rigid_body_double_bracket();
    let entropy = ReducedObservable::entropy(sys.dims());
    let x = ReducedState::momentum(&[1.0, 0.0, 0.2], 0.0);
    assert!(matches!(
        reduced_metriplectic_bracket(&sys, &entropy, &entropy, &x),
        Err(Error::MissingLinearTransport)
    ));
}

#[test]
fn double_bracket_force_cross_product_oracle() {
    // h = μ_2 + S gives Ω = e_2 everywhere.
    let h = ReducedObservable::new(
        |x: &ReducedState| x.mu[1] + x.s,
        |x: &ReducedState| ReducedVector {
            mu: dvector![0.0, 1.0, 0.0],
            n: DVector::zeros(x.n.len()),
            s: 1.0,
        },
    );
    let sys = ReducedSystem::builder(LieAlgebraStructure::so3(), h)
        .friction_double_bracket()
        .build()
        .unwrap();
    let mu = dvector![1.0, 0.0, 0.0];
    let force = double_bracket_friction(&sys, &mu, 0.0).unwrap();
    // f = μ × (μ × Ω) = (1,0,0) × (0,0,1) = (0,-1,0).
    assert_relative_eq!(force, dvector![0.0, -1.0, 0.0], epsilon = 1e-15);
}

#[test]
fn double_bracket_force_vanishes_at_equilibria_and_dissipates() {
    let sys = rigid_body_double_bracket();
    // Ω ∥ μ along a principal axis.
    let force = double_bracket_friction(&sys, &dvector![0.0, 0.0, 2.0], 0.0).unwrap();
    assert!(force.amax() <= 1e-15);

    let mut rng = SeededRng::new(90);
    for _ in 0..20 {
        let mu = rng.uniform_vector(3, -2.0, 2.0);
        let force = double_bracket_friction(&sys, &mu, 0.0).unwrap();
        let x = ReducedState::new(mu.clone(), DVector::zeros(0), 0.0);
        let omega = sys.gradient(&x).unwrap().mu;
        assert!(force.dot(&omega) <= 1e-12, "⟨f, Ω⟩ must be nonpositive");
        // Tangency to the orbit: orthogonal to every Casimir gradient.
        for casimir in sys.casimirs() {
            assert!(casimir.gradient(&mu).dot(&force).abs() <= 1e-12);
        }
    }
}

#[test]
fn orbit_gradient_of_casimir_vanishes() {
    let sys = rigid_body_double_bracket();
    let casimir = sys.casimirs()[0].as_observable();
    let mut rng = SeededRng::new(95);
    for _ in 0..10 {
        let mu = rng.uniform_vector(3, -2.0, 2.0);
        let grad = orbit_gradient(&sys, &casimir, &mu, 0.0).unwrap();
        assert!(grad.amax() <= 1e-12);
    }
}

#[test]
fn orbit_metriplectic_axioms() {
    let sys = rigid_body_double_bracket();
    let dims = sys.dims();
    let mut rng = SeededRng::new(100);
    for _ in 0..20 {
        let mu = rng.uniform_vector(3, -1.5, 1.5);
        let s = rng.uniform(-0.5, 0.5);
        let g = ReducedObservable::random_quadratic(dims, &mut rng);
        let f = ReducedObservable::random_quadratic(dims, &mut rng);

        let hg = orbit_metriplectic_bracket(&sys, sys.hamiltonian(), &g, &mu, s).unwrap();
        assert_eq!(hg, 0.0);
        let gg = orbit_metriplectic_bracket(&sys, &g, &g, &mu, s).unwrap();
        assert!(gg >= -1e-10, "(g,g)^O = {gg}");

        // Symmetry is audited, not assumed: the evaluation route is lopsided.
        let fg = orbit_metriplectic_bracket(&sys, &f, &g, &mu, s).unwrap();
        let gf = orbit_metriplectic_bracket(&sys, &g, &f, &mu, s).unwrap();
        assert!((fg - gf).abs() <= 1e-9 * fg.abs().max(1.0), "defect {}", fg - gf);
    }
}

#[test]
fn orbit_bracket_entropy_row_matches_single_bracket() {
    let sys = rigid_body_double_bracket();
    let dims = sys.dims();
    let entropy = ReducedObservable::entropy(dims);
    let mut rng = SeededRng::new(104);
    for _ in 0..10 {
        let mu = rng.uniform_vector(3, -1.5, 1.5);
        let s = rng.uniform(-0.4, 0.4);
        let x = ReducedState::new(mu.clone(), DVector::zeros(0), s);
        let f = ReducedObservable::random_quadratic(dims, &mut rng);
        let orbit = orbit_metriplectic_bracket(&sys, &f, &entropy, &mu, s).unwrap();
        let single = reduced_single_bracket(&sys, &f, &x).unwrap();
        assert!(
            (orbit - single).abs() <= 1e-9 * single.abs().max(1.0),
            "(f,S)^O = {orbit} vs [f,h] = {single}"
        );
    }
}

#[test]
fn formulation_equivalence_for_reduced_systems() {
    for sys in [rigid_body_linear(), rigid_body_double_bracket(), quotient_system()] {
        for x in random_reduced_states(&sys, 25, 111) {
            let direct = reduced_vector_field(&sys, &x).unwrap().flatten();
            let reversible = reduced_hamiltonian_field(&sys, &x).unwrap().flatten();

            let single = &reversible + reduced_dissipative_field_single(&sys, &x).unwrap().flatten();
            assert!((&single - &direct).amax() <= 1e-9, "single, {:?}", sys);

            let double = reduced_dissipative_field_double(&sys, &x).unwrap();
            assert!(double.symmetry_defect <= 1e-12);
            let assembled = &reversible + double.field.flatten();
            assert!((&assembled - &direct).amax() <= 1e-9, "double, {:?}", sys);

            if sys.has_linear_friction() {
                let met = reduced_dissipative_field_metriplectic(&sys, &x).unwrap();
                let assembled = &reversible + met.field.flatten();
                assert!((&assembled - &direct).amax() <= 1e-9, "metriplectic, {:?}", sys);
            }
            if sys.has_double_bracket_friction() {
                let orbit = reduced_dissipative_field_orbit(&sys, &x).unwrap();
                assert!(orbit.symmetry_defect <= 1e-9);
                let assembled = &reversible + orbit.field.flatten();
                assert!((&assembled - &direct).amax() <= 1e-9, "orbit, {:?}", sys);
            }
        }
    }
}

#[test]
fn rigid_body_trajectories_obey_the_laws() {
    // Linear friction: energy conserved, entropy up, Casimir decays.
    let sys = rigid_body_linear();
    let mut mu0 = dvector![1.0, 0.0, 0.2];
    mu0 /= mu0.norm();
    let x0 = ReducedState::new(mu0.clone(), DVector::zeros(0), 0.0);
    let traj = integrate_reduced(&sys, &x0, 10.0, 1e-3, 10).unwrap();
    let h0 = traj.energies[0];
    for (i, h) in traj.energies.iter().enumerate() {
        assert!((h - h0).abs() / h0.abs().max(1.0) <= 1e-6, "sample {i}");
    }
    for w in traj.states.windows(2) {
        assert!(w[1].s >= w[0].s - 1e-9);
    }
    let drift = casimir_drift(&traj, sys.casimirs());
    assert!(drift[0].1 > 1e-2, "linear friction must leave the orbit");

    // Double-bracket friction: same laws, orbit preserved.
    let sys = rigid_body_double_bracket();
    let traj = integrate_reduced(&sys, &x0, 10.0, 1e-3, 10).unwrap();
    let h0 = traj.energies[0];
    for h in &traj.energies {
        assert!((h - h0).abs() / h0.abs().max(1.0) <= 1e-6);
    }
    for w in traj.states.windows(2) {
        assert!(w[1].s >= w[0].s - 1e-9);
    }
    let drift = casimir_drift(&traj, sys.casimirs());
    assert!(drift[0].1 <= 1e-8, "double bracket must preserve the orbit");
}

#[test]
fn zero_dynamics_has_zero_drift() {
    let sys = ReducedSystem::builder(LieAlgebraStructure::so3(), rigid_body_hamiltonian())
        .casimir(Casimir::half_norm_squared())
        .build()
        .unwrap();
    // Equilibrium of the free rigid body: μ along a principal axis.
    let x0 = ReducedState::momentum(&[0.0, 0.0, 1.0], 0.0);
    let traj = integrate_reduced(&sys, &x0, 1.0, 1e-2, 1).unwrap();
    let drift = casimir_drift(&traj, sys.casimirs());
    assert!(drift[0].1 <= 1e-14);
}

#[test]
fn reduced_csv_layout() {
    let sys = rigid_body_double_bracket();
    let x0 = ReducedState::momentum(&[1.0, 0.0, 0.2], 0.0);
    let traj = integrate_reduced(&sys, &x0, 0.01, 1e-3, 1).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,mu_1,mu_2,mu_3,S,h,casimir_half_norm_squared"
    );
}

#[test]
fn builder_rejects_bad_gradients_and_shapes() {
    let bad_h = ReducedObservable::new(
        |x: &ReducedState| 0.5 * x.mu.dot(&x.mu) + x.s,
        |x: &ReducedState| ReducedVector {
            mu: &x.mu * 3.0, // wrong factor
            n: DVector::zeros(x.n.len()),
            s: 1.0,
        },
    );
    let err = ReducedSystem::builder(LieAlgebraStructure::so3(), bad_h)
        .build()
        .unwrap_err();
    assert!(matches!(err, Error::GradientAudit { .. }));

    let err = ReducedSystem::builder(LieAlgebraStructure::so3(), rigid_body_hamiltonian())
        .friction_linear(|_, _| {
            DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, -0.5, 1.0, 0.0, 0.0, 0.0, 1.0])
        })
        .build()
        .unwrap_err();
    assert!(matches!(err, Error::TransportInconsistent { .. }));

    let err = ReducedSystem::builder(LieAlgebraStructure::so3(), rigid_body_hamiltonian())
        .generator(2, |_n: &DVector<f64>| DMatrix::zeros(3, 3))
        .build()
        .unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }));

    let err = ReducedSystem::builder(LieAlgebraStructure::so3(), rigid_body_hamiltonian())
        .generator(3, |_n: &DVector<f64>| DMatrix::zeros(3, 3))
        .friction_double_bracket()
        .build()
        .unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)));
}
