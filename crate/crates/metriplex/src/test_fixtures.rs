//! Systems shared by unit tests across modules.

use nalgebra::{dvector, DMatrix, DVector};

use crate::systems::{Dims, HamiltonianSystem, Observable, StateVector, ThermoMechState};

/// H = p²/2 + q²/2 + S, friction F = -p, linear transport declared.
pub fn damped_oscillator() -> HamiltonianSystem {
    HamiltonianSystem::builder(Dims::new(1, 0), oscillator_hamiltonian())
        .linear_laws(
            |_, _| DMatrix::from_element(1, 1, 1.0),
            |_, _| DMatrix::zeros(0, 0),
        )
        .build()
        .unwrap()
}

/// Same Hamiltonian, no irreversible processes at all.
pub fn reversible_oscillator() -> HamiltonianSystem {
    HamiltonianSystem::builder(Dims::new(1, 0), oscillator_hamiltonian())
        .build()
        .unwrap()
}

/// Same Hamiltonian with the friction sign flipped: violates the second law
/// while keeping every structural degeneracy intact. No transport laws are
/// declared (they could not be, the flipped sign is not of the form -λv with
/// λ positive semi-definite).
pub fn sabotaged_oscillator() -> HamiltonianSystem {
    HamiltonianSystem::builder(Dims::new(1, 0), oscillator_hamiltonian())
        .friction(|_, v: &DVector<f64>, _| v.clone())
        .build()
        .unwrap()
}

fn oscillator_hamiltonian() -> Observable {
    Observable::new(
        |x: &ThermoMechState| 0.5 * (x.p[0] * x.p[0] + x.q[0] * x.q[0]) + x.s,
        |x: &ThermoMechState| StateVector {
            q: dvector![x.q[0]],
            p: dvector![x.p[0]],
            s: 1.0,
            n: DVector::zeros(0),
        },
    )
}

/// Two mechanical degrees of freedom and three compartments, with a
/// state-dependent friction matrix, compartment coupling, a mechanical-
/// compartment cross term, and a nonlinear thermal term bounded away from
/// zero temperature. Exercises every term of every bracket at once.
pub fn mixed_system() -> HamiltonianSystem {
    let dims = Dims::new(2, 3);
    let h = Observable::new(
        |x: &ThermoMechState| {
            0.5 * (x.p.dot(&x.p) + x.q.dot(&x.q))
                + 1.5 * x.s
                + 0.25 * x.s.sin()
                + 0.5 * x.n.dot(&x.n)
                + 0.3 * x.n[0] * x.n[1]
                + 0.2 * x.q[0] * x.n[0]
        },
        |x: &ThermoMechState| StateVector {
            q: dvector![x.q[0] + 0.2 * x.n[0], x.q[1]],
            p: x.p.clone(),
            s: 1.5 + 0.25 * x.s.cos(),
            n: dvector![
                x.n[0] + 0.3 * x.n[1] + 0.2 * x.q[0],
                x.n[1] + 0.3 * x.n[0],
                x.n[2]
            ],
        },
    );
    HamiltonianSystem::builder(dims, h)
        .linear_laws(
            |q: &DVector<f64>, _| DMatrix::identity(2, 2) * (1.0 + q[0] * q[0]),
            |_, _: &DVector<f64>| {
                DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.3, 0.5, 0.0, 0.4, 0.3, 0.4, 0.0])
            },
        )
        .build()
        .unwrap()
}
