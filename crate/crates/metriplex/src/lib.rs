//! Dissipation brackets for simple nonequilibrium thermodynamic systems.
//!
//! A *simple* system couples a mechanical phase space `T*Q` with a single
//! entropy variable `S` and, optionally, `K` compartment mole numbers
//! `N_1..N_K` exchanging matter internally. Given a Hamiltonian, a friction
//! force law, and an antisymmetric flux law, this crate
//!
//! * evolves the system directly ([`dynamics`]),
//! * constructs the single-generator, double-generator, and metriplectic
//!   (GENERIC) dissipation brackets and extracts their vector fields
//!   ([`brackets`]),
//! * reduces the whole picture to a Lie algebra dual for systems with
//!   Lie-group symmetry, including double-bracket friction that preserves
//!   coadjoint orbits ([`reduction`]),
//! * and certifies numerically that every formulation agrees and that the
//!   defining axioms, the first law, and the second law hold ([`verify`]).
//!
//! [`scenarios`] ships the canonical example systems used by the test suite
//! and the command-line runner.

pub mod brackets;
pub mod dynamics;
pub mod error;
pub mod reduction;
pub mod rng;
pub mod scenarios;
pub mod systems;
#[cfg(test)]
pub(crate) mod test_fixtures;
pub mod verify;

pub use error::{Error, Result};
pub use systems::{Dims, HamiltonianSystem, Observable, StateVector, ThermoMechState};

/// Smallest admissible magnitude of the temperature `∂H/∂S`.
///
/// Every bracket and entropy equation divides by the temperature; below this
/// floor the operation reports [`Error::ZeroTemperature`] instead of
/// regularizing, so modeling errors surface rather than being smoothed over.
pub const TEMPERATURE_FLOOR: f64 = 1e-10;
