//! Phase-space points and their flat coordinate layout.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Dimensions of a thermodynamic phase space: `dof` mechanical degrees of
/// freedom plus one entropy slot and `compartments` mole-number slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub dof: usize,
    pub compartments: usize,
}

impl Dims {
    pub fn new(dof: usize, compartments: usize) -> Self {
        assert!(dof >= 1, "at least one mechanical degree of freedom");
        Self { dof, compartments }
    }

    /// Length of the flat coordinate vector `(q_1..q_n, p_1..p_n, S, N_1..N_K)`.
    pub fn flat_len(&self) -> usize {
        2 * self.dof + 1 + self.compartments
    }

    /// Flat index of the entropy coordinate.
    pub fn s_index(&self) -> usize {
        2 * self.dof
    }

    pub fn q_index(&self, i: usize) -> usize {
        debug_assert!(i < self.dof);
        i
    }

    pub fn p_index(&self, i: usize) -> usize {
        debug_assert!(i < self.dof);
        self.dof + i
    }

    pub fn n_index(&self, k: usize) -> usize {
        debug_assert!(k < self.compartments);
        2 * self.dof + 1 + k
    }
}

/// A point of `T*Q × R^{K+1}`: configuration `q`, momentum `p`, entropy `s`,
/// and mole numbers `n` (one per compartment).
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoMechState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub s: f64,
    pub n: DVector<f64>,
}

impl ThermoMechState {
    pub fn new(q: DVector<f64>, p: DVector<f64>, s: f64, n: DVector<f64>) -> Self {
        assert_eq!(q.len(), p.len(), "q and p must have the same length");
        Self { q, p, s, n }
    }

    /// State without compartments, from plain slices.
    pub fn mechanical(q: &[f64], p: &[f64], s: f64) -> Self {
        Self::new(
            DVector::from_row_slice(q),
            DVector::from_row_slice(p),
            s,
            DVector::zeros(0),
        )
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.q.len(), self.n.len())
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite()
            && self.q.iter().all(|x| x.is_finite())
            && self.p.iter().all(|x| x.is_finite())
            && self.n.iter().all(|x| x.is_finite())
    }

    /// Checks the conditions required of an initial condition: finite entries
    /// and nonnegative mole numbers.
    pub fn validate_initial(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        if let Some(k) = self.n.iter().position(|&x| x < 0.0) {
            return Err(Error::InvalidState(format!("mole number N_{k} is negative")));
        }
        Ok(())
    }

    /// Flat coordinates in the order `(q, p, S, N)`.
    pub fn flatten(&self) -> DVector<f64> {
        let dims = self.dims();
        let mut out = DVector::zeros(dims.flat_len());
        for i in 0..dims.dof {
            out[dims.q_index(i)] = self.q[i];
            out[dims.p_index(i)] = self.p[i];
        }
        out[dims.s_index()] = self.s;
        for k in 0..dims.compartments {
            out[dims.n_index(k)] = self.n[k];
        }
        out
    }

    pub fn from_flat(dims: Dims, flat: &DVector<f64>) -> Self {
        assert_eq!(flat.len(), dims.flat_len(), "flat vector length mismatch");
        Self {
            q: DVector::from_fn(dims.dof, |i, _| flat[dims.q_index(i)]),
            p: DVector::from_fn(dims.dof, |i, _| flat[dims.p_index(i)]),
            s: flat[dims.s_index()],
            n: DVector::from_fn(dims.compartments, |k, _| flat[dims.n_index(k)]),
        }
    }
}

/// Components along `(q, p, S, N)`.
///
/// The same layout serves two roles: gradients of scalar observables
/// (`∂F/∂q`, `∂F/∂p`, `∂F/∂S`, `∂F/∂N`) and tangent vectors of the flow
/// (`q̇`, `ṗ`, `Ṡ`, `Ṅ`).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub s: f64,
    pub n: DVector<f64>,
}

impl StateVector {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            q: DVector::zeros(dims.dof),
            p: DVector::zeros(dims.dof),
            s: 0.0,
            n: DVector::zeros(dims.compartments),
        }
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.q.len(), self.n.len())
    }

    pub fn flatten(&self) -> DVector<f64> {
        ThermoMechState {
            q: self.q.clone(),
            p: self.p.clone(),
            s: self.s,
            n: self.n.clone(),
        }
        .flatten()
    }

    pub fn from_flat(dims: Dims, flat: &DVector<f64>) -> Self {
        let st = ThermoMechState::from_flat(dims, flat);
        Self {
            q: st.q,
            p: st.p,
            s: st.s,
            n: st.n,
        }
    }

    /// Max-norm over all components.
    pub fn linf_norm(&self) -> f64 {
        let mut m = self.s.abs();
        for x in self.q.iter().chain(self.p.iter()).chain(self.n.iter()) {
            m = m.max(x.abs());
        }
        m
    }

    /// Componentwise `self - other`, returned as a fresh vector.
    pub fn sub(&self, other: &StateVector) -> StateVector {
        StateVector {
            q: &self.q - &other.q,
            p: &self.p - &other.p,
            s: self.s - other.s,
            n: &self.n - &other.n,
        }
    }
}

/// Axis-aligned sampling box used for gradient audits and randomized checks.
#[derive(Debug, Clone, Copy)]
pub struct StateRegion {
    pub dims: Dims,
    pub q: (f64, f64),
    pub p: (f64, f64),
    pub s: (f64, f64),
    pub n: (f64, f64),
}

impl StateRegion {
    /// Default desk-scale box: `q, p ∈ [-1.5, 1.5]`, `S ∈ [-0.5, 0.5]`,
    /// `N ∈ [0.25, 1.75]`.
    pub fn standard(dims: Dims) -> Self {
        Self {
            dims,
            q: (-1.5, 1.5),
            p: (-1.5, 1.5),
            s: (-0.5, 0.5),
            n: (0.25, 1.75),
        }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> ThermoMechState {
        ThermoMechState {
            q: rng.uniform_vector(self.dims.dof, self.q.0, self.q.1),
            p: rng.uniform_vector(self.dims.dof, self.p.0, self.p.1),
            s: rng.uniform(self.s.0, self.s.1),
            n: rng.uniform_vector(self.dims.compartments, self.n.0, self.n.1),
        }
    }
}
