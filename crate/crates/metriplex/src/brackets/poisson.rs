//! Poisson structures on flat coordinate spaces.
//!
//! A finite-dimensional Poisson structure is represented by its antisymmetric
//! tensor `J(x)`, so one type serves both the canonical structure on
//! `T*Q × R^{K+1}` (constant `J`, with `S` and `N` in the kernel) and the
//! Lie-Poisson structure on `g* × N × R` (see [`crate::reduction`]).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::systems::{Dims, Observable};

type FlatValueFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type FlatGradientFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type TensorFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Central-difference gradient on a flat coordinate space with steps
/// `max(1, |x_i|) · cbrt(eps)`.
pub fn fd_gradient_flat<F>(f: F, x: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let factor = f64::EPSILON.cbrt();
    let mut grad = DVector::zeros(x.len());
    let mut work = x.clone();
    for i in 0..x.len() {
        let h = x[i].abs().max(1.0) * factor;
        work[i] = x[i] + h;
        let plus = f(&work);
        work[i] = x[i] - h;
        let minus = f(&work);
        work[i] = x[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFiniteEvaluation { coordinate: i });
        }
        grad[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// A scalar function on a flat coordinate space, with an analytic gradient or
/// a finite-difference fallback.
#[derive(Clone)]
pub struct FlatObservable {
    value: FlatValueFn,
    gradient: Option<FlatGradientFn>,
}

impl FlatObservable {
    pub fn new<V, G>(value: V, gradient: G) -> Self
    where
        V: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            gradient: Some(Arc::new(gradient)),
        }
    }

    pub fn numeric<V>(value: V) -> Self
    where
        V: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn coordinate(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        Self::new(
            move |x: &DVector<f64>| x[index],
            move |_x: &DVector<f64>| {
                let mut g = DVector::zeros(dim);
                g[index] = 1.0;
                g
            },
        )
    }

    /// Quadratic polynomial `c + b·x + x^T A x` with coefficients uniform in
    /// `[-1, 1]` and the exact gradient.
    pub fn random_quadratic(dim: usize, rng: &mut SeededRng) -> Self {
        let constant = rng.uniform(-1.0, 1.0);
        let linear = rng.uniform_vector(dim, -1.0, 1.0);
        let quad = DMatrix::from_fn(dim, dim, |_, _| rng.uniform(-1.0, 1.0));
        let sym = &quad + quad.transpose();
        let lin = linear.clone();
        Self::new(
            move |x: &DVector<f64>| constant + linear.dot(x) + x.dot(&(&quad * x)),
            move |x: &DVector<f64>| &lin + &sym * x,
        )
    }

    pub fn product(f: &FlatObservable, g: &FlatObservable) -> Self {
        let (fv, gv) = (f.value.clone(), g.value.clone());
        match (&f.gradient, &g.gradient) {
            (Some(fg), Some(gg)) => {
                let (fg, gg) = (fg.clone(), gg.clone());
                let (fv2, gv2) = (fv.clone(), gv.clone());
                Self::new(
                    move |x: &DVector<f64>| fv(x) * gv(x),
                    move |x: &DVector<f64>| fg(x) * gv2(x) + gg(x) * fv2(x),
                )
            }
            _ => Self::numeric(move |x: &DVector<f64>| fv(x) * gv(x)),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.gradient {
            Some(g) => Ok(g(x)),
            None => fd_gradient_flat(|y| (self.value)(y), x),
        }
    }
}

impl Observable {
    /// View of this observable over the flat coordinate layout of `dims`.
    pub fn to_flat(&self, dims: Dims) -> FlatObservable {
        let value_self = self.clone();
        let grad_self = self.clone();
        if self.is_analytic() {
            FlatObservable::new(
                move |flat: &DVector<f64>| {
                    value_self.value(&crate::systems::ThermoMechState::from_flat(dims, flat))
                },
                move |flat: &DVector<f64>| {
                    grad_self
                        .gradient(&crate::systems::ThermoMechState::from_flat(dims, flat))
                        .expect("analytic gradient")
                        .flatten()
                },
            )
        } else {
            FlatObservable::numeric(move |flat: &DVector<f64>| {
                value_self.value(&crate::systems::ThermoMechState::from_flat(dims, flat))
            })
        }
    }
}

/// A Poisson structure given by its antisymmetric tensor `J(x)`.
#[derive(Clone)]
pub struct PoissonStructure {
    dim: usize,
    tensor: TensorFn,
}

impl PoissonStructure {
    /// Structure with an arbitrary tensor closure. No validity check is
    /// performed here; the Jacobi identity is what
    /// [`crate::verify::jacobi_residual`] measures.
    pub fn from_tensor<F>(dim: usize, tensor: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            tensor: Arc::new(tensor),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tensor(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.tensor)(x)
    }

    /// `{F, G}(x) = dF(x)^T J(x) dG(x)`.
    pub fn evaluate(
        &self,
        f: &FlatObservable,
        g: &FlatObservable,
        x: &DVector<f64>,
    ) -> Result<f64> {
        let df = f.gradient(x)?;
        let dg = g.gradient(x)?;
        Ok(df.dot(&(self.tensor(x) * dg)))
    }

    /// The bundle map `J(x): T*M → TM` applied to a covector.
    pub fn tensor_apply(&self, x: &DVector<f64>, covector: &DVector<f64>) -> DVector<f64> {
        self.tensor(x) * covector
    }
}

/// Canonical Poisson structure on `T*Q × R^{K+1}`: `{q_i, p_i} = 1` with the
/// zero bracket on the `(S, N)` block.
pub fn canonical_poisson(dims: Dims) -> PoissonStructure {
    let len = dims.flat_len();
    let mut j = DMatrix::zeros(len, len);
    for i in 0..dims.dof {
        j[(dims.q_index(i), dims.p_index(i))] = 1.0;
        j[(dims.p_index(i), dims.q_index(i))] = -1.0;
    }
    PoissonStructure::from_tensor(len, move |_x| j.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn canonical_pairs() {
        let dims = Dims::new(2, 1);
        let ps = canonical_poisson(dims);
        let x = dvector![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let q1 = FlatObservable::coordinate(6, dims.q_index(0));
        let p1 = FlatObservable::coordinate(6, dims.p_index(0));
        let p2 = FlatObservable::coordinate(6, dims.p_index(1));
        assert_eq!(ps.evaluate(&q1, &p1, &x).unwrap(), 1.0);
        assert_eq!(ps.evaluate(&q1, &p2, &x).unwrap(), 0.0);
        assert_eq!(ps.evaluate(&p1, &q1, &x).unwrap(), -1.0);
    }

    #[test]
    fn entropy_and_moles_are_casimirs_of_the_canonical_structure() {
        let dims = Dims::new(1, 2);
        let ps = canonical_poisson(dims);
        let mut rng = SeededRng::new(2);
        let x = rng.uniform_vector(dims.flat_len(), -1.0, 1.0);
        let s = FlatObservable::coordinate(dims.flat_len(), dims.s_index());
        let n1 = FlatObservable::coordinate(dims.flat_len(), dims.n_index(0));
        for _ in 0..6 {
            let g = FlatObservable::random_quadratic(dims.flat_len(), &mut rng);
            assert_eq!(ps.evaluate(&s, &g, &x).unwrap(), 0.0);
            assert_eq!(ps.evaluate(&n1, &g, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn quadratic_bracket_hand_value() {
        // F = q², G = p on one degree of freedom: {F, G} = 2q.
        let dims = Dims::new(1, 0);
        let ps = canonical_poisson(dims);
        let f = FlatObservable::new(
            |x: &DVector<f64>| x[0] * x[0],
            |x: &DVector<f64>| dvector![2.0 * x[0], 0.0, 0.0],
        );
        let g = FlatObservable::coordinate(3, 1);
        let x = dvector![3.0, -0.4, 0.9];
        assert_relative_eq!(ps.evaluate(&f, &g, &x).unwrap(), 6.0);
    }

    #[test]
    fn antisymmetry_and_leibniz_on_random_quadratics() {
        let dims = Dims::new(2, 1);
        let len = dims.flat_len();
        let ps = canonical_poisson(dims);
        let mut rng = SeededRng::new(9);
        for _ in 0..8 {
            let f = FlatObservable::random_quadratic(len, &mut rng);
            let g = FlatObservable::random_quadratic(len, &mut rng);
            let h = FlatObservable::random_quadratic(len, &mut rng);
            let x = rng.uniform_vector(len, -1.0, 1.0);
            let fg = ps.evaluate(&f, &g, &x).unwrap();
            let gf = ps.evaluate(&g, &f, &x).unwrap();
            assert!((fg + gf).abs() <= 1e-12);

            let product = FlatObservable::product(&f, &g);
            let lhs = ps.evaluate(&product, &h, &x).unwrap();
            let rhs = f.value(&x) * ps.evaluate(&g, &h, &x).unwrap()
                + g.value(&x) * ps.evaluate(&f, &h, &x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10, "Leibniz defect {}", lhs - rhs);
        }
    }
}
