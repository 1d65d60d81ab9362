//! Scalar observables on the thermodynamic phase space.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::systems::state::{Dims, StateVector, ThermoMechState};

type ValueFn = Arc<dyn Fn(&ThermoMechState) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&ThermoMechState) -> StateVector + Send + Sync>;

/// Relative step used by all central-difference gradients:
/// `h_i = scale_i * cbrt(machine epsilon)`.
pub fn fd_step_factor() -> f64 {
    f64::EPSILON.cbrt()
}

/// Central-difference gradient of `f` at `x` with per-coordinate step hints.
///
/// `scale` must have one positive entry per flat coordinate; the step along
/// coordinate `i` is `scale[i] * cbrt(eps)`. The result is deterministic for
/// fixed inputs. A NaN or infinite evaluation while perturbing coordinate `i`
/// yields [`Error::NonFiniteEvaluation`] naming that coordinate.
pub fn fd_gradient<F>(f: F, x: &ThermoMechState, scale: &[f64]) -> Result<StateVector>
where
    F: Fn(&ThermoMechState) -> f64,
{
    let dims = x.dims();
    let len = dims.flat_len();
    if scale.len() != len {
        return Err(Error::DimensionMismatch {
            context: "fd_gradient scale",
            expected: len,
            actual: scale.len(),
        });
    }
    if let Some(i) = scale.iter().position(|&s| s.is_nan() || s <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fd_gradient scale[{i}] must be positive"
        )));
    }
    let factor = fd_step_factor();
    let flat = x.flatten();
    let mut grad = DVector::zeros(len);
    let mut work = flat.clone();
    for i in 0..len {
        let h = scale[i] * factor;
        work[i] = flat[i] + h;
        let plus = f(&ThermoMechState::from_flat(dims, &work));
        work[i] = flat[i] - h;
        let minus = f(&ThermoMechState::from_flat(dims, &work));
        work[i] = flat[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFiniteEvaluation { coordinate: i });
        }
        grad[i] = (plus - minus) / (2.0 * h);
    }
    Ok(StateVector::from_flat(dims, &grad))
}

/// Default step hints for [`fd_gradient`]: `max(1, |x_i|)` per coordinate.
pub fn default_fd_scale(x: &ThermoMechState) -> Vec<f64> {
    x.flatten().iter().map(|v| v.abs().max(1.0)).collect()
}

#[derive(Clone)]
enum GradientMode {
    Analytic(GradientFn),
    FiniteDifference,
}

/// A smooth scalar function of the state together with its gradient.
///
/// The gradient is either analytic (supplied as a closure) or computed on
/// demand by central finite differences. Closures must be pure: observables
/// are immutable after construction and may be evaluated concurrently.
#[derive(Clone)]
pub struct Observable {
    value: ValueFn,
    gradient: GradientMode,
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable")
            .field("gradient", &self.gradient_mode_name())
            .finish()
    }
}

impl Observable {
    /// Observable with an analytic gradient.
    pub fn new<V, G>(value: V, gradient: G) -> Self
    where
        V: Fn(&ThermoMechState) -> f64 + Send + Sync + 'static,
        G: Fn(&ThermoMechState) -> StateVector + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            gradient: GradientMode::Analytic(Arc::new(gradient)),
        }
    }

    /// Observable whose gradient falls back to central finite differences.
    pub fn numeric<V>(value: V) -> Self
    where
        V: Fn(&ThermoMechState) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            gradient: GradientMode::FiniteDifference,
        }
    }

    /// Copy of this observable with the analytic gradient discarded.
    pub fn with_numeric_gradient(&self) -> Self {
        Self {
            value: self.value.clone(),
            gradient: GradientMode::FiniteDifference,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.gradient, GradientMode::Analytic(_))
    }

    fn gradient_mode_name(&self) -> &'static str {
        if self.is_analytic() {
            "analytic"
        } else {
            "finite-difference"
        }
    }

    pub fn value(&self, x: &ThermoMechState) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &ThermoMechState) -> Result<StateVector> {
        match &self.gradient {
            GradientMode::Analytic(g) => Ok(g(x)),
            GradientMode::FiniteDifference => {
                fd_gradient(|st| (self.value)(st), x, &default_fd_scale(x))
            }
        }
    }

    /// Max relative deviation between the analytic gradient and finite
    /// differences over the supplied states. Returns zero for observables
    /// that are already finite-difference backed.
    pub fn gradient_deviation(&self, states: &[ThermoMechState]) -> Result<f64> {
        let GradientMode::Analytic(_) = &self.gradient else {
            return Ok(0.0);
        };
        let mut worst = 0.0f64;
        for x in states {
            let analytic = self.gradient(x)?.flatten();
            let numeric = fd_gradient(|st| (self.value)(st), x, &default_fd_scale(x))?.flatten();
            let scale = analytic.amax().max(numeric.amax()).max(1.0);
            worst = worst.max((&analytic - &numeric).amax() / scale);
        }
        Ok(worst)
    }

    /// The coordinate function `x ↦ x_i` in the flat layout; its gradient is
    /// the `i`-th basis covector, exactly.
    pub fn coordinate(dims: Dims, index: usize) -> Self {
        assert!(index < dims.flat_len(), "coordinate index out of range");
        Self::new(
            move |x: &ThermoMechState| x.flatten()[index],
            move |x: &ThermoMechState| {
                let mut flat = DVector::zeros(dims.flat_len());
                flat[index] = 1.0;
                StateVector::from_flat(x.dims(), &flat)
            },
        )
    }

    /// The entropy coordinate `S`.
    pub fn entropy(dims: Dims) -> Self {
        Self::coordinate(dims, dims.s_index())
    }

    /// Quadratic polynomial `c + b·x + x^T A x` in flat coordinates, with the
    /// exact gradient `b + (A + A^T) x`.
    pub fn quadratic(dims: Dims, constant: f64, linear: DVector<f64>, quad: DMatrix<f64>) -> Self {
        let len = dims.flat_len();
        assert_eq!(linear.len(), len);
        assert_eq!((quad.nrows(), quad.ncols()), (len, len));
        let sym = &quad + quad.transpose();
        let lin = linear.clone();
        Self::new(
            move |x: &ThermoMechState| {
                let flat = x.flatten();
                constant + linear.dot(&flat) + flat.dot(&(&quad * &flat))
            },
            move |x: &ThermoMechState| {
                let flat = x.flatten();
                StateVector::from_flat(x.dims(), &(&lin + &sym * &flat))
            },
        )
    }

    /// Random quadratic observable with coefficients uniform in `[-1, 1]`.
    pub fn random_quadratic(dims: Dims, rng: &mut SeededRng) -> Self {
        let len = dims.flat_len();
        let constant = rng.uniform(-1.0, 1.0);
        let linear = rng.uniform_vector(len, -1.0, 1.0);
        let quad = DMatrix::from_fn(len, len, |_, _| rng.uniform(-1.0, 1.0));
        Self::quadratic(dims, constant, linear, quad)
    }

    /// Pointwise product `F·G`; analytic when both factors are analytic.
    pub fn product(f: &Observable, g: &Observable) -> Self {
        let (fv, gv) = (f.value.clone(), g.value.clone());
        match (&f.gradient, &g.gradient) {
            (GradientMode::Analytic(fg), GradientMode::Analytic(gg)) => {
                let (fg, gg) = (fg.clone(), gg.clone());
                let (fv2, gv2) = (fv.clone(), gv.clone());
                Self::new(
                    move |x: &ThermoMechState| fv(x) * gv(x),
                    move |x: &ThermoMechState| {
                        let (a, b) = (fv2(x), gv2(x));
                        let (da, db) = (fg(x), gg(x));
                        StateVector {
                            q: &da.q * b + &db.q * a,
                            p: &da.p * b + &db.p * a,
                            s: da.s * b + db.s * a,
                            n: &da.n * b + &db.n * a,
                        }
                    },
                )
            }
            _ => Self::numeric(move |x: &ThermoMechState| fv(x) * gv(x)),
        }
    }

    /// Linear combination `a·F + b·G`; analytic when both terms are analytic.
    pub fn linear_combination(a: f64, f: &Observable, b: f64, g: &Observable) -> Self {
        let (fv, gv) = (f.value.clone(), g.value.clone());
        match (&f.gradient, &g.gradient) {
            (GradientMode::Analytic(fg), GradientMode::Analytic(gg)) => {
                let (fg, gg) = (fg.clone(), gg.clone());
                Self::new(
                    move |x: &ThermoMechState| a * fv(x) + b * gv(x),
                    move |x: &ThermoMechState| {
                        let (da, db) = (fg(x), gg(x));
                        StateVector {
                            q: &da.q * a + &db.q * b,
                            p: &da.p * a + &db.p * b,
                            s: da.s * a + db.s * b,
                            n: &da.n * a + &db.n * b,
                        }
                    },
                )
            }
            _ => Self::numeric(move |x: &ThermoMechState| a * fv(x) + b * gv(x)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::state::StateRegion;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn state_1d(q: f64, p: f64, s: f64) -> ThermoMechState {
        ThermoMechState::mechanical(&[q], &[p], s)
    }

    #[test]
    fn fd_gradient_of_constant_is_zero() {
        let x = state_1d(0.3, -0.7, 1.1);
        let g = fd_gradient(|_| 4.25, &x, &default_fd_scale(&x)).unwrap();
        assert_eq!(g.flatten(), DVector::zeros(3));
    }

    #[test]
    fn fd_gradient_quadratic_momentum() {
        // f = p^2/2 at p = 2: central differences are exact up to roundoff.
        let x = state_1d(0.0, 2.0, 0.0);
        let g = fd_gradient(|st| 0.5 * st.p[0] * st.p[0], &x, &default_fd_scale(&x)).unwrap();
        assert_relative_eq!(g.p[0], 2.0, max_relative = 1e-8);
    }

    #[test]
    fn fd_gradient_trilinear() {
        // f = q p S at (1, 2, 3): gradient (6, 3, 2).
        let x = state_1d(1.0, 2.0, 3.0);
        let g = fd_gradient(|st| st.q[0] * st.p[0] * st.s, &x, &default_fd_scale(&x)).unwrap();
        assert_relative_eq!(g.q[0], 6.0, max_relative = 1e-6);
        assert_relative_eq!(g.p[0], 3.0, max_relative = 1e-6);
        assert_relative_eq!(g.s, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn fd_gradient_reports_offending_coordinate() {
        let x = state_1d(0.0, 0.0, 0.0);
        // Blows up only when the momentum coordinate moves off zero.
        let err = fd_gradient(
            |st| if st.p[0] != 0.0 { f64::NAN } else { 0.0 },
            &x,
            &default_fd_scale(&x),
        )
        .unwrap_err();
        match err {
            Error::NonFiniteEvaluation { coordinate } => assert_eq!(coordinate, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn coordinate_observable_gradient_is_basis_vector() {
        let dims = Dims::new(2, 1);
        let x = ThermoMechState::new(dvector![1.0, 2.0], dvector![3.0, 4.0], 5.0, dvector![6.0]);
        let obs = Observable::coordinate(dims, dims.n_index(0));
        assert_eq!(obs.value(&x), 6.0);
        let g = obs.gradient(&x).unwrap().flatten();
        let mut expect = DVector::zeros(6);
        expect[5] = 1.0;
        assert_eq!(g, expect);
    }

    #[test]
    fn random_quadratics_pass_gradient_deviation_audit() {
        let dims = Dims::new(2, 2);
        let mut rng = SeededRng::new(11);
        let region = StateRegion::standard(dims);
        let states: Vec<_> = (0..20).map(|_| region.sample(&mut rng)).collect();
        for _ in 0..5 {
            let obs = Observable::random_quadratic(dims, &mut rng);
            assert!(obs.gradient_deviation(&states).unwrap() <= 1e-5);
        }
    }

    #[test]
    fn product_gradient_follows_product_rule() {
        let dims = Dims::new(1, 0);
        let mut rng = SeededRng::new(3);
        let f = Observable::random_quadratic(dims, &mut rng);
        let g = Observable::random_quadratic(dims, &mut rng);
        let fg = Observable::product(&f, &g);
        let region = StateRegion::standard(dims);
        for _ in 0..10 {
            let x = region.sample(&mut rng);
            let lhs = fg.gradient(&x).unwrap().flatten();
            let rhs = f.gradient(&x).unwrap().flatten() * g.value(&x)
                + g.gradient(&x).unwrap().flatten() * f.value(&x);
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }
}
