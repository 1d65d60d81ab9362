//! System descriptions consumed by every other module.
//!
//! The Hamiltonian description is canonical: a [`HamiltonianSystem`] carries
//! the energy observable `H(q, p, S, N)`, a friction force law
//! `F^fr(q, v, S)` taking the velocity `v = ∂H/∂p`, an antisymmetric
//! compartment flux law `J(S, N, μ)`, and optionally the linear transport
//! coefficients `(λ, G)` that declare `F^fr = -λ·v` and
//! `J_{kl} = -G_{kl}(μ_k - μ_l)`. Lagrangian descriptions are converted once
//! through [`legendre_to_hamiltonian`] rather than re-solved per step.
//!
//! All system objects are immutable after construction and safe to evaluate
//! from multiple threads; user-supplied closures must be pure.

pub mod observable;
pub mod state;

pub use observable::{default_fd_scale, fd_gradient, fd_step_factor, Observable};
pub use state::{Dims, StateRegion, StateVector, ThermoMechState};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

type FrictionFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync>;
type FluxFn = Arc<dyn Fn(f64, &DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type LambdaFn = Arc<dyn Fn(&DVector<f64>, f64) -> DMatrix<f64> + Send + Sync>;
type CoefficientFn = Arc<dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

const AUDIT_STATES: usize = 16;
const AUDIT_SEED: u64 = 0x5EED;
const GRADIENT_TOLERANCE: f64 = 1e-5;
const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// Declared linear closures `λ(q, S)` and `G(S, N)` relating fluxes to
/// forces. Only the presence of this declaration makes the metriplectic
/// bracket constructible.
#[derive(Clone)]
pub struct LinearTransport {
    lambda: LambdaFn,
    coefficients: CoefficientFn,
}

impl LinearTransport {
    pub fn lambda_at(&self, q: &DVector<f64>, s: f64) -> DMatrix<f64> {
        (self.lambda)(q, s)
    }

    pub fn coefficients_at(&self, s: f64, n: &DVector<f64>) -> DMatrix<f64> {
        (self.coefficients)(s, n)
    }
}

/// Builds the antisymmetric flux matrix `J[k][l] = -G[k][l] (μ_k - μ_l)` from
/// transport coefficients. Only the upper triangle of `G` is read; the lower
/// triangle of `J` is filled by exact negation.
pub fn flux_from_linear_law(g: &DMatrix<f64>, mu: &DVector<f64>) -> DMatrix<f64> {
    let k = mu.len();
    let mut j = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in (a + 1)..k {
            let value = -g[(a, b)] * (mu[a] - mu[b]);
            j[(a, b)] = value;
            j[(b, a)] = -value;
        }
    }
    j
}

/// A Hamiltonian thermodynamic system on `T*Q × R^{K+1}`.
#[derive(Clone)]
pub struct HamiltonianSystem {
    dims: Dims,
    hamiltonian: Observable,
    friction: FrictionFn,
    flux: FluxFn,
    external_force: Option<FrictionFn>,
    linear_transport: Option<LinearTransport>,
}

impl std::fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianSystem")
            .field("dims", &self.dims)
            .field("linear_transport", &self.linear_transport.is_some())
            .finish()
    }
}

impl HamiltonianSystem {
    pub fn builder(dims: Dims, hamiltonian: Observable) -> HamiltonianSystemBuilder {
        HamiltonianSystemBuilder::new(dims, hamiltonian)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn hamiltonian(&self) -> &Observable {
        &self.hamiltonian
    }

    pub fn energy(&self, x: &ThermoMechState) -> f64 {
        self.hamiltonian.value(x)
    }

    pub fn gradient(&self, x: &ThermoMechState) -> Result<StateVector> {
        self.hamiltonian.gradient(x)
    }

    /// Temperature `∂H/∂S`.
    pub fn temperature(&self, x: &ThermoMechState) -> Result<f64> {
        Ok(self.gradient(x)?.s)
    }

    pub fn friction_force(&self, q: &DVector<f64>, v: &DVector<f64>, s: f64) -> DVector<f64> {
        (self.friction)(q, v, s)
    }

    pub fn flux_matrix(&self, s: f64, n: &DVector<f64>, mu: &DVector<f64>) -> DMatrix<f64> {
        (self.flux)(s, n, mu)
    }

    pub fn external_force(&self, q: &DVector<f64>, v: &DVector<f64>, s: f64) -> DVector<f64> {
        match &self.external_force {
            Some(f) => f(q, v, s),
            None => DVector::zeros(self.dims.dof),
        }
    }

    pub fn has_external_force(&self) -> bool {
        self.external_force.is_some()
    }

    pub fn linear_transport(&self) -> Option<&LinearTransport> {
        self.linear_transport.as_ref()
    }

    pub fn gradient_mode(&self) -> &'static str {
        if self.hamiltonian.is_analytic() {
            "analytic"
        } else {
            "finite-difference"
        }
    }
}

/// Chemical potentials `μ_k = ∂H/∂N_k`.
pub fn chemical_potentials(sys: &HamiltonianSystem, x: &ThermoMechState) -> Result<DVector<f64>> {
    if sys.dims().compartments == 0 {
        return Err(Error::NoCompartments);
    }
    Ok(sys.gradient(x)?.n)
}

pub struct HamiltonianSystemBuilder {
    dims: Dims,
    label: String,
    hamiltonian: Observable,
    friction: Option<FrictionFn>,
    flux: Option<FluxFn>,
    external_force: Option<FrictionFn>,
    linear_transport: Option<LinearTransport>,
    audit_region: StateRegion,
    skip_hyperregularity_probe: bool,
    lagrangian_probe: Option<Arc<LagrangianSystem>>,
}

impl HamiltonianSystemBuilder {
    pub fn new(dims: Dims, hamiltonian: Observable) -> Self {
        Self {
            dims,
            label: "H".to_string(),
            hamiltonian,
            friction: None,
            flux: None,
            external_force: None,
            linear_transport: None,
            audit_region: StateRegion::standard(dims),
            skip_hyperregularity_probe: false,
            lagrangian_probe: None,
        }
    }

    /// Name used in audit error messages.
    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Friction force law `(q, v, S) ↦ F^fr`, a covector of length `dof`.
    pub fn friction<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
    {
        self.friction = Some(Arc::new(f));
        self
    }

    /// Flux law `(S, N, μ) ↦ J` with `J[k][l]` the molar rate from
    /// compartment `l` into compartment `k`; must be antisymmetric.
    pub fn flux<F>(mut self, f: F) -> Self
    where
        F: Fn(f64, &DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.flux = Some(Arc::new(f));
        self
    }

    pub fn external_force<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
    {
        self.external_force = Some(Arc::new(f));
        self
    }

    /// Declares linear transport coefficients without touching the friction
    /// and flux closures; construction audits that they agree.
    pub fn linear_transport<L, G>(mut self, lambda: L, coefficients: G) -> Self
    where
        L: Fn(&DVector<f64>, f64) -> DMatrix<f64> + Send + Sync + 'static,
        G: Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.linear_transport = Some(LinearTransport {
            lambda: Arc::new(lambda),
            coefficients: Arc::new(coefficients),
        });
        self
    }

    /// Declares linear transport laws and installs the matching friction
    /// `F^fr = -λ(q,S)·v` and flux `J_{kl} = -G_{kl}(μ_k - μ_l)` closures in
    /// one step.
    pub fn linear_laws<L, G>(mut self, lambda: L, coefficients: G) -> Self
    where
        L: Fn(&DVector<f64>, f64) -> DMatrix<f64> + Send + Sync + 'static,
        G: Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let lambda: LambdaFn = Arc::new(lambda);
        let coefficients: CoefficientFn = Arc::new(coefficients);
        let lam = lambda.clone();
        self.friction = Some(Arc::new(move |q: &DVector<f64>, v: &DVector<f64>, s: f64| {
            -(lam(q, s) * v)
        }));
        let g = coefficients.clone();
        self.flux = Some(Arc::new(move |s: f64, n: &DVector<f64>, mu: &DVector<f64>| {
            flux_from_linear_law(&g(s, n), mu)
        }));
        self.linear_transport = Some(LinearTransport {
            lambda,
            coefficients,
        });
        self
    }

    /// Region sampled by the construction-time audits.
    pub fn audit_region(mut self, region: StateRegion) -> Self {
        self.audit_region = region;
        self
    }

    fn probe_states(&self) -> Vec<ThermoMechState> {
        let mut rng = SeededRng::new(AUDIT_SEED);
        (0..AUDIT_STATES)
            .map(|_| self.audit_region.sample(&mut rng))
            .collect()
    }

    pub fn build(self) -> Result<HamiltonianSystem> {
        let dims = self.dims;
        let states = self.probe_states();

        if let Some(lag) = &self.lagrangian_probe {
            if !self.skip_hyperregularity_probe {
                for x in &states {
                    solve_velocity(lag, x)?;
                }
            }
        }

        // Analytic gradients are audited against finite differences up front:
        // a silent gradient bug would corrupt every bracket downstream.
        if self.hamiltonian.is_analytic() {
            for (index, x) in states.iter().enumerate() {
                let analytic = self.hamiltonian.gradient(x)?.flatten();
                let numeric = fd_gradient(
                    |st| self.hamiltonian.value(st),
                    x,
                    &default_fd_scale(x),
                )?
                .flatten();
                let scale = analytic.amax().max(numeric.amax()).max(1.0);
                let rel = (&analytic - &numeric).amax() / scale;
                if rel > GRADIENT_TOLERANCE {
                    return Err(Error::GradientAudit {
                        name: self.label.clone(),
                        rel_error: rel,
                        tolerance: GRADIENT_TOLERANCE,
                        state_index: index,
                    });
                }
            }
        }

        let friction = self
            .friction
            .unwrap_or_else(|| Arc::new(move |_: &DVector<f64>, _: &DVector<f64>, _| DVector::zeros(dims.dof)));
        let flux = self.flux.unwrap_or_else(|| {
            Arc::new(move |_, _: &DVector<f64>, _: &DVector<f64>| {
                DMatrix::zeros(dims.compartments, dims.compartments)
            })
        });

        let sys = HamiltonianSystem {
            dims,
            hamiltonian: self.hamiltonian,
            friction,
            flux,
            external_force: self.external_force,
            linear_transport: self.linear_transport,
        };

        for x in &states {
            let grad = sys.gradient(x)?;
            let friction = sys.friction_force(&x.q, &grad.p, x.s);
            if friction.len() != dims.dof {
                return Err(Error::DimensionMismatch {
                    context: "friction force",
                    expected: dims.dof,
                    actual: friction.len(),
                });
            }
            let flux = sys.flux_matrix(x.s, &x.n, &grad.n);
            if flux.nrows() != dims.compartments || flux.ncols() != dims.compartments {
                return Err(Error::DimensionMismatch {
                    context: "flux matrix",
                    expected: dims.compartments,
                    actual: flux.nrows().max(flux.ncols()),
                });
            }
            let defect = (&flux + flux.transpose()).amax();
            if defect > 1e-12 * flux.amax().max(1.0) {
                return Err(Error::FluxNotAntisymmetric { defect });
            }
            if let Some(transport) = &sys.linear_transport {
                audit_linear_transport(&sys, transport, x, &grad, &friction, &flux)?;
            }
        }

        Ok(sys)
    }
}

fn audit_linear_transport(
    sys: &HamiltonianSystem,
    transport: &LinearTransport,
    x: &ThermoMechState,
    grad: &StateVector,
    friction: &DVector<f64>,
    flux: &DMatrix<f64>,
) -> Result<()> {
    let dims = sys.dims();
    let lambda = transport.lambda_at(&x.q, x.s);
    if lambda.nrows() != dims.dof || lambda.ncols() != dims.dof {
        return Err(Error::DimensionMismatch {
            context: "λ matrix",
            expected: dims.dof,
            actual: lambda.nrows().max(lambda.ncols()),
        });
    }
    let sym = (&lambda + lambda.transpose()) * 0.5;
    let min_eig = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 * lambda.amax().max(1.0) {
        return Err(Error::NotPositiveSemiDefinite {
            context: "symmetric part of λ",
            min_eigenvalue: min_eig,
        });
    }
    let predicted = -(&lambda * &grad.p);
    let scale = predicted.amax().max(1.0);
    if (friction - &predicted).amax() > CONSISTENCY_TOLERANCE * scale {
        return Err(Error::TransportInconsistent {
            detail: format!(
                "friction closure deviates from -λ·v by {:.3e}",
                (friction - &predicted).amax()
            ),
        });
    }

    let g = transport.coefficients_at(x.s, &x.n);
    if g.nrows() != dims.compartments || g.ncols() != dims.compartments {
        return Err(Error::DimensionMismatch {
            context: "G matrix",
            expected: dims.compartments,
            actual: g.nrows().max(g.ncols()),
        });
    }
    if let Some(value) = g.iter().find(|v| **v < -1e-12) {
        return Err(Error::TransportInconsistent {
            detail: format!("transport coefficient G entry {value:.3e} is negative"),
        });
    }
    let predicted_flux = flux_from_linear_law(&g, &grad.n);
    let scale = predicted_flux.amax().max(1.0);
    if (flux - &predicted_flux).amax() > CONSISTENCY_TOLERANCE * scale {
        return Err(Error::TransportInconsistent {
            detail: format!(
                "flux closure deviates from -G·Δμ by {:.3e}",
                (flux - &predicted_flux).amax()
            ),
        });
    }
    Ok(())
}

/// A Lagrangian thermodynamic system on `TQ × R^{K+1}`.
///
/// The Lagrangian is stored as an [`Observable`] whose `p` slot carries the
/// velocity `v`; its gradient component `.p` is therefore `∂L/∂v`.
#[derive(Clone)]
pub struct LagrangianSystem {
    dims: Dims,
    lagrangian: Observable,
    friction: Option<FrictionFn>,
    flux: Option<FluxFn>,
    external_force: Option<FrictionFn>,
    linear_transport: Option<LinearTransport>,
}

impl LagrangianSystem {
    pub fn new(dims: Dims, lagrangian: Observable) -> Self {
        Self {
            dims,
            lagrangian,
            friction: None,
            flux: None,
            external_force: None,
            linear_transport: None,
        }
    }

    pub fn with_friction<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
    {
        self.friction = Some(Arc::new(f));
        self
    }

    pub fn with_flux<F>(mut self, f: F) -> Self
    where
        F: Fn(f64, &DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.flux = Some(Arc::new(f));
        self
    }

    pub fn with_external_force<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
    {
        self.external_force = Some(Arc::new(f));
        self
    }

    /// Declares linear transport coefficients; they carry over to the
    /// Hamiltonian side unchanged under the Legendre transform, where the
    /// usual construction audits run against them.
    pub fn with_linear_transport<L, G>(mut self, lambda: L, coefficients: G) -> Self
    where
        L: Fn(&DVector<f64>, f64) -> DMatrix<f64> + Send + Sync + 'static,
        G: Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.linear_transport = Some(LinearTransport {
            lambda: Arc::new(lambda),
            coefficients: Arc::new(coefficients),
        });
        self
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn lagrangian(&self) -> &Observable {
        &self.lagrangian
    }
}

const NEWTON_MAX_ITERATIONS: usize = 50;
const NEWTON_RESIDUAL: f64 = 1e-12;

/// Solves `∂L/∂v = p` for the velocity by Newton iteration.
///
/// `x.p` carries the queried momentum; the returned vector is the velocity at
/// which the Legendre transform is evaluated. The initial guess is `v = p`
/// (momentum read through an identity mass scaling).
pub fn solve_velocity(lag: &LagrangianSystem, x: &ThermoMechState) -> Result<DVector<f64>> {
    solve_velocity_seeded(lag, x, x.p.clone())
}

/// [`solve_velocity`] with a caller-supplied initial guess.
pub fn solve_velocity_seeded(
    lag: &LagrangianSystem,
    x: &ThermoMechState,
    seed: DVector<f64>,
) -> Result<DVector<f64>> {
    let dof = lag.dims.dof;
    if seed.len() != dof {
        return Err(Error::DimensionMismatch {
            context: "velocity seed",
            expected: dof,
            actual: seed.len(),
        });
    }
    let momentum = &x.p;
    let mut v = seed;
    let grad_v = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let point = ThermoMechState::new(x.q.clone(), v.clone(), x.s, x.n.clone());
        Ok(lag.lagrangian.gradient(&point)?.p)
    };

    let mut residual = grad_v(&v)? - momentum;
    for iteration in 0..NEWTON_MAX_ITERATIONS {
        let norm = residual.amax();
        if norm <= NEWTON_RESIDUAL {
            return Ok(v);
        }
        // Mass matrix ∂²L/∂v² by central differences of the v-gradient.
        let step = f64::EPSILON.sqrt();
        let mut mass = DMatrix::zeros(dof, dof);
        for j in 0..dof {
            let h = step * v[j].abs().max(1.0);
            let mut vp = v.clone();
            vp[j] += h;
            let mut vm = v.clone();
            vm[j] -= h;
            let column = (grad_v(&vp)? - grad_v(&vm)?) / (2.0 * h);
            mass.set_column(j, &column);
        }
        let Some(delta) = mass.lu().solve(&residual) else {
            return Err(Error::HyperregularityFailure {
                residual: norm,
                iterations: iteration,
            });
        };
        v -= delta;
        residual = grad_v(&v)? - momentum;
    }
    Err(Error::HyperregularityFailure {
        residual: residual.amax(),
        iterations: NEWTON_MAX_ITERATIONS,
    })
}

/// Converts a hyperregular Lagrangian system to the equivalent Hamiltonian
/// system `H(q, p, S, N) = ⟨p, v⟩ - L(q, v, S, N)` with `∂L/∂v = p`.
///
/// Gradients follow the Legendre identities `∂H/∂q = -∂L/∂q`, `∂H/∂p = v`,
/// `∂H/∂S = -∂L/∂S`, `∂H/∂N = -∂L/∂N`. Friction, flux, and transport
/// declarations carry over unchanged: the friction law already takes the
/// velocity as input, and the flux law takes the chemical potentials.
/// Hyperregularity is probed at the audit states before the system is
/// accepted; at runtime a failed solve surfaces as a NaN evaluation.
pub fn legendre_to_hamiltonian(lag: &LagrangianSystem) -> Result<HamiltonianSystem> {
    let dims = lag.dims;
    let lag_arc = Arc::new(lag.clone());

    let value_lag = lag_arc.clone();
    let value = move |x: &ThermoMechState| -> f64 {
        match solve_velocity(&value_lag, x) {
            Ok(v) => {
                let point = ThermoMechState::new(x.q.clone(), v.clone(), x.s, x.n.clone());
                x.p.dot(&v) - value_lag.lagrangian.value(&point)
            }
            Err(_) => f64::NAN,
        }
    };

    let grad_lag = lag_arc.clone();
    let gradient = move |x: &ThermoMechState| -> StateVector {
        match solve_velocity(&grad_lag, x) {
            Ok(v) => {
                let point = ThermoMechState::new(x.q.clone(), v.clone(), x.s, x.n.clone());
                match grad_lag.lagrangian.gradient(&point) {
                    Ok(dl) => StateVector {
                        q: -dl.q,
                        p: v,
                        s: -dl.s,
                        n: -dl.n,
                    },
                    Err(_) => nan_vector(dims),
                }
            }
            Err(_) => nan_vector(dims),
        }
    };

    let hamiltonian = if lag.lagrangian.is_analytic() {
        Observable::new(value, gradient)
    } else {
        // The v-solve still uses finite differences of L internally, but the
        // Legendre identities give no extra accuracy in that case; keep the
        // gradient finite-difference so downstream tolerances stay honest.
        Observable::numeric(value)
    };

    let mut builder = HamiltonianSystemBuilder::new(dims, hamiltonian).label("Legendre H");
    builder.lagrangian_probe = Some(lag_arc);
    if let Some(f) = &lag.friction {
        let f = f.clone();
        builder = builder.friction(move |q: &DVector<f64>, v: &DVector<f64>, s| f(q, v, s));
    }
    if let Some(f) = &lag.flux {
        let f = f.clone();
        builder = builder.flux(move |s, n: &DVector<f64>, mu: &DVector<f64>| f(s, n, mu));
    }
    if let Some(f) = &lag.external_force {
        let f = f.clone();
        builder = builder.external_force(move |q: &DVector<f64>, v: &DVector<f64>, s| f(q, v, s));
    }
    if let Some(t) = &lag.linear_transport {
        let (lambda, coefficients) = (t.lambda.clone(), t.coefficients.clone());
        builder = builder.linear_transport(
            move |q: &DVector<f64>, s| lambda(q, s),
            move |s, n: &DVector<f64>| coefficients(s, n),
        );
    }
    builder.build()
}

fn nan_vector(dims: Dims) -> StateVector {
    StateVector {
        q: DVector::from_element(dims.dof, f64::NAN),
        p: DVector::from_element(dims.dof, f64::NAN),
        s: f64::NAN,
        n: DVector::from_element(dims.compartments, f64::NAN),
    }
}
