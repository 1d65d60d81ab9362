//! Finite-dimensional Lie algebras encoded by structure constants.
//!
//! The canonical encoding is the array `C^c_{ab}` with
//! `[ξ, η]_c = Σ_{ab} C^c_{ab} ξ_a η_b`; bracket closures are converted to
//! constants at construction by evaluation on basis pairs, which makes the
//! coadjoint action exact and the Jacobi identity checkable once.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A Lie algebra `g` with structure constants, the duality pairing of
/// `g* × g` (coordinate dot product), and a constant symmetric
/// positive-definite inner product `γ` used by the sharp map `μ ↦ γ^{-1} μ`.
#[derive(Debug, Clone)]
pub struct LieAlgebraStructure {
    name: String,
    dim: usize,
    /// `constants[c][(a, b)] = C^c_{ab}`.
    constants: Vec<DMatrix<f64>>,
    gamma: DMatrix<f64>,
    gamma_inv: DMatrix<f64>,
}

impl LieAlgebraStructure {
    pub fn new(
        name: impl Into<String>,
        constants: Vec<DMatrix<f64>>,
        gamma: DMatrix<f64>,
    ) -> Result<Self> {
        let dim = constants.len();
        for (c, matrix) in constants.iter().enumerate() {
            if matrix.nrows() != dim || matrix.ncols() != dim {
                return Err(Error::InvalidAlgebra {
                    detail: format!("structure constant block {c} is not {dim}x{dim}"),
                });
            }
            let defect = (matrix + matrix.transpose()).amax();
            if defect > 1e-12 {
                return Err(Error::InvalidAlgebra {
                    detail: format!("C^{c}_ab is not antisymmetric in (a, b): defect {defect:.3e}"),
                });
            }
        }
        if gamma.nrows() != dim || gamma.ncols() != dim {
            return Err(Error::InvalidAlgebra {
                detail: "inner product has wrong dimensions".into(),
            });
        }
        if (&gamma - gamma.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidAlgebra {
                detail: "inner product is not symmetric".into(),
            });
        }
        let eigen = gamma.clone().symmetric_eigen();
        let min_eig = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig <= 1e-12 * gamma.amax().max(1.0) {
            return Err(Error::NotPositiveSemiDefinite {
                context: "algebra inner product γ",
                min_eigenvalue: min_eig,
            });
        }
        let gamma_inv = gamma
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveSemiDefinite {
                context: "algebra inner product γ",
                min_eigenvalue: min_eig,
            })?
            .inverse();

        let algebra = Self {
            name: name.into(),
            dim,
            constants,
            gamma,
            gamma_inv,
        };
        let residual = algebra.jacobi_basis_residual();
        if residual > 1e-12 {
            return Err(Error::InvalidAlgebra {
                detail: format!("Jacobi identity fails on basis triples: residual {residual:.3e}"),
            });
        }
        Ok(algebra)
    }

    /// Builds the structure constants by evaluating a bracket closure on
    /// basis pairs, then validates as in [`LieAlgebraStructure::new`].
    pub fn from_bracket<B>(
        name: impl Into<String>,
        dim: usize,
        bracket: B,
        gamma: DMatrix<f64>,
    ) -> Result<Self>
    where
        B: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
    {
        let mut constants = vec![DMatrix::zeros(dim, dim); dim];
        for a in 0..dim {
            for b in 0..dim {
                let ea = basis(dim, a);
                let eb = basis(dim, b);
                let value = bracket(&ea, &eb);
                for c in 0..dim {
                    constants[c][(a, b)] = value[c];
                }
            }
        }
        Self::new(name, constants, gamma)
    }

    /// so(3) with the cross-product bracket and the identity inner product.
    pub fn so3() -> Self {
        Self::so3_with_gamma(DMatrix::identity(3, 3)).expect("identity inner product")
    }

    pub fn so3_with_gamma(gamma: DMatrix<f64>) -> Result<Self> {
        Self::from_bracket(
            "so(3)",
            3,
            |a: &DVector<f64>, b: &DVector<f64>| a.cross(b),
            gamma,
        )
    }

    /// The planar Euclidean algebra se(2): one rotation generator acting on
    /// two commuting translations.
    pub fn se2() -> Self {
        Self::from_bracket(
            "se(2)",
            3,
            |a: &DVector<f64>, b: &DVector<f64>| {
                DVector::from_vec(vec![
                    0.0,
                    -(a[0] * b[2] - a[2] * b[0]),
                    a[0] * b[1] - a[1] * b[0],
                ])
            },
            DMatrix::identity(3, 3),
        )
        .expect("se(2) constants satisfy Jacobi")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn structure_constants(&self) -> &[DMatrix<f64>] {
        &self.constants
    }

    /// `[ξ, η]` from the structure constants.
    pub fn bracket(&self, xi: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |c, _| xi.dot(&(&self.constants[c] * eta)))
    }

    /// Duality pairing `⟨μ, ξ⟩` (coordinate dot product).
    pub fn pairing(&self, mu: &DVector<f64>, xi: &DVector<f64>) -> f64 {
        mu.dot(xi)
    }

    /// `M(μ) = Σ_c μ_c C^c`, so that `⟨μ, [ξ, η]⟩ = ξ^T M(μ) η`.
    pub fn weighted_constants(&self, mu: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for c in 0..self.dim {
            m += &self.constants[c] * mu[c];
        }
        m
    }

    /// Coadjoint action: the unique covector with
    /// `⟨ad*_ξ μ, η⟩ = ⟨μ, [ξ, η]⟩` for all `η`.
    pub fn ad_star(&self, xi: &DVector<f64>, mu: &DVector<f64>) -> DVector<f64> {
        self.weighted_constants(mu).transpose() * xi
    }

    /// Sharp map `γ^{-1} μ` of the inner product.
    pub fn sharp(&self, mu: &DVector<f64>) -> DVector<f64> {
        &self.gamma_inv * mu
    }

    /// Max over basis triples of the Jacobi cycle
    /// `[e_a, [e_b, e_c]] + [e_b, [e_c, e_a]] + [e_c, [e_a, e_b]]`.
    pub fn jacobi_basis_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.dim {
            for b in 0..self.dim {
                for c in 0..self.dim {
                    let ea = basis(self.dim, a);
                    let eb = basis(self.dim, b);
                    let ec = basis(self.dim, c);
                    let cycle = self.bracket(&ea, &self.bracket(&eb, &ec))
                        + self.bracket(&eb, &self.bracket(&ec, &ea))
                        + self.bracket(&ec, &self.bracket(&ea, &eb));
                    worst = worst.max(cycle.amax());
                }
            }
        }
        worst
    }
}

/// Coadjoint action as a standalone operation with dimension checks.
pub fn ad_star(
    algebra: &LieAlgebraStructure,
    xi: &DVector<f64>,
    mu: &DVector<f64>,
) -> Result<DVector<f64>> {
    if xi.len() != algebra.dim() {
        return Err(Error::DimensionMismatch {
            context: "ad* algebra element",
            expected: algebra.dim(),
            actual: xi.len(),
        });
    }
    if mu.len() != algebra.dim() {
        return Err(Error::DimensionMismatch {
            context: "ad* momentum",
            expected: algebra.dim(),
            actual: mu.len(),
        });
    }
    Ok(algebra.ad_star(xi, mu))
}

fn basis(dim: usize, index: usize) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    v[index] = 1.0;
    v
}
