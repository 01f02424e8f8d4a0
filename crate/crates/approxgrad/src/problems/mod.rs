//! Concrete problem instances: maximum-eigenvalue minimization over a
//! Euclidean ball and the sparse-PCA dual over an entrywise box, each wiring
//! the smoothing oracle, prox maps, delta certificates, and duality gaps.

mod io;
mod maxeig;
mod spca;

pub use io::{load_instance, save_instance, Instance, MaxEigInstance, SpcaInstance};
pub use maxeig::{random_maxeig_instance, MaxEigBallProblem};
pub use spca::{spike_pattern, spiked_instance, SparsePcaProblem};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{full_eig, SymMatrix};

/// Affine map y -> X(y) = sum_i y_i A_i + c from dual variables to symmetric
/// matrices, with cached operator norms.
pub struct AffineOperator {
    components: Vec<SymMatrix>,
    c: SymMatrix,
    b: DVector<f64>,
    op_norm: f64,
    sigma_max: f64,
}

impl AffineOperator {
    pub fn new(components: Vec<SymMatrix>, c: SymMatrix, b: DVector<f64>) -> Result<Self> {
        let m = components.len();
        if m == 0 || b.len() != m {
            return Err(Error::InvalidArgument(
                "need at least one component and b of matching length".into(),
            ));
        }
        let n = c.n();
        if components.iter().any(|a| a.n() != n) {
            return Err(Error::InvalidArgument(
                "all components must match the offset dimension".into(),
            ));
        }
        let sigma_max = gram_sigma_max(&components)?;
        let op_norm = spectral_op_norm(&components)?;
        Ok(Self {
            components,
            c,
            b,
            op_norm,
            sigma_max,
        })
    }

    pub fn num_duals(&self) -> usize {
        self.components.len()
    }

    pub fn matrix_dim(&self) -> usize {
        self.c.n()
    }

    pub fn components(&self) -> &[SymMatrix] {
        &self.components
    }

    pub fn offset(&self) -> &SymMatrix {
        &self.c
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    /// ||A|| = max_{||h||=1} ||sum_i h_i A_i||_2.
    pub fn op_norm(&self) -> f64 {
        self.op_norm
    }

    /// Largest singular value of the map y -> sum_i y_i A_i with Frobenius
    /// geometry on the matrix side.
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// X(y) = sum_i y_i A_i + c.
    pub fn apply(&self, y: &DVector<f64>) -> SymMatrix {
        let n = self.c.n();
        let mut x = DMatrix::zeros(n, n);
        for (i, a) in self.components.iter().enumerate() {
            x += a.matrix() * y[i];
        }
        x += self.c.matrix();
        SymMatrix::new(x).expect("sum of symmetric matrices is symmetric")
    }

    /// Adjoint: (A(X))_i = <A_i, X>.
    pub fn adjoint(&self, x: &SymMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.components.len(),
            self.components.iter().map(|a| a.dot(x)),
        )
    }
}

/// sqrt of the largest eigenvalue of the Gram matrix G_ij = <A_i, A_j>.
fn gram_sigma_max(components: &[SymMatrix]) -> Result<f64> {
    let m = components.len();
    let gram = DMatrix::from_fn(m, m, |i, j| components[i].dot(&components[j]));
    let eigs = full_eig(&SymMatrix::new(gram)?)?;
    Ok(eigs.lambda[0].max(0.0).sqrt())
}

/// Alternating power iteration for max_{||h||=1} |lambda|_max(sum h_i A_i),
/// run to 1e-6 relative stagnation from a few deterministic starts.
fn spectral_op_norm(components: &[SymMatrix]) -> Result<f64> {
    let m = components.len();
    let mut best = 0.0f64;
    for start in 0..3u64 {
        let mut h = crate::linalg::seeded_unit_vector(m, 1000 + start);
        let mut value = 0.0f64;
        for _ in 0..200 {
            let n = components[0].n();
            let mut xm = DMatrix::zeros(n, n);
            for (i, a) in components.iter().enumerate() {
                xm += a.matrix() * h[i];
            }
            let eigs = full_eig(&SymMatrix::new(xm)?)?;
            let top = eigs.lambda[0];
            let bottom = eigs.lambda[n - 1];
            let u = if top.abs() >= bottom.abs() {
                eigs.vectors.column(0)
            } else {
                eigs.vectors.column(n - 1)
            };
            let g = DVector::from_iterator(
                m,
                components.iter().map(|a| (a.matrix() * u).dot(&u)),
            );
            let new_value = g.norm();
            if new_value <= 1e-300 {
                break;
            }
            h = &g / new_value;
            if (new_value - value).abs() <= 1e-6 * new_value.max(1.0) {
                value = new_value;
                break;
            }
            value = new_value;
        }
        best = best.max(value);
    }
    Ok(best)
}

/// Reshape a flattened symmetric matrix (row-major, length n^2).
pub(crate) fn sym_from_vec(v: &DVector<f64>, n: usize) -> SymMatrix {
    let raw = DMatrix::from_fn(n, n, |i, j| v[i * n + j]);
    SymMatrix::new(raw).expect("square by construction")
}

pub(crate) fn vec_from_sym(x: &SymMatrix) -> DVector<f64> {
    let n = x.n();
    DVector::from_fn(n * n, |idx, _| x.matrix()[(idx / n, idx % n)])
}
