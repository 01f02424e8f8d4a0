//! Dense symmetric linear algebra: full and partial eigendecompositions and
//! Haar-random orthogonal conjugation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense symmetric n-by-n real matrix. Symmetry is enforced on construction
/// by averaging with the transpose, so `entries[(i,j)] == entries[(j,i)]`
/// holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrizes the input as (X + X')/2.
    pub fn new(raw: DMatrix<f64>) -> Result<Self> {
        if raw.nrows() == 0 || raw.nrows() != raw.ncols() {
            return Err(Error::InvalidArgument(format!(
                "expected a square matrix with n >= 1, got {}x{}",
                raw.nrows(),
                raw.ncols()
            )));
        }
        let n = raw.nrows();
        let mut data = raw;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (data[(i, j)] + data[(j, i)]);
                data[(i, j)] = avg;
                data[(j, i)] = avg;
            }
        }
        Ok(Self { data })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            data: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.data * v
    }

    /// Frobenius inner product <self, other>.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.data.dot(&other.data)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.norm()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * s,
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data + &other.data,
        }
    }

    pub fn add_scaled(&mut self, other: &SymMatrix, s: f64) {
        self.data += &other.data * s;
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data - &other.data,
        }
    }
}

/// The `m` leading eigenpairs of a symmetric matrix, sorted by descending
/// eigenvalue, plus per-pair backward-error residuals ||Xu - lambda u||.
#[derive(Debug, Clone)]
pub struct EigPartial {
    pub lambda: Vec<f64>,
    /// n-by-m matrix whose columns are the orthonormal eigenvector estimates.
    pub vectors: DMatrix<f64>,
    pub m: usize,
    pub n: usize,
    pub residuals: Vec<f64>,
    /// Set when a restarted Lanczos run hit its budget and the result was
    /// recomputed by a full decomposition.
    pub fallback: bool,
}

impl EigPartial {
    /// Reconstruction U diag(lambda) U'. Only meaningful when m == n.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&self.lambda));
        &self.vectors * lam * self.vectors.transpose()
    }

    pub fn truncate(mut self, m: usize) -> EigPartial {
        assert!(m >= 1 && m <= self.m);
        self.lambda.truncate(m);
        self.residuals.truncate(m);
        self.vectors = self.vectors.columns(0, m).into_owned();
        self.m = m;
        self
    }
}

/// All n eigenpairs of a symmetric matrix, sorted descending.
pub fn full_eig(x: &SymMatrix) -> Result<EigPartial> {
    let n = x.n();
    let se = x
        .data
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::EigFailed)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let lambda: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    let residuals = residual_norms(x, &lambda, &vectors);
    Ok(EigPartial {
        lambda,
        vectors,
        m: n,
        n,
        residuals,
        fallback: false,
    })
}

fn residual_norms(x: &SymMatrix, lambda: &[f64], vectors: &DMatrix<f64>) -> Vec<f64> {
    let xv = &x.data * vectors;
    lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| (xv.column(i) - vectors.column(i) * l).norm())
        .collect()
}

/// Cap on implicit restarts before giving up and falling back to `full_eig`.
const MAX_RESTARTS: usize = 300;

/// The `m` algebraically largest eigenpairs of `x`.
///
/// Uses restarted Lanczos with full reorthogonalization and a Krylov basis of
/// size 4m. Deterministic: the starting vector is a pseudo-random unit vector
/// drawn from `seed`. Requests with m >= n/2 are routed to the full
/// decomposition, which is cheaper at that size.
pub fn leading_eigs(x: &SymMatrix, m: usize, tol: f64, seed: u64) -> Result<EigPartial> {
    let n = x.n();
    if m < 1 || m > n {
        return Err(Error::InvalidArgument(format!(
            "eigenpair count m={m} out of range 1..={n}"
        )));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    // Dense is faster below this size, and also whenever half the spectrum
    // is requested anyway.
    if 2 * m >= n || n <= 48 {
        return Ok(full_eig(x)?.truncate(m));
    }

    let ncv = (4 * m).clamp(m + 2, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v0 = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    v0 /= v0.norm();

    // Basis columns, kept orthonormal by repeated Gram-Schmidt passes.
    let mut basis: Vec<DVector<f64>> = vec![v0];
    for _restart in 0..MAX_RESTARTS {
        // Expand with Krylov directions seeded by the newest basis vector.
        while basis.len() < ncv {
            let w = x.mul_vec(basis.last().unwrap());
            match orthonormalize(&basis, w) {
                Some(q) => basis.push(q),
                // Invariant subspace found: inject a fresh random direction.
                None => {
                    let r = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                    match orthonormalize(&basis, r) {
                        Some(q) => basis.push(q),
                        None => break,
                    }
                }
            }
        }
        let k = basis.len();
        let vmat = DMatrix::from_fn(n, k, |i, j| basis[j][i]);
        let xv = &x.data * &vmat;
        let h = SymMatrix::new(vmat.transpose() * &xv)?;
        let small = full_eig(&h)?;
        let take = m.min(k);
        let svec = small.vectors.columns(0, take);
        let ritz_vectors = &vmat * svec;
        let ritz_values: Vec<f64> = small.lambda[..take].to_vec();
        let residuals = residual_norms(x, &ritz_values, &ritz_vectors);
        let scale = ritz_values[0].abs().max(1.0);
        if take == m && residuals.iter().all(|&r| r <= tol * scale) {
            return Ok(EigPartial {
                lambda: ritz_values,
                vectors: ritz_vectors,
                m,
                n,
                residuals,
                fallback: false,
            });
        }
        // Thick restart: keep the Ritz vectors plus the residual direction of
        // the worst unconverged pair to seed the next expansion.
        let worst = residuals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut next: Vec<DVector<f64>> = (0..take).map(|j| ritz_vectors.column(j).into_owned()).collect();
        let resid_dir =
            xv * small.vectors.column(worst) - ritz_vectors.column(worst) * ritz_values[worst];
        if let Some(q) = orthonormalize(&next, resid_dir) {
            next.push(q);
        }
        basis = next;
    }

    let mut out = full_eig(x)?.truncate(m);
    out.fallback = true;
    Ok(out)
}

/// Two-pass modified Gram-Schmidt; returns None when the remainder is
/// numerically zero (the candidate lies in the span of the basis).
fn orthonormalize(basis: &[DVector<f64>], mut w: DVector<f64>) -> Option<DVector<f64>> {
    let initial = w.norm().max(1.0);
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&w);
            w.axpy(-c, q, 1.0);
        }
    }
    let nrm = w.norm();
    if nrm <= 1e-13 * initial {
        None
    } else {
        Some(w / nrm)
    }
}

/// Haar-distributed random orthogonal matrix: QR of an i.i.d. standard-normal
/// matrix with the columns sign-flipped so that diag(R) > 0.
pub fn haar_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        if (0..n).any(|i| r[(i, i)] == 0.0) {
            continue; // rank-deficient draw, essentially impossible
        }
        let mut q = qr.q();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                for i in 0..n {
                    q[(i, j)] = -q[(i, j)];
                }
            }
        }
        return q;
    }
}

/// Q diag(lambda) Q' with Q Haar distributed: uniform over symmetric matrices
/// with the given spectrum.
pub fn with_spectrum(lambda: &[f64], seed: u64) -> Result<SymMatrix> {
    if lambda.is_empty() || lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument(
            "spectrum must be non-empty and finite".into(),
        ));
    }
    let n = lambda.len();
    let q = haar_orthogonal(n, seed);
    let lam = DMatrix::from_diagonal(&DVector::from_column_slice(lambda));
    SymMatrix::new(&q * lam * q.transpose())
}

/// Deterministic unit vector used to seed iterative solvers.
pub fn seeded_unit_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let nrm = v.norm();
    if nrm > 0.0 {
        v /= nrm;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wigner(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (1.0 / n as f64).sqrt();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.sample::<f64, _>(StandardNormal);
                m[(i, j)] = v * scale;
                m[(j, i)] = v * scale;
            }
        }
        SymMatrix::new(m).unwrap()
    }

    #[test]
    fn full_eig_diagonal() {
        let x = SymMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let e = full_eig(&x).unwrap();
        assert_eq!(e.lambda, vec![3.0, 2.0, 1.0]);
        // permuted identity columns
        for j in 0..3 {
            let col = e.vectors.column(j);
            let mx = col.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            assert!((mx - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_eig_zero_matrix() {
        let e = full_eig(&SymMatrix::zeros(4)).unwrap();
        assert!(e.lambda.iter().all(|&l| l.abs() < 1e-14));
    }

    #[test]
    fn full_eig_reconstructs_wigner() {
        let x = wigner(30, 7);
        let e = full_eig(&x).unwrap();
        let err = (e.reconstruct() - x.matrix()).norm();
        assert!(err <= 1e-8 * x.norm_frobenius().max(1.0), "err={err}");
    }

    #[test]
    fn leading_eigs_spiked_diagonal() {
        let mut d = vec![1.0; 50];
        d[0] = 10.0;
        let x = SymMatrix::from_diagonal(&d);
        let e = leading_eigs(&x, 1, 1e-9, 42).unwrap();
        assert!((e.lambda[0] - 10.0).abs() < 1e-8);
        assert!((e.vectors[(0, 0)].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn leading_eigs_matches_full() {
        let x = wigner(40, 3);
        let full = full_eig(&x).unwrap();
        let part = leading_eigs(&x, 40, 1e-9, 1).unwrap();
        for i in 0..40 {
            assert!((full.lambda[i] - part.lambda[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn leading_eigs_prefix_property() {
        let x = wigner(60, 11);
        let full = full_eig(&x).unwrap();
        for m in [1usize, 3, 5, 12] {
            let part = leading_eigs(&x, m, 1e-9, 5).unwrap();
            for i in 0..m {
                assert!(
                    (full.lambda[i] - part.lambda[i]).abs() < 1e-6,
                    "m={m} i={i}: {} vs {}",
                    full.lambda[i],
                    part.lambda[i]
                );
            }
        }
    }

    #[test]
    fn leading_eigs_haar_conjugated_spectrum() {
        let lambda: Vec<f64> = (1..=50).rev().map(|v| v as f64).collect();
        let x = with_spectrum(&lambda, 9).unwrap();
        let e = leading_eigs(&x, 5, 1e-9, 2).unwrap();
        for (i, want) in [50.0, 49.0, 48.0, 47.0, 46.0].iter().enumerate() {
            assert!((e.lambda[i] - want).abs() < 1e-6);
        }
    }

    #[test]
    fn leading_eigs_deterministic() {
        let x = wigner(50, 21);
        let a = leading_eigs(&x, 4, 1e-9, 77).unwrap();
        let b = leading_eigs(&x, 4, 1e-9, 77).unwrap();
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn haar_orthogonal_basic() {
        let q = haar_orthogonal(1, 5);
        assert!((q[(0, 0)].abs() - 1.0).abs() < 1e-12);
        let q = haar_orthogonal(10, 5);
        let err = (q.transpose() * &q - DMatrix::<f64>::identity(10, 10)).abs().max();
        assert!(err <= 1e-10, "err={err}");
    }

    #[test]
    fn haar_first_coordinate_statistic() {
        // first column is uniform on the sphere; its first coordinate has
        // mean zero and variance 1/n
        let n = 200;
        let trials = 500;
        let mut sum = 0.0;
        for seed in 0..trials {
            sum += haar_orthogonal(n, seed as u64)[(0, 0)];
        }
        let mean = sum / trials as f64;
        let bound = 3.0 / ((trials * n) as f64).sqrt();
        assert!(mean.abs() <= bound, "mean={mean} bound={bound}");
    }

    #[test]
    fn with_spectrum_scalar_matrix() {
        let x = with_spectrum(&[1.0, 1.0, 1.0], 3).unwrap();
        let err = (x.matrix() - DMatrix::<f64>::identity(3, 3)).abs().max();
        assert!(err <= 1e-10);
    }

    #[test]
    fn with_spectrum_round_trip() {
        let lambda: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let x = with_spectrum(&lambda, 13).unwrap();
        let e = full_eig(&x).unwrap();
        let mut sorted = lambda.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in e.lambda.iter().zip(&sorted) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn with_spectrum_spike() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut lambda: Vec<f64> = (0..50).map(|_| rng.gen::<f64>()).collect();
        lambda[17] = 5.0;
        let x = with_spectrum(&lambda, 4).unwrap();
        let e = full_eig(&x).unwrap();
        assert!((e.lambda[0] - 5.0).abs() < 1e-8);
    }

    #[test]
    fn sym_matrix_rejects_empty() {
        assert!(SymMatrix::new(DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn leading_eigs_rejects_bad_m() {
        let x = SymMatrix::identity(5);
        assert!(leading_eigs(&x, 0, 1e-9, 0).is_err());
        assert!(leading_eigs(&x, 6, 1e-9, 0).is_err());
    }
}
