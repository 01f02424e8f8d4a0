//! Sparse-PCA dual: minimize lambda_max(C + U) subject to |U_ij| <= rho.
//! The matching primal maximizes Tr(CX) - rho * sum_ij |X_ij| over the
//! trace-one PSD cone, and any trace-one PSD matrix (the oracle's gradient
//! qualifies) yields a lower bound for the duality gap.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{leading_eigs, SymMatrix};
use crate::smoothing::{grad_approx, LanczosSettings, SmoothingConfig};
use crate::solver::{box_feasible_set, FeasibleSet, OracleEval, SmoothProblem};

use super::{sym_from_vec, vec_from_sym};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SparsePcaProblem {
    pub c: SymMatrix,
    pub rho: f64,
    pub cfg: SmoothingConfig,
    pub lanczos: LanczosSettings,
    /// Multiply the box diameter 2 rho n into the certificate conversion.
    pub strict_certificates: bool,
    objective_tol: f64,
}

impl SparsePcaProblem {
    pub fn new(c: SymMatrix, rho: f64, eps: f64) -> Result<Self> {
        if rho <= 0.0 {
            return Err(Error::InvalidArgument("rho must be positive".into()));
        }
        let cfg = SmoothingConfig::from_eps(c.n(), eps)?;
        Ok(Self {
            c,
            rho,
            cfg,
            lanczos: LanczosSettings::default(),
            strict_certificates: false,
            objective_tol: 1e-7,
        })
    }

    pub fn matrix_dim(&self) -> usize {
        self.c.n()
    }

    /// The solver works on U flattened to length n^2; entrywise clamping
    /// preserves symmetry of symmetric inputs.
    pub fn feasible_set(&self) -> FeasibleSet {
        let n = self.c.n();
        box_feasible_set(n * n, self.rho)
    }

    fn certificate_scale(&self) -> f64 {
        if self.strict_certificates {
            2.0 * self.rho * self.c.n() as f64
        } else {
            1.0
        }
    }

    pub fn gap(&self, u: &DVector<f64>, primal: &SymMatrix) -> Result<f64> {
        Ok(self.objective(u)? - self.lower_bound(primal))
    }
}

impl SmoothProblem for SparsePcaProblem {
    fn oracle(&self, u: &DVector<f64>, delta: f64) -> Result<OracleEval> {
        let n = self.c.n();
        if u.iter().any(|&e| e.abs() > self.rho + 1e-10) {
            return Err(Error::Infeasible("U leaves the rho-box".into()));
        }
        let x = self.c.add(&sym_from_vec(u, n));
        let r = grad_approx(
            &x,
            self.cfg.mu,
            delta,
            self.certificate_scale(),
            &self.lanczos,
        )?;
        Ok(OracleEval {
            value: r.value,
            gradient: vec_from_sym(&r.gradient),
            delta_cert: r.delta_cert,
            m_used: r.m_used,
            matrix_dim: n,
            eig_gap: r.eig_gap,
            primal: Some(r.gradient),
        })
    }

    fn objective(&self, u: &DVector<f64>) -> Result<f64> {
        let x = self.c.add(&sym_from_vec(u, self.c.n()));
        let top = leading_eigs(&x, 1, self.objective_tol, self.lanczos.seed)?;
        Ok(top.lambda[0])
    }

    fn lower_bound(&self, primal: &SymMatrix) -> f64 {
        let l1: f64 = primal.matrix().iter().map(|e| e.abs()).sum();
        self.c.dot(primal) - self.rho * l1
    }
}

/// Spiked covariance test matrix C = M'M + v e e' with M uniform on [0,1]
/// and e the fixed sparse pattern (ones at positions 1, 3, 5, 7, 9).
pub fn spiked_instance(n: usize, v: f64, seed: u64) -> Result<SymMatrix> {
    if n < 10 {
        return Err(Error::InvalidArgument(
            "spiked instance needs n >= 10 for the support pattern".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>());
    let mut c = m.transpose() * &m;
    let e = spike_pattern(n);
    c += &e * e.transpose() * v;
    SymMatrix::new(c)
}

/// The planted support: ones at the five odd positions 1, 3, 5, 7, 9
/// (1-based), zeros elsewhere.
pub fn spike_pattern(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| if i < 10 && i % 2 == 0 { 1.0 } else { 0.0 })
}
