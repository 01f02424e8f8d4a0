//! Random instance generation for the four spectral families and the
//! asymptotic eigenvalue-fraction predictions.
//!
//! The fraction operations answer: what proportion of eigenvalues carries an
//! exponential weight above a cutoff gamma, for a matrix whose spectrum
//! follows the semicircle or Marchenko-Pastur limit law? Weights below gamma
//! contribute negligibly to the smoothed gradient, so n times this fraction
//! predicts how many eigenpairs an oracle call needs.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{with_spectrum, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Symmetric matrix with centered normal entries; semicircle spectrum.
    Gaussian,
    /// Wishart matrix; Marchenko-Pastur spectrum.
    Wishart,
    /// Haar-conjugated uniform spectrum on [0, 1].
    UniformSpectrum,
    /// Uniform spectrum on [0, 1] with one eigenvalue set to the spike value.
    UniformPlusSpike,
}

impl FamilyKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(Self::Gaussian),
            "wishart" => Some(Self::Wishart),
            "uniform" => Some(Self::UniformSpectrum),
            "uniform-spike" => Some(Self::UniformPlusSpike),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Wishart => "wishart",
            Self::UniformSpectrum => "uniform",
            Self::UniformPlusSpike => "uniform-spike",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralFamily {
    pub kind: FamilyKind,
    pub n: usize,
    /// Second-moment scale sigma of the Gaussian/Wishart laws.
    pub scale: f64,
    /// Spike eigenvalue for UniformPlusSpike.
    pub spike: Option<f64>,
}

impl SpectralFamily {
    pub fn new(kind: FamilyKind, n: usize, scale: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("family needs n >= 2".into()));
        }
        if scale <= 0.0 {
            return Err(Error::InvalidArgument("scale must be positive".into()));
        }
        let spike = match kind {
            FamilyKind::UniformPlusSpike => Some(5.0),
            _ => None,
        };
        Ok(Self {
            kind,
            n,
            scale,
            spike,
        })
    }

    pub fn with_spike(mut self, spike: f64) -> Self {
        self.spike = Some(spike);
        self
    }
}

/// One symmetric draw from the family.
pub fn sample(family: &SpectralFamily, seed: u64) -> Result<SymMatrix> {
    let n = family.n;
    let sigma = family.scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family.kind {
        FamilyKind::Gaussian => {
            // entries N(0, sigma^2/n) on and above the diagonal, mirrored;
            // spectral edge at 2 sigma
            let sd = sigma / (n as f64).sqrt();
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.sample::<f64, _>(StandardNormal);
                    m[(i, j)] = v * sd;
                    m[(j, i)] = v * sd;
                }
            }
            SymMatrix::new(m)
        }
        FamilyKind::Wishart => {
            // G'G with Var(G_ij) = sigma/n puts the upper MP edge at 4 sigma
            let sd = (sigma / n as f64).sqrt();
            let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal) * sd);
            SymMatrix::new(g.transpose() * &g)
        }
        FamilyKind::UniformSpectrum => {
            let lambda: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            with_spectrum(&lambda, rng.gen())
        }
        FamilyKind::UniformPlusSpike => {
            let mut lambda: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            lambda[0] = family.spike.unwrap_or(5.0);
            with_spectrum(&lambda, rng.gen())
        }
    }
}

/// Draws for a maximum-eigenvalue instance: m constraint matrices plus the
/// offset, all from the same family. Deterministic per seed.
pub fn sample_instance_matrices(
    family: &SpectralFamily,
    m: usize,
    seed: u64,
) -> Result<(Vec<SymMatrix>, SymMatrix)> {
    let mut components = Vec::with_capacity(m);
    for i in 0..m {
        components.push(sample(family, seed.wrapping_add(1 + i as u64))?);
    }
    let c = sample(family, seed)?;
    Ok((components, c))
}

/// Semicircle density sqrt(4 sigma^2 - x^2) / (2 pi sigma^2) on [-2s, 2s].
pub fn semicircle_density(x: f64, sigma: f64) -> f64 {
    let edge = 2.0 * sigma;
    if x.abs() >= edge {
        0.0
    } else {
        (edge * edge - x * x).sqrt() / (2.0 * std::f64::consts::PI * sigma * sigma)
    }
}

/// Marchenko-Pastur density sqrt(x (4 sigma - x)) / (2 pi x) on (0, 4s].
/// As printed this density has total mass sigma; fraction operations
/// normalize by it.
pub fn marchenko_density(x: f64, sigma: f64) -> f64 {
    let edge = 4.0 * sigma;
    if x <= 0.0 || x >= edge {
        0.0
    } else {
        (x * (edge - x)).sqrt() / (2.0 * std::f64::consts::PI * x)
    }
}

/// Adaptive Simpson quadrature.
fn adaptive_quad(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    if a >= b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

const QUAD_TOL: f64 = 1e-10;

fn check_fraction_args(eps: f64, gamma: f64, n: usize) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument("gamma must lie in (0, 1)".into()));
    }
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    Ok(())
}

/// Fraction of semicircle-distributed eigenvalues whose exponential weight
/// exceeds gamma: the integral of the density over the upper-edge window
/// [2 sigma + eps ln(gamma)/ln(n), 2 sigma].
///
/// The integrand is evaluated under the substitution x = 2 sigma - t^2,
/// which absorbs the square-root edge behavior.
pub fn semicircle_fraction(eps: f64, gamma: f64, sigma: f64, n: usize) -> Result<f64> {
    check_fraction_args(eps, gamma, n)?;
    let edge = 2.0 * sigma;
    let a = edge + eps * gamma.ln() / (n as f64).ln();
    if a <= -edge {
        return Ok(1.0);
    }
    if a >= edge {
        return Ok(0.0);
    }
    let t_max = (edge - a).sqrt();
    let f = |t: f64| {
        t * t * (4.0 * sigma - t * t).max(0.0).sqrt() / (std::f64::consts::PI * sigma * sigma)
    };
    Ok(adaptive_quad(&f, 0.0, t_max, QUAD_TOL).min(1.0))
}

/// Marchenko-Pastur analog of `semicircle_fraction`: the window runs down
/// from the upper support edge 4 sigma, and the printed density's total mass
/// sigma is divided out so the result is a probability.
pub fn marchenko_fraction(eps: f64, gamma: f64, sigma: f64, n: usize) -> Result<f64> {
    check_fraction_args(eps, gamma, n)?;
    let edge = 4.0 * sigma;
    let a = edge + eps * gamma.ln() / (n as f64).ln();
    if a <= 0.0 {
        return Ok(1.0);
    }
    let t_max = (edge - a).sqrt();
    let f = |t: f64| t * t / (std::f64::consts::PI * (edge - t * t).max(0.0).sqrt());
    Ok((adaptive_quad(&f, 0.0, t_max, QUAD_TOL) / sigma).min(1.0))
}
