//! Gaussian beliefs over vectors and the two operations every solver reduces
//! to: linear pushforward and conditioning on linear observations.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::decomp::{Svd, SymEigen, SYMMETRY_TOL};
use crate::linalg::matrix::{axpy, dot, sub_vec, Matrix};
use crate::linalg::random::standard_normal_vec;

/// Default relative cutoff for pseudo-inverting singular Gram matrices.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Tolerated negative curvature, relative to the largest eigenvalue.
const PSD_TOL: f64 = 1e-8;

/// Symmetric to 1e-10 (relative) and positive semi-definite up to `1e-8 · λ_max`.
pub(crate) fn validate_covariance(cov: &Matrix, op: &'static str) -> Result<()> {
    let asym = cov.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { op, asymmetry: asym });
    }
    if cov.rows() > 0 {
        let eig = SymEigen::new(cov)?;
        let scale = eig.max_value().abs().max(eig.min_value().abs());
        if eig.min_value() < -PSD_TOL * scale {
            return Err(Error::NotPositiveDefinite { op });
        }
    }
    Ok(())
}

/// `N(mean, cov)` over `ℝᵈ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianBelief {
    mean: Vec<f64>,
    cov: Matrix,
}

impl GaussianBelief {
    /// Validates shape, symmetry (1e-10 relative) and positive semi-definiteness.
    pub fn new(mean: Vec<f64>, cov: Matrix) -> Result<Self> {
        let d = mean.len();
        if cov.shape() != (d, d) {
            return Err(Error::dims(
                "GaussianBelief::new",
                format!("{d}x{d} covariance"),
                format!("{}x{}", cov.rows(), cov.cols()),
            ));
        }
        if mean.iter().any(|v| !v.is_finite()) || !cov.is_finite() {
            return Err(Error::NonFinite("GaussianBelief::new"));
        }
        validate_covariance(&cov, "GaussianBelief::new")?;
        Ok(Self { mean, cov })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_parts(mean: Vec<f64>, cov: Matrix) -> Self {
        debug_assert_eq!(cov.shape(), (mean.len(), mean.len()));
        Self { mean, cov }
    }

    /// Zero-covariance belief.
    pub fn point_mass(mean: Vec<f64>) -> Self {
        let d = mean.len();
        Self {
            mean,
            cov: Matrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn into_parts(self) -> (Vec<f64>, Matrix) {
        (self.mean, self.cov)
    }

    /// A reusable sampler (the covariance square root is computed once).
    pub fn sampler(&self) -> Result<GaussianSampler> {
        Ok(GaussianSampler {
            mean: self.mean.clone(),
            factor: SymEigen::new(&self.cov)?.sqrt_factor(),
        })
    }
}

/// Draws from a fixed Gaussian through `mean + F ξ`, `F Fᵀ = cov`.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    factor: Matrix,
}

impl GaussianSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let xi = standard_normal_vec(self.factor.cols(), rng);
        let mut out = self.factor.matvec(&xi);
        axpy(1.0, &self.mean, &mut out);
        out
    }
}

/// Distribution of `M x + z` for `x ~ belief`.
pub fn pushforward(belief: &GaussianBelief, m: &Matrix, z: &[f64]) -> Result<GaussianBelief> {
    if m.cols() != belief.dim() {
        return Err(Error::dims("pushforward", belief.dim(), m.cols()));
    }
    if z.len() != m.rows() {
        return Err(Error::dims("pushforward", m.rows(), z.len()));
    }
    let mut mean = m.matvec(&belief.mean);
    axpy(1.0, z, &mut mean);
    let cov = m.matmul(&belief.cov).matmul_tr(m).symmetrize();
    Ok(GaussianBelief::from_parts(mean, cov))
}

/// Posterior of `x ~ belief` after observing `y ~ N(M x + z, Λ)`.
///
/// `noise = None` means noiseless observation (`Λ = 0`). Directions in which
/// the Gram matrix `M Σ Mᵀ + Λ` has eigenvalues below `rank_tol · λ_max` are
/// discarded (pseudo-inverse), so redundant observations are harmless.
///
/// With noise the symmetrized Gram matrix is pseudo-inverted directly. Without
/// noise the update goes through a square-root factor `Σ = F Fᵀ` and an SVD of
/// `M F`, whose squared singular values are the Gram eigenvalues; this avoids
/// squaring the condition number of `M F`.
pub fn condition(
    belief: &GaussianBelief,
    m: &Matrix,
    z: &[f64],
    y: &[f64],
    noise: Option<&Matrix>,
    rank_tol: f64,
) -> Result<GaussianBelief> {
    let n = m.rows();
    if m.cols() != belief.dim() {
        return Err(Error::dims("condition", belief.dim(), m.cols()));
    }
    if z.len() != n || y.len() != n {
        return Err(Error::dims(
            "condition",
            n,
            format!("z: {}, y: {}", z.len(), y.len()),
        ));
    }
    if n == 0 {
        return Ok(belief.clone());
    }
    let mut innovation = sub_vec(y, &m.matvec(&belief.mean));
    axpy(-1.0, z, &mut innovation);
    let Some(noise) = noise else {
        return condition_noiseless(belief, m, &innovation, rank_tol);
    };
    if noise.shape() != (n, n) {
        return Err(Error::dims(
            "condition",
            format!("{n}x{n} noise"),
            format!("{}x{}", noise.rows(), noise.cols()),
        ));
    }
    let cross = belief.cov.matmul_tr(m); // Σ Mᵀ, d x n
    let gram = m.matmul(&cross).add(noise);
    let gram_pinv = SymEigen::new(&gram.symmetrize())?.pseudo_inverse(rank_tol);

    let gain = cross.matmul(&gram_pinv); // Σ Mᵀ G⁺
    let mut mean = belief.mean.clone();
    axpy(1.0, &gain.matvec(&innovation), &mut mean);
    let cov = belief.cov.sub(&gain.matmul_tr(&cross)).symmetrize();
    Ok(GaussianBelief::from_parts(mean, cov))
}

/// `B = M F = Q diag(σ) Pᵀ`; then `Σ Mᵀ G⁺ = F P σ⁻¹ Qᵀ` and `Σ Mᵀ G⁺ M Σ = (F P)(F P)ᵀ`.
fn condition_noiseless(
    belief: &GaussianBelief,
    m: &Matrix,
    innovation: &[f64],
    rank_tol: f64,
) -> Result<GaussianBelief> {
    let f = SymEigen::new(&belief.cov)?.sqrt_factor();
    let b = m.matmul(&f); // n x d
    let (p, sigma, q) = if b.rows() <= b.cols() {
        let svd = Svd::new(&b.transpose())?;
        (svd.u, svd.sigma, svd.v)
    } else {
        let svd = Svd::new(&b)?;
        (svd.v, svd.sigma, svd.u)
    };
    let cutoff = rank_tol.sqrt() * sigma.first().copied().unwrap_or(0.0);
    let kept = sigma.iter().take_while(|&&s| s > cutoff).count();
    let fp = f.matmul(&p.leading_cols(kept));
    let coeff: Vec<f64> = (0..kept)
        .map(|k| dot(q.col(k), innovation) / sigma[k])
        .collect();
    let mut mean = belief.mean.clone();
    axpy(1.0, &fp.matvec(&coeff), &mut mean);
    let cov = belief.cov.sub(&fp.matmul_tr(&fp)).symmetrize();
    Ok(GaussianBelief::from_parts(mean, cov))
}
