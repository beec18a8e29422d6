//! Seeded random test matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::decomp::{Qr, SpdMatrix};
use crate::linalg::matrix::Matrix;

/// The RNG used throughout the crate.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn standard_normal_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Matrix of i.i.d. standard normal entries.
pub fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = standard_normal_vec(rows * cols, rng);
    Matrix::from_col_major(rows, cols, data).expect("finite normal draws")
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of Q flipped so that R has a positive diagonal.
pub fn random_haar_orthogonal_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let g = standard_normal_matrix(d, d, rng);
    let qr = Qr::new(&g);
    let r = qr.r();
    let mut q = qr.q_full();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.col_mut(j).iter_mut().for_each(|v| *v = -*v);
        }
    }
    q
}

pub fn random_haar_orthogonal(d: usize, seed: u64) -> Matrix {
    random_haar_orthogonal_with(d, &mut seeded_rng(seed))
}

/// `Q diag(λ) Qᵀ` for a Haar `Q`, symmetrized.
pub fn with_spectrum<R: Rng + ?Sized>(eigenvalues: &[f64], rng: &mut R) -> Matrix {
    let d = eigenvalues.len();
    let q = random_haar_orthogonal_with(d, rng);
    let ql = Matrix::from_fn(d, d, |i, j| q[(i, j)] * eigenvalues[j]);
    ql.matmul_tr(&q).symmetrize()
}

/// SPD test matrix with i.i.d. Exponential(`rate`) eigenvalues and Haar eigenvectors.
pub fn random_test_matrix_with<R: Rng + ?Sized>(
    d: usize,
    rate: f64,
    rng: &mut R,
) -> Result<SpdMatrix> {
    if d == 0 {
        return Err(Error::precondition("random_test_matrix", "d must be >= 1"));
    }
    let exp = Exp::new(rate)
        .map_err(|_| Error::precondition("random_test_matrix", "rate must be > 0"))?;
    let lambda: Vec<f64> = (0..d).map(|_| exp.sample(rng)).collect();
    SpdMatrix::new(with_spectrum(&lambda, rng))
}

pub fn random_test_matrix(d: usize, rate: f64, seed: u64) -> Result<SpdMatrix> {
    random_test_matrix_with(d, rate, &mut seeded_rng(seed))
}

/// SPD matrix with eigenvalues drawn uniformly from `[lo, hi]`, for well-conditioned tests.
pub fn random_spd<R: Rng + ?Sized>(d: usize, lo: f64, hi: f64, rng: &mut R) -> Matrix {
    let lambda: Vec<f64> = (0..d).map(|_| rng.gen_range(lo..=hi)).collect();
    with_spectrum(&lambda, rng)
}

/// General invertible matrix `U diag(σ) Vᵀ` with singular values in `[lo, hi]`.
pub fn random_invertible<R: Rng + ?Sized>(d: usize, lo: f64, hi: f64, rng: &mut R) -> Matrix {
    let u = random_haar_orthogonal_with(d, rng);
    let v = random_haar_orthogonal_with(d, rng);
    let us = Matrix::from_fn(d, d, |i, j| u[(i, j)] * rng.gen_range(lo..=hi));
    us.matmul_tr(&v)
}
