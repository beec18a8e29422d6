//! Row-stacking vectorisation, Kronecker and symmetric Kronecker products,
//! and inner products induced by SPD matrices.
//!
//! The index pairing `(i, j) -> i * cols + j` is used everywhere, so that
//! `kron(A, B) · vec(C) = vec(A C Bᵀ)` holds without permutations.

use crate::error::{Error, Result};
use crate::linalg::decomp::SpdMatrix;
use crate::linalg::matrix::{dot, Matrix};

/// Stacks the rows of `a` into one vector.
pub fn vec(a: &Matrix) -> Vec<f64> {
    let (r, c) = a.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Inverse of [`vec`] for a `rows x cols` target.
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<Matrix> {
    if v.len() != rows * cols {
        return Err(Error::dims("unvec", rows * cols, v.len()));
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| v[i * cols + j]))
}

/// `[A ⊗ B]_{(ij),(kl)} = A_ik · B_jl`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = a.shape();
    let (r, s) = b.shape();
    let mut out = Matrix::zeros(p * r, q * s);
    for k in 0..q {
        for i in 0..p {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            for l in 0..s {
                for j in 0..r {
                    out[(i * r + j, k * s + l)] = aik * b[(j, l)];
                }
            }
        }
    }
    out
}

/// `Γ` with `Γ vec(C) = (vec(C) + vec(Cᵀ)) / 2` for every `d x d` matrix `C`.
pub fn symmetrizer(d: usize) -> Matrix {
    let n = d * d;
    let mut g = Matrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            g[(i * d + j, i * d + j)] += 0.5;
            g[(i * d + j, j * d + i)] += 0.5;
        }
    }
    g
}

/// Symmetric Kronecker product `A ⊛ B = Γ (A ⊗ B) Γ`.
pub fn symkron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let d = a.ensure_square("symkron")?;
    if b.shape() != (d, d) {
        return Err(Error::dims(
            "symkron",
            format!("{d}x{d}"),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    let g = symmetrizer(d);
    Ok(g.matmul(&kron(a, b)).matmul(&g))
}

/// `vᵀ M w`.
pub fn m_inner(v: &[f64], w: &[f64], m: &SpdMatrix) -> Result<f64> {
    let n = m.dim();
    if v.len() != n || w.len() != n {
        return Err(Error::dims(
            "m_inner",
            n,
            format!("{} and {}", v.len(), w.len()),
        ));
    }
    Ok(dot(v, &m.matrix().matvec(w)))
}

/// `√(vᵀ M v)`, clamped at zero against round-off.
pub fn m_norm(v: &[f64], m: &SpdMatrix) -> Result<f64> {
    Ok(m_inner(v, v, m)?.max(0.0).sqrt())
}
