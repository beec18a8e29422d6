//! Dense linear-algebra substrate.

pub mod decomp;
pub mod kron;
pub mod matrix;
pub mod mm;
pub mod random;

pub use decomp::{
    cond_estimate, inverse, polar_decompose, pseudo_solve, solve, Cholesky, Lu, Qr, SpdMatrix,
    Svd, SymEigen,
};
pub use kron::{kron, m_inner, m_norm, symkron, symmetrizer, unvec, vec};
pub use matrix::Matrix;
pub use random::{random_haar_orthogonal, random_test_matrix};
