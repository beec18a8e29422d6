//! Arnoldi's method, GMRES, and the Gaussian beliefs whose means coincide
//! with the GMRES iterate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::decomp::{cond_estimate, inverse, Qr, CONDITION_LIMIT, SYMMETRY_TOL};
use crate::linalg::matrix::{axpy, dot, norm2, sub_vec, Matrix};
use crate::mbi::{mbi_posterior_right, MatrixNormalBelief};
use crate::sbi::{sbi_posterior, SbiProblem, SearchDirections};
use crate::trace::{SolverTrace, TraceStep};

/// Lucky breakdown is declared when `h_{j+1,j} ≤ BREAKDOWN_TOL · ‖A‖_F`.
pub const BREAKDOWN_TOL: f64 = 1e-13;

/// Orthonormal Krylov basis and the Hessenberg projection of `A` onto it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArnoldiFactorization {
    /// `d x (m+1)` basis, or `d x m` after a lucky breakdown.
    pub q: Matrix,
    /// `(m+1) x m` upper Hessenberg matrix; its last row is zero after a breakdown.
    pub h_ext: Matrix,
    pub m: usize,
    /// Step `j` at which the Krylov space became invariant.
    pub breakdown: Option<usize>,
    /// `‖r₀‖₂`.
    pub beta: f64,
}

impl ArnoldiFactorization {
    /// `Q_m`, the first `m` basis vectors.
    pub fn q_m(&self) -> Matrix {
        self.q.leading_cols(self.m)
    }

    /// `H_m`, the leading `m x m` block.
    pub fn h_m(&self) -> Matrix {
        self.h_ext.block(0, self.m, 0, self.m)
    }
}

/// `m` steps of Arnoldi with modified Gram–Schmidt, starting from `r0 / ‖r0‖`.
pub fn arnoldi(a: &Matrix, r0: &[f64], m: usize) -> Result<ArnoldiFactorization> {
    let d = a.ensure_square("arnoldi")?;
    if r0.len() != d {
        return Err(Error::dims("arnoldi", d, r0.len()));
    }
    if m > d {
        return Err(Error::precondition("arnoldi", format!("m = {m} exceeds d = {d}")));
    }
    let beta = norm2(r0);
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::precondition("arnoldi", "starting vector must be nonzero"));
    }
    let tol = BREAKDOWN_TOL * a.frobenius_norm();
    let mut qs: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
    let mut h = Matrix::zeros(m + 1, m);
    let mut steps = m;
    let mut breakdown = None;
    for j in 0..m {
        let mut w = a.matvec(&qs[j]);
        for (i, q) in qs.iter().enumerate() {
            let hij = dot(&w, q);
            h[(i, j)] = hij;
            axpy(-hij, q, &mut w);
        }
        let norm = norm2(&w);
        if norm <= tol {
            steps = j + 1;
            breakdown = Some(j + 1);
            break;
        }
        h[(j + 1, j)] = norm;
        qs.push(w.iter().map(|v| v / norm).collect());
    }
    Ok(ArnoldiFactorization {
        q: Matrix::from_columns(d, &qs),
        h_ext: h.block(0, steps + 1, 0, steps),
        m: steps,
        breakdown,
        beta,
    })
}

/// Applies Givens rotations to `[H̃ | β e₁]` column by column.
struct GivensLsq {
    r: Matrix,
    g: Vec<f64>,
    cs: Vec<(f64, f64)>,
}

impl GivensLsq {
    fn new(h_ext: &Matrix, beta: f64) -> Self {
        let mut g = vec![0.0; h_ext.rows()];
        g[0] = beta;
        Self {
            r: h_ext.clone(),
            g,
            cs: Vec::new(),
        }
    }

    /// Triangularizes column `j`; returns the least-squares residual after `j+1` columns.
    fn eliminate(&mut self, j: usize) -> f64 {
        for (i, &(c, s)) in self.cs.iter().enumerate() {
            let (u, v) = (self.r[(i, j)], self.r[(i + 1, j)]);
            self.r[(i, j)] = c * u + s * v;
            self.r[(i + 1, j)] = -s * u + c * v;
        }
        let (u, v) = (self.r[(j, j)], self.r[(j + 1, j)]);
        let rho = u.hypot(v);
        let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (u / rho, v / rho) };
        self.r[(j, j)] = rho;
        self.r[(j + 1, j)] = 0.0;
        let (gu, gv) = (self.g[j], self.g[j + 1]);
        self.g[j] = c * gu + s * gv;
        self.g[j + 1] = -s * gu + c * gv;
        self.cs.push((c, s));
        self.g[j + 1].abs()
    }

    /// Back substitution on the leading `k x k` triangle.
    fn solve(&self, k: usize) -> Result<Vec<f64>> {
        let mut c = self.g[..k].to_vec();
        for i in (0..k).rev() {
            for l in i + 1..k {
                c[i] -= self.r[(i, l)] * c[l];
            }
            let piv = self.r[(i, i)];
            if piv == 0.0 {
                return Err(Error::Singular {
                    op: "hessenberg least squares",
                });
            }
            c[i] /= piv;
        }
        Ok(c)
    }
}

/// `argmin_c ‖H̃ c − β e₁‖₂` by Givens rotations, with the attained residual.
pub fn hessenberg_least_squares(h_ext: &Matrix, beta: f64) -> Result<(Vec<f64>, f64)> {
    let m = h_ext.cols();
    if h_ext.rows() != m + 1 {
        return Err(Error::dims("hessenberg_least_squares", m + 1, h_ext.rows()));
    }
    let mut lsq = GivensLsq::new(h_ext, beta);
    let mut resid = beta;
    for j in 0..m {
        resid = lsq.eliminate(j);
    }
    Ok((lsq.solve(m)?, resid))
}

/// `argmin_c ‖A Q c − r₀‖₂` on the full `d`-row problem (Householder QR).
pub fn full_least_squares(a: &Matrix, q: &Matrix, r0: &[f64]) -> Result<Vec<f64>> {
    Qr::new(&a.matmul(q)).solve_least_squares(r0)
}

fn initial_residual(a: &Matrix, b: &[f64], x0: &[f64], op: &'static str) -> Result<Vec<f64>> {
    let d = a.ensure_square(op)?;
    if b.len() != d || x0.len() != d {
        return Err(Error::dims(op, d, format!("b: {}, x0: {}", b.len(), x0.len())));
    }
    Ok(sub_vec(b, &a.matvec(x0)))
}

/// GMRES from `x0` for up to `m` steps. The trace holds every intermediate
/// iterate with its least-squares residual norm.
pub fn gmres_solve(a: &Matrix, b: &[f64], x0: &[f64], m: usize) -> Result<(SolverTrace, Vec<f64>)> {
    let r0 = initial_residual(a, b, x0, "gmres_solve")?;
    let mut trace = SolverTrace::new("gmres");
    trace.push(TraceStep::new(0, x0.to_vec(), norm2(&r0)));
    if m == 0 || norm2(&r0) == 0.0 {
        if m > 0 {
            trace.converged_at = Some(0);
        }
        return Ok((trace, x0.to_vec()));
    }
    let fact = arnoldi(a, &r0, m)?;
    let mut lsq = GivensLsq::new(&fact.h_ext, fact.beta);
    let mut x = x0.to_vec();
    for j in 0..fact.m {
        let resid = lsq.eliminate(j);
        let c = lsq.solve(j + 1)?;
        x = x0.to_vec();
        axpy(1.0, &fact.q.leading_cols(j + 1).matvec(&c), &mut x);
        trace.push(TraceStep::new(j + 1, x.clone(), resid));
    }
    trace.converged_at = fact.breakdown;
    Ok((trace, x))
}

/// A Bayesian GMRES posterior together with the Krylov basis it used.
#[derive(Clone, Debug, Serialize)]
pub struct BayesGmres {
    pub posterior: GaussianBelief,
    pub arnoldi: ArnoldiFactorization,
    pub notes: Vec<String>,
}

fn krylov_directions(a: &Matrix, r0: &[f64], m: usize, op: &'static str) -> Result<(ArnoldiFactorization, SearchDirections)> {
    let fact = arnoldi(a, r0, m)?;
    let s = SearchDirections::new(a.matmul(&fact.q_m())).map_err(|e| match e {
        Error::RankDeficient { detail, .. } => Error::RankDeficient { op, detail },
        other => other,
    })?;
    Ok((fact, s))
}

/// The prior `N(x₀, (AᵀA)⁻¹)`, built as `A⁻¹A⁻ᵀ`.
///
/// Needs a dense inverse; rejects `A` whose `AᵀA` has condition estimate ≥ 1e12.
pub fn ata_inverse_prior(a: &Matrix, x0: &[f64]) -> Result<GaussianBelief> {
    const OP: &str = "ata_inverse_prior";
    a.ensure_square(OP)?;
    let cond = cond_estimate(&a.tr_matmul(a));
    if !(cond < CONDITION_LIMIT) {
        return Err(Error::IllConditioned {
            op: OP,
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    let ainv = inverse(a)?;
    GaussianBelief::new(x0.to_vec(), ainv.matmul_tr(&ainv).symmetrize())
}

/// SBI with the prior `N(x₀, (AᵀA)⁻¹)` and directions `A Q_m`.
pub fn bayes_gmres_left(a: &Matrix, b: &[f64], x0: &[f64], m: usize) -> Result<BayesGmres> {
    let prior = ata_inverse_prior(a, x0)?;
    let mut out = bayes_gmres_left_with_prior(a, b, prior, m)?;
    if a.asymmetry() <= SYMMETRY_TOL && crate::linalg::Cholesky::new(a).is_ok() {
        out.notes.push(
            "A is SPD: CG corresponds to the prior covariance A⁻¹, GMRES to (AᵀA)⁻¹".into(),
        );
    }
    Ok(out)
}

/// SBI with directions `A Q_m` under an arbitrary prior centred at the Arnoldi start.
pub fn bayes_gmres_left_with_prior(
    a: &Matrix,
    b: &[f64],
    prior: GaussianBelief,
    m: usize,
) -> Result<BayesGmres> {
    const OP: &str = "bayes_gmres_left";
    let r0 = initial_residual(a, b, prior.mean(), OP)?;
    let problem = SbiProblem::new(a.clone(), b.to_vec(), prior)?;
    let (arnoldi, s) = krylov_directions(a, &r0, m, OP)?;
    let posterior = sbi_posterior(&problem, &s)?;
    Ok(BayesGmres {
        posterior,
        arnoldi,
        notes: Vec::new(),
    })
}

/// SBI with the prior `N(x₀, Q_m Q_mᵀ)` built from the Arnoldi basis.
///
/// The observations are taken along `A Q_m`, which makes the posterior mean
/// the GMRES iterate; the posterior covariance is zero.
pub fn bayes_gmres_arnoldi_prior(a: &Matrix, b: &[f64], x0: &[f64], m: usize) -> Result<BayesGmres> {
    const OP: &str = "bayes_gmres_arnoldi_prior";
    let r0 = initial_residual(a, b, x0, OP)?;
    let (arnoldi, s) = krylov_directions(a, &r0, m, OP)?;
    let q = arnoldi.q_m();
    let prior = GaussianBelief::new(x0.to_vec(), q.matmul_tr(&q).symmetrize())?;
    let problem = SbiProblem::new(a.clone(), b.to_vec(), prior)?;
    let posterior = sbi_posterior(&problem, &s)?;
    Ok(BayesGmres {
        posterior,
        arnoldi,
        notes: vec!["posterior covariance is identically zero".into()],
    })
}

/// `A_m⁻¹ b` under the prior `N(0, I ⊗ I)` on `A⁻¹` after observing `A⁻¹ (A Q_m) = Q_m`.
///
/// Only defined for `x₀ = 0`; any other start is rejected.
pub fn bayes_gmres_right(a: &Matrix, b: &[f64], x0: &[f64], m: usize) -> Result<Vec<f64>> {
    const OP: &str = "bayes_gmres_right";
    let d = a.ensure_square(OP)?;
    if x0.iter().any(|&v| v != 0.0) {
        return Err(Error::precondition(
            OP,
            "the right-multiplied interpretation only matches GMRES for x0 = 0",
        ));
    }
    let r0 = initial_residual(a, b, x0, OP)?;
    let fact = arnoldi(a, &r0, m)?;
    let q = fact.q_m();
    let prior = MatrixNormalBelief::new(Matrix::zeros(d, d), Matrix::identity(d), Matrix::identity(d))?;
    let post = mbi_posterior_right(&prior, &q, &a.matmul(&q))?;
    Ok(post.mean().matvec(b))
}
