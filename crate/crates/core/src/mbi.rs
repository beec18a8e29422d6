//! Matrix-based inference: Gaussian beliefs over `H = A⁻¹` with Kronecker or
//! symmetric-Kronecker covariance, conditioned on products `S = H Y` (right)
//! or `Sᵀ = Yᵀ H` (left), and the CG-reproducing solver built on the
//! symmetric posterior.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{validate_covariance, GaussianBelief};
use crate::linalg::decomp::{inverse, Cholesky, SYMMETRY_TOL};
use crate::linalg::kron::{kron, symkron};
use crate::linalg::matrix::{axpy, dot, max_abs_diff, max_abs_diff_mat, norm2, sub_vec, Matrix};
use crate::sbi::{sbi_posterior, SbiProblem, SearchDirections};
use crate::trace::{SolverTrace, TraceStep};

/// Gap allowed between the two sides of the MBI/SBI equivalence.
pub const EQUIVALENCE_TOL: f64 = 1e-8;

/// Tolerance on the equivalence preconditions `H₀ b = x₀` and `bᵀ W₀ b = 1`.
pub const PRECONDITION_TOL: f64 = 1e-10;

fn check_square(m: &Matrix, d: usize, op: &'static str, what: &str) -> Result<()> {
    if m.shape() != (d, d) {
        return Err(Error::dims(
            op,
            format!("{d}x{d} {what}"),
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    Ok(())
}

fn check_pair(s: &Matrix, y: &Matrix, d: usize, op: &'static str) -> Result<usize> {
    let m = s.cols();
    if s.rows() != d || y.shape() != (d, m) {
        return Err(Error::dims(
            op,
            format!("S and Y both {d}x{m}"),
            format!(
                "S {}x{}, Y {}x{}",
                s.rows(),
                s.cols(),
                y.rows(),
                y.cols()
            ),
        ));
    }
    Ok(m)
}

fn gram_cholesky(gram: &Matrix, op: &'static str) -> Result<Cholesky> {
    Cholesky::new(&gram.symmetrize()).map_err(|_| Error::RankDeficient {
        op,
        detail: "observation Gram matrix is singular".into(),
    })
}

/// `vec(H) ~ N(vec(mean), left_cov ⊗ right_cov)` under row stacking.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixNormalBelief {
    mean: Matrix,
    left_cov: Matrix,
    right_cov: Matrix,
}

impl MatrixNormalBelief {
    pub fn new(mean: Matrix, left_cov: Matrix, right_cov: Matrix) -> Result<Self> {
        let d = mean.ensure_square("MatrixNormalBelief::new")?;
        check_square(&left_cov, d, "MatrixNormalBelief::new", "left covariance")?;
        check_square(&right_cov, d, "MatrixNormalBelief::new", "right covariance")?;
        if !(mean.is_finite() && left_cov.is_finite() && right_cov.is_finite()) {
            return Err(Error::NonFinite("MatrixNormalBelief::new"));
        }
        validate_covariance(&left_cov, "MatrixNormalBelief::new (left)")?;
        validate_covariance(&right_cov, "MatrixNormalBelief::new (right)")?;
        Ok(Self {
            mean,
            left_cov,
            right_cov,
        })
    }

    pub fn mean(&self) -> &Matrix {
        &self.mean
    }

    pub fn left_cov(&self) -> &Matrix {
        &self.left_cov
    }

    pub fn right_cov(&self) -> &Matrix {
        &self.right_cov
    }

    pub fn dim(&self) -> usize {
        self.mean.rows()
    }

    /// Rescales the right factor so that `bᵀ W b = 1`.
    pub fn normalized_for(&self, b: &[f64]) -> Result<Self> {
        if b.len() != self.dim() {
            return Err(Error::dims("normalized_for", self.dim(), b.len()));
        }
        let q = dot(b, &self.right_cov.matvec(b));
        if q <= 0.0 {
            return Err(Error::precondition("normalized_for", "bᵀ W b must be positive"));
        }
        Ok(Self {
            right_cov: self.right_cov.scale(1.0 / q),
            ..self.clone()
        })
    }

    /// The full `d² x d²` covariance. Only for small `d`.
    pub fn dense_cov(&self) -> Matrix {
        kron(&self.left_cov, &self.right_cov)
    }
}

/// Posterior given right-multiplied information `H Y = S`.
///
/// Only the right factor learns; the left covariance is unchanged.
pub fn mbi_posterior_right(
    belief: &MatrixNormalBelief,
    s: &Matrix,
    y: &Matrix,
) -> Result<MatrixNormalBelief> {
    let m = check_pair(s, y, belief.dim(), "mbi_posterior_right")?;
    if m == 0 {
        return Ok(belief.clone());
    }
    let wy = belief.right_cov.matmul(y);
    let chol = gram_cholesky(&y.tr_matmul(&wy), "mbi_posterior_right")?;
    let g_ywt = chol.solve_matrix(&wy.transpose()); // G Yᵀ W
    let innovation = s.sub(&belief.mean.matmul(y));
    Ok(MatrixNormalBelief {
        mean: belief.mean.add(&innovation.matmul(&g_ywt)),
        left_cov: belief.left_cov.clone(),
        right_cov: belief.right_cov.sub(&wy.matmul(&g_ywt)).symmetrize(),
    })
}

/// Posterior given left-multiplied information `Yᵀ H = Sᵀ`.
///
/// Only the left factor learns; the right covariance is unchanged.
pub fn mbi_posterior_left(
    belief: &MatrixNormalBelief,
    s: &Matrix,
    y: &Matrix,
) -> Result<MatrixNormalBelief> {
    let m = check_pair(s, y, belief.dim(), "mbi_posterior_left")?;
    if m == 0 {
        return Ok(belief.clone());
    }
    let sy = belief.left_cov.matmul(y);
    let chol = gram_cholesky(&y.tr_matmul(&sy), "mbi_posterior_left")?;
    let innovation = s.transpose().sub(&y.tr_matmul(&belief.mean));
    let g_innov = chol.solve_matrix(&innovation);
    let g_yts = chol.solve_matrix(&sy.transpose());
    Ok(MatrixNormalBelief {
        mean: belief.mean.add(&sy.matmul(&g_innov)),
        left_cov: belief.left_cov.sub(&sy.matmul(&g_yts)).symmetrize(),
        right_cov: belief.right_cov.clone(),
    })
}

/// Implied belief over `x = H b`: `N(H b, (bᵀ W b) Σ)`.
pub fn solution_marginal(belief: &MatrixNormalBelief, b: &[f64]) -> Result<GaussianBelief> {
    if b.len() != belief.dim() {
        return Err(Error::dims("solution_marginal", belief.dim(), b.len()));
    }
    let q = dot(b, &belief.right_cov.matvec(b)).max(0.0);
    Ok(GaussianBelief::from_parts(
        belief.mean.matvec(b),
        belief.left_cov.scale(q),
    ))
}

/// Outcome of comparing the MBI solution marginal with the SBI posterior.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub mean_gap: f64,
    pub cov_gap: f64,
    /// `‖H₀ b − x₀‖∞`.
    pub mean_condition_residual: f64,
    /// `bᵀ W₀ b`.
    pub normalization: f64,
    /// `‖Σ_mbi − Σ₀‖∞` between the left factor and the SBI prior covariance.
    pub left_cov_mismatch: f64,
    /// Human-readable descriptions of violated preconditions.
    pub violations: Vec<String>,
    /// Both gaps within [`EQUIVALENCE_TOL`].
    pub passed: bool,
}

/// Runs both sides of the MBI/SBI equivalence and reports the gaps.
///
/// Precondition violations are reported, never corrected.
pub fn sbi_equivalence_check(
    mbi_prior: &MatrixNormalBelief,
    problem: &SbiProblem,
    s: &SearchDirections,
) -> Result<EquivalenceReport> {
    let d = problem.dim();
    if mbi_prior.dim() != d {
        return Err(Error::dims("sbi_equivalence_check", d, mbi_prior.dim()));
    }
    let b = problem.b();
    let mean_condition_residual = max_abs_diff(&mbi_prior.mean.matvec(b), problem.prior().mean());
    let normalization = dot(b, &mbi_prior.right_cov.matvec(b));
    let left_cov_mismatch = max_abs_diff_mat(&mbi_prior.left_cov, problem.prior().cov());
    let mut violations = Vec::new();
    if mean_condition_residual > PRECONDITION_TOL {
        violations.push(format!(
            "H₀ b differs from x₀ by {mean_condition_residual:e}"
        ));
    }
    if (normalization - 1.0).abs() > PRECONDITION_TOL {
        violations.push(format!("bᵀ W₀ b = {normalization} (expected 1)"));
    }
    if left_cov_mismatch > PRECONDITION_TOL {
        violations.push(format!(
            "left covariance differs from the SBI prior covariance by {left_cov_mismatch:e}"
        ));
    }

    let y = problem.a().tr_matmul(s.matrix()); // Yᵀ = Sᵀ A
    let mbi_post = mbi_posterior_left(mbi_prior, s.matrix(), &y)?;
    let marginal = solution_marginal(&mbi_post, b)?;
    let sbi = sbi_posterior(problem, s)?;
    let mean_gap = max_abs_diff(marginal.mean(), sbi.mean());
    let cov_gap = max_abs_diff_mat(marginal.cov(), sbi.cov());
    Ok(EquivalenceReport {
        mean_gap,
        cov_gap,
        mean_condition_residual,
        normalization,
        left_cov_mismatch,
        violations,
        passed: mean_gap <= EQUIVALENCE_TOL && cov_gap <= EQUIVALENCE_TOL,
    })
}

/// Belief over a symmetric `H` with mean `mean` and covariance `W ⊛ W`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetricMatrixBelief {
    mean: Matrix,
    w: Matrix,
}

impl SymmetricMatrixBelief {
    /// `mean` symmetric to 1e-10, `w` symmetric positive definite.
    pub fn new(mean: Matrix, w: Matrix) -> Result<Self> {
        let d = mean.ensure_square("SymmetricMatrixBelief::new")?;
        check_square(&w, d, "SymmetricMatrixBelief::new", "W")?;
        let asym = mean.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric {
                op: "SymmetricMatrixBelief::new (mean)",
                asymmetry: asym,
            });
        }
        let asym = w.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric {
                op: "SymmetricMatrixBelief::new (W)",
                asymmetry: asym,
            });
        }
        Cholesky::new(&w)?;
        Ok(Self { mean, w })
    }

    pub fn mean(&self) -> &Matrix {
        &self.mean
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.mean.rows()
    }

    /// `W ⊛ W` as a dense `d² x d²` matrix. Only for small `d`.
    pub fn dense_cov(&self) -> Matrix {
        symkron(&self.w, &self.w).expect("square W")
    }
}

/// Posterior of a symmetric-Kronecker belief given `H Y = S`.
///
/// With `Δ = S − H₀Y` and `G = (YᵀWY)⁻¹` the mean is
/// `H₀ + ΔGYᵀW + WYGΔᵀ − WYG(YᵀΔ)GYᵀW` and the covariance factor becomes
/// `W − WYGYᵀW`. The returned `W` is PSD but singular once `m ≥ 1`.
pub fn symkron_posterior(
    belief: &SymmetricMatrixBelief,
    s: &Matrix,
    y: &Matrix,
) -> Result<SymmetricMatrixBelief> {
    let m = check_pair(s, y, belief.dim(), "symkron_posterior")?;
    if m == 0 {
        return Ok(belief.clone());
    }
    let wy = belief.w.matmul(y);
    let chol = gram_cholesky(&y.tr_matmul(&wy), "symkron_posterior")?;
    let g_ywt = chol.solve_matrix(&wy.transpose()); // G Yᵀ W, m x d
    let delta = s.sub(&belief.mean.matmul(y));
    let first = delta.matmul(&g_ywt);
    let third = g_ywt.tr_matmul(&y.tr_matmul(&delta)).matmul(&g_ywt);
    let mean = belief.mean.add(&first).add(&first.transpose()).sub(&third);
    let w = belief.w.sub(&wy.matmul(&g_ywt)).symmetrize();
    Ok(SymmetricMatrixBelief { mean, w })
}

/// Prior parameters of the CG-reproducing solver: mean `αI`, covariance
/// `(βI + γA⁻¹) ⊛ (βI + γA⁻¹)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MbiCgPrior {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `γ > 0` needs a dense `A⁻¹`; it must be opted into explicitly.
    pub allow_dense_inverse: bool,
}

impl MbiCgPrior {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            allow_dense_inverse: false,
        }
    }

    /// Enables `γ > 0` through a dense inverse, for validation runs.
    pub fn validation(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            allow_dense_inverse: true,
            ..Self::new(alpha, beta, gamma)
        }
    }
}

/// Everything the CG-reproducing solver produced.
#[derive(Clone, Debug, Serialize)]
pub struct MbiCgRun {
    /// Per iteration: `x_i`, step `s_i`, direction `d_i`, gradient `r_i = A x_i − b`.
    pub trace: SolverTrace,
    /// Step sizes `α_i`.
    pub step_sizes: Vec<f64>,
    /// Final posterior over `A⁻¹`.
    pub posterior: SymmetricMatrixBelief,
}

impl MbiCgRun {
    /// Directions `d_1, …, d_m`.
    pub fn directions(&self) -> Vec<Vec<f64>> {
        self.trace
            .steps
            .iter()
            .filter_map(|s| s.direction.clone())
            .collect()
    }

    /// The direction the next iteration would take, `−A_m⁻¹ r_m`.
    pub fn next_direction(&self) -> Vec<f64> {
        let r = self
            .trace
            .last()
            .and_then(|s| s.residual.as_ref())
            .expect("trace carries residuals");
        let mut d = self.posterior.mean.matvec(r);
        d.iter_mut().for_each(|v| *v = -*v);
        d
    }
}

/// Iterates of the right-multiplied solver that reproduces CG.
///
/// Starts from `x₀ = αb`, steps along `d_i = −A_{i−1}⁻¹ r_{i−1}` with the exact
/// line-search length, and refreshes the estimate of `A⁻¹` by conditioning
/// the symmetric prior on all steps `s_i` and observations `y_i = A s_i`.
pub fn mbi_cg_solve(a: &Matrix, b: &[f64], prior: MbiCgPrior, m: usize) -> Result<MbiCgRun> {
    const OP: &str = "mbi_cg_solve";
    let d = a.ensure_square(OP)?;
    if b.len() != d {
        return Err(Error::dims(OP, d, b.len()));
    }
    if m > d {
        return Err(Error::precondition(OP, format!("m = {m} exceeds d = {d}")));
    }
    let MbiCgPrior {
        alpha,
        beta,
        gamma,
        allow_dense_inverse,
    } = prior;
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::precondition(OP, "alpha must be finite and nonzero"));
    }
    if !(beta >= 0.0 && gamma >= 0.0 && beta + gamma > 0.0) {
        return Err(Error::precondition(OP, "need beta, gamma >= 0 and beta + gamma > 0"));
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { op: OP, asymmetry: asym });
    }
    Cholesky::new(a).map_err(|_| Error::NotPositiveDefinite { op: OP })?;

    let mut w = Matrix::identity(d).scale(beta);
    if gamma > 0.0 {
        if !allow_dense_inverse {
            return Err(Error::precondition(
                OP,
                "gamma > 0 needs a dense inverse of A; use the validation prior",
            ));
        }
        w = w.add(&inverse(a)?.symmetrize().scale(gamma));
    }
    let prior_belief = SymmetricMatrixBelief {
        mean: Matrix::identity(d).scale(alpha),
        w,
    };

    let tol = 1e-13 * norm2(b).max(f64::MIN_POSITIVE);
    let mut x: Vec<f64> = b.iter().map(|v| alpha * v).collect();
    let mut r = sub_vec(&a.matvec(&x), b);
    let mut posterior = prior_belief.clone();
    let mut ss: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut ys: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut step_sizes = Vec::with_capacity(m);
    let mut trace = SolverTrace::new("mbi-cg");
    let mut start = TraceStep::new(0, x.clone(), norm2(&r));
    start.residual = Some(r.clone());
    trace.push(start);

    for i in 1..=m {
        if norm2(&r) <= tol {
            trace.converged_at = Some(i - 1);
            break;
        }
        let mut dir = posterior.mean.matvec(&r);
        dir.iter_mut().for_each(|v| *v = -*v);
        let z = a.matvec(&dir);
        let curvature = dot(&dir, &z);
        if curvature <= 0.0 || !curvature.is_finite() {
            return Err(Error::Breakdown {
                op: OP,
                iteration: i,
                detail: format!("dᵀAd = {curvature:e}; positive definiteness lost"),
            });
        }
        let step_size = -dot(&dir, &r) / curvature;
        let s: Vec<f64> = dir.iter().map(|v| step_size * v).collect();
        let y: Vec<f64> = z.iter().map(|v| step_size * v).collect();
        axpy(1.0, &s, &mut x);
        axpy(1.0, &y, &mut r);
        ss.push(s.clone());
        ys.push(y);
        step_sizes.push(step_size);
        posterior = symkron_posterior(
            &prior_belief,
            &Matrix::from_columns(d, &ss),
            &Matrix::from_columns(d, &ys),
        )?;

        let mut rec = TraceStep::new(i, x.clone(), norm2(&r));
        rec.direction = Some(dir);
        rec.step = Some(s);
        rec.residual = Some(r.clone());
        trace.push(rec);
    }
    Ok(MbiCgRun {
        trace,
        step_sizes,
        posterior,
    })
}

/// Largest `|d_iᵀ A d_j| / (‖d_i‖_A ‖d_j‖_A)` over `i ≠ j`.
pub fn max_conjugacy_defect(a: &Matrix, directions: &[Vec<f64>]) -> f64 {
    let ad: Vec<Vec<f64>> = directions.iter().map(|d| a.matvec(d)).collect();
    let norms: Vec<f64> = directions
        .iter()
        .zip(&ad)
        .map(|(d, ad)| dot(d, ad).max(0.0).sqrt())
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..directions.len() {
        for j in 0..i {
            let scale = norms[i] * norms[j];
            if scale > 0.0 {
                worst = worst.max(dot(&directions[i], &ad[j]).abs() / scale);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{condition, DEFAULT_RANK_TOL};
    use crate::linalg::kron::{unvec, vec};
    use crate::linalg::random::{
        random_invertible, random_spd, seeded_rng, standard_normal_matrix, standard_normal_vec,
    };
    use crate::linalg::decomp::Qr;
    use crate::linalg::matrix::max_abs;
    use crate::testing::{rel_gap, textbook_cg};
    use proptest::prelude::*;

    fn random_mn(d: usize, seed: u64) -> MatrixNormalBelief {
        let mut rng = seeded_rng(seed);
        MatrixNormalBelief::new(
            standard_normal_matrix(d, d, &mut rng),
            random_spd(d, 0.5, 2.0, &mut rng),
            random_spd(d, 0.5, 2.0, &mut rng),
        )
        .unwrap()
    }

    /// Dense conditioning of `vec(H)` on `obs · vec(H) = target`.
    fn dense_oracle(
        mean: &Matrix,
        cov: Matrix,
        obs: &Matrix,
        target: &[f64],
    ) -> (Matrix, Matrix) {
        let d = mean.rows();
        let prior = GaussianBelief::from_parts(vec(mean), cov);
        let post = condition(
            &prior,
            obs,
            &vec![0.0; obs.rows()],
            target,
            None,
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        let (m, c) = post.into_parts();
        (unvec(&m, d, d).unwrap(), c)
    }

    #[test]
    fn right_posterior_matches_dense_oracle() {
        let d = 5;
        let belief = random_mn(d, 1);
        let mut rng = seeded_rng(2);
        let y = standard_normal_matrix(d, 2, &mut rng);
        let s = standard_normal_matrix(d, 2, &mut rng);
        let post = mbi_posterior_right(&belief, &s, &y).unwrap();
        assert_eq!(post.left_cov(), belief.left_cov());

        let obs = kron(&Matrix::identity(d), &y.transpose());
        let (mean, cov) = dense_oracle(belief.mean(), belief.dense_cov(), &obs, &vec(&s));
        assert!(max_abs_diff_mat(post.mean(), &mean) < 1e-9);
        assert!(max_abs_diff_mat(&post.dense_cov(), &cov) < 1e-9);
    }

    #[test]
    fn left_posterior_matches_dense_oracle() {
        let d = 5;
        let mut rng = seeded_rng(3);
        let belief = MatrixNormalBelief::new(
            standard_normal_matrix(d, d, &mut rng),
            random_spd(d, 0.5, 2.0, &mut rng),
            Matrix::identity(d),
        )
        .unwrap();
        let y = standard_normal_matrix(d, 1, &mut rng);
        let s = standard_normal_matrix(d, 1, &mut rng);
        let post = mbi_posterior_left(&belief, &s, &y).unwrap();
        assert_eq!(post.right_cov(), belief.right_cov());

        let obs = kron(&y.transpose(), &Matrix::identity(d));
        let (mean, cov) = dense_oracle(belief.mean(), belief.dense_cov(), &obs, &vec(&s.transpose()));
        assert!(max_abs_diff_mat(post.mean(), &mean) < 1e-9);
        assert!(max_abs_diff_mat(&post.dense_cov(), &cov) < 1e-9);
    }

    #[test]
    fn right_full_batch_interpolates() {
        let d = 4;
        let belief = random_mn(d, 4);
        let mut rng = seeded_rng(5);
        let y = random_invertible(d, 0.5, 2.0, &mut rng);
        let s = standard_normal_matrix(d, d, &mut rng);
        let post = mbi_posterior_right(&belief, &s, &y).unwrap();
        assert!(max_abs_diff_mat(&post.mean().matmul(&y), &s) < 1e-8);
    }

    #[test]
    fn exact_prior_mean_is_unchanged() {
        let d = 4;
        let mut rng = seeded_rng(6);
        let a = random_invertible(d, 0.5, 2.0, &mut rng);
        let ainv = inverse(&a).unwrap();
        let belief = MatrixNormalBelief::new(ainv.clone(), Matrix::identity(d), Matrix::identity(d))
            .unwrap();
        let s = standard_normal_matrix(d, 2, &mut rng);
        let y = a.matmul(&s);
        let right = mbi_posterior_right(&belief, &s, &y).unwrap();
        assert!(max_abs_diff_mat(right.mean(), &ainv) < 1e-12);
        // Left information Yᵀ H = Sᵀ with Yᵀ = Sᵀ A.
        let yl = a.tr_matmul(&s);
        let left = mbi_posterior_left(&belief, &s, &yl).unwrap();
        assert!(max_abs_diff_mat(left.mean(), &ainv) < 1e-12);
    }

    #[test]
    fn left_full_rank_solves_the_system() {
        let d = 5;
        let mut rng = seeded_rng(7);
        let a = random_invertible(d, 0.5, 2.0, &mut rng);
        let b = standard_normal_vec(d, &mut rng);
        let belief = random_mn(d, 8);
        let s = standard_normal_matrix(d, d, &mut rng);
        let post = mbi_posterior_left(&belief, &s, &a.tr_matmul(&s)).unwrap();
        let x = post.mean().matvec(&b);
        assert!(norm2(&sub_vec(&a.matvec(&x), &b)) <= 1e-7 * norm2(&b));
    }

    #[test]
    fn rank_deficient_observations_error() {
        let belief = random_mn(3, 9);
        let y = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        let s = Matrix::zeros(3, 2);
        assert!(matches!(
            mbi_posterior_right(&belief, &s, &y),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            mbi_posterior_left(&belief, &s, &y),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn solution_marginal_cases() {
        let belief = random_mn(4, 10);
        let zero = solution_marginal(&belief, &[0.0; 4]).unwrap();
        assert_eq!(zero.mean(), &[0.0; 4]);
        assert_eq!(zero.cov().max_abs(), 0.0);

        let b = [1.0, -2.0, 0.5, 3.0];
        let normalized = belief.normalized_for(&b).unwrap();
        let marg = solution_marginal(&normalized, &b).unwrap();
        assert!(max_abs_diff_mat(marg.cov(), belief.left_cov()) < 1e-12);
    }

    #[test]
    fn solution_marginal_matches_dense_pushforward() {
        let d = 4;
        let belief = random_mn(d, 11);
        let b = [0.3, -1.0, 2.0, 0.7];
        let marg = solution_marginal(&belief, &b).unwrap();
        let op = kron(&Matrix::identity(d), &Matrix::from_rows(&[b]));
        let full = GaussianBelief::from_parts(vec(belief.mean()), belief.dense_cov());
        let push = crate::gaussian::pushforward(&full, &op, &[0.0; 4]).unwrap();
        assert!(max_abs_diff(marg.mean(), push.mean()) < 1e-10);
        assert!(max_abs_diff_mat(marg.cov(), push.cov()) < 1e-10);
    }

    fn equivalence_setup(d: usize, seed: u64, q: f64) -> (MatrixNormalBelief, SbiProblem) {
        let mut rng = seeded_rng(seed);
        let a = random_invertible(d, 0.5, 2.0, &mut rng);
        let b = standard_normal_vec(d, &mut rng);
        let h0 = standard_normal_matrix(d, d, &mut rng);
        let sigma = random_spd(d, 0.5, 2.0, &mut rng);
        let w_bar = random_spd(d, 0.5, 2.0, &mut rng);
        let mbi = MatrixNormalBelief::new(h0.clone(), sigma.clone(), w_bar)
            .unwrap()
            .normalized_for(&b)
            .unwrap();
        let mbi = MatrixNormalBelief {
            right_cov: mbi.right_cov.scale(q),
            ..mbi
        };
        let prior = GaussianBelief::new(h0.matvec(&b), sigma).unwrap();
        (mbi, SbiProblem::new(a, b, prior).unwrap())
    }

    #[test]
    fn equivalence_holds_under_its_preconditions() {
        let (mbi, problem) = equivalence_setup(8, 12, 1.0);
        let mut rng = seeded_rng(13);
        let s = SearchDirections::new(standard_normal_matrix(8, 3, &mut rng)).unwrap();
        let report = sbi_equivalence_check(&mbi, &problem, &s).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn equivalence_with_no_directions_is_exact() {
        let (mbi, problem) = equivalence_setup(5, 14, 1.0);
        let report = sbi_equivalence_check(&mbi, &problem, &SearchDirections::empty(5)).unwrap();
        assert!(report.mean_gap < 1e-12);
        assert!(report.cov_gap < 1e-12);
    }

    #[test]
    fn violated_normalization_is_flagged() {
        let (mbi, problem) = equivalence_setup(6, 15, 2.0);
        let mut rng = seeded_rng(16);
        let s = SearchDirections::new(standard_normal_matrix(6, 2, &mut rng)).unwrap();
        let report = sbi_equivalence_check(&mbi, &problem, &s).unwrap();
        assert!((report.normalization - 2.0).abs() < 1e-12);
        assert_eq!(report.violations.len(), 1);
        assert!(!report.passed);
        // The marginal covariance is exactly twice the SBI covariance.
        let y = problem.a().tr_matmul(s.matrix());
        let marg = solution_marginal(
            &mbi_posterior_left(&mbi, s.matrix(), &y).unwrap(),
            problem.b(),
        )
        .unwrap();
        let sbi = sbi_posterior(&problem, &s).unwrap();
        assert!(max_abs_diff_mat(marg.cov(), &sbi.cov().scale(2.0)) < 1e-10);
        assert!(report.mean_gap < 1e-8);
    }

    fn symmetric_setup(d: usize, seed: u64) -> (SymmetricMatrixBelief, Matrix) {
        let mut rng = seeded_rng(seed);
        let h = random_spd(d, 0.5, 3.0, &mut rng); // a symmetric target A⁻¹
        let g = standard_normal_matrix(d, d, &mut rng);
        let mean = g.add(&g.transpose()).scale(0.5);
        let w = random_spd(d, 0.5, 2.0, &mut rng);
        (SymmetricMatrixBelief::new(mean, w).unwrap(), h)
    }

    #[test]
    fn symkron_full_information_reconstructs() {
        let d = 5;
        let (belief, h) = symmetric_setup(d, 17);
        let mut rng = seeded_rng(18);
        let y = random_invertible(d, 0.5, 2.0, &mut rng);
        let post = symkron_posterior(&belief, &h.matmul(&y), &y).unwrap();
        assert!(max_abs_diff_mat(post.mean(), &h) < 1e-7);
    }

    #[test]
    fn symkron_no_information_is_identity() {
        let (belief, _) = symmetric_setup(3, 19);
        let post = symkron_posterior(&belief, &Matrix::zeros(3, 0), &Matrix::zeros(3, 0)).unwrap();
        assert_eq!(post, belief);
    }

    #[test]
    fn symkron_posterior_matches_dense_oracle() {
        let d = 4;
        let (belief, h) = symmetric_setup(d, 20);
        let mut rng = seeded_rng(21);
        let y = standard_normal_matrix(d, 2, &mut rng);
        let s = h.matmul(&y);
        let post = symkron_posterior(&belief, &s, &y).unwrap();
        assert!(post.mean().asymmetry() * post.mean().frobenius_norm() < 1e-10);
        assert!(max_abs_diff_mat(&post.mean().matmul(&y), &s) < 1e-8);

        let obs = kron(&Matrix::identity(d), &y.transpose());
        let (mean, cov) = dense_oracle(belief.mean(), belief.dense_cov(), &obs, &vec(&s));
        assert!(max_abs_diff_mat(post.mean(), &mean) < 1e-9);
        assert!(max_abs_diff_mat(&post.dense_cov(), &cov) < 1e-9);
    }

    fn spd_system(d: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = seeded_rng(seed);
        (random_spd(d, 1.0, 10.0, &mut rng), standard_normal_vec(d, &mut rng))
    }

    #[test]
    fn mbi_cg_reproduces_textbook_cg() {
        for &(al, be, ga) in &[(1.0, 1.0, 0.0), (2.0, 0.0, 1.0), (0.5, 1.0, 1.0)] {
            let (a, b) = spd_system(10, 22);
            let run = mbi_cg_solve(&a, &b, MbiCgPrior::validation(al, be, ga), 10).unwrap();
            let x0: Vec<f64> = b.iter().map(|v| al * v).collect();
            let (xs, steps) = textbook_cg(&a, &b, &x0, 10);
            for (rec, x) in run.trace.steps.iter().zip(&xs) {
                assert!(rel_gap(&rec.x, x) < 1e-8, "({al},{be},{ga}) x_{}", rec.iteration);
            }
            for (rec, s) in run.trace.steps.iter().skip(1).zip(&steps) {
                assert!(rel_gap(rec.step.as_ref().unwrap(), s) < 1e-8);
            }
        }
    }

    #[test]
    fn first_direction_is_scaled_gradient() {
        let (a, b) = spd_system(6, 23);
        let run = mbi_cg_solve(&a, &b, MbiCgPrior::new(2.0, 1.0, 0.0), 1).unwrap();
        let r0 = run.trace.steps[0].residual.clone().unwrap();
        let d1 = run.trace.steps[1].direction.clone().unwrap();
        let expected: Vec<f64> = r0.iter().map(|v| -2.0 * v).collect();
        assert!(max_abs_diff(&d1, &expected) < 1e-14);
    }

    #[test]
    fn mbi_cg_directions_are_conjugate() {
        let (a, b) = spd_system(10, 24);
        let run = mbi_cg_solve(&a, &b, MbiCgPrior::new(1.0, 1.0, 0.0), 10).unwrap();
        assert!(max_conjugacy_defect(&a, &run.directions()) <= 1e-8);
    }

    #[test]
    fn gamma_requires_validation_flag() {
        let (a, b) = spd_system(4, 25);
        assert!(matches!(
            mbi_cg_solve(&a, &b, MbiCgPrior::new(1.0, 0.0, 1.0), 2),
            Err(Error::Precondition { .. })
        ));
        assert!(mbi_cg_solve(&a, &b, MbiCgPrior::new(0.0, 1.0, 0.0), 2).is_err());
        assert!(mbi_cg_solve(&a, &b, MbiCgPrior::new(1.0, 0.0, 0.0), 2).is_err());
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = Matrix::from_diag(&[1.0, -1.0]);
        assert!(mbi_cg_solve(&a, &[1.0, 1.0], MbiCgPrior::new(1.0, 1.0, 0.0), 2).is_err());
    }

    #[test]
    fn solution_estimate_relates_to_inverse_estimate() {
        // x_m = A_m⁻¹(b − A x₀) + x₀ − d_{m+1}.
        for &(al, be, ga) in &[(1.0, 1.0, 0.0), (2.0, 0.0, 1.0), (0.5, 1.0, 1.0)] {
            let (a, b) = spd_system(8, 26);
            for m in 1..8 {
                let run = mbi_cg_solve(&a, &b, MbiCgPrior::validation(al, be, ga), m).unwrap();
                let x0 = &run.trace.steps[0].x;
                let mut rhs = run.posterior.mean().matvec(&sub_vec(&b, &a.matvec(x0)));
                axpy(1.0, x0, &mut rhs);
                axpy(-1.0, &run.next_direction(), &mut rhs);
                let xm = run.trace.final_x().unwrap();
                assert!(max_abs_diff(xm, &rhs) < 1e-7 * max_abs(xm).max(1.0));
            }
        }
    }

    #[test]
    fn inverse_estimate_times_residual_stays_in_span() {
        let (a, b) = spd_system(8, 27);
        for i in 1..7 {
            let run = mbi_cg_solve(&a, &b, MbiCgPrior::new(1.0, 1.0, 0.0), i).unwrap();
            let r = run.trace.last().unwrap().residual.clone().unwrap();
            let target = run.posterior.mean().matvec(&r);
            let mut cols = run.directions();
            cols.push(r);
            let basis = Matrix::from_columns(8, &cols);
            let coeff = Qr::new(&basis).solve_least_squares(&target).unwrap();
            let resid = norm2(&sub_vec(&target, &basis.matvec(&coeff)));
            assert!(resid <= 1e-8 * norm2(&target), "i = {i}: {resid:e}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn right_and_left_posteriors_match_oracle(seed in any::<u64>(), d in 2usize..5, m in 1usize..4) {
            let m = m.min(d);
            let belief = random_mn(d, seed);
            let mut rng = seeded_rng(seed.wrapping_add(1));
            let y = random_invertible(d, 0.5, 2.0, &mut rng).leading_cols(m);
            let s = standard_normal_matrix(d, m, &mut rng);
            let right = mbi_posterior_right(&belief, &s, &y).unwrap();
            let obs = kron(&Matrix::identity(d), &y.transpose());
            let (mean, cov) = dense_oracle(belief.mean(), belief.dense_cov(), &obs, &vec(&s));
            prop_assert!(max_abs_diff_mat(right.mean(), &mean) < 1e-9);
            prop_assert!(max_abs_diff_mat(&right.dense_cov(), &cov) < 1e-9);

            let left = mbi_posterior_left(&belief, &s, &y).unwrap();
            let obs = kron(&y.transpose(), &Matrix::identity(d));
            let (mean, cov) = dense_oracle(belief.mean(), belief.dense_cov(), &obs, &vec(&s.transpose()));
            prop_assert!(max_abs_diff_mat(left.mean(), &mean) < 1e-9);
            prop_assert!(max_abs_diff_mat(&left.dense_cov(), &cov) < 1e-9);
        }

        #[test]
        fn equivalence_holds_for_random_instances(seed in any::<u64>(), m in 0usize..7) {
            let (mbi, problem) = equivalence_setup(6, seed, 1.0);
            let mut rng = seeded_rng(seed ^ 7);
            let s = random_invertible(6, 0.5, 2.0, &mut rng).leading_cols(m);
            let s = SearchDirections::new(s).unwrap();
            let report = sbi_equivalence_check(&mbi, &problem, &s).unwrap();
            prop_assert!(report.passed, "{:?}", report);
        }
    }
}
