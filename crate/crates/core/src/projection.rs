//! Petrov–Galerkin projection steps, their correspondence with solution-based
//! inference, and probabilistic left/right preconditioning.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::decomp::{cond_estimate, ensure_well_conditioned, Cholesky, Lu, Qr, CONDITION_LIMIT, SYMMETRY_TOL};
use crate::linalg::matrix::{axpy, max_abs_diff, max_abs_diff_mat, Matrix};
use crate::sbi::{sbi_posterior, SbiProblem, SearchDirections, DIRECTION_RANK_TOL};

/// Gap allowed between two routes that must agree.
pub const BRIDGE_TOL: f64 = 1e-8;

/// Tolerance on the structural requirement `U = R X`.
const STRUCTURE_TOL: f64 = 1e-10;

/// Solution-space basis `X`, constraint-space basis `U` and starting point `x₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionSpec {
    x: Matrix,
    u: Matrix,
    x0: Vec<f64>,
}

fn check_full_rank(m: &Matrix, op: &'static str, what: &str) -> Result<()> {
    if m.cols() == 0 {
        return Ok(());
    }
    let rank = Qr::new(m).rank(DIRECTION_RANK_TOL);
    if rank < m.cols() {
        return Err(Error::RankDeficient {
            op,
            detail: format!("{what} has rank {rank} < {}", m.cols()),
        });
    }
    Ok(())
}

impl ProjectionSpec {
    pub fn new(x: Matrix, u: Matrix, x0: Vec<f64>) -> Result<Self> {
        let d = x0.len();
        if x.rows() != d || u.shape() != x.shape() {
            return Err(Error::dims(
                "ProjectionSpec::new",
                format!("X and U both {d}x{}", x.cols()),
                format!("X {}x{}, U {}x{}", x.rows(), x.cols(), u.rows(), u.cols()),
            ));
        }
        if x.cols() > d {
            return Err(Error::precondition(
                "ProjectionSpec::new",
                format!("{} basis vectors exceed dimension {d}", x.cols()),
            ));
        }
        check_full_rank(&x, "ProjectionSpec::new", "X")?;
        check_full_rank(&u, "ProjectionSpec::new", "U")?;
        Ok(Self { x, u, x0 })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn count(&self) -> usize {
        self.x.cols()
    }
}

fn check_system(a: &Matrix, b: &[f64], d: usize, op: &'static str) -> Result<()> {
    if a.shape() != (d, d) {
        return Err(Error::dims(
            op,
            format!("{d}x{d} matrix"),
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    if b.len() != d {
        return Err(Error::dims(op, d, b.len()));
    }
    Ok(())
}

/// `x₀ + X (UᵀAX)⁻¹ Uᵀ r₀`, the iterate whose residual is orthogonal to `range(U)`.
pub fn projection_step(a: &Matrix, b: &[f64], spec: &ProjectionSpec) -> Result<Vec<f64>> {
    let d = spec.dim();
    check_system(a, b, d, "projection_step")?;
    let mut x = spec.x0.clone();
    let m = spec.count();
    if m == 0 {
        return Ok(x);
    }
    let reduced = spec.u.tr_matmul(&a.matmul(&spec.x));
    let cond = cond_estimate(&reduced);
    if !(cond < CONDITION_LIMIT) {
        return Err(Error::Breakdown {
            op: "projection_step",
            iteration: m,
            detail: format!("UᵀAX is singular (condition estimate {cond:e})"),
        });
    }
    let r0: Vec<f64> = b
        .iter()
        .zip(a.matvec(&spec.x0))
        .map(|(bi, ax)| bi - ax)
        .collect();
    let coeff = Lu::new(&reduced)?.solve(&spec.u.tr_matvec(&r0));
    axpy(1.0, &spec.x.matvec(&coeff), &mut x);
    Ok(x)
}

/// The projection spec `X = Σ₀AᵀS`, `U = S` whose iterate is the SBI posterior mean.
pub fn sbi_as_projection(problem: &SbiProblem, s: &SearchDirections) -> Result<ProjectionSpec> {
    if s.dim() != problem.dim() {
        return Err(Error::dims("sbi_as_projection", problem.dim(), s.dim()));
    }
    let x = problem
        .prior()
        .cov()
        .matmul_tr(problem.a())
        .matmul(s.matrix());
    ProjectionSpec::new(x, s.matrix().clone(), problem.prior().mean().to_vec())
}

/// An SBI problem and directions whose posterior mean is a given projection iterate.
#[derive(Clone, Debug, Serialize)]
pub struct SbiBridge {
    pub problem: SbiProblem,
    pub directions: SearchDirections,
    /// Calibration caveats attached to the constructed prior.
    pub warnings: Vec<String>,
}

/// Prior `N(x₀, XXᵀ)` with `S = U`.
///
/// The posterior covariance of this construction is identically zero even
/// when `m < d`; that is reported as a warning.
pub fn projection_as_sbi(spec: &ProjectionSpec, a: &Matrix, b: &[f64]) -> Result<SbiBridge> {
    let d = spec.dim();
    check_system(a, b, d, "projection_as_sbi")?;
    let cov = spec.x.matmul_tr(&spec.x).symmetrize();
    let prior = GaussianBelief::new(spec.x0.clone(), cov)?;
    let problem = SbiProblem::new(a.clone(), b.to_vec(), prior)?;
    let directions = SearchDirections::new(spec.u.clone())?;
    let mut warnings = Vec::new();
    if spec.count() < d {
        warnings.push(format!(
            "posterior covariance is zero although only {} of {d} dimensions are identified; \
             the reported uncertainty is not calibrated",
            spec.count()
        ));
    }
    Ok(SbiBridge {
        problem,
        directions,
        warnings,
    })
}

/// Prior `N(x₀, (AᵀR)⁻¹)` with `S = U`, valid when `U = R X` and `AᵀR` is SPD.
///
/// With `R = P` from the polar decomposition `A = P H` the prior covariance is `H⁻¹`.
pub fn projection_as_sbi_structured(
    spec: &ProjectionSpec,
    a: &Matrix,
    b: &[f64],
    r: &Matrix,
) -> Result<SbiBridge> {
    const OP: &str = "projection_as_sbi_structured";
    let d = spec.dim();
    check_system(a, b, d, OP)?;
    if r.shape() != (d, d) {
        return Err(Error::dims(OP, format!("{d}x{d} R"), format!("{}x{}", r.rows(), r.cols())));
    }
    let rx = r.matmul(&spec.x);
    let mismatch = max_abs_diff_mat(&rx, &spec.u);
    if mismatch > STRUCTURE_TOL * spec.u.max_abs().max(1.0) {
        return Err(Error::precondition(OP, format!("U differs from R X by {mismatch:e}")));
    }
    let atr = a.tr_matmul(r);
    let asym = atr.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { op: OP, asymmetry: asym });
    }
    let chol = Cholesky::new(&atr.symmetrize()).map_err(|_| Error::NotPositiveDefinite { op: OP })?;
    let prior = GaussianBelief::new(spec.x0.clone(), chol.inverse().symmetrize())?;
    Ok(SbiBridge {
        problem: SbiProblem::new(a.clone(), b.to_vec(), prior)?,
        directions: SearchDirections::new(spec.u.clone())?,
        warnings: Vec::new(),
    })
}

/// Left and right preconditioners (`None` means identity).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreconditionerPair {
    pl: Option<Matrix>,
    pr: Option<Matrix>,
    /// Whether applying the inverses is considered cheap. Purely advisory.
    pub cheap_solve: bool,
}

impl PreconditionerPair {
    pub fn new(pl: Option<Matrix>, pr: Option<Matrix>, cheap_solve: bool) -> Result<Self> {
        for p in pl.iter().chain(pr.iter()) {
            p.ensure_square("PreconditionerPair::new")?;
            ensure_well_conditioned(p, "PreconditionerPair::new")?;
        }
        if let (Some(l), Some(r)) = (&pl, &pr) {
            if l.rows() != r.rows() {
                return Err(Error::dims("PreconditionerPair::new", l.rows(), r.rows()));
            }
        }
        Ok(Self { pl, pr, cheap_solve })
    }

    pub fn identity() -> Self {
        Self {
            pl: None,
            pr: None,
            cheap_solve: true,
        }
    }

    pub fn left(&self, d: usize) -> Matrix {
        self.pl.clone().unwrap_or_else(|| Matrix::identity(d))
    }

    pub fn right(&self, d: usize) -> Matrix {
        self.pr.clone().unwrap_or_else(|| Matrix::identity(d))
    }
}

/// The right-preconditioned problem in `z` together with the map `x = P_r z`.
#[derive(Clone, Debug, Serialize)]
pub struct RightPreconditioned {
    /// `(A P_r, b)` under the original prior, now read as a prior on `z`.
    pub z_problem: SbiProblem,
    pub pr: Matrix,
}

impl RightPreconditioned {
    /// Pushes a belief over `z` to `x = P_r z`.
    pub fn pull_back(&self, belief: &GaussianBelief) -> Result<GaussianBelief> {
        crate::gaussian::pushforward(belief, &self.pr, &vec![0.0; self.pr.rows()])
    }

    /// The unpreconditioned problem under the prior `N(P_r z₀, P_r Σ₀ P_rᵀ)`.
    pub fn equivalent_x_problem(&self, a: &Matrix, b: &[f64]) -> Result<SbiProblem> {
        let prior = self.pull_back(self.z_problem.prior())?;
        SbiProblem::new(a.clone(), b.to_vec(), prior)
    }
}

fn check_preconditioner(p: &Matrix, d: usize, op: &'static str) -> Result<()> {
    if p.shape() != (d, d) {
        return Err(Error::dims(op, format!("{d}x{d}"), format!("{}x{}", p.rows(), p.cols())));
    }
    ensure_well_conditioned(p, op).map(|_| ())
}

/// Forms the `z`-problem `A P_r z = b`.
pub fn precondition_right(problem: &SbiProblem, pr: &Matrix) -> Result<RightPreconditioned> {
    check_preconditioner(pr, problem.dim(), "precondition_right")?;
    let z_problem = SbiProblem::new(
        problem.a().matmul(pr),
        problem.b().to_vec(),
        problem.prior().clone(),
    )?;
    Ok(RightPreconditioned {
        z_problem,
        pr: pr.clone(),
    })
}

/// Gaps between two routes to the same posterior.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreconditioningReport {
    pub mean_gap: f64,
    pub cov_gap: f64,
    pub passed: bool,
}

impl PreconditioningReport {
    fn compare(lhs: &GaussianBelief, rhs: &GaussianBelief) -> Self {
        let mean_gap = max_abs_diff(lhs.mean(), rhs.mean());
        let cov_gap = max_abs_diff_mat(lhs.cov(), rhs.cov());
        Self {
            mean_gap,
            cov_gap,
            passed: mean_gap <= BRIDGE_TOL && cov_gap <= BRIDGE_TOL,
        }
    }
}

/// Solving in `z` and pulling back versus solving in `x` under the pushed prior.
pub fn right_preconditioning_check(
    problem: &SbiProblem,
    pr: &Matrix,
    s: &SearchDirections,
) -> Result<PreconditioningReport> {
    let right = precondition_right(problem, pr)?;
    let via_z = right.pull_back(&sbi_posterior(&right.z_problem, s)?)?;
    let x_problem = right.equivalent_x_problem(problem.a(), problem.b())?;
    let direct = sbi_posterior(&x_problem, s)?;
    Ok(PreconditioningReport::compare(&via_z, &direct))
}

/// SBI on `(P_l A, P_l b)` with `S` versus SBI on `(A, b)` with `P_lᵀ S`.
pub fn precondition_left(
    problem: &SbiProblem,
    pl: &Matrix,
    s: &SearchDirections,
) -> Result<PreconditioningReport> {
    check_preconditioner(pl, problem.dim(), "precondition_left")?;
    let left_problem = SbiProblem::new(
        pl.matmul(problem.a()),
        pl.matvec(problem.b()),
        problem.prior().clone(),
    )?;
    let preconditioned = sbi_posterior(&left_problem, s)?;
    let pulled = SearchDirections::new(pl.tr_matmul(s.matrix()))?;
    let direct = sbi_posterior(problem, &pulled)?;
    Ok(PreconditioningReport::compare(&preconditioned, &direct))
}

/// Direct solve of `P_l A P_r z = P_l b` (pulled back to `x`) versus the
/// composition of the left and right transforms on the original system.
pub fn two_sided_check(
    problem: &SbiProblem,
    pair: &PreconditionerPair,
    s: &SearchDirections,
) -> Result<PreconditioningReport> {
    let d = problem.dim();
    let pl = pair.left(d);
    let pr = pair.right(d);
    check_preconditioner(&pl, d, "two_sided_check")?;
    check_preconditioner(&pr, d, "two_sided_check")?;

    let z_problem = SbiProblem::new(
        pl.matmul(problem.a()).matmul(&pr),
        pl.matvec(problem.b()),
        problem.prior().clone(),
    )?;
    let zero = vec![0.0; d];
    let direct = crate::gaussian::pushforward(&sbi_posterior(&z_problem, s)?, &pr, &zero)?;

    let right = precondition_right(problem, &pr)?;
    let x_problem = right.equivalent_x_problem(problem.a(), problem.b())?;
    let pulled = SearchDirections::new(pl.tr_matmul(s.matrix()))?;
    let composed = sbi_posterior(&x_problem, &pulled)?;
    Ok(PreconditioningReport::compare(&direct, &composed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::decomp::{inverse, polar_decompose};
    use crate::linalg::matrix::{norm2, sub_vec, unit_vector};
    use crate::linalg::random::{
        random_invertible, random_spd, seeded_rng, standard_normal_matrix, standard_normal_vec,
    };
    use crate::sbi::bayescg_directions;
    use proptest::prelude::*;

    fn system(d: usize, seed: u64) -> (Matrix, Vec<f64>, Vec<f64>) {
        let mut rng = seeded_rng(seed);
        let a = random_invertible(d, 0.5, 3.0, &mut rng);
        (a, standard_normal_vec(d, &mut rng), standard_normal_vec(d, &mut rng))
    }

    fn problem(d: usize, seed: u64) -> SbiProblem {
        let (a, b, x0) = system(d, seed);
        let mut rng = seeded_rng(seed ^ 0xff);
        let prior = GaussianBelief::new(x0, random_spd(d, 0.5, 2.0, &mut rng)).unwrap();
        SbiProblem::new(a, b, prior).unwrap()
    }

    fn directions(d: usize, m: usize, seed: u64) -> SearchDirections {
        let mut rng = seeded_rng(seed);
        SearchDirections::new(random_invertible(d, 0.5, 2.0, &mut rng).leading_cols(m)).unwrap()
    }

    #[test]
    fn full_identity_spec_is_exact() {
        let (a, b, x0) = system(5, 1);
        let spec = ProjectionSpec::new(Matrix::identity(5), Matrix::identity(5), x0).unwrap();
        let x = projection_step(&a, &b, &spec).unwrap();
        assert!(max_abs_diff(&x, &crate::linalg::solve(&a, &b).unwrap()) < 1e-10);
    }

    #[test]
    fn one_dimensional_galerkin() {
        let a = Matrix::from_diag(&[4.0, 2.0, 1.0]);
        let b = [1.0, 1.0, 1.0];
        let x0 = vec![0.5, 0.0, 0.0];
        let e1 = Matrix::column_vector(&unit_vector(3, 0));
        let spec = ProjectionSpec::new(e1.clone(), e1, x0).unwrap();
        let x = projection_step(&a, &b, &spec).unwrap();
        // r₀ = b − A x₀ = (−1, 1, 1); step (r₀)₁ / A₁₁ = −1/4.
        assert!(max_abs_diff(&x, &[0.25, 0.0, 0.0]) < 1e-15);
    }

    #[test]
    fn residual_is_orthogonal_to_constraints() {
        let (a, b, x0) = system(7, 2);
        let mut rng = seeded_rng(3);
        let spec = ProjectionSpec::new(
            standard_normal_matrix(7, 3, &mut rng),
            standard_normal_matrix(7, 3, &mut rng),
            x0,
        )
        .unwrap();
        let x = projection_step(&a, &b, &spec).unwrap();
        let r = sub_vec(&b, &a.matvec(&x));
        let ortho = spec.u().tr_matvec(&r);
        assert!(crate::linalg::matrix::max_abs(&ortho) <= 1e-9 * crate::linalg::matrix::max_abs(&b));
    }

    #[test]
    fn singular_reduced_matrix_is_breakdown() {
        let a = Matrix::identity(2);
        let spec = ProjectionSpec::new(
            Matrix::column_vector(&[1.0, 0.0]),
            Matrix::column_vector(&[0.0, 1.0]),
            vec![0.0; 2],
        )
        .unwrap();
        assert!(matches!(
            projection_step(&a, &[1.0, 1.0], &spec),
            Err(Error::Breakdown { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(ProjectionSpec::new(Matrix::zeros(3, 1), Matrix::identity(3).leading_cols(1), vec![0.0; 3]).is_err());
        assert!(ProjectionSpec::new(Matrix::identity(3), Matrix::identity(3).leading_cols(2), vec![0.0; 3]).is_err());
    }

    #[test]
    fn sbi_projection_with_identity_prior() {
        let (a, b, x0) = system(4, 4);
        let p = SbiProblem::new(a.clone(), b, GaussianBelief::new(x0, Matrix::identity(4)).unwrap())
            .unwrap();
        let s = directions(4, 2, 5);
        let spec = sbi_as_projection(&p, &s).unwrap();
        assert!(max_abs_diff_mat(spec.x(), &a.tr_matmul(s.matrix())) < 1e-15);
    }

    #[test]
    fn sbi_mean_is_projection_iterate() {
        let p = problem(6, 6);
        for m in [2, 6] {
            let s = directions(6, m, 7);
            let spec = sbi_as_projection(&p, &s).unwrap();
            let proj = projection_step(p.a(), p.b(), &spec).unwrap();
            let post = sbi_posterior(&p, &s).unwrap();
            assert!(max_abs_diff(&proj, post.mean()) < 1e-9);
            if m == 6 {
                assert!(max_abs_diff(&proj, &p.solution().unwrap()) < 1e-9);
            }
        }
    }

    #[test]
    fn projection_prior_reproduces_iterate_with_zero_covariance() {
        let (a, b, x0) = system(6, 8);
        let mut rng = seeded_rng(9);
        let spec = ProjectionSpec::new(
            standard_normal_matrix(6, 3, &mut rng),
            standard_normal_matrix(6, 3, &mut rng),
            x0,
        )
        .unwrap();
        let bridge = projection_as_sbi(&spec, &a, &b).unwrap();
        assert_eq!(bridge.warnings.len(), 1);
        let post = sbi_posterior(&bridge.problem, &bridge.directions).unwrap();
        let proj = projection_step(&a, &b, &spec).unwrap();
        assert!(max_abs_diff(post.mean(), &proj) < 1e-8);
        assert!(post.cov().max_abs() <= 1e-8);
    }

    #[test]
    fn full_projection_prior_solves() {
        let (a, b, x0) = system(4, 10);
        let spec = ProjectionSpec::new(Matrix::identity(4), Matrix::identity(4), x0).unwrap();
        let bridge = projection_as_sbi(&spec, &a, &b).unwrap();
        assert!(bridge.warnings.is_empty());
        let post = sbi_posterior(&bridge.problem, &bridge.directions).unwrap();
        assert!(max_abs_diff(post.mean(), &crate::linalg::solve(&a, &b).unwrap()) < 1e-9);
        assert!(post.cov().max_abs() < 1e-9);
    }

    #[test]
    fn spd_structured_prior_is_inverse() {
        let mut rng = seeded_rng(11);
        let a = random_spd(5, 0.5, 3.0, &mut rng);
        let b = standard_normal_vec(5, &mut rng);
        let x = standard_normal_matrix(5, 2, &mut rng);
        let spec = ProjectionSpec::new(x.clone(), x, vec![0.0; 5]).unwrap();
        let bridge = projection_as_sbi_structured(&spec, &a, &b, &Matrix::identity(5)).unwrap();
        let ainv = inverse(&a).unwrap();
        assert!(max_abs_diff_mat(bridge.problem.prior().cov(), &ainv) < 1e-10);
        let post = sbi_posterior(&bridge.problem, &bridge.directions).unwrap();
        let proj = projection_step(&a, &b, &spec).unwrap();
        assert!(max_abs_diff(post.mean(), &proj) < 1e-8);
    }

    #[test]
    fn polar_structured_prior_matches_projection() {
        let (a, b, x0) = system(5, 12);
        let (p, h) = polar_decompose(&a).unwrap();
        let mut rng = seeded_rng(13);
        let x = standard_normal_matrix(5, 2, &mut rng);
        let spec = ProjectionSpec::new(x.clone(), p.matmul(&x), x0).unwrap();
        let bridge = projection_as_sbi_structured(&spec, &a, &b, &p).unwrap();
        let hinv = inverse(h.matrix()).unwrap();
        assert!(max_abs_diff_mat(bridge.problem.prior().cov(), &hinv) < 1e-9);
        let post = sbi_posterior(&bridge.problem, &bridge.directions).unwrap();
        let proj = projection_step(&a, &b, &spec).unwrap();
        assert!(max_abs_diff(post.mean(), &proj) < 1e-8);
        assert!(post.cov().max_abs() > 1e-6);
    }

    #[test]
    fn structured_prior_rejects_bad_inputs() {
        let a = Matrix::from_diag(&[1.0, -1.0, 2.0]);
        let x = Matrix::identity(3).leading_cols(1);
        let spec = ProjectionSpec::new(x.clone(), x.clone(), vec![0.0; 3]).unwrap();
        assert!(matches!(
            projection_as_sbi_structured(&spec, &a, &[1.0; 3], &Matrix::identity(3)),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let spec = ProjectionSpec::new(x.clone(), Matrix::column_vector(&[0.0, 1.0, 0.0]), vec![0.0; 3]).unwrap();
        assert!(matches!(
            projection_as_sbi_structured(&spec, &Matrix::identity(3), &[1.0; 3], &Matrix::identity(3)),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn round_trip_sbi_projection_sbi() {
        let p = problem(6, 14);
        let s = directions(6, 3, 15);
        let spec = sbi_as_projection(&p, &s).unwrap();
        let bridge = projection_as_sbi(&spec, p.a(), p.b()).unwrap();
        let again = sbi_posterior(&bridge.problem, &bridge.directions).unwrap();
        let original = sbi_posterior(&p, &s).unwrap();
        assert!(max_abs_diff(again.mean(), original.mean()) < 1e-8);
        assert!(again.cov().max_abs() <= 1e-8);
    }

    #[test]
    fn identity_preconditioners_are_trivial() {
        let p = problem(5, 16);
        let s = directions(5, 2, 17);
        let right = precondition_right(&p, &Matrix::identity(5)).unwrap();
        assert_eq!(right.z_problem.a(), p.a());
        assert!(right_preconditioning_check(&p, &Matrix::identity(5), &s).unwrap().passed);
        let left = precondition_left(&p, &Matrix::identity(5), &s).unwrap();
        assert_eq!(left.mean_gap, 0.0);
        assert_eq!(left.cov_gap, 0.0);
    }

    #[test]
    fn diagonal_right_preconditioner() {
        let p = problem(6, 18);
        let s = directions(6, 2, 19);
        let pr = Matrix::from_diag(&[1.0, 2.0, 0.5, 3.0, 1.5, 0.7]);
        let report = right_preconditioning_check(&p, &pr, &s).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn exact_right_preconditioner_solves_in_one_step() {
        let (a, b, _) = system(5, 20);
        let ainv = inverse(&a).unwrap();
        let prior = GaussianBelief::new(vec![0.0; 5], Matrix::identity(5)).unwrap();
        let p = SbiProblem::new(a.clone(), b.clone(), prior).unwrap();
        let right = precondition_right(&p, &ainv).unwrap();
        assert!(max_abs_diff_mat(right.z_problem.a(), &Matrix::identity(5)) < 1e-10);
        let s = SearchDirections::new(Matrix::column_vector(&b)).unwrap();
        let z = sbi_posterior(&right.z_problem, &s).unwrap();
        let x = right.pull_back(&z).unwrap();
        assert!(norm2(&sub_vec(&a.matvec(x.mean()), &b)) < 1e-9 * norm2(&b));
    }

    #[test]
    fn random_left_preconditioner() {
        let p = problem(6, 21);
        let s = directions(6, 2, 22);
        let mut rng = seeded_rng(23);
        let pl = random_invertible(6, 0.5, 2.0, &mut rng);
        let report = precondition_left(&p, &pl, &s).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn exact_left_preconditioner_gives_identity_system() {
        let p = problem(5, 24);
        let ainv = inverse(p.a()).unwrap();
        assert!(max_abs_diff_mat(&ainv.matmul(p.a()), &Matrix::identity(5)) < 1e-10);
        let s = directions(5, 2, 25);
        assert!(precondition_left(&p, &ainv, &s).unwrap().passed);
    }

    #[test]
    fn singular_preconditioner_is_rejected() {
        let p = problem(3, 26);
        let s = directions(3, 1, 27);
        let sing = Matrix::from_diag(&[1.0, 0.0, 1.0]);
        assert!(precondition_right(&p, &sing).is_err());
        assert!(precondition_left(&p, &sing, &s).is_err());
        assert!(PreconditionerPair::new(Some(sing), None, false).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn two_sided_composition(seed in any::<u64>(), m in 1usize..6) {
            let p = problem(6, seed);
            let mut rng = seeded_rng(seed ^ 1);
            let pair = PreconditionerPair::new(
                Some(random_invertible(6, 0.5, 2.0, &mut rng)),
                Some(random_invertible(6, 0.5, 2.0, &mut rng)),
                false,
            ).unwrap();
            let s = directions(6, m, seed ^ 2);
            let report = two_sided_check(&p, &pair, &s).unwrap();
            prop_assert!(report.passed, "{:?}", report);
        }

        #[test]
        fn bridges_are_direction_agnostic(seed in any::<u64>(), kind in 0usize..3, m in 1usize..5) {
            let p = problem(6, seed);
            let s = match kind {
                0 => directions(6, m, seed ^ 3),
                1 => bayescg_directions(&p, m).unwrap(),
                _ => SearchDirections::new(Matrix::identity(6).leading_cols(m)).unwrap(),
            };
            prop_assume!(s.count() > 0);
            let spec = sbi_as_projection(&p, &s).unwrap();
            let proj = projection_step(p.a(), p.b(), &spec).unwrap();
            let post = sbi_posterior(&p, &s).unwrap();
            prop_assert!(max_abs_diff(&proj, post.mean()) < 1e-8);
            let mut rng = seeded_rng(seed ^ 4);
            let pl = random_invertible(6, 0.5, 2.0, &mut rng);
            prop_assert!(precondition_left(&p, &pl, &s).unwrap().passed);
            prop_assert!(right_preconditioning_check(&p, &pl, &s).unwrap().passed);
        }
    }
}
