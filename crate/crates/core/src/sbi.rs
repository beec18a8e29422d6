//! Solution-based inference: a Gaussian prior on `x*` conditioned on the
//! projections `Sᵀ A x* = Sᵀ b`, and the BayesCG iteration built on top.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{condition, GaussianBelief, DEFAULT_RANK_TOL};
use crate::linalg::decomp::{ensure_well_conditioned, solve, Cholesky, Qr, SymEigen};
use crate::linalg::matrix::{axpy, dot, norm2, scale_vec, sub_vec, Matrix};
use crate::trace::{SolverTrace, TraceStep};

/// Relative tolerance of the column-rank check on search directions.
pub const DIRECTION_RANK_TOL: f64 = 1e-10;

/// BayesCG stops once the next unnormalized direction has `‖s̃‖_{AΣ₀Aᵀ}` at or below this.
pub const BREAKDOWN_TOL: f64 = 1e-13;

/// Tolerance for candidates lying in `x₀ + range(Σ₀AᵀS)`.
const SUBSPACE_TOL: f64 = 1e-8;

/// `A x = b` together with a Gaussian prior on the solution.
#[derive(Clone, Debug, Serialize)]
pub struct SbiProblem {
    a: Matrix,
    b: Vec<f64>,
    prior: GaussianBelief,
}

impl SbiProblem {
    /// Rejects non-square or ill-conditioned `A` (1-norm condition ≥ 1e12) and mismatched sizes.
    pub fn new(a: Matrix, b: Vec<f64>, prior: GaussianBelief) -> Result<Self> {
        let d = a.ensure_square("SbiProblem::new")?;
        if b.len() != d {
            return Err(Error::dims("SbiProblem::new (b)", d, b.len()));
        }
        if prior.dim() != d {
            return Err(Error::dims("SbiProblem::new (prior)", d, prior.dim()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SbiProblem::new"));
        }
        ensure_well_conditioned(&a, "SbiProblem::new")?;
        Ok(Self { a, b, prior })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn prior(&self) -> &GaussianBelief {
        &self.prior
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Same system under a different prior.
    pub fn with_prior(&self, prior: GaussianBelief) -> Result<Self> {
        if prior.dim() != self.dim() {
            return Err(Error::dims("SbiProblem::with_prior", self.dim(), prior.dim()));
        }
        Ok(Self {
            a: self.a.clone(),
            b: self.b.clone(),
            prior,
        })
    }

    /// `b − A x₀`.
    pub fn initial_residual(&self) -> Vec<f64> {
        sub_vec(&self.b, &self.a.matvec(self.prior.mean()))
    }

    /// Dense solve, used as ground truth.
    pub fn solution(&self) -> Result<Vec<f64>> {
        solve(&self.a, &self.b)
    }
}

/// `d x m` matrix of linearly independent search directions (`m = 0` allowed).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchDirections {
    s: Matrix,
}

impl SearchDirections {
    pub fn new(s: Matrix) -> Result<Self> {
        let (d, m) = s.shape();
        if m > d {
            return Err(Error::precondition(
                "SearchDirections::new",
                format!("{m} directions exceed dimension {d}"),
            ));
        }
        if !s.is_finite() {
            return Err(Error::NonFinite("SearchDirections::new"));
        }
        if m > 0 {
            let rank = Qr::new(&s).rank(DIRECTION_RANK_TOL);
            if rank < m {
                return Err(Error::RankDeficient {
                    op: "SearchDirections::new",
                    detail: format!("rank {rank} < {m} columns"),
                });
            }
        }
        Ok(Self { s })
    }

    pub fn empty(d: usize) -> Self {
        Self {
            s: Matrix::zeros(d, 0),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.s
    }

    pub fn count(&self) -> usize {
        self.s.cols()
    }

    pub fn dim(&self) -> usize {
        self.s.rows()
    }

    /// The first `n` directions.
    pub fn leading(&self, n: usize) -> Self {
        Self {
            s: self.s.leading_cols(n.min(self.count())),
        }
    }

    pub fn into_inner(self) -> Matrix {
        self.s
    }
}

fn check_directions(problem: &SbiProblem, s: &SearchDirections, op: &'static str) -> Result<()> {
    if s.dim() != problem.dim() {
        return Err(Error::dims(op, problem.dim(), s.dim()));
    }
    Ok(())
}

/// Posterior over `x*` after observing `Sᵀ A x* = Sᵀ b`.
pub fn sbi_posterior(problem: &SbiProblem, s: &SearchDirections) -> Result<GaussianBelief> {
    check_directions(problem, s, "sbi_posterior")?;
    let m = s.count();
    if m == 0 {
        return Ok(problem.prior.clone());
    }
    let obs = s.matrix().tr_matmul(&problem.a); // Sᵀ A
    let gram = obs.matmul(problem.prior.cov()).matmul_tr(&obs);
    let rank = SymEigen::new(&gram.symmetrize())?.rank(DEFAULT_RANK_TOL);
    if rank < m {
        return Err(Error::RankDeficient {
            op: "sbi_posterior",
            detail: format!("Gram matrix SᵀAΣ₀AᵀS has rank {rank} < {m}"),
        });
    }
    let y = s.matrix().tr_matvec(&problem.b);
    condition(
        &problem.prior,
        &obs,
        &vec![0.0; m],
        &y,
        None,
        DEFAULT_RANK_TOL,
    )
}

/// Smallest `‖x − x*‖_{Σ₀⁻¹}` over `candidates` minus that of the posterior mean.
///
/// Every candidate must lie in `x₀ + range(Σ₀AᵀS)`; the posterior mean minimizes
/// the weighted error over that affine space, so the result is never
/// meaningfully negative. Requires an invertible prior covariance.
pub fn sbi_optimality_gap(
    problem: &SbiProblem,
    s: &SearchDirections,
    candidates: &[Vec<f64>],
) -> Result<f64> {
    check_directions(problem, s, "sbi_optimality_gap")?;
    if candidates.is_empty() {
        return Err(Error::precondition("sbi_optimality_gap", "no candidates"));
    }
    let chol = Cholesky::new(problem.prior.cov())?;
    let x_star = problem.solution()?;
    let weighted = |x: &[f64]| {
        let e = sub_vec(x, &x_star);
        dot(&e, &chol.solve(&e)).max(0.0).sqrt()
    };
    let x0 = problem.prior.mean();
    let basis = problem
        .prior
        .cov()
        .matmul_tr(&problem.a)
        .matmul(s.matrix());
    let qr = (s.count() > 0).then(|| Qr::new(&basis));
    let mut best = f64::INFINITY;
    for (k, c) in candidates.iter().enumerate() {
        if c.len() != problem.dim() {
            return Err(Error::dims("sbi_optimality_gap", problem.dim(), c.len()));
        }
        let offset = sub_vec(c, x0);
        let resid = match &qr {
            Some(qr) => {
                let coeff = qr.solve_least_squares(&offset)?;
                norm2(&sub_vec(&offset, &basis.matvec(&coeff)))
            }
            None => norm2(&offset),
        };
        if resid > SUBSPACE_TOL * norm2(&offset).max(1.0) {
            return Err(Error::precondition(
                "sbi_optimality_gap",
                format!("candidate {k} lies outside x₀ + range(Σ₀AᵀS) (residual {resid:e})"),
            ));
        }
        best = best.min(weighted(c));
    }
    let post = sbi_posterior(problem, s)?;
    Ok(best - weighted(post.mean()))
}

struct BayesCgRun {
    directions: Matrix,
    trace: SolverTrace,
    belief: GaussianBelief,
}

fn bayescg_run(problem: &SbiProblem, m: usize, op: &'static str) -> Result<BayesCgRun> {
    let d = problem.dim();
    if m > d {
        return Err(Error::precondition(op, format!("m = {m} exceeds d = {d}")));
    }
    let a = &problem.a;
    let sigma_at = problem.prior.cov().matmul_tr(a); // Σ₀ Aᵀ
    let k = a.matmul(&sigma_at).symmetrize(); // A Σ₀ Aᵀ

    let mut x = problem.prior.mean().to_vec();
    let mut cov = problem.prior.cov().clone();
    let mut r = problem.initial_residual();
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut trace = SolverTrace::new("bayescg");
    let mut start = TraceStep::new(0, x.clone(), norm2(&r));
    start.cov_trace = Some(cov.trace());
    trace.push(start);

    for j in 1..=m {
        let mut s = r.clone();
        if let Some(prev) = dirs.last() {
            let c = dot(&r, &k.matvec(prev));
            axpy(-c, prev, &mut s);
        }
        let nrm = dot(&s, &k.matvec(&s)).max(0.0).sqrt();
        if nrm <= BREAKDOWN_TOL {
            trace.converged_at = Some(j - 1);
            break;
        }
        let s = scale_vec(&s, 1.0 / nrm);
        let v = sigma_at.matvec(&s);
        let step = scale_vec(&v, dot(&s, &r));
        axpy(1.0, &step, &mut x);
        cov.rank1_update(-1.0, &v, &v);
        r = sub_vec(&problem.b, &a.matvec(&x));

        let mut rec = TraceStep::new(j, x.clone(), norm2(&r));
        rec.cov_trace = Some(cov.trace());
        rec.direction = Some(s.clone());
        rec.step = Some(step);
        trace.push(rec);
        dirs.push(s);
    }
    let directions = if dirs.is_empty() {
        Matrix::zeros(d, 0)
    } else {
        Matrix::from_columns(d, &dirs)
    };
    Ok(BayesCgRun {
        directions,
        trace,
        belief: GaussianBelief::from_parts(x, cov.symmetrize()),
    })
}

/// Up to `m` `AΣ₀Aᵀ`-orthonormal directions; fewer if the residual vanishes first.
pub fn bayescg_directions(problem: &SbiProblem, m: usize) -> Result<SearchDirections> {
    let run = bayescg_run(problem, m, "bayescg_directions")?;
    Ok(SearchDirections { s: run.directions })
}

/// Runs `m` BayesCG iterations with rank-1 mean and covariance updates.
///
/// With `Σ₀ = A⁻¹` for SPD `A` the means are the CG iterates; that prior needs
/// a dense inverse and is only sensible for validation.
pub fn bayescg_solve(problem: &SbiProblem, m: usize) -> Result<(SolverTrace, GaussianBelief)> {
    let run = bayescg_run(problem, m, "bayescg_solve")?;
    Ok((run.trace, run.belief))
}
