//! `check`: each solver against an independent route to the same iterate.
//!
//! Checks run on the unpreconditioned system. Preconditioners, when given,
//! add the preconditioning equivalence reports.

use std::io::Write;

use problin::gmres::{
    arnoldi, bayes_gmres_arnoldi_prior, bayes_gmres_left, bayes_gmres_right, full_least_squares,
    gmres_solve,
};
use problin::linalg::matrix::{axpy, max_abs, max_abs_diff, max_abs_diff_mat, sub_vec};
use problin::linalg::Cholesky;
use problin::gaussian::GaussianBelief;
use problin::mbi::{mbi_cg_solve, MbiCgPrior};
use problin::projection::{
    precondition_left, projection_as_sbi, projection_step, right_preconditioning_check,
    sbi_as_projection, two_sided_check, PreconditionerPair, PreconditioningReport, ProjectionSpec,
    BRIDGE_TOL,
};
use problin::sbi::{bayescg_directions, bayescg_solve, sbi_posterior, SbiProblem};
use serde_json::json;

use crate::args::{Format, PriorKind, SolverKind, SystemArgs};
use crate::error::{CliError, CliResult};
use crate::input::{build_prior, parse_cg_prior, sbi_directions, System};
use crate::solve::solver_name;

pub const GMRES_MEAN_TOL: f64 = 1e-7;
pub const LSQ_TOL: f64 = 1e-9;

pub struct CheckLine {
    pub name: &'static str,
    pub gap: f64,
    pub tolerance: f64,
}

impl CheckLine {
    fn new(name: &'static str, gap: f64, tolerance: f64) -> Self {
        Self { name, gap, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.gap <= self.tolerance
    }
}

fn rel_gap(u: &[f64], reference: &[f64]) -> f64 {
    max_abs_diff(u, reference) / max_abs(reference).max(f64::MIN_POSITIVE)
}

fn ignored_prior(args: &SystemArgs) {
    if args.prior != PriorKind::Identity {
        eprintln!(
            "warning: check --solver {} uses its own reference prior; --prior is ignored",
            solver_name(args.solver)
        );
    }
}

fn nonzero_iterations(args: &SystemArgs) -> CliResult<usize> {
    match args.iterations {
        0 => Err(CliError::config("--iterations", "check needs at least one iteration")),
        m => Ok(m),
    }
}

pub fn run_checks(args: &SystemArgs, sys: &System) -> CliResult<Vec<CheckLine>> {
    let m = nonzero_iterations(args)?;
    let (a, b, x0) = (&sys.a, sys.b.as_slice(), sys.x0.as_slice());
    let mut lines = Vec::new();
    match args.solver {
        SolverKind::Gmres => {
            let (trace, x) = gmres_solve(a, b, x0, m)?;
            let r0 = sub_vec(b, &a.matvec(x0));
            let fact = arnoldi(a, &r0, m)?;
            let q = fact.q_m();
            let mut reference = x0.to_vec();
            axpy(1.0, &q.matvec(&full_least_squares(a, &q, &r0)?), &mut reference);
            lines.push(CheckLine::new("gmres-vs-full-least-squares", rel_gap(&x, &reference), LSQ_TOL));
            let norms = trace.residual_norms();
            let rise = norms
                .windows(2)
                .map(|w| (w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE))
                .fold(0.0f64, f64::max);
            lines.push(CheckLine::new("gmres-residual-increase", rise, 1e-12));
        }
        SolverKind::BayesGmresLeft => {
            ignored_prior(args);
            let (_, x) = gmres_solve(a, b, x0, m)?;
            let out = bayes_gmres_left(a, b, x0, m)?;
            for note in &out.notes {
                eprintln!("note: {note}");
            }
            lines.push(CheckLine::new(
                "bayes-gmres-left-vs-gmres",
                rel_gap(out.posterior.mean(), &x),
                GMRES_MEAN_TOL,
            ));
        }
        SolverKind::BayesGmresArnoldi => {
            ignored_prior(args);
            let (_, x) = gmres_solve(a, b, x0, m)?;
            let out = bayes_gmres_arnoldi_prior(a, b, x0, m)?;
            lines.push(CheckLine::new(
                "bayes-gmres-arnoldi-vs-gmres",
                rel_gap(out.posterior.mean(), &x),
                GMRES_MEAN_TOL,
            ));
            lines.push(CheckLine::new("posterior-covariance-zero", out.posterior.cov().max_abs(), BRIDGE_TOL));
        }
        SolverKind::BayesGmresRight => {
            ignored_prior(args);
            let (_, x) = gmres_solve(a, b, x0, m)?;
            let mean = bayes_gmres_right(a, b, x0, m)?;
            lines.push(CheckLine::new("bayes-gmres-right-vs-gmres", rel_gap(&mean, &x), GMRES_MEAN_TOL));
        }
        SolverKind::Bayescg => {
            let problem = SbiProblem::new(a.clone(), b.to_vec(), build_prior(args, a, x0)?)?;
            let (_, sequential) = bayescg_solve(&problem, m)?;
            let batch = sbi_posterior(&problem, &bayescg_directions(&problem, m)?)?;
            lines.push(CheckLine::new(
                "bayescg-sequential-vs-batch-mean",
                rel_gap(sequential.mean(), batch.mean()),
                BRIDGE_TOL,
            ));
            lines.push(CheckLine::new(
                "bayescg-sequential-vs-batch-cov",
                max_abs_diff_mat(sequential.cov(), batch.cov()) / problem.prior().cov().max_abs(),
                BRIDGE_TOL,
            ));
        }
        SolverKind::Sbi => {
            let problem = SbiProblem::new(a.clone(), b.to_vec(), build_prior(args, a, x0)?)?;
            let s = sbi_directions(args, sys.dim(), m)?;
            let post = sbi_posterior(&problem, &s)?;
            let x = projection_step(a, b, &sbi_as_projection(&problem, &s)?)?;
            lines.push(CheckLine::new("sbi-vs-projection", rel_gap(post.mean(), &x), BRIDGE_TOL));
        }
        SolverKind::Projection => {
            ignored_prior(args);
            let fact = arnoldi(a, &sub_vec(b, &a.matvec(x0)), m)?;
            let q = fact.q_m();
            let spec = ProjectionSpec::new(q.clone(), q, x0.to_vec())?;
            let x = projection_step(a, b, &spec)?;
            let bridge = projection_as_sbi(&spec, a, b)?;
            for w in &bridge.warnings {
                eprintln!("warning: {w}");
            }
            let post = sbi_posterior(&bridge.problem, &bridge.directions)?;
            lines.push(CheckLine::new("projection-vs-sbi", rel_gap(&x, post.mean()), BRIDGE_TOL));
        }
        SolverKind::MbiCg => {
            ignored_prior(args);
            let (alpha, beta, gamma) = parse_cg_prior(&args.cg_prior)?;
            let prior = if gamma != 0.0 {
                MbiCgPrior::validation(alpha, beta, gamma)
            } else {
                MbiCgPrior::new(alpha, beta, gamma)
            };
            let run = mbi_cg_solve(a, b, prior, m)?;
            // CG from the same start, as BayesCG under Σ₀ = A⁻¹.
            let start: Vec<f64> = b.iter().map(|v| alpha * v).collect();
            let cov = Cholesky::new(a)?.inverse().symmetrize();
            let problem = SbiProblem::new(a.clone(), b.to_vec(), GaussianBelief::new(start, cov)?)?;
            let (cg, _) = bayescg_solve(&problem, m)?;
            let gap = run
                .trace
                .steps
                .iter()
                .zip(&cg.steps)
                .map(|(u, v)| rel_gap(&u.x, &v.x))
                .fold(0.0f64, f64::max);
            lines.push(CheckLine::new("mbi-cg-vs-cg-iterates", gap, BRIDGE_TOL));
        }
    }
    lines.extend(preconditioning_lines(args, sys, m)?);
    Ok(lines)
}

fn report_lines(prefix: [&'static str; 2], report: PreconditioningReport) -> [CheckLine; 2] {
    [
        CheckLine::new(prefix[0], report.mean_gap, BRIDGE_TOL),
        CheckLine::new(prefix[1], report.cov_gap, BRIDGE_TOL),
    ]
}

fn preconditioning_lines(args: &SystemArgs, sys: &System, m: usize) -> CliResult<Vec<CheckLine>> {
    if !sys.is_preconditioned() {
        return Ok(Vec::new());
    }
    let problem = SbiProblem::new(sys.a.clone(), sys.b.clone(), build_prior(args, &sys.a, &sys.x0)?)?;
    let s = sbi_directions(args, sys.dim(), m)?;
    let mut lines = Vec::new();
    if let Some(pr) = &sys.pr {
        let r = right_preconditioning_check(&problem, pr, &s)?;
        lines.extend(report_lines(["right-preconditioning-mean", "right-preconditioning-cov"], r));
    }
    if let Some(pl) = &sys.pl {
        let r = precondition_left(&problem, pl, &s)?;
        lines.extend(report_lines(["left-preconditioning-mean", "left-preconditioning-cov"], r));
    }
    if sys.pl.is_some() && sys.pr.is_some() {
        let pair = PreconditionerPair::new(sys.pl.clone(), sys.pr.clone(), false)?;
        let r = two_sided_check(&problem, &pair, &s)?;
        lines.extend(report_lines(["two-sided-preconditioning-mean", "two-sided-preconditioning-cov"], r));
    }
    Ok(lines)
}

pub fn write_report<W: Write>(mut out: W, lines: &[CheckLine], format: Format) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "check,gap,tolerance,passed")?;
            for l in lines {
                writeln!(out, "{},{:e},{:e},{}", l.name, l.gap, l.tolerance, l.passed())?;
            }
        }
        Format::Json => {
            let rows: Vec<_> = lines
                .iter()
                .map(|l| json!({"check": l.name, "gap": l.gap, "tolerance": l.tolerance, "passed": l.passed()}))
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("report serializes"))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_gaps_fail() {
        assert!(CheckLine::new("x", 1e-9, 1e-8).passed());
        assert!(!CheckLine::new("x", 2e-8, 1e-8).passed());
        assert!(!CheckLine::new("x", f64::NAN, 1e-8).passed());
    }

    #[test]
    fn csv_report_layout() {
        let mut out = Vec::new();
        write_report(&mut out, &[CheckLine::new("a", 0.5, 1.0)], Format::Csv).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "check,gap,tolerance,passed\na,5e-1,1e0,true\n");
    }
}
