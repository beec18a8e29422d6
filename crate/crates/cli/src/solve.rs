use clap::ValueEnum;
use problin::gaussian::GaussianBelief;
use problin::gmres::{
    arnoldi, bayes_gmres_arnoldi_prior, bayes_gmres_left_with_prior, bayes_gmres_right, gmres_solve,
};
use problin::linalg::matrix::{norm2, sub_vec};
use problin::mbi::{mbi_cg_solve, MbiCgPrior};
use problin::projection::{projection_step, ProjectionSpec};
use problin::sbi::{bayescg_solve, sbi_posterior, SbiProblem};
use problin::{Matrix, SolverTrace, TraceStep};

use crate::args::{PriorKind, SolverKind, SystemArgs};
use crate::error::CliResult;
use crate::input::{build_prior, parse_cg_prior, sbi_directions, System};

pub fn solver_name(kind: SolverKind) -> String {
    kind.to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

/// A point estimate, or a full belief for the Bayesian solvers.
enum Iterate {
    Point(Vec<f64>),
    Belief(GaussianBelief),
}

struct Run {
    iterates: Vec<Iterate>,
    converged_at: Option<usize>,
}

impl Run {
    fn new() -> Self {
        Self {
            iterates: Vec::new(),
            converged_at: None,
        }
    }
}

/// The `P_l A P_r`-system solve, reported in `x` with residuals of `A x = b`.
pub fn solve(args: &SystemArgs, sys: &System) -> CliResult<SolverTrace> {
    let a = sys.solved_matrix();
    let b = sys.solved_rhs();
    let run = iterates(args, sys, &a, &b)?;

    let mut trace = SolverTrace::new(solver_name(args.solver));
    for (j, it) in run.iterates.iter().enumerate() {
        let (x, cov_trace) = match it {
            Iterate::Point(z) => (sys.point_to_x(z), None),
            Iterate::Belief(belief) => {
                let bx = sys.to_x(belief)?;
                let tr = bx.cov().trace();
                (bx.into_parts().0, Some(tr))
            }
        };
        let resid = norm2(&sub_vec(&sys.b, &sys.a.matvec(&x)));
        let mut step = TraceStep::new(j, x, resid);
        step.cov_trace = cov_trace;
        trace.push(step);
    }
    trace.converged_at = run.converged_at;
    Ok(trace)
}

fn ignored_prior(args: &SystemArgs) {
    if args.prior != PriorKind::Identity {
        eprintln!(
            "warning: --prior has no effect with --solver {}",
            solver_name(args.solver)
        );
    }
}

/// Solvers that build an Arnoldi basis from `b − A x₀`.
fn krylov_based(kind: SolverKind) -> bool {
    matches!(
        kind,
        SolverKind::BayesGmresLeft
            | SolverKind::BayesGmresArnoldi
            | SolverKind::BayesGmresRight
            | SolverKind::Projection
    )
}

fn iterates(args: &SystemArgs, sys: &System, a: &Matrix, b: &[f64]) -> CliResult<Run> {
    let m = args.iterations;
    let x0 = &sys.x0;
    let mut run = Run::new();
    let krylov_start = sub_vec(b, &a.matvec(x0));
    if norm2(&krylov_start) == 0.0 && krylov_based(args.solver) {
        run.iterates.push(Iterate::Point(x0.clone()));
        run.converged_at = Some(0);
        return Ok(run);
    }
    match args.solver {
        SolverKind::Sbi => {
            let prior = build_prior(args, a, x0)?;
            let s = sbi_directions(args, sys.dim(), m)?;
            let problem = SbiProblem::new(a.clone(), b.to_vec(), prior)?;
            for j in 0..=m {
                run.iterates.push(Iterate::Belief(sbi_posterior(&problem, &s.leading(j))?));
            }
        }
        SolverKind::Bayescg => {
            let prior = build_prior(args, a, x0)?;
            let problem = SbiProblem::new(a.clone(), b.to_vec(), prior)?;
            for j in 0..=m {
                let (trace, belief) = bayescg_solve(&problem, j)?;
                if trace.iterations() < j {
                    run.converged_at = Some(trace.iterations());
                    break;
                }
                run.iterates.push(Iterate::Belief(belief));
            }
        }
        SolverKind::MbiCg => {
            ignored_prior(args);
            if args.x0.is_some() {
                eprintln!("warning: --x0 has no effect with --solver mbi-cg, which starts from alpha·b");
            }
            let (alpha, beta, gamma) = parse_cg_prior(&args.cg_prior)?;
            let prior = if gamma != 0.0 {
                eprintln!("warning: gamma ≠ 0 forms a dense A⁻¹; use it for validation only");
                MbiCgPrior::validation(alpha, beta, gamma)
            } else {
                MbiCgPrior::new(alpha, beta, gamma)
            };
            let out = mbi_cg_solve(a, b, prior, m)?;
            run.converged_at = out.trace.converged_at;
            run.iterates = out.trace.steps.into_iter().map(|s| Iterate::Point(s.x)).collect();
        }
        SolverKind::Gmres => {
            ignored_prior(args);
            let (trace, _) = gmres_solve(a, b, x0, m)?;
            run.converged_at = trace.converged_at;
            run.iterates = trace.steps.into_iter().map(|s| Iterate::Point(s.x)).collect();
        }
        SolverKind::BayesGmresLeft => {
            let prior = build_prior(args, a, x0)?;
            run.iterates.push(Iterate::Belief(prior.clone()));
            for j in 1..=m {
                let out = bayes_gmres_left_with_prior(a, b, prior.clone(), j)?;
                if out.arnoldi.m < j {
                    run.converged_at = Some(out.arnoldi.m);
                    break;
                }
                run.iterates.push(Iterate::Belief(out.posterior));
            }
        }
        SolverKind::BayesGmresArnoldi => {
            ignored_prior(args);
            run.iterates.push(Iterate::Belief(GaussianBelief::point_mass(x0.clone())));
            for j in 1..=m {
                let out = bayes_gmres_arnoldi_prior(a, b, x0, j)?;
                if out.arnoldi.m < j {
                    run.converged_at = Some(out.arnoldi.m);
                    break;
                }
                run.iterates.push(Iterate::Belief(out.posterior));
            }
        }
        SolverKind::BayesGmresRight => {
            ignored_prior(args);
            run.iterates.push(Iterate::Point(x0.clone()));
            for j in 1..=m {
                let fact = arnoldi(a, &krylov_start, j)?;
                if fact.m < j {
                    run.converged_at = Some(fact.m);
                    break;
                }
                run.iterates.push(Iterate::Point(bayes_gmres_right(a, b, x0, j)?));
            }
        }
        SolverKind::Projection => {
            ignored_prior(args);
            run.iterates.push(Iterate::Point(x0.clone()));
            for j in 1..=m {
                let fact = arnoldi(a, &krylov_start, j)?;
                if fact.m < j {
                    run.converged_at = Some(fact.m);
                    break;
                }
                let q = fact.q_m();
                let spec = ProjectionSpec::new(q.clone(), q, x0.clone())?;
                run.iterates.push(Iterate::Point(projection_step(a, b, &spec)?));
            }
        }
    }
    Ok(run)
}
