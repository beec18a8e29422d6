//! `calibrate` and `convergence` over the random test ensemble.

use std::fs;
use std::io::Write;

use problin::calibration::{
    convergence_traces, run_calibration_study, CalibrationFailure, CalibrationSolver,
    EnsembleConfig, PriorChoice,
};
use problin::Execution;

use crate::args::{Format, StudyArgs, StudyPrior, StudySolver};
use crate::error::{CliError, CliResult};
use crate::open_output;

fn config(args: &StudyArgs, max_m: usize) -> CliResult<EnsembleConfig> {
    if args.d == 0 {
        return Err(CliError::config("--d", "must be at least 1"));
    }
    if !(args.rate > 0.0 && args.rate.is_finite()) {
        return Err(CliError::config("--rate", format!("must be positive, found {}", args.rate)));
    }
    if args.problems == 0 {
        return Err(CliError::config("--problems", "must be at least 1"));
    }
    if args.iterations.is_empty() {
        return Err(CliError::config("--iterations", "needs at least one entry"));
    }
    if let Some(&m) = args.iterations.iter().find(|&&m| m > max_m) {
        return Err(CliError::config(
            "--iterations",
            format!("{m} exceeds the largest allowed value {max_m} for d = {}", args.d),
        ));
    }
    let prior = match args.prior {
        StudyPrior::Identity => PriorChoice::Identity,
        StudyPrior::AtaInverse => {
            eprintln!("warning: --prior ata-inverse forms a dense (AᵀA)⁻¹ per problem; use it for validation only");
            PriorChoice::Matched
        }
    };
    let solver = match args.solver {
        StudySolver::BayesGmresLeft => CalibrationSolver::BayesGmresLeft,
        StudySolver::Bayescg => CalibrationSolver::BayesCg,
    };
    Ok(EnsembleConfig {
        d: args.d,
        rate: args.rate,
        n_problems: args.problems,
        iterations: args.iterations.clone(),
        seed: args.seed,
        solver,
        prior,
        execution: Execution::Parallel,
    })
}

fn report_failures(failures: &[CalibrationFailure]) {
    if failures.is_empty() {
        return;
    }
    eprintln!("{} solve(s) failed and were left out:", failures.len());
    for f in failures.iter().take(5) {
        match f.m {
            Some(m) => eprintln!("  problem {} at m = {m}: {}", f.problem_id, f.error),
            None => eprintln!("  problem {}: {}", f.problem_id, f.error),
        }
    }
}

pub fn calibrate(args: &StudyArgs) -> CliResult<()> {
    let cfg = config(args, args.d.saturating_sub(1))?;
    let study = run_calibration_study(&cfg)?;
    report_failures(&study.failures);
    let mut out = open_output(&args.output)?;
    match args.format {
        Format::Csv => study.write_csv(&mut out)?,
        Format::Json => writeln!(out, "{}", study.summary_json())?,
    }
    out.flush()?;
    if let Some(path) = &args.summary {
        fs::write(path, study.summary_json() + "\n")
            .map_err(|e| CliError::config("--summary", format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn convergence(args: &StudyArgs) -> CliResult<()> {
    let cfg = config(args, args.d)?;
    let table = convergence_traces(&cfg)?;
    report_failures(&table.failures);
    let mut out = open_output(&args.output)?;
    match args.format {
        Format::Csv => table.write_csv(&mut out)?,
        Format::Json => writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&table.rows).expect("rows serialize")
        )?,
    }
    out.flush()?;
    if args.summary.is_some() {
        eprintln!("warning: --summary is only written by calibrate");
    }
    Ok(())
}
