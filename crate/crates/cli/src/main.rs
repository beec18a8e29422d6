//! `problin`: run probabilistic linear solvers from the command line.
//!
//! Exit codes: 0 on success, 2 for configuration errors (the message names
//! the flag), 1 for numerical failures and for `check` gaps above tolerance.

mod args;
mod check;
mod error;
mod input;
mod solve;
mod study;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format, SystemArgs};
use error::{CliError, CliResult};
use input::System;

const THREADS_VAR: &str = "PROBLIN_THREADS";

pub(crate) fn open_output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p)
                .map_err(|e| CliError::config("--output", format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(THREADS_VAR, format!("expected a positive integer, found {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(THREADS_VAR, e.to_string()))
}

fn solve(args: &SystemArgs) -> CliResult<()> {
    let sys = System::load(args)?;
    let trace = solve::solve(args, &sys)?;
    let mut out = open_output(&args.output)?;
    match args.format {
        Format::Csv => trace.write_csv(&mut out)?,
        Format::Json => writeln!(out, "{}", trace.to_json())?,
    }
    out.flush()?;
    Ok(())
}

fn check(args: &SystemArgs) -> CliResult<()> {
    let sys = System::load(args)?;
    let lines = check::run_checks(args, &sys)?;
    let mut out = open_output(&args.output)?;
    check::write_report(&mut out, &lines, args.format)?;
    out.flush()?;
    match lines.iter().filter(|l| !l.passed()).count() {
        0 => Ok(()),
        n => Err(CliError::CheckFailed(n)),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Check(args) => check(args),
        Command::Calibrate(args) => study::calibrate(args),
        Command::Convergence(args) => study::convergence(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
