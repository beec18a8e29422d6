use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "problin", version, about = "Probabilistic linear solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a solver and write its per-iteration trace.
    Solve(SystemArgs),
    /// Compare a solver against an independent route to the same iterate.
    Check(SystemArgs),
    /// Z-statistic calibration study over a random ensemble.
    Calibrate(StudyArgs),
    /// Mean error and posterior trace per iteration over a random ensemble.
    Convergence(StudyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    /// Solution-based inference along fixed directions (`--directions`, else random from `--seed`).
    Sbi,
    Bayescg,
    /// Right-multiplied matrix-based solver that reproduces CG.
    MbiCg,
    Gmres,
    BayesGmresLeft,
    BayesGmresArnoldi,
    BayesGmresRight,
    /// Galerkin projection onto the Krylov space (`U = X`).
    Projection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PriorKind {
    Identity,
    /// `A⁻¹`, for SPD `A` (dense inverse).
    Inverse,
    /// `(AᵀA)⁻¹` (dense inverse).
    AtaInverse,
    /// Covariance read from `--prior-file`.
    File,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    #[arg(long, value_enum)]
    pub solver: SolverKind,
    /// Matrix Market file holding `A`.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Matrix Market file holding `b`.
    #[arg(long)]
    pub rhs: PathBuf,
    #[arg(long)]
    pub iterations: usize,
    /// Prior covariance on the solution of the system actually solved.
    #[arg(long, value_enum, default_value = "identity")]
    pub prior: PriorKind,
    #[arg(long)]
    pub prior_file: Option<PathBuf>,
    /// Starting guess (prior mean); zero when omitted.
    #[arg(long)]
    pub x0: Option<PathBuf>,
    /// Search directions for `--solver sbi`, one per column.
    #[arg(long)]
    pub directions: Option<PathBuf>,
    /// `alpha,beta,gamma` of the CG-reproducing prior; `gamma > 0` needs a dense inverse.
    #[arg(long, default_value = "1,1,0")]
    pub cg_prior: String,
    /// Left preconditioner `P_l`.
    #[arg(long)]
    pub precondition_left: Option<PathBuf>,
    /// Right preconditioner `P_r`; iterates are reported as `x = P_r z`.
    #[arg(long)]
    pub precondition_right: Option<PathBuf>,
    /// Seed for randomly drawn search directions.
    #[arg(long, default_value_t = 12345)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StudySolver {
    BayesGmresLeft,
    Bayescg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StudyPrior {
    Identity,
    AtaInverse,
}

#[derive(Args, Debug, Clone)]
pub struct StudyArgs {
    #[arg(long, value_enum, default_value = "bayes-gmres-left")]
    pub solver: StudySolver,
    #[arg(long, value_enum, default_value = "ata-inverse")]
    pub prior: StudyPrior,
    #[arg(long, default_value_t = 100)]
    pub d: usize,
    /// Decay rate of the singular values.
    #[arg(long, default_value_t = 10.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 500)]
    pub problems: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,8,10")]
    pub iterations: Vec<usize>,
    #[arg(long, default_value_t = 12345)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the per-iteration summary as JSON here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}
