//! Ensemble calibration study: how well do posterior covariances describe the
//! actual error of Bayesian GMRES and BayesCG on random SPD systems?
//!
//! Each problem draws `A` with i.i.d. exponential eigenvalues and Haar
//! eigenvectors, `b ~ N(0, I)`, and measures
//! `Z = (x* − x_m)ᵀ Σ_m⁺ (x* − x_m)` against the χ²_{d−m} law.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::chi2::ChiSquared;
use crate::error::{Error, Result};
use crate::gaussian::GaussianBelief;
use crate::gmres::{ata_inverse_prior, bayes_gmres_left_with_prior};
use crate::linalg::decomp::{solve, SymEigen};
use crate::linalg::matrix::{dot, norm2, sub_vec, Matrix};
use crate::linalg::random::{random_test_matrix_with, standard_normal_vec};
use crate::par::{map_indexed, Execution};
use crate::sbi::{bayescg_solve, SbiProblem};

/// Rank cutoff for `Σ_m⁺`, relative to the largest eigenvalue.
pub const Z_RANK_TOL: f64 = 1e-10;

/// Quantile levels reported in summaries.
pub const SUMMARY_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalibrationSolver {
    #[serde(rename = "bayes-gmres-left")]
    BayesGmresLeft,
    #[serde(rename = "bayescg")]
    BayesCg,
}

/// Prior covariance on `x*`; the mean is always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorChoice {
    Identity,
    /// `(AᵀA)⁻¹`, the law of `A⁻¹b` for standard normal `b`.
    Matched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub d: usize,
    pub rate: f64,
    pub n_problems: usize,
    pub iterations: Vec<usize>,
    pub seed: u64,
    pub solver: CalibrationSolver,
    pub prior: PriorChoice,
    #[serde(default)]
    pub execution: Execution,
}

impl EnsembleConfig {
    /// d = 100, rate 10, 500 problems, m ∈ {1, 3, 5, 8, 10}, seed 12345.
    pub fn full_scale(solver: CalibrationSolver, prior: PriorChoice) -> Self {
        Self {
            d: 100,
            rate: 10.0,
            n_problems: 500,
            iterations: vec![1, 3, 5, 8, 10],
            seed: 12345,
            solver,
            prior,
            execution: Execution::default(),
        }
    }

    /// Checks `d ≥ max(iterations) + 1`, `n_problems ≥ 1` and `rate > 0`.
    pub fn validate(&self) -> Result<()> {
        self.validate_with_max(self.d.saturating_sub(1))
    }

    fn validate_with_max(&self, max_m: usize) -> Result<()> {
        const OP: &str = "EnsembleConfig";
        if self.d == 0 {
            return Err(Error::precondition(OP, "d must be >= 1"));
        }
        if self.n_problems == 0 {
            return Err(Error::precondition(OP, "n_problems must be >= 1"));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::precondition(OP, "rate must be positive and finite"));
        }
        if self.iterations.is_empty() {
            return Err(Error::precondition(OP, "iterations must not be empty"));
        }
        if let Some(&m) = self.iterations.iter().find(|&&m| m > max_m) {
            return Err(Error::precondition(
                OP,
                format!("iteration count {m} too large for d = {}", self.d),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub problem_id: usize,
    pub m: usize,
    pub z: f64,
    pub dof: usize,
    pub err_2norm: f64,
    pub cov_trace: f64,
}

/// A problem (`m = None`) or a single solve that could not be evaluated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationFailure {
    pub problem_id: usize,
    pub m: Option<usize>,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quantile {
    pub level: f64,
    pub value: f64,
}

/// Empirical statistics of `Z` at one iteration count next to the χ² reference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationSummary {
    pub m: usize,
    pub dof: usize,
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    pub quantiles: Vec<Quantile>,
    pub reference_mean: f64,
    pub reference_quantiles: Vec<Quantile>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationStudy {
    pub config: EnsembleConfig,
    pub samples: Vec<CalibrationSample>,
    pub failures: Vec<CalibrationFailure>,
    pub summary: Vec<IterationSummary>,
}

impl CalibrationStudy {
    pub fn summary_for(&self, m: usize) -> Option<&IterationSummary> {
        self.summary.iter().find(|s| s.m == m)
    }

    /// `problem_id,m,z,dof,err_2norm,cov_trace`, one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "problem_id,m,z,dof,err_2norm,cov_trace")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{:e},{},{:e},{:e}",
                s.problem_id, s.m, s.z, s.dof, s.err_2norm, s.cov_trace
            )?;
        }
        Ok(())
    }

    /// Config, per-m summary and failures (no raw samples).
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            config: &'a EnsembleConfig,
            summary: &'a [IterationSummary],
            failures: &'a [CalibrationFailure],
        }
        serde_json::to_string_pretty(&View {
            config: &self.config,
            summary: &self.summary,
            failures: &self.failures,
        })
        .expect("summary serializes")
    }
}

/// `(x* − x_m)ᵀ Σ_m⁺ (x* − x_m)`, with eigenvalues below `rank_tol · λ_max` dropped.
pub fn z_statistic(posterior: &GaussianBelief, x_true: &[f64], rank_tol: f64) -> Result<f64> {
    if x_true.len() != posterior.dim() {
        return Err(Error::dims("z_statistic", posterior.dim(), x_true.len()));
    }
    let e = sub_vec(x_true, posterior.mean());
    let eig = SymEigen::new(posterior.cov())?;
    let w = eig.pseudo_solve(&e, rank_tol);
    Ok(dot(&e, &w).max(0.0))
}

/// One random problem from the ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleProblem {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
    pub prior: GaussianBelief,
}

/// Problem `index` of the ensemble; its randomness depends only on `(seed, index)`.
pub fn ensemble_problem(cfg: &EnsembleConfig, index: usize) -> Result<EnsembleProblem> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let a = random_test_matrix_with(cfg.d, cfg.rate, &mut rng)?.into_inner();
    let b = standard_normal_vec(cfg.d, &mut rng);
    let x_true = solve(&a, &b)?;
    let zero = vec![0.0; cfg.d];
    let prior = match cfg.prior {
        PriorChoice::Identity => GaussianBelief::new(zero, Matrix::identity(cfg.d))?,
        PriorChoice::Matched => ata_inverse_prior(&a, &zero)?,
    };
    Ok(EnsembleProblem { a, b, x_true, prior })
}

/// Posterior after `m` iterations of the configured solver; `m = 0` is the prior.
pub fn posterior_at(
    solver: CalibrationSolver,
    problem: &EnsembleProblem,
    m: usize,
) -> Result<GaussianBelief> {
    if m == 0 {
        return Ok(problem.prior.clone());
    }
    match solver {
        CalibrationSolver::BayesGmresLeft => {
            bayes_gmres_left_with_prior(&problem.a, &problem.b, problem.prior.clone(), m)
                .map(|run| run.posterior)
        }
        CalibrationSolver::BayesCg => {
            let sbi = SbiProblem::new(problem.a.clone(), problem.b.clone(), problem.prior.clone())?;
            bayescg_solve(&sbi, m).map(|(_, post)| post)
        }
    }
}

struct ProblemOutcome {
    samples: Vec<CalibrationSample>,
    failures: Vec<CalibrationFailure>,
}

fn evaluate_problem(cfg: &EnsembleConfig, index: usize) -> ProblemOutcome {
    let mut out = ProblemOutcome {
        samples: Vec::with_capacity(cfg.iterations.len()),
        failures: Vec::new(),
    };
    let problem = match ensemble_problem(cfg, index) {
        Ok(p) => p,
        Err(e) => {
            out.failures.push(CalibrationFailure {
                problem_id: index,
                m: None,
                error: e.to_string(),
            });
            return out;
        }
    };
    for &m in &cfg.iterations {
        let sample = posterior_at(cfg.solver, &problem, m).and_then(|post| {
            let z = z_statistic(&post, &problem.x_true, Z_RANK_TOL)?;
            Ok(CalibrationSample {
                problem_id: index,
                m,
                z,
                dof: cfg.d - m,
                err_2norm: norm2(&sub_vec(post.mean(), &problem.x_true)),
                cov_trace: post.cov().trace(),
            })
        });
        match sample {
            Ok(s) => out.samples.push(s),
            Err(e) => out.failures.push(CalibrationFailure {
                problem_id: index,
                m: Some(m),
                error: e.to_string(),
            }),
        }
    }
    out
}

fn run_ensemble(cfg: &EnsembleConfig) -> (Vec<CalibrationSample>, Vec<CalibrationFailure>) {
    let outcomes = map_indexed(cfg.n_problems, cfg.execution, |i| evaluate_problem(cfg, i));
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        samples.extend(o.samples);
        failures.extend(o.failures);
    }
    (samples, failures)
}

/// Linear interpolation between order statistics of a sorted sample.
fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(m: usize, dof: usize, zs: &[f64]) -> IterationSummary {
    let n = zs.len();
    let mean = zs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let mut sorted = zs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantiles = SUMMARY_LEVELS
        .iter()
        .map(|&level| Quantile {
            level,
            value: empirical_quantile(&sorted, level),
        })
        .collect();
    let (reference_mean, reference_quantiles) = if dof > 0 {
        let law = ChiSquared::new(dof as f64);
        let qs = SUMMARY_LEVELS
            .iter()
            .map(|&level| Quantile {
                level,
                value: law.quantile(level),
            })
            .collect();
        (law.mean(), qs)
    } else {
        (0.0, SUMMARY_LEVELS.iter().map(|&level| Quantile { level, value: 0.0 }).collect())
    };
    IterationSummary {
        m,
        dof,
        n,
        mean,
        std_error: (var / n as f64).sqrt(),
        quantiles,
        reference_mean,
        reference_quantiles,
    }
}

/// Runs the configured solver on every ensemble problem at every iteration count.
///
/// Failed problems or solves are collected in `failures`; the study itself only
/// fails on an invalid config.
pub fn run_calibration_study(cfg: &EnsembleConfig) -> Result<CalibrationStudy> {
    cfg.validate()?;
    let (samples, failures) = run_ensemble(cfg);
    let mut summary = Vec::new();
    for &m in &cfg.iterations {
        let zs: Vec<f64> = samples.iter().filter(|s| s.m == m).map(|s| s.z).collect();
        if !zs.is_empty() {
            summary.push(summarize(m, cfg.d - m, &zs));
        }
    }
    Ok(CalibrationStudy {
        config: cfg.clone(),
        samples,
        failures,
        summary,
    })
}

/// Ensemble means of the error and posterior spread at one iteration count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub m: usize,
    pub n: usize,
    pub mean_err_2norm: f64,
    pub mean_cov_trace: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub samples: Vec<CalibrationSample>,
    pub failures: Vec<CalibrationFailure>,
}

impl ConvergenceTable {
    /// `m,n,mean_err_2norm,mean_cov_trace`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,n,mean_err_2norm,mean_cov_trace")?;
        for r in &self.rows {
            writeln!(out, "{},{},{:e},{:e}", r.m, r.n, r.mean_err_2norm, r.mean_cov_trace)?;
        }
        Ok(())
    }
}

/// Mean `‖x_m − x*‖₂` and `trace(Σ_m)` per iteration count; here `m` may reach `d`.
pub fn convergence_traces(cfg: &EnsembleConfig) -> Result<ConvergenceTable> {
    cfg.validate_with_max(cfg.d)?;
    let (samples, failures) = run_ensemble(cfg);
    let mut rows = Vec::new();
    for &m in &cfg.iterations {
        let at_m: Vec<&CalibrationSample> = samples.iter().filter(|s| s.m == m).collect();
        if at_m.is_empty() {
            continue;
        }
        let n = at_m.len() as f64;
        rows.push(ConvergenceRow {
            m,
            n: at_m.len(),
            mean_err_2norm: at_m.iter().map(|s| s.err_2norm).sum::<f64>() / n,
            mean_cov_trace: at_m.iter().map(|s| s.cov_trace).sum::<f64>() / n,
        });
    }
    Ok(ConvergenceTable {
        rows,
        samples,
        failures,
    })
}
