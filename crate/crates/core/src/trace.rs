//! Per-iteration records shared by the iterative solvers.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// State after `iteration` steps. Iteration 0 is the initial guess.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub residual_norm: f64,
    /// `trace(Σ_j)` for solvers that carry a covariance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov_trace: Option<f64>,
    /// Search direction used to reach this iterate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    /// Step actually taken, `x_j - x_{j-1}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<Vec<f64>>,
    /// Residual vector as tracked by the solver.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<Vec<f64>>,
}

impl TraceStep {
    pub fn new(iteration: usize, x: Vec<f64>, residual_norm: f64) -> Self {
        Self {
            iteration,
            x,
            residual_norm,
            cov_trace: None,
            direction: None,
            step: None,
            residual: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolverTrace {
    pub solver: String,
    pub steps: Vec<TraceStep>,
    /// Set when the solver stopped early because the residual (or the next
    /// direction) vanished; holds the number of completed iterations.
    pub converged_at: Option<usize>,
}

impl SolverTrace {
    pub fn new(solver: impl Into<String>) -> Self {
        Self {
            solver: solver.into(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, step: TraceStep) {
        self.steps.push(step);
    }

    /// Completed iterations (excluding the initial guess).
    pub fn iterations(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn last(&self) -> Option<&TraceStep> {
        self.steps.last()
    }

    pub fn final_x(&self) -> Option<&[f64]> {
        self.steps.last().map(|s| s.x.as_slice())
    }

    pub fn residual_norms(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.residual_norm).collect()
    }

    /// `iteration,residual_norm,cov_trace` with full round-trip precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,residual_norm,cov_trace")?;
        for s in &self.steps {
            let tr = s.cov_trace.map(|t| format!("{t:e}")).unwrap_or_default();
            writeln!(w, "{},{:e},{}", s.iteration, s.residual_norm, tr)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}
