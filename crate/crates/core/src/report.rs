//! Per-solve diagnostics.

use serde::{Deserialize, Serialize};

/// Wall-clock seconds spent in each phase of a solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Local eigenproblems.
    pub eigensolve_s: f64,
    /// Local and coarse factorizations.
    pub factorization_s: f64,
    pub solve_s: f64,
}

/// Minimum, maximum and total number of eigenvectors kept per subdomain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlocSummary {
    pub min: usize,
    pub max: usize,
    pub total: usize,
}

impl NlocSummary {
    pub fn from_counts(counts: &[usize]) -> Self {
        Self {
            min: counts.iter().copied().min().unwrap_or(0),
            max: counts.iter().copied().max().unwrap_or(0),
            total: counts.iter().sum(),
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Residual norms; entry 0 is the initial residual.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Set when the Krylov space became invariant, so the iterate is exact.
    pub exact_solution: bool,
    /// Energy-norm errors per iterate, when a reference solution was supplied.
    pub error_history: Vec<f64>,
    pub coarse_dim: Option<usize>,
    pub n_loc: Option<NlocSummary>,
    /// Measured relative error of the one-shot approximation.
    pub lambda_estimate: Option<f64>,
    pub timings: Timings,
}

impl SolveReport {
    pub fn relative_residual(&self) -> f64 {
        match (self.residual_history.first(), self.residual_history.last()) {
            (Some(&r0), Some(&r)) if r0 > 0.0 => r / r0,
            _ => 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
