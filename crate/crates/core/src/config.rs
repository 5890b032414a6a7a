//! Solver knobs shared by the optimization stages.

use serde::{Deserialize, Serialize};

use crate::conic::SolverOptions;

/// Penalty-escalation schedule of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySchedule {
    /// Initial penalty as a fraction of the stage's natural objective scale.
    pub initial_fraction: f64,
    /// Multiplicative growth per outer iteration.
    pub growth: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Relative objective change that ends an inner loop.
    pub tol_inner: f64,
    /// Largest admissible `x(1−x)` / `|1−|v||` at termination.
    pub tol_binary: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        Self {
            initial_fraction: 1e-3,
            growth: 5.0,
            max_outer: 12,
            max_inner: 30,
            tol_inner: 1e-3,
            tol_binary: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub penalty: PenaltySchedule,
    pub conic: SolverOptions,
    /// Ceiling on the normalized SNR floor.
    pub eta_cap: f64,
    /// Relative slack granted to SNR checks on exact binaries.
    pub audit_tolerance: f64,
    /// Slack tolerated when checking that penalized objectives never decrease.
    pub monotone_slack: f64,
    /// Phase refinement passes in the terminal stage.
    pub polish_iterations: usize,
    /// Run the removal search after terminal rounding and repair.
    pub descent: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            penalty: PenaltySchedule::default(),
            conic: SolverOptions::default(),
            eta_cap: 1e6,
            audit_tolerance: 1e-6,
            monotone_slack: 1e-7,
            polish_iterations: 8,
            descent: true,
        }
    }
}
