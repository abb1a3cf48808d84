//! Final-energy minimisation over MTE or QAOA parameters.

mod adam;
mod adjoint;
mod bfgs;
mod dense;
mod objective;
mod restart;

pub use adam::{optimize_adam, AdamConfig};
pub use bfgs::{minimize_bfgs, minimize_bfgs_until, optimize_bfgs, BfgsConfig, Minimum, FIDELITY_CHECK_INTERVAL};
pub use objective::{energy, gradient, Mode, Objective, DEFAULT_DENSE_LIMIT};
pub use restart::{multi_restart, run_restarts, BoxplotStats, Driver, RestartPlan, RestartRuns, RestartSummary};

use serde::{Deserialize, Serialize};

/// How a single optimisation run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// Gradient norm fell below the tolerance.
    Converged,
    /// Iteration budget exhausted; the result is still usable.
    MaxIterations,
    /// Stopped early at the requested fidelity.
    TargetReached,
    /// No acceptable step along a descent direction. Such runs are
    /// reported but left out of restart statistics.
    LineSearchFailure,
}

/// One entry per iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub energy: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptReport {
    pub driver: String,
    pub mode: Mode,
    pub seed: u64,
    pub final_parameters: Vec<f64>,
    pub final_energy: f64,
    pub final_fidelity: f64,
    pub iterations: usize,
    pub function_evaluations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    pub status: RunStatus,
    pub trace: Vec<TracePoint>,
}

impl OptReport {
    /// Whether the run counts towards restart statistics.
    pub fn is_failed(&self) -> bool {
        self.status == RunStatus::LineSearchFailure
    }
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
