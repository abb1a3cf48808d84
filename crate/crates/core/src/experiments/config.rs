use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::io::{read_json, ModelConfig};
use crate::optimizer::{BfgsConfig, Driver};
use crate::qaoa::TrotterBudget;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    Mte,
    LaBaseline,
    QaoaTranslate,
    QaoaOptimize,
    ConstLambda,
    Sweep,
    Decompose,
}

/// Everything one run needs. Every field has a default, so a config file
/// only lists what it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelConfig,
    /// Base seed; restart `k` uses `seed + k`.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub plots: bool,
    pub mte: MteConfig,
    pub ramp: RampConfig,
    pub qaoa: QaoaConfig,
    pub scan: ScanConfig,
    pub sweep: SweepConfig,
    pub decompose: DecomposeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::default(),
            model: ModelConfig::default(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            plots: true,
            mte: MteConfig::default(),
            ramp: RampConfig::default(),
            qaoa: QaoaConfig::default(),
            scan: ScanConfig::default(),
            sweep: SweepConfig::default(),
            decompose: DecomposeConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.mte.steps == 0 {
            return bad("mte.steps must be at least 1");
        }
        if self.mte.restarts == 0 {
            return bad("mte.restarts must be at least 1");
        }
        if !(self.mte.b_max > self.model.b_target && self.model.b_target > 0.0) {
            return bad("need mte.b_max > model.b_target > 0");
        }
        if !(self.ramp.rho > 0.0 && self.ramp.dt > 0.0) || self.ramp.gap_points < 2 {
            return bad("ramp needs rho > 0, dt > 0 and at least two gap points");
        }
        if self.scan.lambdas.is_empty() || self.scan.steps.is_empty() {
            return bad("scan grids must be non-empty");
        }
        if self.scan.steps.iter().any(|&n| n < 2) {
            return bad("scan step counts must be at least 2");
        }
        if self.sweep.steps.is_empty() {
            return bad("sweep.steps must be non-empty");
        }
        if self.decompose.states == 0 {
            return bad("decompose.states must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MteConfig {
    /// Steps before pruning.
    pub steps: usize,
    /// Initial field; the schedule ends at the model's target field.
    pub b_max: f64,
    pub restarts: usize,
    pub prune_threshold: f64,
    pub driver: Driver,
    /// Run restarts one at a time and stop at the first reaching this
    /// fidelity.
    pub stop_at_fidelity: Option<f64>,
    pub krylov_tol: f64,
}

impl Default for MteConfig {
    fn default() -> Self {
        Self {
            steps: 50,
            b_max: 20.0,
            restarts: 10,
            prune_threshold: crate::schedule::DEFAULT_PRUNE_THRESHOLD,
            driver: Driver::Bfgs(BfgsConfig::default()),
            stop_at_fidelity: None,
            krylov_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RampConfig {
    pub rho: f64,
    pub dt: f64,
    /// Log-spaced fields in the gap profile.
    pub gap_points: usize,
    /// Also evolve a linear ramp with the same number of steps.
    pub linear_comparator: bool,
    /// Approximate number of rows in the strided fidelity traces.
    pub trace_points: usize,
}

impl Default for RampConfig {
    fn default() -> Self {
        Self { rho: 10.0, dt: 0.01, gap_points: 200, linear_comparator: true, trace_points: 300 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QaoaConfig {
    pub budget: TrotterBudget,
    /// MTE schedule to translate (JSON or CSV). Without it an MTE
    /// optimisation runs first.
    pub schedule: Option<PathBuf>,
    /// Re-optimise the translated angles. `qaoa-optimize` always does.
    pub reoptimize: bool,
    pub driver: Driver,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self { budget: TrotterBudget::default(), schedule: None, reoptimize: false, driver: Driver::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub lambdas: Vec<f64>,
    pub steps: Vec<usize>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            lambdas: (1..=40).map(|k| 0.05 * k as f64).collect(),
            steps: (1..=15).map(|k| 10 * k).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub steps: Vec<usize>,
    /// Also translate and re-optimise each best MTE schedule as QAOA.
    pub qaoa: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { steps: vec![5, 10, 20, 30, 40, 60, 80, 100], qaoa: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    /// Instantaneous eigenstates tracked, ground state included.
    pub states: usize,
    /// MTE schedule to decompose. Without it an MTE optimisation with
    /// `steps` steps runs first.
    pub schedule: Option<PathBuf>,
    pub steps: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self { states: 11, schedule: None, steps: 80 }
    }
}
