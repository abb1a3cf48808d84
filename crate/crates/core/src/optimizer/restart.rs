use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{optimize_adam, optimize_bfgs, AdamConfig, BfgsConfig, Objective, OptReport};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Driver {
    Bfgs(BfgsConfig),
    Adam(AdamConfig),
}

impl Default for Driver {
    fn default() -> Self {
        Driver::Bfgs(BfgsConfig::default())
    }
}

impl Driver {
    pub fn run(&self, initial: &[f64], objective: &Objective, seed: u64) -> Result<OptReport> {
        match self {
            Driver::Bfgs(cfg) => optimize_bfgs(initial, objective, cfg, seed),
            Driver::Adam(cfg) => optimize_adam(initial, objective, cfg, seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartPlan {
    pub runs: usize,
    /// Run `k` uses seed `base_seed + k`.
    pub base_seed: u64,
    /// When set, runs go one after another and stop at the first successful
    /// run whose fidelity reaches this value.
    pub stop_at_fidelity: Option<f64>,
}

impl RestartPlan {
    pub fn new(runs: usize, base_seed: u64) -> Self {
        Self { runs, base_seed, stop_at_fidelity: None }
    }
}

/// Quartiles (linear interpolation between order statistics) and Tukey
/// whiskers at 1.5 IQR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

impl BoxplotStats {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        };
        let (q1, median, q3) = (q(0.25), q(0.5), q(0.75));
        let iqr = q3 - q1;
        let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = sorted.iter().copied().filter(|x| (fence_lo..=fence_hi).contains(x));
        let whisker_low = inside.clone().fold(f64::INFINITY, f64::min);
        let whisker_high = inside.fold(f64::NEG_INFINITY, f64::max);
        let outliers = sorted.iter().copied().filter(|x| !(fence_lo..=fence_hi).contains(x)).collect();
        Some(Self { count: sorted.len(), median, q1, q3, whisker_low, whisker_high, outliers })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartSummary {
    /// Every completed run in seed order, failed line searches included.
    pub reports: Vec<OptReport>,
    /// Runs that returned an error, as `(seed, message)`.
    pub errors: Vec<(u64, String)>,
    /// Fidelity statistics over the successful runs.
    pub fidelity: BoxplotStats,
}

impl RestartSummary {
    pub fn successful(&self) -> impl Iterator<Item = &OptReport> {
        self.reports.iter().filter(|r| !r.is_failed())
    }

    /// Highest-fidelity successful run.
    pub fn best(&self) -> &OptReport {
        self.successful()
            .max_by(|a, b| a.final_fidelity.total_cmp(&b.final_fidelity))
            .expect("summary holds at least one successful run")
    }
}

impl RestartSummary {
    /// Statistics over the successful runs; an error when there are none.
    pub fn from_runs(reports: Vec<OptReport>, errors: Vec<(u64, String)>) -> Result<Self> {
        let fidelities: Vec<f64> = reports.iter().filter(|r| !r.is_failed()).map(|r| r.final_fidelity).collect();
        let fidelity =
            BoxplotStats::from_samples(&fidelities).ok_or(Error::AllRunsFailed(reports.len() + errors.len()))?;
        Ok(Self { reports, errors, fidelity })
    }
}

/// Completed runs in seed order and the runs that errored, as
/// `(seed, message)`.
pub type RestartRuns = (Vec<OptReport>, Vec<(u64, String)>);

/// Runs the optimisations of [`multi_restart`] without summarising them.
pub fn run_restarts<G>(objective: &Objective, guess: G, plan: &RestartPlan, driver: &Driver) -> Result<RestartRuns>
where
    G: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    if plan.runs == 0 {
        return Err(Error::invalid("restart count must be at least 1"));
    }
    let one = |seed: u64| -> Result<OptReport> {
        let x0 = guess(seed)?;
        let report = driver.run(&x0, objective, seed)?;
        log::info!(
            "seed {seed}: fidelity {:.6}, energy {:.8}, {} iterations, {:?}",
            report.final_fidelity,
            report.final_energy,
            report.iterations,
            report.status
        );
        Ok(report)
    };
    let seeds: Vec<u64> = (0..plan.runs as u64).map(|k| plan.base_seed + k).collect();
    let outcomes: Vec<(u64, Result<OptReport>)> = match plan.stop_at_fidelity {
        None => seeds.par_iter().map(|&s| (s, one(s))).collect(),
        Some(threshold) => {
            let mut out = Vec::new();
            for &s in &seeds {
                let r = one(s);
                let done = r.as_ref().is_ok_and(|r| !r.is_failed() && r.final_fidelity >= threshold);
                out.push((s, r));
                if done {
                    break;
                }
            }
            out
        }
    };

    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) => {
                log::warn!("seed {seed}: {e}");
                errors.push((seed, e.to_string()));
            }
        }
    }
    Ok((reports, errors))
}

/// Independent optimisations from `guess(seed)` for `plan.runs` seeds.
pub fn multi_restart<G>(objective: &Objective, guess: G, plan: &RestartPlan, driver: &Driver) -> Result<RestartSummary>
where
    G: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let (reports, errors) = run_restarts(objective, guess, plan, driver)?;
    RestartSummary::from_runs(reports, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_quartiles() {
        let s = BoxplotStats::from_samples(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        assert_eq!((s.whisker_low, s.whisker_high), (1.0, 5.0));
        assert!(s.outliers.is_empty());
    }

    #[test]
    fn single_sample_is_degenerate() {
        let s = BoxplotStats::from_samples(&[0.7]).unwrap();
        assert_eq!((s.q1, s.median, s.q3, s.whisker_low, s.whisker_high), (0.7, 0.7, 0.7, 0.7, 0.7));
    }

    #[test]
    fn far_points_are_outliers() {
        let s = BoxplotStats::from_samples(&[1.0, 1.1, 1.2, 1.3, 1.4, 9.0]).unwrap();
        assert_eq!(s.outliers, vec![9.0]);
        assert_eq!(s.whisker_high, 1.4);
    }

    #[test]
    fn empty_has_no_stats() {
        assert!(BoxplotStats::from_samples(&[]).is_none());
    }
}
