use serde::{Deserialize, Serialize};

use super::{l2, Objective, OptReport, RunStatus, TracePoint};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Stop early once the gradient norm drops below this value.
    pub grad_tol: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.01, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, max_iter: 20_000, grad_tol: None }
    }
}

pub(crate) struct AdamRun {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub best_grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: RunStatus,
    pub trace: Vec<TracePoint>,
}

/// Adam on a plain function. The trace records the best value seen so far
/// together with the gradient norm at the current iterate.
pub(crate) fn minimize_adam<F>(mut f: F, x0: &[f64], cfg: &AdamConfig) -> Result<AdamRun>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut m = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let (mut value, mut grad) = f(&x)?;
    let mut best = (x.clone(), value, l2(&grad));
    let mut trace = vec![TracePoint { iteration: 0, energy: value, gradient_norm: best.2 }];
    let mut status = RunStatus::MaxIterations;
    let mut iterations = 0;

    for t in 1..=cfg.max_iter {
        if cfg.grad_tol.is_some_and(|tol| l2(&grad) < tol) {
            status = RunStatus::Converged;
            break;
        }
        let c1 = 1.0 - cfg.beta1.powi(t as i32);
        let c2 = 1.0 - cfg.beta2.powi(t as i32);
        for i in 0..dim {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            x[i] -= cfg.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.epsilon);
        }
        (value, grad) = f(&x)?;
        iterations = t;
        let gnorm = l2(&grad);
        if value < best.1 {
            best = (x.clone(), value, gnorm);
        }
        trace.push(TracePoint { iteration: t, energy: best.1, gradient_norm: gnorm });
    }
    Ok(AdamRun {
        best_x: best.0,
        best_value: best.1,
        best_grad_norm: best.2,
        iterations,
        evaluations: iterations + 1,
        status,
        trace,
    })
}

/// Adam on the final-energy objective, returning the best iterate seen
/// (the starting point included).
pub fn optimize_adam(initial: &[f64], objective: &Objective, cfg: &AdamConfig, seed: u64) -> Result<OptReport> {
    let run = minimize_adam(|p| objective.energy_and_gradient(p), initial, cfg)?;
    let final_fidelity = objective.fidelity(&run.best_x)?;
    Ok(OptReport {
        driver: "adam".into(),
        mode: objective.mode(),
        seed,
        final_parameters: run.best_x,
        final_energy: run.best_value,
        final_fidelity,
        iterations: run.iterations,
        function_evaluations: run.evaluations,
        gradient_norm: run.best_grad_norm,
        converged: run.status == RunStatus::Converged,
        status: run.status,
        trace: run.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let w = [1.0, 3.0, 0.5];
        let a = [0.4, -1.2, 2.0];
        let v = (0..3).map(|i| w[i] * (x[i] - a[i]).powi(2)).sum();
        let g = (0..3).map(|i| 2.0 * w[i] * (x[i] - a[i])).collect();
        Ok((v, g))
    }

    #[test]
    fn convex_quadratic_reaches_minimum() {
        let run = minimize_adam(bowl, &[0.0; 3], &AdamConfig::default()).unwrap();
        assert_eq!(run.iterations, 20_000);
        assert!(run.best_value < 1e-6, "best value {}", run.best_value);
    }

    #[test]
    fn best_seen_is_monotone_and_not_above_last() {
        let cfg = AdamConfig { lr: 0.3, max_iter: 500, ..AdamConfig::default() };
        let run = minimize_adam(bowl, &[5.0, 5.0, 5.0], &cfg).unwrap();
        for w in run.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
        let (last, _) = bowl(&run.best_x).unwrap();
        assert_eq!(last, run.best_value);
    }

    #[test]
    fn zero_iterations_returns_the_start() {
        let cfg = AdamConfig { max_iter: 0, ..AdamConfig::default() };
        let run = minimize_adam(bowl, &[1.0, 1.0, 1.0], &cfg).unwrap();
        assert_eq!(run.best_x, vec![1.0, 1.0, 1.0]);
    }
}
