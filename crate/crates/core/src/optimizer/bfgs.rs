use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{l2, Objective, OptReport, RunStatus, TracePoint};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BfgsConfig {
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_evals: usize,
    /// Stop once the target fidelity reaches this value. Checked every
    /// [`FIDELITY_CHECK_INTERVAL`] iterations.
    pub target_fidelity: Option<f64>,
}

pub const FIDELITY_CHECK_INTERVAL: usize = 10;

impl Default for BfgsConfig {
    fn default() -> Self {
        Self { grad_tol: 1e-5, max_iter: 5000, c1: 1e-4, c2: 0.9, max_line_evals: 40, target_fidelity: None }
    }
}

/// Outcome of [`minimize_bfgs`] on a plain function.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: RunStatus,
    pub trace: Vec<TracePoint>,
}

struct Probe {
    alpha: f64,
    value: f64,
    slope: f64,
    x: DVector<f64>,
    grad: DVector<f64>,
}

struct LineSearch<'a, F> {
    f: &'a mut F,
    x: &'a DVector<f64>,
    d: &'a DVector<f64>,
    f0: f64,
    slope0: f64,
    cfg: &'a BfgsConfig,
    evals: usize,
}

impl<F> LineSearch<'_, F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    /// Evaluation errors (e.g. an overflowing trial point) count as an
    /// infinitely bad probe so the search backs off.
    fn probe(&mut self, alpha: f64) -> Probe {
        self.evals += 1;
        let x = self.x + self.d * alpha;
        match (self.f)(x.as_slice()) {
            Ok((value, g)) if value.is_finite() => {
                let grad = DVector::from_vec(g);
                let slope = grad.dot(self.d);
                Probe { alpha, value, slope, x, grad }
            }
            _ => Probe { alpha, value: f64::INFINITY, slope: f64::NAN, x, grad: DVector::zeros(0) },
        }
    }

    fn armijo(&self, p: &Probe) -> bool {
        p.value <= self.f0 + self.cfg.c1 * p.alpha * self.slope0
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.slope.abs() <= -self.cfg.c2 * self.slope0
    }

    fn budget_left(&self) -> bool {
        self.evals < self.cfg.max_line_evals
    }

    /// Strong-Wolfe search; falls back to the best Armijo point seen.
    fn run(&mut self, alpha0: f64) -> Option<Probe> {
        let mut prev: Option<Probe> = None;
        let mut alpha = alpha0;
        while self.budget_left() {
            let p = self.probe(alpha);
            let worse_than_prev = prev.as_ref().is_some_and(|q| p.value >= q.value);
            if !self.armijo(&p) || worse_than_prev || !p.slope.is_finite() {
                let lo = prev.unwrap_or(Probe {
                    alpha: 0.0,
                    value: self.f0,
                    slope: self.slope0,
                    x: self.x.clone(),
                    grad: DVector::zeros(0),
                });
                return self.zoom(lo, p);
            }
            if self.curvature(&p) {
                return Some(p);
            }
            if p.slope >= 0.0 {
                let hi = prev.unwrap_or(Probe {
                    alpha: 0.0,
                    value: self.f0,
                    slope: self.slope0,
                    x: self.x.clone(),
                    grad: DVector::zeros(0),
                });
                return self.zoom(p, hi);
            }
            alpha *= 2.0;
            prev = Some(p);
        }
        prev.filter(|p| self.armijo(p))
    }

    fn zoom(&mut self, mut lo: Probe, mut hi: Probe) -> Option<Probe> {
        while self.budget_left() {
            let alpha = interpolate(&lo, &hi);
            let p = self.probe(alpha);
            if !self.armijo(&p) || p.value >= lo.value || !p.slope.is_finite() {
                hi = p;
            } else {
                if self.curvature(&p) {
                    return Some(p);
                }
                if p.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = std::mem::replace(&mut lo, p);
                } else {
                    lo = p;
                }
            }
            if (hi.alpha - lo.alpha).abs() < 1e-14 * lo.alpha.abs().max(1e-14) {
                break;
            }
        }
        // Armijo fallback: accept the best sufficient-decrease point.
        (lo.alpha > 0.0 && lo.grad.len() > 0).then_some(lo)
    }
}

/// Safeguarded cubic interpolation inside `[lo, hi]`, bisection otherwise.
fn interpolate(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let width = b - a;
    let bisect = a + 0.5 * width;
    if !hi.value.is_finite() || !hi.slope.is_finite() {
        return a + 0.25 * width;
    }
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if disc < 0.0 {
        return bisect;
    }
    let d2 = width.signum() * disc.sqrt();
    let t = b - width * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    let (min, max) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * width.abs();
    if t.is_finite() && t > min + margin && t < max - margin {
        t
    } else {
        bisect
    }
}

/// Quasi-Newton minimisation with an inverse-Hessian BFGS update and a
/// strong-Wolfe line search.
pub fn minimize_bfgs<F>(f: F, x0: &[f64], cfg: &BfgsConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    minimize_bfgs_until(f, x0, cfg, |_| Ok(false))
}

/// [`minimize_bfgs`] that also stops with [`RunStatus::TargetReached`] when
/// `done(x)` returns true. `done` runs every [`FIDELITY_CHECK_INTERVAL`]
/// iterations.
pub fn minimize_bfgs_until<F, D>(mut f: F, x0: &[f64], cfg: &BfgsConfig, mut done: D) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    D: FnMut(&[f64]) -> Result<bool>,
{
    let dim = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut value, g) = f(x0)?;
    let mut grad = DVector::from_vec(g);
    let mut evaluations = 1;
    let mut h = DMatrix::<f64>::identity(dim, dim);
    let mut first = true;
    let mut trace = vec![TracePoint { iteration: 0, energy: value, gradient_norm: grad.norm() }];
    let mut status = RunStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        if grad.norm() < cfg.grad_tol {
            status = RunStatus::Converged;
            break;
        }
        let mut d = -(&h * &grad);
        let mut slope = d.dot(&grad);
        if !(slope < 0.0) {
            log::debug!("BFGS direction is not a descent direction; resetting curvature");
            h = DMatrix::identity(dim, dim);
            first = true;
            d = -grad.clone();
            slope = d.dot(&grad);
        }
        let alpha0 = if first { (1.0 / grad.norm()).min(1.0) } else { 1.0 };
        let mut search = LineSearch { f: &mut f, x: &x, d: &d, f0: value, slope0: slope, cfg, evals: 0 };
        let accepted = search.run(alpha0);
        evaluations += search.evals;
        let Some(p) = accepted else {
            status = RunStatus::LineSearchFailure;
            break;
        };
        iterations += 1;

        let s = &p.x - &x;
        let y = &p.grad - &grad;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if first {
                h *= sy / y.dot(&y);
                first = false;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
        }
        x = p.x;
        value = p.value;
        grad = p.grad;
        trace.push(TracePoint { iteration: iterations, energy: value, gradient_norm: grad.norm() });
        if iterations % FIDELITY_CHECK_INTERVAL == 0 && done(x.as_slice())? {
            status = RunStatus::TargetReached;
            break;
        }
    }
    if status == RunStatus::MaxIterations && grad.norm() < cfg.grad_tol {
        status = RunStatus::Converged;
    }
    Ok(Minimum {
        x: x.as_slice().to_vec(),
        value,
        gradient_norm: l2(grad.as_slice()),
        iterations,
        evaluations,
        status,
        trace,
    })
}

/// BFGS on the final-energy objective.
pub fn optimize_bfgs(initial: &[f64], objective: &Objective, cfg: &BfgsConfig, seed: u64) -> Result<OptReport> {
    let done = |p: &[f64]| match cfg.target_fidelity {
        Some(target) => Ok(objective.fidelity(p)? >= target),
        None => Ok(false),
    };
    let min = minimize_bfgs_until(|p| objective.energy_and_gradient(p), initial, cfg, done)?;
    let final_fidelity = objective.fidelity(&min.x)?;
    Ok(OptReport {
        driver: "bfgs".into(),
        mode: objective.mode(),
        seed,
        final_parameters: min.x,
        final_energy: min.value,
        final_fidelity,
        iterations: min.iterations,
        function_evaluations: min.evaluations,
        gradient_norm: min.gradient_norm,
        converged: min.status == RunStatus::Converged,
        status: min.status,
        trace: min.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(a: Vec<f64>, m: DMatrix<f64>) -> impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)> {
        move |x| {
            let r = DVector::from_column_slice(x) - DVector::from_column_slice(&a);
            let mr = &m * &r;
            Ok((r.dot(&mr), (mr * 2.0).as_slice().to_vec()))
        }
    }

    fn spd5() -> DMatrix<f64> {
        let b = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.3 + if i == j { 1.0 } else { 0.0 });
        &b * b.transpose() + DMatrix::identity(5, 5)
    }

    #[test]
    fn quadratic_minimum_within_ten_iterations() {
        let a = vec![1.0, -2.0, 0.5, 3.0, -1.0];
        let min = minimize_bfgs(quadratic(a.clone(), spd5()), &[0.0; 5], &BfgsConfig::default()).unwrap();
        assert_eq!(min.status, RunStatus::Converged);
        assert!(min.iterations <= 10, "{} iterations", min.iterations);
        for (x, a) in min.x.iter().zip(&a) {
            assert!((x - a).abs() < 1e-6);
        }
    }

    #[test]
    fn stop_hook_ends_the_run_early() {
        let rosen = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            Ok((v, vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]))
        };
        let mut calls = 0;
        let min = minimize_bfgs_until(rosen, &[-1.2, 1.0], &BfgsConfig::default(), |_| {
            calls += 1;
            Ok(true)
        })
        .unwrap();
        assert_eq!(min.status, RunStatus::TargetReached);
        assert_eq!((min.iterations, calls), (FIDELITY_CHECK_INTERVAL, 1));
    }

    #[test]
    fn accepted_steps_never_increase_the_value() {
        let rosen = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((v, g))
        };
        let min = minimize_bfgs(rosen, &[-1.2, 1.0], &BfgsConfig::default()).unwrap();
        assert_eq!(min.status, RunStatus::Converged);
        for w in min.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
        assert!((min.x[0] - 1.0).abs() < 1e-5 && (min.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn unbounded_below_reports_line_search_failure_or_budget() {
        let linear = |x: &[f64]| -> Result<(f64, Vec<f64>)> { Ok((-x[0], vec![-1.0])) };
        let cfg = BfgsConfig { max_iter: 20, ..BfgsConfig::default() };
        let min = minimize_bfgs(linear, &[0.0], &cfg).unwrap();
        assert_ne!(min.status, RunStatus::Converged);
    }
}
