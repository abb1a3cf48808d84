//! Field and scale schedules: local-adiabatic ramps, initial guesses for the
//! optimiser, pruning of negligible steps and the normalised-time axis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::propagator::Schedule;
use crate::spinmodel::GapProfile;
use crate::{Error, Result};

/// Default threshold below which `|λ_j|` is treated as a removable step.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-2;

/// A field ramp `B(t)` that holds `ρ = Δ²(B) / |dB/dt|` constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalAdiabaticRamp {
    pub rho: f64,
    pub b_max: f64,
    pub b_min: f64,
    pub dt: f64,
    /// `t_j = j dt` for `j = 0..=N`.
    pub times: Vec<f64>,
    /// `B(t_j)`, starting at `b_max` and ending at `b_min`.
    pub fields: Vec<f64>,
    /// Value of the time integral at `b_min`.
    pub t_final: f64,
    /// Accumulated time `t(B)` on the profile grid, as `(B, t)` pairs.
    pub time_of_field: Vec<(f64, f64)>,
}

impl LocalAdiabaticRamp {
    /// Number of evolution steps `N`.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// The scale-one evolution: `λ_j = dt`, `B_j = B(j dt)` for `j = 1..=N`.
    pub fn schedule(&self) -> Schedule {
        let n = self.steps();
        Schedule::new(vec![self.dt; n], self.fields[1..].to_vec()).expect("ramp fields are finite")
    }

    /// `B` at normalised time `s = t / t_f`, linearly interpolated.
    pub fn field_at_normalized(&self, s: f64) -> f64 {
        let t = s.clamp(0.0, 1.0) * self.t_final;
        interpolate(&self.time_of_field.iter().map(|&(b, t)| (t, b)).collect::<Vec<_>>(), t)
    }
}

/// Integrates `t(B) = ρ ∫_B^{B_max} dB' / Δ²(B')` with the trapezoidal rule on
/// the profile grid and inverts it onto `t_j = j dt`.
pub fn build_local_adiabatic_ramp(
    profile: &GapProfile,
    rho: f64,
    b_max: f64,
    b_min: f64,
    dt: f64,
) -> Result<LocalAdiabaticRamp> {
    if !(rho > 0.0) {
        return Err(Error::invalid("adiabaticity parameter must be positive"));
    }
    if !(b_max > b_min && b_min > 0.0) {
        return Err(Error::invalid("need b_max > b_min > 0"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let samples = &profile.samples;
    let first = samples.first().expect("validated profile");
    let last = samples.last().expect("validated profile");
    let slack = 1e-9 * b_max;
    if first.field < b_max - slack || last.field > b_min + slack {
        return Err(Error::invalid(format!(
            "gap profile covers [{}, {}], ramp needs [{b_min}, {b_max}]",
            last.field, first.field
        )));
    }

    // Profile restricted to [b_min, b_max], with interpolated end points.
    let by_field: Vec<(f64, f64)> = samples.iter().rev().map(|s| (s.field, s.gap)).collect();
    let mut points: Vec<(f64, f64)> = vec![(b_max, interpolate(&by_field, b_max))];
    points.extend(
        samples
            .iter()
            .filter(|s| s.field < b_max && s.field > b_min)
            .map(|s| (s.field, s.gap)),
    );
    points.push((b_min, interpolate(&by_field, b_min)));

    let mut time_of_field = Vec::with_capacity(points.len());
    let mut t = 0.0;
    time_of_field.push((b_max, 0.0));
    for w in points.windows(2) {
        let ((b0, g0), (b1, g1)) = (w[0], w[1]);
        let increment = rho * (b0 - b1) * 0.5 * (g0.powi(-2) + g1.powi(-2));
        if !(increment > 0.0) {
            return Err(Error::Integrity { field: b1 });
        }
        t += increment;
        time_of_field.push((b1, t));
    }
    let t_final = t;

    let steps = (t_final / dt).round() as usize;
    let t_of_b: Vec<(f64, f64)> = time_of_field.iter().map(|&(b, t)| (t, b)).collect();
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    let mut fields: Vec<f64> = times.iter().map(|&tj| interpolate(&t_of_b, tj)).collect();
    fields[0] = b_max;
    if let Some(f) = fields.last_mut() {
        *f = b_min;
    }
    Ok(LocalAdiabaticRamp { rho, b_max, b_min, dt, times, fields, t_final, time_of_field })
}

/// Linear ramp from `b_max` to `b_min` over `steps` steps of scale `dt`:
/// `B_j = b_max - (b_max - b_min) j / N`.
pub fn linear_ramp(steps: usize, b_max: f64, b_min: f64, dt: f64) -> Result<Schedule> {
    if steps == 0 {
        return Err(Error::invalid("linear ramp needs at least one step"));
    }
    let fields = (1..=steps)
        .map(|j| b_max - (b_max - b_min) * j as f64 / steps as f64)
        .collect();
    Schedule::new(vec![dt; steps], fields)
}

/// Geometric decay `B_j = b_max (b_min / b_max)^{(j-1)/(N-1)}`, endpoints exact.
pub fn exponential_field_guess(steps: usize, b_max: f64, b_min: f64) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::invalid("exponential field guess needs at least two steps"));
    }
    if !(b_max > b_min && b_min > 0.0) {
        return Err(Error::invalid("need b_max > b_min > 0"));
    }
    let ratio = b_min / b_max;
    let mut fields: Vec<f64> =
        (0..steps).map(|j| b_max * ratio.powf(j as f64 / (steps - 1) as f64)).collect();
    fields[0] = b_max;
    fields[steps - 1] = b_min;
    Ok(fields)
}

/// `steps` independent draws from U[1, 2] using ChaCha8 seeded with `seed`.
pub fn random_lambda_guess(steps: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps).map(|_| rng.random_range(1.0..=2.0)).collect()
}

/// The standard optimiser starting point: random `λ` and geometric `B`.
pub fn initial_guess(steps: usize, b_max: f64, b_min: f64, seed: u64) -> Result<Schedule> {
    let fields = if steps == 1 { vec![b_min] } else { exponential_field_guess(steps, b_max, b_min)? };
    Schedule::new(random_lambda_guess(steps, seed), fields)
}

/// Drops every step with `|λ_j| < threshold`, keeping the survivors in order.
pub fn prune_schedule(schedule: &Schedule, threshold: f64) -> Result<Schedule> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid("prune threshold must be non-negative"));
    }
    let (lambdas, fields): (Vec<f64>, Vec<f64>) =
        schedule.steps().filter(|(l, _)| l.abs() >= threshold).unzip();
    if lambdas.is_empty() && !schedule.is_empty() {
        return Err(Error::EmptySchedule { threshold });
    }
    Schedule::new(lambdas, fields)
}

/// `j / N` for `j = 1..=N`.
pub fn normalized_time(steps: usize) -> Vec<f64> {
    (1..=steps).map(|j| j as f64 / steps as f64).collect()
}

/// Piecewise-linear interpolation on points sorted by increasing abscissa,
/// clamped at the ends.
pub(crate) fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    let n = points.len();
    if x <= points[0].0 {
        return points[0].1;
    }
    if x >= points[n - 1].0 {
        return points[n - 1].1;
    }
    let hi = points.partition_point(|p| p.0 < x);
    let (x0, y0) = points[hi - 1];
    let (x1, y1) = points[hi];
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinmodel::{ground_sector, GapSample};

    fn flat_profile(b_max: f64, b_min: f64, points: usize) -> GapProfile {
        let samples = (0..points)
            .map(|k| GapSample {
                field: b_max - (b_max - b_min) * k as f64 / (points - 1) as f64,
                gap: 1.0,
            })
            .collect();
        GapProfile::new(samples, ground_sector(4)).unwrap()
    }

    #[test]
    fn constant_gap_gives_linear_ramp() {
        let ramp = build_local_adiabatic_ramp(&flat_profile(5.0, 1.0, 9), 1.0, 5.0, 1.0, 0.1).unwrap();
        assert!((ramp.t_final - 4.0).abs() < 1e-12);
        assert_eq!(ramp.steps(), 40);
        for (t, b) in ramp.times.iter().zip(&ramp.fields) {
            assert!((b - (5.0 - t)).abs() < 1e-9);
        }
    }

    #[test]
    fn rho_scales_total_time() {
        let p = flat_profile(3.0, 0.5, 17);
        let a = build_local_adiabatic_ramp(&p, 2.0, 3.0, 0.5, 0.01).unwrap();
        let b = build_local_adiabatic_ramp(&p, 1.0, 3.0, 0.5, 0.01).unwrap();
        assert!((a.t_final - 2.0 * b.t_final).abs() < 1e-12);
    }

    #[test]
    fn ramp_rejects_uncovered_range() {
        let p = flat_profile(3.0, 0.5, 5);
        assert!(build_local_adiabatic_ramp(&p, 1.0, 4.0, 0.5, 0.01).is_err());
        assert!(build_local_adiabatic_ramp(&p, 0.0, 3.0, 0.5, 0.01).is_err());
    }

    #[test]
    fn exponential_guess_examples() {
        assert_eq!(exponential_field_guess(2, 20.0, 0.1).unwrap(), vec![20.0, 0.1]);
        let g = exponential_field_guess(3, 16.0, 1.0).unwrap();
        assert!((g[1] - 4.0).abs() < 1e-12 && g[0] == 16.0 && g[2] == 1.0);
        let g = exponential_field_guess(100, 20.0, 0.1).unwrap();
        let r0 = g[1] / g[0];
        for w in g.windows(2) {
            assert!(w[1] < w[0]);
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
        assert!(exponential_field_guess(1, 20.0, 0.1).is_err());
    }

    #[test]
    fn random_guess_contract() {
        let a = random_lambda_guess(1000, 42);
        assert!(a.iter().all(|&x| (1.0..=2.0).contains(&x)));
        assert_eq!(a, random_lambda_guess(1000, 42));
        assert_ne!(a, random_lambda_guess(1000, 43));
        let big = random_lambda_guess(10_000, 9);
        let mean = big.iter().sum::<f64>() / big.len() as f64;
        assert!((mean - 1.5).abs() < 0.02);
    }

    #[test]
    fn pruning() {
        let s = Schedule::new(vec![1.2, 0.005, 0.9], vec![3.0, 2.0, 1.0]).unwrap();
        let p = prune_schedule(&s, 0.01).unwrap();
        assert_eq!(p.lambdas(), &[1.2, 0.9]);
        assert_eq!(p.fields(), &[3.0, 1.0]);
        assert_eq!(prune_schedule(&s, 0.0).unwrap(), s);
        assert_eq!(prune_schedule(&p, 0.01).unwrap(), p);
        let neg = Schedule::new(vec![-0.5, 0.001], vec![1.0, 1.0]).unwrap();
        assert_eq!(prune_schedule(&neg, 0.01).unwrap().lambdas(), &[-0.5]);
        let tiny = Schedule::new(vec![0.001, -0.002], vec![1.0, 1.0]).unwrap();
        assert!(matches!(prune_schedule(&tiny, 0.01), Err(Error::EmptySchedule { .. })));
    }

    #[test]
    fn normalized_time_examples() {
        assert_eq!(normalized_time(4), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(normalized_time(1), vec![1.0]);
        for n in [3, 7, 46, 2936] {
            assert_eq!(*normalized_time(n).last().unwrap(), 1.0);
        }
    }

    #[test]
    fn linear_ramp_endpoints() {
        let s = linear_ramp(4, 20.0, 0.1, 0.01).unwrap();
        assert_eq!(s.len(), 4);
        assert!((s.fields()[3] - 0.1).abs() < 1e-12);
        assert!(s.lambdas().iter().all(|&l| l == 0.01));
    }
}
