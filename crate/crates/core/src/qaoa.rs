//! QAOA angle sequences and their construction from MTE schedules.
//!
//! One MTE step `exp(-iλ(H_A + B H_B))` is replaced by the symmetric
//! splitting
//!
//! ```text
//! A(λ/2m) B(λB/m) A(λ/m) B(λB/m) ... A(λ/m) B(λB/m) A(λ/2m)
//! ```
//!
//! (time order, left acts first) with `m` mixer factors. Written as QAOA
//! layers `(γ, β)` this is `(λ/2m, λB/m), (λ/m, λB/m) x (m-1), (λ/2m, 0)`.
//! The trailing half-angle of one step and the leading half-angle of the next
//! are both problem-Hamiltonian phases and merge into one layer, so a
//! translated schedule has `Σ m_j + 1` layers, the last of which has `β = 0`.

use serde::{Deserialize, Serialize};

use crate::optimizer::{Mode, Objective};
use crate::propagator::Schedule;
use crate::{Error, Result};

/// Where a layer came from in the source MTE schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSource {
    /// Zero-based MTE step that contributed this layer's mixer angle.
    pub source_step: usize,
    /// Trotter count used for that step.
    pub trotter_count: usize,
    /// True when the problem angle mixes half-angles from step boundaries.
    pub boundary: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QaoaSchedule {
    gammas: Vec<f64>,
    betas: Vec<f64>,
    /// Empty, or one entry per layer for translated schedules.
    provenance: Vec<LayerSource>,
}

impl QaoaSchedule {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.len() != betas.len() {
            return Err(Error::Shape { expected: gammas.len(), got: betas.len() });
        }
        if gammas.iter().chain(&betas).any(|x| !x.is_finite()) {
            return Err(Error::invalid("QAOA angles must be finite"));
        }
        Ok(Self { gammas, betas, provenance: Vec::new() })
    }

    pub fn with_provenance(mut self, provenance: Vec<LayerSource>) -> Result<Self> {
        if provenance.len() != self.len() {
            return Err(Error::Shape { expected: self.len(), got: provenance.len() });
        }
        self.provenance = provenance;
        Ok(self)
    }

    /// Parameters laid out as `[γ_1..γ_p, β_1..β_p]`.
    pub fn from_params(params: &[f64]) -> Result<Self> {
        if params.len() % 2 != 0 {
            return Err(Error::invalid(format!("QAOA parameter vector has odd length {}", params.len())));
        }
        let p = params.len() / 2;
        Self::new(params[..p].to_vec(), params[p..].to_vec())
    }

    pub fn to_params(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    /// Same angles with provenance kept, e.g. after re-optimisation.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let mut q = Self::from_params(params)?;
        if q.len() == self.len() {
            q.provenance = self.provenance.clone();
        }
        Ok(q)
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn provenance(&self) -> &[LayerSource] {
        &self.provenance
    }

    /// `(γ_j, β_j)` in application order.
    pub fn layers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.gammas.iter().copied().zip(self.betas.iter().copied())
    }
}

/// Unmerged layers for one MTE step with `m` mixer factors.
pub fn trotterize_step(lambda: f64, field: f64, m: usize) -> Result<Vec<(f64, f64)>> {
    if m == 0 {
        return Err(Error::invalid("Trotter count must be at least 1"));
    }
    let mf = m as f64;
    let beta = lambda * field / mf;
    let mut layers = Vec::with_capacity(m + 1);
    layers.push((lambda / (2.0 * mf), beta));
    layers.extend(std::iter::repeat((lambda / mf, beta)).take(m - 1));
    layers.push((lambda / (2.0 * mf), 0.0));
    Ok(layers)
}

/// Second-order Trotter error indicator
/// `max(|γ²β|/24m², |γβ²|/12m²) / (|γ| + |β|)`.
pub fn error_ratio(gamma: f64, beta: f64, m: usize) -> Result<f64> {
    let scale = gamma.abs() + beta.abs();
    if scale == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    if m == 0 {
        return Err(Error::invalid("Trotter count must be at least 1"));
    }
    let m2 = (m * m) as f64;
    let a = (gamma * gamma * beta / (24.0 * m2)).abs();
    let b = (gamma * beta * beta / (12.0 * m2)).abs();
    Ok(a.max(b) / scale)
}

/// `ζ` for MTE step `(λ, B)`, with `γ = λ` and `β = λB`; zero for `λ = 0`.
fn step_ratio(lambda: f64, field: f64, m: usize) -> f64 {
    error_ratio(lambda, lambda * field, m).unwrap_or(0.0)
}

/// Concatenates per-step splittings, merging adjacent boundary phases.
pub fn assemble(schedule: &Schedule, trotter_counts: &[usize]) -> Result<QaoaSchedule> {
    if trotter_counts.len() != schedule.len() {
        return Err(Error::Shape { expected: schedule.len(), got: trotter_counts.len() });
    }
    let mut gammas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut provenance: Vec<LayerSource> = Vec::new();
    for (j, ((lambda, field), &m)) in schedule.steps().zip(trotter_counts).enumerate() {
        let layers = trotterize_step(lambda, field, m)?;
        let last = layers.len() - 1;
        for (k, (g, b)) in layers.into_iter().enumerate() {
            let source = LayerSource { source_step: j, trotter_count: m, boundary: k == 0 || k == last };
            if k == 0 && !gammas.is_empty() {
                // Previous step ended with a lone phase layer: fold it in.
                let prev = gammas.len() - 1;
                gammas[prev] += g;
                betas[prev] = b;
                provenance[prev] = source;
            } else {
                gammas.push(g);
                betas.push(b);
                provenance.push(source);
            }
        }
    }
    QaoaSchedule::new(gammas, betas)?.with_provenance(provenance)
}

/// A translated schedule together with the energy check that sized it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Translation {
    pub qaoa: QaoaSchedule,
    pub trotter_counts: Vec<usize>,
    pub mte_energy: f64,
    pub qaoa_energy: f64,
    pub ground_energy: f64,
    /// `|E_qaoa - E_mte| / |E_mte - E_0|`.
    pub ratio: f64,
    pub budget: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrotterBudget {
    /// Largest allowed `|E_qaoa - E_mte| / |E_mte - E_0|`.
    pub energy_budget: f64,
    pub m_max: usize,
}

impl Default for TrotterBudget {
    fn default() -> Self {
        Self { energy_budget: 0.3, m_max: 512 }
    }
}

fn deviation_ratio(e_qaoa: f64, e_mte: f64, e0: f64) -> f64 {
    let scale = (e_mte - e0).abs().max(f64::MIN_POSITIVE);
    (e_qaoa - e_mte).abs() / scale
}

/// Per-step Trotter counts meeting the energy budget.
///
/// All steps start at `m = 1`; while the translated energy misses the budget
/// the step with the largest error ratio gets one more mixer factor.
pub fn select_trotter_counts(schedule: &Schedule, objective: &Objective, budget: &TrotterBudget) -> Result<Translation> {
    if schedule.is_empty() {
        return Err(Error::invalid("cannot translate an empty schedule"));
    }
    if !(budget.energy_budget > 0.0) || budget.m_max == 0 {
        return Err(Error::invalid("energy budget must be positive and m_max at least 1"));
    }
    let mte_energy = objective.mte_energy(schedule)?;
    let e0 = objective.ground_energy();
    let mut counts = vec![1usize; schedule.len()];
    loop {
        let qaoa = assemble(schedule, &counts)?;
        let qaoa_energy = objective.qaoa_energy(&qaoa)?;
        let ratio = deviation_ratio(qaoa_energy, mte_energy, e0);
        if ratio <= budget.energy_budget {
            return Ok(Translation {
                qaoa,
                trotter_counts: counts,
                mte_energy,
                qaoa_energy,
                ground_energy: e0,
                ratio,
                budget: budget.energy_budget,
            });
        }
        let worst = schedule
            .steps()
            .zip(&counts)
            .enumerate()
            .filter(|(_, (_, &m))| m < budget.m_max)
            .map(|(j, ((l, b), &m))| (j, step_ratio(l, b, m)))
            .filter(|&(_, z)| z > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((j, _)) => counts[j] += 1,
            None => return Err(Error::TrotterBudget { budget: budget.energy_budget, m_max: budget.m_max, ratio }),
        }
    }
}

/// Trotter count for a single step when every step is translated with the
/// counts [`select_trotter_counts`] picks.
pub fn select_m(step: usize, schedule: &Schedule, objective: &Objective, budget: &TrotterBudget) -> Result<usize> {
    if step >= schedule.len() {
        return Err(Error::invalid(format!("step {step} is outside a {}-step schedule", schedule.len())));
    }
    Ok(select_trotter_counts(schedule, objective, budget)?.trotter_counts[step])
}

/// Translates an MTE schedule into QAOA angles without re-optimising.
pub fn translate_schedule(schedule: &Schedule, objective: &Objective, budget: &TrotterBudget) -> Result<Translation> {
    let objective = objective.with_mode(Mode::Qaoa);
    select_trotter_counts(schedule, &objective, budget)
}

/// `β/γ` and `γ` per layer, read as an effective field and scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveField {
    /// `j / p` for each reported layer (one-based `j`).
    pub normalized_time: Vec<f64>,
    pub ratio: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Zero-based indices of layers left out because `|γ| < 1e-12`.
    pub skipped: Vec<usize>,
}

/// Effective field series for every layer except the last.
pub fn bch_effective_field(q: &QaoaSchedule) -> EffectiveField {
    let p = q.len();
    let mut out = EffectiveField { normalized_time: Vec::new(), ratio: Vec::new(), gamma: Vec::new(), skipped: Vec::new() };
    for (j, (g, b)) in q.layers().enumerate().take(p.saturating_sub(1)) {
        if g.abs() < 1e-12 {
            out.skipped.push(j);
            continue;
        }
        out.normalized_time.push((j + 1) as f64 / p as f64);
        out.ratio.push(b / g);
        out.gamma.push(g);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeConvention {
    /// `Σ (|β_j| + |γ_j|)`
    SumAbsBoth,
    /// `Σ |γ_j|`
    SumAbsGamma,
}

pub fn qaoa_total_time(q: &QaoaSchedule, convention: TimeConvention) -> f64 {
    match convention {
        TimeConvention::SumAbsBoth => q.layers().map(|(g, b)| g.abs() + b.abs()).sum(),
        TimeConvention::SumAbsGamma => q.gammas().iter().map(|g| g.abs()).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_m1_is_a_sandwich() {
        let layers = trotterize_step(0.8, 2.0, 1).unwrap();
        assert_eq!(layers, vec![(0.4, 1.6), (0.4, 0.0)]);
        assert!(trotterize_step(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn step_angles_add_up() {
        let layers = trotterize_step(1.5, 2.0, 4).unwrap();
        assert_eq!(layers.len(), 5);
        let g: f64 = layers.iter().map(|l| l.0).sum();
        let b: f64 = layers.iter().map(|l| l.1).sum();
        assert!((g - 1.5).abs() < 1e-15 && (b - 3.0).abs() < 1e-15);
    }

    #[test]
    fn error_ratio_examples() {
        let z = error_ratio(0.1, 0.2, 1).unwrap();
        assert!((z - (0.1f64 * 0.04 / 12.0) / 0.3).abs() < 1e-15);
        assert!((z - 1.111e-3).abs() < 1e-6);
        let z2 = error_ratio(0.1, 0.2, 2).unwrap();
        assert_eq!(z / z2, 4.0);
        assert_eq!(error_ratio(0.3, 0.0, 3).unwrap(), 0.0);
        assert!(matches!(error_ratio(0.0, 0.0, 1), Err(Error::UndefinedRatio)));
    }

    #[test]
    fn assembled_layer_count_and_merging() {
        let s = Schedule::new(vec![0.5, 1.0, 0.2], vec![3.0, 1.0, 0.1]).unwrap();
        let q = assemble(&s, &[2, 3, 1]).unwrap();
        assert_eq!(q.len(), 2 + 3 + 1 + 1);
        // step 0 -> step 1 boundary
        assert!((q.gammas()[2] - (0.5 / 4.0 + 1.0 / 6.0)).abs() < 1e-15);
        assert_eq!(q.betas()[2], 1.0 / 3.0);
        assert_eq!(*q.betas().last().unwrap(), 0.0);
        for (src, (g, b)) in q.provenance().iter().zip(q.layers()) {
            if !src.boundary {
                assert_eq!(b / g, s.fields()[src.source_step]);
            }
        }
    }

    #[test]
    fn effective_field_constant_ratio() {
        let q = QaoaSchedule::new(vec![0.1; 5], vec![0.05; 5]).unwrap();
        let f = bch_effective_field(&q);
        assert_eq!(f.ratio.len(), 4);
        assert!(f.ratio.iter().all(|&r| r == 0.5));
        assert_eq!(f.normalized_time, vec![0.2, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn effective_field_skips_zero_gamma() {
        let q = QaoaSchedule::new(vec![0.1, 0.0, 0.2, 0.3], vec![0.1, 0.1, 0.1, 0.0]).unwrap();
        let f = bch_effective_field(&q);
        assert_eq!(f.skipped, vec![1]);
        assert_eq!(f.ratio.len(), 2);
    }

    #[test]
    fn total_time_conventions() {
        let q = QaoaSchedule::new(vec![0.1, 0.2], vec![0.05, 0.05]).unwrap();
        assert!((qaoa_total_time(&q, TimeConvention::SumAbsBoth) - 0.4).abs() < 1e-15);
        assert!((qaoa_total_time(&q, TimeConvention::SumAbsGamma) - 0.3).abs() < 1e-15);
        assert_eq!(qaoa_total_time(&QaoaSchedule::default(), TimeConvention::SumAbsBoth), 0.0);
    }

    #[test]
    fn params_round_trip() {
        let q = QaoaSchedule::new(vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        assert_eq!(QaoaSchedule::from_params(&q.to_params()).unwrap(), q);
        assert!(QaoaSchedule::from_params(&[1.0, 2.0, 3.0]).is_err());
    }
}
