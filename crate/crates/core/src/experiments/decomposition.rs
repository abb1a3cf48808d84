use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mte::{mte_objective, run_with_objective};
use super::plot::{Heatmap, LinePlot, Series};
use super::{load_schedule, Artifacts, ExperimentConfig};
use crate::optimizer::Objective;
use crate::propagator::Schedule;
use crate::spinmodel::IsingOperator;
use crate::{Error, QuantumState, Result, C64};

/// Weights `|<m(B_j)|ψ_j>|^2` of the evolving state on the lowest `K`
/// instantaneous eigenstates of the ground-state sector.
///
/// Column `j = 0` is the initial state measured against `H(B_1)`; column
/// `j >= 1` is the state after step `j` against `H(B_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionHeatmap {
    /// `j / N` for `j = 0..=N`.
    pub normalized_time: Vec<f64>,
    pub fields: Vec<f64>,
    /// `probabilities[k][j]`.
    pub probabilities: Vec<Vec<f64>>,
    /// Sector weight above the tracked states.
    pub higher: Vec<f64>,
    /// Weight outside the sector.
    pub residual: Vec<f64>,
    /// `|<target|ψ_j>|^2`
    pub target_fidelity: Vec<f64>,
}

impl DecompositionHeatmap {
    pub fn states(&self) -> usize {
        self.probabilities.len()
    }

    pub fn columns(&self) -> usize {
        self.normalized_time.len()
    }

    /// Instantaneous ground-state fidelity per column.
    pub fn ground(&self) -> &[f64] {
        &self.probabilities[0]
    }

    /// Tracked weight plus `higher` plus `residual` for column `j`.
    pub fn column_total(&self, j: usize) -> f64 {
        self.probabilities.iter().map(|p| p[j]).sum::<f64>() + self.higher[j] + self.residual[j]
    }

    /// Smallest ground weight strictly between the first and last columns,
    /// as `(column, value)`.
    pub fn interior_minimum(&self) -> Option<(usize, f64)> {
        let g = self.ground();
        (1..g.len().saturating_sub(1)).map(|j| (j, g[j])).min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Whether the ground weight ever drops by more than `tol` from one
    /// column to the next.
    pub fn ground_is_monotone(&self, tol: f64) -> bool {
        self.ground().windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// Final target fidelity minus the interior ground-weight minimum.
    pub fn recovery(&self) -> Option<f64> {
        let last = *self.target_fidelity.last()?;
        self.interior_minimum().map(|(_, m)| last - m)
    }
}

/// Decomposes a full-space trajectory (`N + 1` states) of `schedule` into the
/// lowest `k` sector eigenstates at each step.
pub fn instantaneous_decomposition(
    objective: &Objective,
    trajectory: &[QuantumState],
    schedule: &Schedule,
    k: usize,
) -> Result<DecompositionHeatmap> {
    if k == 0 {
        return Err(Error::invalid("decomposition needs at least one eigenstate"));
    }
    if schedule.is_empty() {
        return Err(Error::EmptySchedule { threshold: 0.0 });
    }
    if trajectory.len() != schedule.len() + 1 {
        return Err(Error::Shape { expected: schedule.len() + 1, got: trajectory.len() });
    }
    let full = 1usize << objective.model().n_sites();
    if let Some(bad) = trajectory.iter().find(|s| s.dim() != full) {
        return Err(Error::Shape { expected: full, got: bad.dim() });
    }
    let basis = objective.sector();
    let op = objective.sector_operator();
    let k = k.min(basis.dimension());
    let n = schedule.len();
    let fields: Vec<f64> = (0..=n).map(|j| schedule.fields()[j.saturating_sub(1)]).collect();

    let columns: Vec<(Vec<f64>, f64, f64, f64)> = trajectory
        .par_iter()
        .zip(fields.par_iter())
        .map(|(psi, &b)| {
            let x = basis.project(psi.amplitudes());
            let total = psi.norm().powi(2);
            let inside: f64 = x.iter().map(|c| c.norm_sqr()).sum();
            let (_, vecs) = op.lowest_eigenpairs(b, k);
            let probs: Vec<f64> = (0..k)
                .map(|m| vecs.column(m).iter().zip(&x).map(|(v, c)| c * v).sum::<C64>().norm_sqr())
                .collect();
            let tracked: f64 = probs.iter().sum();
            let higher = (inside - tracked).max(0.0);
            let residual = (total - inside).max(0.0);
            (probs, higher, residual, objective.sector_fidelity(&x))
        })
        .collect();

    let mut probabilities = vec![Vec::with_capacity(n + 1); k];
    let (mut higher, mut residual, mut target_fidelity) = (Vec::new(), Vec::new(), Vec::new());
    for (probs, h, r, f) in columns {
        for (row, p) in probabilities.iter_mut().zip(probs) {
            row.push(p);
        }
        higher.push(h);
        residual.push(r);
        target_fidelity.push(f);
    }
    Ok(DecompositionHeatmap {
        normalized_time: (0..=n).map(|j| j as f64 / n as f64).collect(),
        fields,
        probabilities,
        higher,
        residual,
        target_fidelity,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionOutcome {
    pub schedule: Schedule,
    pub heatmap: DecompositionHeatmap,
    pub final_fidelity: f64,
    pub interior_minimum: Option<(usize, f64)>,
    pub monotone: bool,
}

#[derive(Serialize)]
struct ColumnRow {
    step: usize,
    normalized_time: f64,
    #[serde(rename = "B")]
    field: f64,
    ground: f64,
    excited: f64,
    higher: f64,
    residual: f64,
    target_fidelity: f64,
}

#[derive(Serialize)]
struct CellRow {
    step: usize,
    normalized_time: f64,
    state: usize,
    probability: f64,
}

/// Decomposes an MTE trajectory (from `decompose.schedule`, or a fresh
/// `decompose.steps`-step optimisation in `mte/`) into instantaneous
/// eigenstates.
///
/// Artifacts: `decomposition.csv` (one row per step), `probabilities.csv`
/// (one row per step and state), `summary.json` and plots.
pub fn run_decomposition(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<DecompositionOutcome> {
    cfg.validate()?;
    let objective = mte_objective(cfg)?;
    let schedule = match &cfg.decompose.schedule {
        Some(path) => load_schedule(path)?,
        None => {
            let mut sub = out.subdir("mte")?;
            run_with_objective(cfg, &objective, cfg.decompose.steps, &mut sub)?.pruned
        }
    };
    let trajectory = objective.mte_trajectory(&schedule)?;
    let heatmap = instantaneous_decomposition(&objective, &trajectory, &schedule, cfg.decompose.states)?;

    let rows: Vec<ColumnRow> = (0..heatmap.columns())
        .map(|j| ColumnRow {
            step: j,
            normalized_time: heatmap.normalized_time[j],
            field: heatmap.fields[j],
            ground: heatmap.probabilities[0][j],
            excited: heatmap.probabilities[1..].iter().map(|p| p[j]).sum(),
            higher: heatmap.higher[j],
            residual: heatmap.residual[j],
            target_fidelity: heatmap.target_fidelity[j],
        })
        .collect();
    out.csv("decomposition.csv", &rows)?;
    let cells: Vec<CellRow> = (0..heatmap.columns())
        .flat_map(|j| {
            let h = &heatmap;
            (0..h.states()).map(move |k| CellRow {
                step: j,
                normalized_time: h.normalized_time[j],
                state: k,
                probability: h.probabilities[k][j],
            })
        })
        .collect();
    out.csv("probabilities.csv", &cells)?;

    let outcome = DecompositionOutcome {
        final_fidelity: *heatmap.target_fidelity.last().expect("non-empty"),
        interior_minimum: heatmap.interior_minimum(),
        monotone: heatmap.ground_is_monotone(1e-9),
        schedule,
        heatmap,
    };
    #[derive(Serialize)]
    struct Summary {
        steps: usize,
        states: usize,
        final_fidelity: f64,
        interior_minimum_step: Option<usize>,
        interior_minimum: Option<f64>,
        recovery: Option<f64>,
        monotone: bool,
    }
    out.json(
        "summary.json",
        &Summary {
            steps: outcome.schedule.len(),
            states: outcome.heatmap.states(),
            final_fidelity: outcome.final_fidelity,
            interior_minimum_step: outcome.interior_minimum.map(|m| m.0),
            interior_minimum: outcome.interior_minimum.map(|m| m.1),
            recovery: outcome.heatmap.recovery(),
            monotone: outcome.monotone,
        },
    )?;

    let h = &outcome.heatmap;
    out.heatmap(
        "probabilities.svg",
        &Heatmap {
            title: "instantaneous eigenstate weights".into(),
            x_label: "normalized time".into(),
            y_label: "eigenstate".into(),
            x: h.normalized_time.clone(),
            y: (0..h.states()).map(|k| k as f64).collect(),
            values: h.probabilities.clone(),
            range: (0.0, 1.0),
        },
    )?;
    let pts = |v: &[f64]| h.normalized_time.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    out.line_plot(
        "fidelity.svg",
        &LinePlot {
            title: "fidelity along the trajectory".into(),
            x_label: "normalized time".into(),
            y_label: "fidelity".into(),
            series: vec![
                Series::line("instantaneous ground", pts(h.ground())),
                Series::line("target", pts(&h.target_fidelity)),
            ],
            log_y: false,
        },
    )?;
    Ok(outcome)
}
