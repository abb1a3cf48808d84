use serde::{Deserialize, Serialize};

use super::mte::mte_objective;
use super::plot::{LinePlot, Series};
use super::qaoa::translate_and_optimize;
use super::{Artifacts, ExperimentConfig};
use crate::optimizer::{run_restarts, Mode, RestartPlan, RestartSummary};
use crate::propagator::Schedule;
use crate::schedule::{initial_guess, prune_schedule};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: Mode,
    /// Steps for MTE rows, layers for QAOA rows.
    pub steps: usize,
    /// MTE step count the row derives from.
    pub source_steps: usize,
    pub best_fidelity: f64,
    pub infidelity: f64,
    pub restarts: usize,
}

/// Best-of-`mte.restarts` fidelity for each `N` in `sweep.steps`, followed
/// (when `sweep.qaoa` is set) by the re-optimised QAOA translation of the
/// best pruned schedule.
///
/// Artifacts: `sweep.csv`, `infidelity.svg`.
pub fn infidelity_vs_steps(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let objective = mte_objective(cfg)?;
    let b_max = cfg.mte.b_max;
    let b_min = objective.model().target_field();
    let mut rows = Vec::new();
    for &n in &cfg.sweep.steps {
        let plan = RestartPlan { runs: cfg.mte.restarts, base_seed: cfg.seed, stop_at_fidelity: cfg.mte.stop_at_fidelity };
        let guess = |seed: u64| Ok(initial_guess(n, b_max, b_min, seed)?.to_params());
        let (reports, errors) = run_restarts(&objective, guess, &plan, &cfg.mte.driver)?;
        let summary = RestartSummary::from_runs(reports, errors)?;
        let best = summary.best();
        let attempted = summary.reports.len() + summary.errors.len();
        log::info!("N = {n}: best fidelity {:.6} over {attempted} runs", best.final_fidelity);
        rows.push(SweepRow {
            mode: Mode::Mte,
            steps: n,
            source_steps: n,
            best_fidelity: best.final_fidelity,
            infidelity: 1.0 - best.final_fidelity,
            restarts: attempted,
        });
        if cfg.sweep.qaoa {
            let source = prune_schedule(&Schedule::from_params(&best.final_parameters)?, cfg.mte.prune_threshold)?;
            let (translation, report) = translate_and_optimize(cfg, &objective, &source, true)?;
            let fidelity = report.map_or(0.0, |r| r.final_fidelity);
            rows.push(SweepRow {
                mode: Mode::Qaoa,
                steps: translation.qaoa.len(),
                source_steps: n,
                best_fidelity: fidelity,
                infidelity: 1.0 - fidelity,
                restarts: 1,
            });
        }
    }
    out.csv("sweep.csv", &rows)?;

    let series = |mode: Mode, label: &str| {
        Series::scatter(
            label,
            rows.iter().filter(|r| r.mode == mode).map(|r| (r.steps as f64, r.infidelity)).collect(),
        )
    };
    let mut plotted = vec![series(Mode::Mte, "MTE")];
    if cfg.sweep.qaoa {
        plotted.push(series(Mode::Qaoa, "QAOA"));
    }
    out.line_plot(
        "infidelity.svg",
        &LinePlot {
            title: "infidelity against steps".into(),
            x_label: "steps or layers".into(),
            y_label: "1 - F".into(),
            series: plotted,
            log_y: true,
        },
    )?;
    Ok(rows)
}
