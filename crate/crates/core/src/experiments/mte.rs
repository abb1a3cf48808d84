use serde::{Deserialize, Serialize};

use super::plot::{LinePlot, Series};
use super::{instantaneous_ground_fidelities, Artifacts, ExperimentConfig};
use crate::io::{write_schedule_csv, ScheduleFile, ScheduleMetadata};
use crate::optimizer::{run_restarts, Mode, Objective, OptReport, RestartPlan, RestartSummary};
use crate::propagator::{KrylovConfig, Schedule};
use crate::schedule::{initial_guess, normalized_time, prune_schedule};
use crate::spinmodel::IsingOperator;
use crate::Result;

/// One row per step of an evolution, on the normalised-time axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub step: usize,
    pub normalized_time: f64,
    pub lambda: f64,
    #[serde(rename = "B")]
    pub field: f64,
    /// `|<target|ψ_j>|^2`
    pub target_fidelity: f64,
    /// `|<g(B_j)|ψ_j>|^2`
    pub instantaneous_fidelity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MteOutcome {
    pub summary: RestartSummary,
    pub best_seed: u64,
    /// Best optimised schedule before pruning.
    pub optimized: Schedule,
    pub optimized_fidelity: f64,
    pub pruned: Schedule,
    pub fidelity: f64,
    pub energy: f64,
    pub ground_energy: f64,
    pub gap: f64,
    pub trace: Vec<FidelityRow>,
}

#[derive(Serialize)]
struct MteSummary<'a> {
    n_sites: usize,
    initial_steps: usize,
    pruned_steps: usize,
    best_seed: u64,
    optimized_fidelity: f64,
    fidelity: f64,
    infidelity: f64,
    energy: f64,
    ground_energy: f64,
    gap: f64,
    successful_runs: usize,
    failed_runs: usize,
    errored_runs: usize,
    fidelity_stats: &'a crate::optimizer::BoxplotStats,
}

/// Per-step fidelity traces of `schedule`.
pub(crate) fn fidelity_trace(objective: &Objective, schedule: &Schedule) -> Result<Vec<FidelityRow>> {
    let states = objective.mte_sector_trajectory(schedule)?;
    let after: Vec<&[crate::C64]> = states[1..].iter().map(|x| x.as_slice()).collect();
    let inst = instantaneous_ground_fidelities(objective, &after, schedule.fields());
    Ok(normalized_time(schedule.len())
        .into_iter()
        .enumerate()
        .map(|(j, s)| FidelityRow {
            step: j + 1,
            normalized_time: s,
            lambda: schedule.lambdas()[j],
            field: schedule.fields()[j],
            target_fidelity: objective.sector_fidelity(after[j]),
            instantaneous_fidelity: inst[j],
        })
        .collect())
}

pub(crate) fn schedule_plots(out: &mut Artifacts, trace: &[FidelityRow], title: &str) -> Result<()> {
    let pick = |f: fn(&FidelityRow) -> f64| trace.iter().map(|r| (r.normalized_time, f(r))).collect::<Vec<_>>();
    out.line_plot(
        "lambda.svg",
        &LinePlot {
            title: format!("{title}: scale per step"),
            x_label: "normalized time".into(),
            y_label: "lambda".into(),
            series: vec![Series::line("lambda", pick(|r| r.lambda))],
            log_y: false,
        },
    )?;
    out.line_plot(
        "field.svg",
        &LinePlot {
            title: format!("{title}: field per step"),
            x_label: "normalized time".into(),
            y_label: "B".into(),
            series: vec![Series::line("B", pick(|r| r.field))],
            log_y: true,
        },
    )?;
    out.line_plot(
        "fidelity.svg",
        &LinePlot {
            title: format!("{title}: fidelity"),
            x_label: "normalized time".into(),
            y_label: "fidelity".into(),
            series: vec![
                Series::line("target", pick(|r| r.target_fidelity)),
                Series::line("instantaneous ground", pick(|r| r.instantaneous_fidelity)),
            ],
            log_y: false,
        },
    )
}

pub(crate) fn mte_objective(cfg: &ExperimentConfig) -> Result<Objective> {
    let model = cfg.model.build()?;
    Ok(Objective::new(&model, Mode::Mte)?.with_krylov(KrylovConfig::with_tol(cfg.mte.krylov_tol)))
}

/// Optimises `cfg.mte.steps`-step schedules from `cfg.mte.restarts` random
/// guesses, prunes the best one and records its fidelity traces.
///
/// Artifacts: `reports.json`, `best_report.json`, `best_trace.csv`,
/// `schedule_optimized.{csv,json}`, `schedule.{csv,json}` (pruned),
/// `fidelity.csv`, `summary.json` and plots.
pub fn run_mte_experiment(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<MteOutcome> {
    cfg.validate()?;
    let objective = mte_objective(cfg)?;
    run_with_objective(cfg, &objective, cfg.mte.steps, out)
}

pub(crate) fn run_with_objective(
    cfg: &ExperimentConfig,
    objective: &Objective,
    steps: usize,
    out: &mut Artifacts,
) -> Result<MteOutcome> {
    let b_min = objective.model().target_field();
    let b_max = cfg.mte.b_max;
    let plan = RestartPlan { runs: cfg.mte.restarts, base_seed: cfg.seed, stop_at_fidelity: cfg.mte.stop_at_fidelity };
    log::info!("optimising {steps}-step schedules, {} restarts", plan.runs);
    let guess = |seed: u64| Ok(initial_guess(steps, b_max, b_min, seed)?.to_params());
    let (reports, errors) = run_restarts(objective, guess, &plan, &cfg.mte.driver)?;
    let slim: Vec<OptReport> = reports.iter().map(|r| OptReport { trace: Vec::new(), ..r.clone() }).collect();
    out.json("reports.json", &slim)?;
    let summary = RestartSummary::from_runs(reports, errors)?;

    let best = summary.best().clone();
    out.json("best_report.json", &best)?;
    out.csv("best_trace.csv", &best.trace)?;
    let optimized = Schedule::from_params(&best.final_parameters)?;
    let meta = ScheduleMetadata { seed: Some(best.seed), b_max: Some(b_max), b_min: Some(b_min), ..Default::default() };
    write_schedule_csv(&out.record("schedule_optimized.csv"), &optimized)?;
    out.json("schedule_optimized.json", &ScheduleFile::new(&optimized, meta.clone()))?;

    let pruned = prune_schedule(&optimized, cfg.mte.prune_threshold)?;
    log::info!("pruned {} of {} steps", optimized.len() - pruned.len(), optimized.len());
    write_schedule_csv(&out.record("schedule.csv"), &pruned)?;
    out.json("schedule.json", &ScheduleFile::new(&pruned, meta))?;

    let energy = objective.mte_energy(&pruned)?;
    let trace = fidelity_trace(objective, &pruned)?;
    let fidelity = trace.last().map_or(0.0, |r| r.target_fidelity);
    out.csv("fidelity.csv", &trace)?;

    let outcome = MteOutcome {
        best_seed: best.seed,
        optimized_fidelity: best.final_fidelity,
        optimized,
        pruned,
        fidelity,
        energy,
        ground_energy: objective.ground_energy(),
        gap: objective.gap(),
        trace,
        summary,
    };
    out.json(
        "summary.json",
        &MteSummary {
            n_sites: objective.model().n_sites(),
            initial_steps: steps,
            pruned_steps: outcome.pruned.len(),
            best_seed: outcome.best_seed,
            optimized_fidelity: outcome.optimized_fidelity,
            fidelity: outcome.fidelity,
            infidelity: 1.0 - outcome.fidelity,
            energy: outcome.energy,
            ground_energy: outcome.ground_energy,
            gap: outcome.gap,
            successful_runs: outcome.summary.successful().count(),
            failed_runs: outcome.summary.reports.iter().filter(|r| r.is_failed()).count(),
            errored_runs: outcome.summary.errors.len(),
            fidelity_stats: &outcome.summary.fidelity,
        },
    )?;
    schedule_plots(out, &outcome.trace, "MTE")?;
    out.line_plot(
        "convergence.svg",
        &LinePlot {
            title: format!("{} trace, seed {}", best.driver, best.seed),
            x_label: "iteration".into(),
            y_label: "E - E0".into(),
            series: vec![Series::line(
                "best run",
                best.trace.iter().map(|t| (t.iteration as f64, t.energy - outcome.ground_energy)).collect(),
            )],
            log_y: true,
        },
    )?;
    Ok(outcome)
}
