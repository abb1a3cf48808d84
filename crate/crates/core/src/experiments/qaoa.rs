use serde::{Deserialize, Serialize};

use super::baseline::build_ramp;
use super::mte::{mte_objective, run_with_objective};
use super::plot::{LinePlot, Series};
use super::{load_schedule, spearman, Artifacts, ExperimentConfig, ExperimentKind};
use crate::io::{write_qaoa_csv, write_qaoa_json, write_schedule_csv};
use crate::optimizer::{Mode, Objective, OptReport};
use crate::propagator::Schedule;
use crate::qaoa::{bch_effective_field, translate_schedule, QaoaSchedule, Translation};
use crate::schedule::LocalAdiabaticRamp;
use crate::Result;

/// One layer of the `β/γ` comparison. The last layer is never listed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub layer: usize,
    pub normalized_time: f64,
    pub gamma: f64,
    pub beta: f64,
    pub ratio: f64,
    /// Local-adiabatic field at the same normalised time.
    pub b_la: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QaoaOutcome {
    pub source: Schedule,
    pub translation: Translation,
    pub translated_fidelity: f64,
    /// Re-optimisation report, when one ran.
    pub optimized: Option<OptReport>,
    /// Translated or re-optimised angles, whichever is final.
    pub schedule: QaoaSchedule,
    pub energy: f64,
    pub fidelity: f64,
    pub ratios: Vec<RatioRow>,
    /// Spearman correlation of `β/γ` with `B_LA` for `s > 1/2`.
    pub spearman: Option<f64>,
    pub translated_spearman: Option<f64>,
}

pub(crate) fn ratio_rows(q: &QaoaSchedule, ramp: &LocalAdiabaticRamp) -> Vec<RatioRow> {
    let eff = bch_effective_field(q);
    let skipped = |j: usize| eff.skipped.contains(&j);
    (0..q.len().saturating_sub(1))
        .filter(|&j| !skipped(j))
        .zip(0..)
        .map(|(j, k)| RatioRow {
            layer: j + 1,
            normalized_time: eff.normalized_time[k],
            gamma: q.gammas()[j],
            beta: q.betas()[j],
            ratio: eff.ratio[k],
            b_la: ramp.field_at_normalized(eff.normalized_time[k]),
        })
        .collect()
}

/// Spearman correlation between `β/γ` and `B_LA` over the rows with `s > 1/2`.
pub(crate) fn second_half_spearman(rows: &[RatioRow]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.normalized_time > 0.5).map(|r| (r.ratio, r.b_la)).unzip();
    spearman(&x, &y)
}

/// Translates (and optionally re-optimises) a QAOA schedule from `source`.
pub(crate) fn translate_and_optimize(
    cfg: &ExperimentConfig,
    objective: &Objective,
    source: &Schedule,
    reoptimize: bool,
) -> Result<(Translation, Option<OptReport>)> {
    let translation = translate_schedule(source, objective, &cfg.qaoa.budget)?;
    log::info!(
        "translated {} steps into {} layers, energy ratio {:.3}",
        source.len(),
        translation.qaoa.len(),
        translation.ratio
    );
    if !reoptimize {
        return Ok((translation, None));
    }
    let qobj = objective.with_mode(Mode::Qaoa);
    let report = cfg.qaoa.driver.run(&translation.qaoa.to_params(), &qobj, cfg.seed)?;
    if report.is_failed() {
        log::warn!("QAOA re-optimisation stopped early: {:?}", report.status);
    }
    Ok((translation, Some(report)))
}

/// Translates an MTE schedule into QAOA angles, re-optimises them for
/// `qaoa-optimize` (or when `qaoa.reoptimize` is set) and compares `β/γ`
/// with the local-adiabatic field.
///
/// Without `qaoa.schedule` an MTE optimisation runs first into `mte/`.
///
/// Artifacts: `source.csv`, `qaoa_translated.{csv,json}`, `qaoa.{csv,json}`,
/// `ratio.csv`, `optimize_report.json`, `summary.json` and plots.
pub fn run_qaoa_experiment(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<QaoaOutcome> {
    cfg.validate()?;
    let objective = mte_objective(cfg)?;
    let source = match &cfg.qaoa.schedule {
        Some(path) => load_schedule(path)?,
        None => {
            let mut sub = out.subdir("mte")?;
            run_with_objective(cfg, &objective, cfg.mte.steps, &mut sub)?.pruned
        }
    };
    write_schedule_csv(&out.record("source.csv"), &source)?;

    let reoptimize = cfg.qaoa.reoptimize || cfg.kind == ExperimentKind::QaoaOptimize;
    let (translation, optimized) = translate_and_optimize(cfg, &objective, &source, reoptimize)?;
    write_qaoa_csv(&out.record("qaoa_translated.csv"), &translation.qaoa)?;
    write_qaoa_json(&out.record("qaoa_translated.json"), &translation.qaoa)?;
    let translated_fidelity = objective.target_fidelity(&objective.qaoa_final_state(&translation.qaoa)?)?;

    let schedule = match &optimized {
        Some(report) => {
            out.json("optimize_report.json", report)?;
            translation.qaoa.with_params(&report.final_parameters)?
        }
        None => translation.qaoa.clone(),
    };
    write_qaoa_csv(&out.record("qaoa.csv"), &schedule)?;
    write_qaoa_json(&out.record("qaoa.json"), &schedule)?;
    let psi = objective.qaoa_final_state(&schedule)?;
    let energy = objective.state_energy(&psi);
    let fidelity = objective.target_fidelity(&psi)?;

    let (_, ramp) = build_ramp(cfg, &objective)?;
    let ratios = ratio_rows(&schedule, &ramp);
    out.csv("ratio.csv", &ratios)?;
    let translated_rows = ratio_rows(&translation.qaoa, &ramp);
    let outcome = QaoaOutcome {
        spearman: second_half_spearman(&ratios),
        translated_spearman: second_half_spearman(&translated_rows),
        source,
        translated_fidelity,
        optimized,
        energy,
        fidelity,
        ratios,
        schedule,
        translation,
    };

    #[derive(Serialize)]
    struct Summary {
        source_steps: usize,
        layers: usize,
        trotter_counts: Vec<usize>,
        mte_energy: f64,
        translated_energy: f64,
        ground_energy: f64,
        translation_ratio: f64,
        translated_fidelity: f64,
        reoptimized: bool,
        energy: f64,
        fidelity: f64,
        infidelity: f64,
        spearman_second_half: Option<f64>,
        translated_spearman_second_half: Option<f64>,
    }
    let t = &outcome.translation;
    out.json(
        "summary.json",
        &Summary {
            source_steps: outcome.source.len(),
            layers: outcome.schedule.len(),
            trotter_counts: t.trotter_counts.clone(),
            mte_energy: t.mte_energy,
            translated_energy: t.qaoa_energy,
            ground_energy: t.ground_energy,
            translation_ratio: t.ratio,
            translated_fidelity: outcome.translated_fidelity,
            reoptimized: outcome.optimized.is_some(),
            energy: outcome.energy,
            fidelity: outcome.fidelity,
            infidelity: 1.0 - outcome.fidelity,
            spearman_second_half: outcome.spearman,
            translated_spearman_second_half: outcome.translated_spearman,
        },
    )?;

    let p = outcome.schedule.len() as f64;
    let angle = |v: &[f64]| v.iter().enumerate().map(|(j, &a)| ((j + 1) as f64 / p, a)).collect::<Vec<_>>();
    out.line_plot(
        "angles.svg",
        &LinePlot {
            title: format!("QAOA angles, p = {}", outcome.schedule.len()),
            x_label: "normalized time".into(),
            y_label: "angle".into(),
            series: vec![
                Series::scatter("gamma", angle(outcome.schedule.gammas())),
                Series::scatter("beta", angle(outcome.schedule.betas())),
            ],
            log_y: false,
        },
    )?;
    out.line_plot(
        "ratio.svg",
        &LinePlot {
            title: "beta / gamma against the local-adiabatic field".into(),
            x_label: "normalized time".into(),
            y_label: "B".into(),
            series: vec![
                Series::scatter("beta / gamma", outcome.ratios.iter().map(|r| (r.normalized_time, r.ratio)).collect()),
                Series::line(
                    "local-adiabatic B",
                    (0..=200).map(|k| k as f64 / 200.0).map(|s| (s, ramp.field_at_normalized(s))).collect(),
                ),
            ],
            log_y: false,
        },
    )?;
    Ok(outcome)
}
