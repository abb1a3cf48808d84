use serde::{Deserialize, Serialize};

use super::mte::mte_objective;
use super::plot::{LinePlot, Series};
use super::{instantaneous_ground_fidelities, strided, Artifacts, ExperimentConfig};
use crate::io::{write_gap_csv, write_schedule_csv, ScheduleFile, ScheduleMetadata};
use crate::optimizer::Objective;
use crate::propagator::Schedule;
use crate::schedule::{build_local_adiabatic_ramp, linear_ramp, LocalAdiabaticRamp};
use crate::spinmodel::{gap_profile, log_grid, GapProfile, GapSample};
use crate::{Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampTraceRow {
    pub step: usize,
    pub time: f64,
    pub normalized_time: f64,
    #[serde(rename = "B")]
    pub field: f64,
    pub target_fidelity: f64,
    pub instantaneous_fidelity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub rho: f64,
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub min_gap: GapSample,
    pub fidelity: f64,
    pub linear_fidelity: Option<f64>,
    pub trace: Vec<RampTraceRow>,
    pub linear_trace: Vec<RampTraceRow>,
}

fn ramp_trace(objective: &Objective, schedule: &Schedule, dt: f64, points: usize) -> Result<Vec<RampTraceRow>> {
    let states = objective.mte_sector_trajectory(schedule)?;
    let n = schedule.len();
    // Rows for steps 1..=N, strided.
    let picks: Vec<usize> = strided(n, points).into_iter().map(|i| i + 1).collect();
    let chosen: Vec<&[C64]> = picks.iter().map(|&j| states[j].as_slice()).collect();
    let fields: Vec<f64> = picks.iter().map(|&j| schedule.fields()[j - 1]).collect();
    let inst = instantaneous_ground_fidelities(objective, &chosen, &fields);
    Ok(picks
        .iter()
        .enumerate()
        .map(|(k, &j)| RampTraceRow {
            step: j,
            time: j as f64 * dt,
            normalized_time: j as f64 / n as f64,
            field: fields[k],
            target_fidelity: objective.sector_fidelity(chosen[k]),
            instantaneous_fidelity: inst[k],
        })
        .collect())
}

/// The local-adiabatic ramp from the sector gap profile of `H(B)` on
/// `[b_target, cfg.mte.b_max]`.
pub(crate) fn build_ramp(cfg: &ExperimentConfig, objective: &Objective) -> Result<(GapProfile, LocalAdiabaticRamp)> {
    let b_min = objective.model().target_field();
    let grid = log_grid(cfg.mte.b_max, b_min, cfg.ramp.gap_points);
    let profile = gap_profile(objective.model(), &grid)?;
    let ramp = build_local_adiabatic_ramp(&profile, cfg.ramp.rho, cfg.mte.b_max, b_min, cfg.ramp.dt)?;
    Ok((profile, ramp))
}

/// Evolves the constant-`ρ` ramp with `λ_j = dt` and, when enabled, a linear
/// ramp with the same number of steps.
///
/// Artifacts: `gap.csv`, `ramp.csv`, `ramp.json`, `trace.csv`,
/// `linear_trace.csv`, `summary.json` and plots.
pub fn run_local_adiabatic_baseline(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<BaselineOutcome> {
    cfg.validate()?;
    let objective = mte_objective(cfg)?;
    let (samples, ramp) = build_ramp(cfg, &objective)?;
    let b_min = objective.model().target_field();
    write_gap_csv(&out.record("gap.csv"), &samples)?;
    log::info!("ramp: t_f = {:.4}, {} steps", ramp.t_final, ramp.steps());

    let schedule = ramp.schedule();
    write_schedule_csv(&out.record("ramp.csv"), &schedule)?;
    let meta = ScheduleMetadata {
        rho: Some(cfg.ramp.rho),
        b_max: Some(cfg.mte.b_max),
        b_min: Some(b_min),
        dt: Some(cfg.ramp.dt),
        seed: None,
    };
    out.json("ramp.json", &ScheduleFile::new(&schedule, meta))?;

    let trace = ramp_trace(&objective, &schedule, cfg.ramp.dt, cfg.ramp.trace_points)?;
    let fidelity = trace.last().map_or(0.0, |r| r.target_fidelity);
    out.csv("trace.csv", &trace)?;

    let (linear_fidelity, linear_trace) = if cfg.ramp.linear_comparator {
        let lin = linear_ramp(schedule.len(), cfg.mte.b_max, b_min, cfg.ramp.dt)?;
        let t = ramp_trace(&objective, &lin, cfg.ramp.dt, cfg.ramp.trace_points)?;
        out.csv("linear_trace.csv", &t)?;
        (t.last().map(|r| r.target_fidelity), t)
    } else {
        (None, Vec::new())
    };

    let outcome = BaselineOutcome {
        rho: cfg.ramp.rho,
        dt: cfg.ramp.dt,
        t_final: ramp.t_final,
        steps: ramp.steps(),
        min_gap: samples.minimum(),
        fidelity,
        linear_fidelity,
        trace,
        linear_trace,
    };
    #[derive(Serialize)]
    struct Summary {
        rho: f64,
        dt: f64,
        t_final: f64,
        steps: usize,
        min_gap: GapSample,
        fidelity: f64,
        linear_fidelity: Option<f64>,
    }
    out.json(
        "summary.json",
        &Summary {
            rho: outcome.rho,
            dt: outcome.dt,
            t_final: outcome.t_final,
            steps: outcome.steps,
            min_gap: outcome.min_gap,
            fidelity: outcome.fidelity,
            linear_fidelity: outcome.linear_fidelity,
        },
    )?;

    out.line_plot(
        "gap.svg",
        &LinePlot {
            title: "sector gap".into(),
            x_label: "B".into(),
            y_label: "gap".into(),
            series: vec![Series::line("E1 - E0", samples.samples.iter().map(|s| (s.field, s.gap)).collect())],
            log_y: false,
        },
    )?;
    out.line_plot(
        "ramp.svg",
        &LinePlot {
            title: format!("local-adiabatic ramp, rho = {}", cfg.ramp.rho),
            x_label: "t".into(),
            y_label: "B".into(),
            series: vec![Series::line(
                "B(t)",
                ramp.times.iter().zip(&ramp.fields).map(|(&t, &b)| (t, b)).collect(),
            )],
            log_y: true,
        },
    )?;
    let pick = |rows: &[RampTraceRow], f: fn(&RampTraceRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.normalized_time, f(r))).collect()
    };
    let mut series = vec![
        Series::line("local-adiabatic, target", pick(&outcome.trace, |r| r.target_fidelity)),
        Series::line("local-adiabatic, instantaneous", pick(&outcome.trace, |r| r.instantaneous_fidelity)),
    ];
    if !outcome.linear_trace.is_empty() {
        series.push(Series::line("linear, target", pick(&outcome.linear_trace, |r| r.target_fidelity)));
        series.push(Series::line("linear, instantaneous", pick(&outcome.linear_trace, |r| r.instantaneous_fidelity)));
    }
    out.line_plot(
        "fidelity.svg",
        &LinePlot {
            title: "ramp fidelity".into(),
            x_label: "normalized time".into(),
            y_label: "fidelity".into(),
            series,
            log_y: false,
        },
    )?;
    Ok(outcome)
}
