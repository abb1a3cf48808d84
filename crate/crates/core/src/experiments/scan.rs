use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mte::mte_objective;
use super::plot::{Heatmap, LinePlot, Series};
use super::{Artifacts, ExperimentConfig};
use crate::optimizer::Objective;
use crate::schedule::exponential_field_guess;
use crate::spinmodel::IsingOperator;
use crate::{Error, Result};

/// Target fidelity after `N` steps of `λ_j = λ0` along the geometric field
/// guess, for every `(λ0, N)` on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanHeatmap {
    pub lambdas: Vec<f64>,
    pub steps: Vec<usize>,
    /// `fidelity[i_steps][i_lambda]`.
    pub fidelity: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub lambda: f64,
    pub steps: usize,
    pub fidelity: f64,
}

impl ScanHeatmap {
    pub fn cells(&self) -> impl Iterator<Item = ScanCell> + '_ {
        self.steps.iter().zip(&self.fidelity).flat_map(move |(&steps, row)| {
            self.lambdas.iter().zip(row).map(move |(&lambda, &fidelity)| ScanCell { lambda, steps, fidelity })
        })
    }

    pub fn argmax(&self) -> ScanCell {
        self.cells().max_by(|a, b| a.fidelity.total_cmp(&b.fidelity)).expect("non-empty grid")
    }

    /// Best cell with `λ0` in `lambda_range` and `N` in `steps_range`.
    pub fn best_within(&self, lambda_range: (f64, f64), steps_range: (usize, usize)) -> Option<ScanCell> {
        self.cells()
            .filter(|c| c.lambda >= lambda_range.0 && c.lambda <= lambda_range.1)
            .filter(|c| c.steps >= steps_range.0 && c.steps <= steps_range.1)
            .max_by(|a, b| a.fidelity.total_cmp(&b.fidelity))
    }

    /// Longest run of adjacent `λ0` values in the row for `steps` whose
    /// fidelity exceeds `threshold`, as `(λ_first, λ_last)`.
    pub fn widest_band_above(&self, steps: usize, threshold: f64) -> Option<(f64, f64)> {
        let row = &self.fidelity[self.steps.iter().position(|&n| n == steps)?];
        let mut best: Option<(usize, usize)> = None;
        let mut start = None;
        for i in 0..=row.len() {
            match (i < row.len() && row[i] > threshold, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    if best.is_none_or(|(a, b)| i - 1 - s > b - a) {
                        best = Some((s, i - 1));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        best.map(|(a, b)| (self.lambdas[a], self.lambdas[b]))
    }
}

/// Evaluates the constant-`λ0` grid. Step counts run in parallel.
pub fn constant_lambda_scan(objective: &Objective, lambdas: &[f64], steps: &[usize], b_max: f64) -> Result<ScanHeatmap> {
    if lambdas.is_empty() || steps.is_empty() {
        return Err(Error::invalid("scan grids must be non-empty"));
    }
    let b_min = objective.model().target_field();
    let fidelity = steps
        .par_iter()
        .map(|&n| {
            let fields = exponential_field_guess(n, b_max, b_min)?;
            objective.constant_scale_fidelities(&fields, lambdas)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanHeatmap { lambdas: lambdas.to_vec(), steps: steps.to_vec(), fidelity })
}

/// Runs the scan on `scan.lambdas` x `scan.steps`.
///
/// Artifacts: `scan.csv` (one row per cell), `summary.json`, `heatmap.svg`
/// and `best_row.svg`.
pub fn run_constant_lambda_scan(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<ScanHeatmap> {
    cfg.validate()?;
    let objective = mte_objective(cfg)?;
    let map = constant_lambda_scan(&objective, &cfg.scan.lambdas, &cfg.scan.steps, cfg.mte.b_max)?;
    let cells: Vec<ScanCell> = map.cells().collect();
    out.csv("scan.csv", &cells)?;
    let best = map.argmax();
    log::info!("best cell: lambda0 = {}, N = {}, fidelity {:.5}", best.lambda, best.steps, best.fidelity);

    #[derive(Serialize)]
    struct Summary {
        n_sites: usize,
        b_max: f64,
        b_min: f64,
        argmax: ScanCell,
        band_above_0_9: Option<(f64, f64)>,
    }
    out.json(
        "summary.json",
        &Summary {
            n_sites: objective.model().n_sites(),
            b_max: cfg.mte.b_max,
            b_min: objective.model().target_field(),
            argmax: best,
            band_above_0_9: map.widest_band_above(best.steps, 0.9),
        },
    )?;

    out.heatmap(
        "heatmap.svg",
        &Heatmap {
            title: "fidelity at constant lambda0".into(),
            x_label: "lambda0".into(),
            y_label: "N".into(),
            x: map.lambdas.clone(),
            y: map.steps.iter().map(|&n| n as f64).collect(),
            values: map.fidelity.clone(),
            range: (0.0, 1.0),
        },
    )?;
    let row = map.steps.iter().position(|&n| n == best.steps).expect("argmax row");
    out.line_plot(
        "best_row.svg",
        &LinePlot {
            title: format!("fidelity at N = {}", best.steps),
            x_label: "lambda0".into(),
            y_label: "fidelity".into(),
            series: vec![Series::line(
                format!("N = {}", best.steps),
                map.lambdas.iter().copied().zip(map.fidelity[row].iter().copied()).collect(),
            )],
            log_y: false,
        },
    )?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_and_argmax() {
        let map = ScanHeatmap {
            lambdas: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            steps: vec![10, 20],
            fidelity: vec![vec![0.1, 0.95, 0.2, 0.91, 0.92], vec![0.3, 0.93, 0.97, 0.95, 0.4]],
        };
        assert_eq!(map.argmax(), ScanCell { lambda: 1.5, steps: 20, fidelity: 0.97 });
        assert_eq!(map.widest_band_above(20, 0.9), Some((1.0, 2.0)));
        assert_eq!(map.widest_band_above(10, 0.9), Some((2.0, 2.5)));
        assert_eq!(map.widest_band_above(30, 0.9), None);
        assert_eq!(map.best_within((0.0, 1.2), (10, 20)).unwrap().fidelity, 0.95);
    }
}
