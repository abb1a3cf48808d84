//! End-to-end runs. Each runner takes an [`ExperimentConfig`], writes CSV
//! and JSON (plus SVG plots when enabled) into the output directory and
//! returns an in-memory summary of the same data.

mod baseline;
mod config;
mod decomposition;
mod mte;
pub mod plot;
mod qaoa;
mod scan;
mod stats;
mod sweep;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use baseline::{run_local_adiabatic_baseline, BaselineOutcome, RampTraceRow};
pub use config::{
    DecomposeConfig, ExperimentConfig, ExperimentKind, MteConfig, QaoaConfig, RampConfig, ScanConfig, SweepConfig,
};
pub use decomposition::{instantaneous_decomposition, run_decomposition, DecompositionHeatmap, DecompositionOutcome};
pub use mte::{run_mte_experiment, FidelityRow, MteOutcome};
pub use qaoa::{run_qaoa_experiment, QaoaOutcome, RatioRow};
pub use scan::{constant_lambda_scan, run_constant_lambda_scan, ScanCell, ScanHeatmap};
pub use stats::spearman;
pub use sweep::{infidelity_vs_steps, SweepRow};

use crate::io::{read_schedule_csv, read_schedule_json, write_csv, write_json};
use crate::optimizer::Objective;
use crate::propagator::Schedule;
use crate::{Result, C64};
use plot::{write_heatmap, write_line_plot, Heatmap, LinePlot};

/// Runs `cfg.kind` into `cfg.out_dir`, writing the resolved configuration
/// to `config.json` first.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let mut out = Artifacts::create(&cfg.out_dir, cfg.plots)?;
    out.json("config.json", cfg)?;
    match cfg.kind {
        ExperimentKind::Mte => {
            run_mte_experiment(cfg, &mut out)?;
        }
        ExperimentKind::LaBaseline => {
            run_local_adiabatic_baseline(cfg, &mut out)?;
        }
        ExperimentKind::QaoaTranslate | ExperimentKind::QaoaOptimize => {
            run_qaoa_experiment(cfg, &mut out)?;
        }
        ExperimentKind::ConstLambda => {
            run_constant_lambda_scan(cfg, &mut out)?;
        }
        ExperimentKind::Sweep => {
            infidelity_vs_steps(cfg, &mut out)?;
        }
        ExperimentKind::Decompose => {
            run_decomposition(cfg, &mut out)?;
        }
    }
    Ok(out)
}

/// Output directory for one experiment. Records every file it writes.
#[derive(Clone, Debug)]
pub struct Artifacts {
    dir: PathBuf,
    plots: bool,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: impl Into<PathBuf>, plots: bool) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, plots, written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// A nested directory sharing the plot setting.
    pub fn subdir(&self, name: &str) -> Result<Self> {
        Self::create(self.dir.join(name), self.plots)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Records a file produced by another writer.
    pub fn record(&mut self, name: &str) -> PathBuf {
        let path = self.path(name);
        self.written.push(path.clone());
        path
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.record(name);
        write_csv(&path, rows)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.record(name);
        write_json(&path, value)
    }

    pub fn line_plot(&mut self, name: &str, plot: &LinePlot) -> Result<()> {
        if !self.plots {
            return Ok(());
        }
        let path = self.record(name);
        write_line_plot(&path, plot)
    }

    pub fn heatmap(&mut self, name: &str, map: &Heatmap) -> Result<()> {
        if !self.plots {
            return Ok(());
        }
        let path = self.record(name);
        write_heatmap(&path, map)
    }
}

/// Reads a schedule from `.json` (as written by the runners) or CSV.
pub fn load_schedule(path: &Path) -> Result<Schedule> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        read_schedule_json(path)?.schedule()
    } else {
        read_schedule_csv(path)
    }
}

/// `|<g(B_j)|x_j>|^2` for each sector-coordinate state and field, where
/// `g(B)` is the lowest eigenvector of `H(B)` in the sector.
pub(crate) fn instantaneous_ground_fidelities(objective: &Objective, states: &[&[C64]], fields: &[f64]) -> Vec<f64> {
    let op = objective.sector_operator();
    states
        .par_iter()
        .zip(fields.par_iter())
        .map(|(x, &b)| {
            let (_, v) = op.lowest_eigenpairs(b, 1);
            let overlap: C64 = v.column(0).iter().zip(x.iter()).map(|(g, c)| c * g).sum();
            overlap.norm_sqr()
        })
        .collect()
}

/// Indices `0, s, 2s, ...` with roughly `points` entries, always ending at
/// `len - 1`.
pub(crate) fn strided(len: usize, points: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let stride = (len / points.max(1)).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().expect("non-empty") != len - 1 {
        idx.push(len - 1);
    }
    idx
}
