//! File formats: model configs, gap profiles, schedules, QAOA angles and
//! optimiser reports, as CSV and JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::optimizer::{OptReport, TracePoint};
use crate::propagator::Schedule;
use crate::qaoa::{qaoa_total_time, LayerSource, QaoaSchedule, TimeConvention};
use crate::spinmodel::{build_model, ground_sector, GapProfile, GapSample, IsingModel, DEFAULT_TARGET_FIELD};
use crate::{Error, Result};

/// Lattice definition as read from a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_sites: usize,
    /// Power-law exponent of `J_ij = |i - j|^-alpha`.
    pub alpha: f64,
    #[serde(alias = "B_target")]
    pub b_target: f64,
    /// Optional headerless CSV holding an explicit `n x n` coupling matrix,
    /// which replaces the power law.
    pub couplings: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { n_sites: 8, alpha: 1.0, b_target: DEFAULT_TARGET_FIELD, couplings: None }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<IsingModel> {
        match &self.couplings {
            None => build_model(self.n_sites, self.alpha, self.b_target),
            Some(path) => {
                let j = read_coupling_csv(path)?;
                if j.nrows() != self.n_sites {
                    return Err(Error::Shape { expected: self.n_sites, got: j.nrows() });
                }
                IsingModel::with_couplings(j, self.alpha, self.b_target)
            }
        }
    }
}

/// Square matrix of floats, one row per line, no header.
pub fn read_coupling_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| Error::Config(format!("{}: {v:?}: {e}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Shape { expected: n, got: bad.len() });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// One CSV row per item, header taken from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

#[derive(Serialize, Deserialize)]
struct GapRow {
    #[serde(rename = "B")]
    field: f64,
    gap: f64,
}

pub fn write_gap_csv(path: &Path, profile: &GapProfile) -> Result<()> {
    let rows: Vec<GapRow> = profile.samples.iter().map(|s| GapRow { field: s.field, gap: s.gap }).collect();
    write_csv(path, &rows)
}

/// Reads a profile written by [`write_gap_csv`] for an `n_sites` lattice.
pub fn read_gap_csv(path: &Path, n_sites: usize) -> Result<GapProfile> {
    let rows: Vec<GapRow> = read_csv(path)?;
    GapProfile::new(rows.into_iter().map(|r| GapSample { field: r.field, gap: r.gap }).collect(), ground_sector(n_sites))
}

#[derive(Serialize, Deserialize)]
struct StepRow {
    step: usize,
    lambda: f64,
    #[serde(rename = "B")]
    field: f64,
}

/// Columns `step, lambda, B` with one-based steps.
pub fn write_schedule_csv(path: &Path, schedule: &Schedule) -> Result<()> {
    let rows: Vec<StepRow> =
        schedule.steps().enumerate().map(|(j, (lambda, field))| StepRow { step: j + 1, lambda, field }).collect();
    write_csv(path, &rows)
}

pub fn read_schedule_csv(path: &Path) -> Result<Schedule> {
    let rows: Vec<StepRow> = read_csv(path)?;
    Schedule::new(rows.iter().map(|r| r.lambda).collect(), rows.iter().map(|r| r.field).collect())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetadata {
    pub seed: Option<u64>,
    pub rho: Option<f64>,
    pub b_max: Option<f64>,
    pub b_min: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub metadata: ScheduleMetadata,
    pub steps: usize,
    pub lambdas: Vec<f64>,
    pub fields: Vec<f64>,
}

impl ScheduleFile {
    pub fn new(schedule: &Schedule, metadata: ScheduleMetadata) -> Self {
        Self {
            metadata,
            steps: schedule.len(),
            lambdas: schedule.lambdas().to_vec(),
            fields: schedule.fields().to_vec(),
        }
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.lambdas.clone(), self.fields.clone())
    }
}

pub fn write_schedule_json(path: &Path, schedule: &Schedule, metadata: ScheduleMetadata) -> Result<()> {
    write_json(path, &ScheduleFile::new(schedule, metadata))
}

pub fn read_schedule_json(path: &Path) -> Result<ScheduleFile> {
    read_json(path)
}

#[derive(Serialize, Deserialize)]
struct LayerRow {
    layer: usize,
    gamma: f64,
    beta: f64,
    source_step: Option<usize>,
    m: Option<usize>,
}

/// Columns `layer, gamma, beta, source_step, m`; the last two are empty for
/// schedules without provenance. Layers and source steps are one-based.
pub fn write_qaoa_csv(path: &Path, q: &QaoaSchedule) -> Result<()> {
    let rows: Vec<LayerRow> = q
        .layers()
        .enumerate()
        .map(|(j, (gamma, beta))| {
            let src = q.provenance().get(j);
            LayerRow { layer: j + 1, gamma, beta, source_step: src.map(|s| s.source_step + 1), m: src.map(|s| s.trotter_count) }
        })
        .collect();
    write_csv(path, &rows)
}

pub fn read_qaoa_csv(path: &Path) -> Result<QaoaSchedule> {
    let rows: Vec<LayerRow> = read_csv(path)?;
    let q = QaoaSchedule::new(rows.iter().map(|r| r.gamma).collect(), rows.iter().map(|r| r.beta).collect())?;
    if rows.iter().all(|r| r.source_step.is_some() && r.m.is_some()) {
        let last = rows.len().saturating_sub(1);
        let provenance = rows
            .iter()
            .enumerate()
            .map(|(j, r)| {
                let step = r.source_step.unwrap_or(1).max(1) - 1;
                let boundary = j == 0 || j == last || rows[j - 1].source_step != r.source_step;
                LayerSource { source_step: step, trotter_count: r.m.unwrap_or(1), boundary }
            })
            .collect();
        return q.with_provenance(provenance);
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaoaFile {
    pub layers: usize,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub provenance: Vec<LayerSource>,
    /// `Σ (|β_j| + |γ_j|)`
    pub total_time_sum_abs_both: f64,
    /// `Σ |γ_j|`
    pub total_time_sum_abs_gamma: f64,
}

impl QaoaFile {
    pub fn new(q: &QaoaSchedule) -> Self {
        Self {
            layers: q.len(),
            gammas: q.gammas().to_vec(),
            betas: q.betas().to_vec(),
            provenance: q.provenance().to_vec(),
            total_time_sum_abs_both: qaoa_total_time(q, TimeConvention::SumAbsBoth),
            total_time_sum_abs_gamma: qaoa_total_time(q, TimeConvention::SumAbsGamma),
        }
    }

    pub fn schedule(&self) -> Result<QaoaSchedule> {
        QaoaSchedule::new(self.gammas.clone(), self.betas.clone())?.with_provenance(self.provenance.clone())
    }
}

pub fn write_qaoa_json(path: &Path, q: &QaoaSchedule) -> Result<()> {
    write_json(path, &QaoaFile::new(q))
}

pub fn read_qaoa_json(path: &Path) -> Result<QaoaSchedule> {
    read_json::<QaoaFile>(path)?.schedule()
}

pub fn write_report_json(path: &Path, report: &OptReport) -> Result<()> {
    write_json(path, report)
}

pub fn write_trace_csv(path: &Path, trace: &[TracePoint]) -> Result<()> {
    write_csv(path, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qaoa::assemble;

    #[test]
    fn schedule_round_trips_through_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let s = Schedule::new(vec![1.25, -0.5, 0.0625], vec![20.0, 1.0 / 3.0, 0.1]).unwrap();
        let csv = dir.path().join("s.csv");
        write_schedule_csv(&csv, &s).unwrap();
        assert_eq!(read_schedule_csv(&csv).unwrap(), s);
        let header = std::fs::read_to_string(&csv).unwrap();
        assert!(header.starts_with("step,lambda,B\n1,"));

        let json = dir.path().join("s.json");
        let meta = ScheduleMetadata { seed: Some(7), rho: Some(10.0), ..Default::default() };
        write_schedule_json(&json, &s, meta.clone()).unwrap();
        let back = read_schedule_json(&json).unwrap();
        assert_eq!(back.metadata, meta);
        assert_eq!(back.schedule().unwrap(), s);
    }

    #[test]
    fn qaoa_round_trips_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let s = Schedule::new(vec![1.0, 0.5], vec![2.0, 0.3]).unwrap();
        let q = assemble(&s, &[2, 3]).unwrap();
        let csv = dir.path().join("q.csv");
        write_qaoa_csv(&csv, &q).unwrap();
        let back = read_qaoa_csv(&csv).unwrap();
        assert_eq!(back.gammas(), q.gammas());
        assert_eq!(back.betas(), q.betas());
        for (a, b) in back.provenance().iter().zip(q.provenance()) {
            assert_eq!((a.source_step, a.trotter_count), (b.source_step, b.trotter_count));
        }

        let json = dir.path().join("q.json");
        write_qaoa_json(&json, &q).unwrap();
        let file: QaoaFile = read_json(&json).unwrap();
        assert!((file.total_time_sum_abs_gamma - 1.5).abs() < 1e-12);
        assert_eq!(read_qaoa_json(&json).unwrap(), q);
    }

    #[test]
    fn model_config_reads_explicit_couplings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.csv");
        std::fs::write(&path, "0, 1, 0.5\n1, 0, 1\n0.5, 1, 0\n").unwrap();
        let cfg = ModelConfig { n_sites: 3, couplings: Some(path), ..Default::default() };
        let model = cfg.build().unwrap();
        assert_eq!(model.coupling(0, 2), 0.5);
        let wrong = ModelConfig { n_sites: 4, ..cfg };
        assert!(wrong.build().is_err());
    }

    #[test]
    fn model_config_accepts_spec_key_names() {
        let cfg: ModelConfig = serde_json::from_str(r#"{"n_sites": 6, "B_target": 0.2}"#).unwrap();
        assert_eq!((cfg.n_sites, cfg.alpha, cfg.b_target), (6, 1.0, 0.2));
    }

    #[test]
    fn gap_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let model = build_model(4, 1.0, 0.1).unwrap();
        let profile = crate::spinmodel::gap_profile(&model, &[2.0, 1.0, 0.5]).unwrap();
        let path = dir.path().join("gap.csv");
        write_gap_csv(&path, &profile).unwrap();
        assert_eq!(read_gap_csv(&path, 4).unwrap(), profile);
    }
}
