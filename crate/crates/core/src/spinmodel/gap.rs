use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ground_sector, IsingModel, IsingOperator, SectorBasis, SectorLabel, SectorOperator};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub field: f64,
    pub gap: f64,
}

/// Gap between the two lowest levels of the ground-state sector, sampled on a
/// decreasing field grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub samples: Vec<GapSample>,
    pub sector: SectorLabel,
}

impl GapProfile {
    /// Builds a profile from precomputed samples, checking the grid is
    /// strictly decreasing and every gap is positive.
    pub fn new(samples: Vec<GapSample>, sector: SectorLabel) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("a gap profile needs at least two samples"));
        }
        for w in samples.windows(2) {
            if !(w[1].field < w[0].field) {
                return Err(Error::invalid(format!(
                    "field grid must be strictly decreasing ({} then {})",
                    w[0].field, w[1].field
                )));
            }
        }
        if let Some(s) = samples.iter().find(|s| !(s.gap > 0.0)) {
            return Err(Error::ClosedGap { field: s.field, gap: s.gap });
        }
        Ok(Self { samples, sector })
    }

    /// Sample with the smallest gap.
    pub fn minimum(&self) -> GapSample {
        *self.samples.iter().min_by(|a, b| a.gap.total_cmp(&b.gap)).expect("non-empty profile")
    }

    pub fn fields(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.field).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.gap).collect()
    }
}

/// `Δ(B) = E_1(B) - E_0(B)` inside the sector of the initial state.
pub fn gap_profile(model: &IsingModel, field_grid: &[f64]) -> Result<GapProfile> {
    if field_grid.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::invalid("gap grid fields must be positive"));
    }
    if field_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("gap grid must be strictly decreasing"));
    }
    let sector = ground_sector(model.n_sites());
    let basis = SectorBasis::new(model.n_sites(), sector);
    if basis.dimension() < 2 {
        return Err(Error::invalid("ground sector has fewer than two states"));
    }
    let op = SectorOperator::new(model, &basis);
    let samples = field_grid
        .par_iter()
        .map(|&field| {
            let ev = op.lowest_eigenvalues(field, 2);
            GapSample { field, gap: ev[1] - ev[0] }
        })
        .collect();
    GapProfile::new(samples, sector)
}

/// Log-spaced decreasing grid from `b_max` down to `b_min`, endpoints exact.
pub fn log_grid(b_max: f64, b_min: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && b_max > b_min && b_min > 0.0);
    let ratio = (b_min / b_max).ln();
    let mut grid: Vec<f64> =
        (0..points).map(|k| b_max * (ratio * k as f64 / (points - 1) as f64).exp()).collect();
    grid[0] = b_max;
    grid[points - 1] = b_min;
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinmodel::build_model;

    #[test]
    fn two_site_gap_is_analytic() {
        let m = build_model(2, 1.0, 0.1).unwrap();
        let p = gap_profile(&m, &[2.0, 1.0, 0.5]).unwrap();
        for s in &p.samples {
            let expected = 2.0 * (1.0 + 4.0 * s.field * s.field).sqrt();
            assert!((s.gap - expected).abs() < 1e-12);
        }
        assert!((p.samples[1].gap - 2.0 * 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        let m = build_model(2, 1.0, 0.1).unwrap();
        assert!(gap_profile(&m, &[1.0, 2.0]).is_err());
        assert!(gap_profile(&m, &[1.0, 0.0]).is_err());
        assert!(GapProfile::new(
            vec![GapSample { field: 1.0, gap: 0.0 }, GapSample { field: 0.5, gap: 1.0 }],
            ground_sector(2)
        )
        .is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(20.0, 0.1, 50);
        assert_eq!(g[0], 20.0);
        assert_eq!(g[49], 0.1);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }
}
