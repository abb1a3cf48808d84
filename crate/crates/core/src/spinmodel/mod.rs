//! The long-range transverse-field Ising model
//!
//! ```text
//! H(B) = H_A + B H_B,   H_A = Σ_{i<j} J_ij σ_z^i σ_z^j,   H_B = Σ_i σ_x^i
//! ```
//!
//! with antiferromagnetic couplings `J_ij = 1/|i-j|^α`. `H_A` is diagonal in
//! the computational basis and is precomputed once; `H_B` is applied as a sum
//! of single-bit flips, so the Hamiltonian is never materialised.

mod gap;
mod sector;

pub use gap::{gap_profile, log_grid, GapProfile, GapSample};
pub use sector::{
    build_sector_basis, ground_sector, sector_spectrum, Parity, SectorBasis, SectorLabel,
    SectorOperator, SectorSpectrum,
};

use nalgebra::DMatrix;

use crate::state::check_dims;
use crate::{Error, QuantumState, Result, C64};

/// Largest lattice for which dense `2^n` state vectors are supported.
pub const MAX_SITES: usize = 14;

/// Default target field `B(t_f)`.
pub const DEFAULT_TARGET_FIELD: f64 = 0.1;

/// Matrix-free action of `H(B) = H_A + B H_B` on some basis of states.
///
/// Implemented by [`IsingModel`] on the full `2^n` space and by
/// [`SectorOperator`] on a parity sector. `H_A` must be diagonal in the
/// chosen basis and `H_B` real symmetric.
pub trait IsingOperator: Sync {
    fn n_sites(&self) -> usize;

    fn dim(&self) -> usize;

    /// Diagonal of `H_A`.
    fn problem_diagonal(&self) -> &[f64];

    /// Writes `H_B x` into `out`.
    fn apply_mixer(&self, x: &[C64], out: &mut [C64]);

    /// Smallest and largest entry of [`problem_diagonal`](Self::problem_diagonal).
    fn diagonal_range(&self) -> (f64, f64);

    /// Writes `H(field) x` into `out`.
    fn apply_hamiltonian(&self, field: f64, x: &[C64], out: &mut [C64]) {
        self.apply_mixer(x, out);
        for ((o, d), xi) in out.iter_mut().zip(self.problem_diagonal()).zip(x) {
            *o = *o * field + xi * *d;
        }
    }

    /// Upper bound on half the spectral width of `H(field)`.
    fn spectral_half_width(&self, field: f64) -> f64 {
        let (lo, hi) = self.diagonal_range();
        0.5 * (hi - lo) + field.abs() * self.n_sites() as f64
    }

    /// `<x|H(field)|x>` (real part).
    fn expectation(&self, field: f64, x: &[C64]) -> f64 {
        let mut hx = vec![C64::default(); x.len()];
        self.apply_hamiltonian(field, x, &mut hx);
        crate::linalg::dot(x, &hx).re
    }
}

#[derive(Clone, Debug)]
pub struct IsingModel {
    n_sites: usize,
    couplings: DMatrix<f64>,
    coupling_exponent: f64,
    target_field: f64,
    diagonal: Vec<f64>,
    diagonal_range: (f64, f64),
}

/// Long-range antiferromagnet with `J_ij = 1/|i-j|^alpha`.
pub fn build_model(n: usize, alpha: f64, target_field: f64) -> Result<IsingModel> {
    check_sites(n)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("coupling exponent must be positive, got {alpha}")));
    }
    let couplings = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            1.0 / (i.abs_diff(j) as f64).powf(alpha)
        }
    });
    IsingModel::from_parts(couplings, alpha, target_field)
}

impl IsingModel {
    /// A model with an explicit coupling matrix. The matrix must be symmetric
    /// with zero diagonal, positive off-diagonal entries and invariant under
    /// the spatial inversion `i -> n-1-i`.
    pub fn with_couplings(couplings: DMatrix<f64>, alpha: f64, target_field: f64) -> Result<Self> {
        let n = couplings.nrows();
        check_sites(n)?;
        if couplings.ncols() != n {
            return Err(Error::Shape { expected: n, got: couplings.ncols() });
        }
        for i in 0..n {
            if couplings[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("coupling diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let c = couplings[(i, j)];
                if c != couplings[(j, i)] {
                    return Err(Error::invalid(format!("couplings not symmetric at ({i}, {j})")));
                }
                if i != j && !(c > 0.0 && c.is_finite()) {
                    return Err(Error::invalid(format!("coupling ({i}, {j}) = {c} is not antiferromagnetic")));
                }
                if c != couplings[(n - 1 - i, n - 1 - j)] {
                    return Err(Error::invalid(format!("couplings break inversion symmetry at ({i}, {j})")));
                }
            }
        }
        Self::from_parts(couplings, alpha, target_field)
    }

    fn from_parts(couplings: DMatrix<f64>, alpha: f64, target_field: f64) -> Result<Self> {
        if !target_field.is_finite() {
            return Err(Error::invalid("target field must be finite"));
        }
        let n_sites = couplings.nrows();
        let diagonal = compute_diagonal(n_sites, &couplings);
        let diagonal_range = diagonal
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        Ok(Self { n_sites, couplings, coupling_exponent: alpha, target_field, diagonal, diagonal_range })
    }

    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    /// `J_ij` with zero-based site indices.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[(i, j)]
    }

    pub fn coupling_exponent(&self) -> f64 {
        self.coupling_exponent
    }

    pub fn target_field(&self) -> f64 {
        self.target_field
    }

    /// Same couplings, different target field.
    pub fn with_target_field(&self, target_field: f64) -> Self {
        Self { target_field, ..self.clone() }
    }
}

impl IsingOperator for IsingModel {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn dim(&self) -> usize {
        1 << self.n_sites
    }

    fn problem_diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    fn apply_mixer(&self, x: &[C64], out: &mut [C64]) {
        let n = self.n_sites;
        for (z, o) in out.iter_mut().enumerate() {
            let mut acc = C64::default();
            for i in 0..n {
                acc += x[z ^ (1 << i)];
            }
            *o = acc;
        }
    }

    fn diagonal_range(&self) -> (f64, f64) {
        self.diagonal_range
    }
}

/// `<z|H_A|z>` for every basis state `z`.
pub fn diagonal_energies(model: &IsingModel) -> Vec<f64> {
    model.diagonal.clone()
}

/// `H(field) |state>` without building the matrix.
pub fn apply_hamiltonian(state: &QuantumState, field: f64, model: &IsingModel) -> Result<QuantumState> {
    check_dims(model.dim(), state.dim())?;
    let mut out = vec![C64::default(); state.dim()];
    model.apply_hamiltonian(field, state.amplitudes(), &mut out);
    Ok(QuantumState::new(out))
}

/// `σ_z` eigenvalue of spin `site` in basis state `z`.
#[inline]
pub fn spin(z: usize, site: usize) -> f64 {
    if z >> site & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn compute_diagonal(n: usize, couplings: &DMatrix<f64>) -> Vec<f64> {
    let pairs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, couplings[(i, j)]))
        .collect();
    (0..1usize << n)
        .map(|z| {
            pairs
                .iter()
                .map(|&(i, j, c)| if (z >> i ^ z >> j) & 1 == 0 { c } else { -c })
                .sum()
        })
        .collect()
}

fn check_sites(n: usize) -> Result<()> {
    if (2..=MAX_SITES).contains(&n) {
        Ok(())
    } else {
        Err(Error::Capacity(n))
    }
}
