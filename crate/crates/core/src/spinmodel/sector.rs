//! Parity sectors.
//!
//! `H(B)` commutes with the global spin flip `z -> !z` and with the spatial
//! inversion `i -> n-1-i`. Their joint eigenspaces are spanned by
//! symmetrised group orbits of computational basis states, one basis vector
//! per orbit whose projection survives, normalised and ordered by the smallest
//! index in the orbit.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{IsingModel, IsingOperator};
use crate::{Error, QuantumState, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn from_sign(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            s => Err(Error::invalid(format!("parity must be +1 or -1, got {s}"))),
        }
    }
}

/// Eigenvalues of the spin-flip and spatial-inversion operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorLabel {
    pub spin: Parity,
    pub spatial: Parity,
}

impl SectorLabel {
    pub const ALL: [SectorLabel; 4] = [
        SectorLabel { spin: Parity::Even, spatial: Parity::Even },
        SectorLabel { spin: Parity::Even, spatial: Parity::Odd },
        SectorLabel { spin: Parity::Odd, spatial: Parity::Even },
        SectorLabel { spin: Parity::Odd, spatial: Parity::Odd },
    ];
}

/// The sector containing `|-x>^n`, the ground state of `H_B` and therefore
/// the sector in which every evolution from it stays. For even `n` this is
/// the even-even sector.
pub fn ground_sector(n_sites: usize) -> SectorLabel {
    let spin = if n_sites % 2 == 0 { Parity::Even } else { Parity::Odd };
    SectorLabel { spin, spatial: Parity::Even }
}

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct SectorBasis {
    label: SectorLabel,
    n_sites: usize,
    vectors: Vec<Vec<(u32, f64)>>,
    lookup: Vec<(u32, f64)>,
}

pub fn build_sector_basis(model: &IsingModel, spin: Parity, spatial: Parity) -> SectorBasis {
    SectorBasis::new(model.n_sites(), SectorLabel { spin, spatial })
}

impl SectorBasis {
    pub fn new(n_sites: usize, label: SectorLabel) -> Self {
        let dim = 1usize << n_sites;
        let mask = dim - 1;
        let mut vectors = Vec::new();
        let mut lookup = vec![(ABSENT, 0.0); dim];
        let (ps, pi) = (label.spin.sign(), label.spatial.sign());

        for z in 0..dim {
            let flipped = !z & mask;
            let inverted = reverse_bits(z, n_sites);
            let both = !inverted & mask;
            if flipped < z || inverted < z || both < z {
                continue;
            }
            let mut terms: Vec<(usize, f64)> = Vec::with_capacity(4);
            for (image, character) in [(z, 1.0), (flipped, ps), (inverted, pi), (both, ps * pi)] {
                match terms.iter_mut().find(|(i, _)| *i == image) {
                    Some(t) => t.1 += character,
                    None => terms.push((image, character)),
                }
            }
            terms.retain(|&(_, c)| c != 0.0);
            if terms.is_empty() {
                continue;
            }
            terms.sort_unstable_by_key(|&(i, _)| i);
            let norm = terms.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
            let col = vectors.len() as u32;
            let vector: Vec<(u32, f64)> = terms
                .into_iter()
                .map(|(i, c)| {
                    lookup[i] = (col, c / norm);
                    (i as u32, c / norm)
                })
                .collect();
            vectors.push(vector);
        }
        Self { label, n_sites, vectors, lookup }
    }

    pub fn label(&self) -> SectorLabel {
        self.label
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    /// Sparse basis vectors as `(full index, coefficient)` lists.
    pub fn vectors(&self) -> &[Vec<(u32, f64)>] {
        &self.vectors
    }

    /// Sector coordinates to full-space amplitudes.
    pub fn lift(&self, coords: &[C64]) -> Vec<C64> {
        debug_assert_eq!(coords.len(), self.dimension());
        let mut out = vec![C64::default(); 1 << self.n_sites];
        for (vector, &a) in self.vectors.iter().zip(coords) {
            for &(z, c) in vector {
                out[z as usize] = a * c;
            }
        }
        out
    }

    /// Orthogonal projection of full-space amplitudes onto sector coordinates.
    pub fn project(&self, full: &[C64]) -> Vec<C64> {
        debug_assert_eq!(full.len(), 1 << self.n_sites);
        self.vectors
            .iter()
            .map(|vector| vector.iter().map(|&(z, c)| full[z as usize] * c).sum())
            .collect()
    }

    /// `(basis index, coefficient)` of the basis vector containing `z`, if any.
    pub fn locate(&self, z: usize) -> Option<(usize, f64)> {
        let (col, c) = self.lookup[z];
        (col != ABSENT).then_some((col as usize, c))
    }

    /// The `2^n x dimension` isometry whose columns are the basis vectors.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(1 << self.n_sites, self.dimension());
        for (col, vector) in self.vectors.iter().enumerate() {
            for &(z, c) in vector {
                m[(z as usize, col)] = c;
            }
        }
        m
    }
}

fn reverse_bits(z: usize, n: usize) -> usize {
    (z.reverse_bits() >> (usize::BITS as usize - n)) & ((1 << n) - 1)
}

/// `H(B)` restricted to one parity sector, with `H_B` stored sparse.
#[derive(Clone, Debug)]
pub struct SectorOperator {
    n_sites: usize,
    diagonal: Vec<f64>,
    diagonal_range: (f64, f64),
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SectorOperator {
    pub fn new(model: &IsingModel, basis: &SectorBasis) -> Self {
        assert_eq!(model.n_sites(), basis.n_sites(), "sector built for a different lattice");
        let n = model.n_sites();
        let dim = basis.dimension();
        let full_diag = model.problem_diagonal();
        let diagonal: Vec<f64> =
            basis.vectors().iter().map(|v| full_diag[v[0].0 as usize]).collect();
        let diagonal_range = diagonal
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));

        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut scratch = vec![0.0; dim];
        let mut touched = Vec::new();
        row_ptr.push(0);
        for vector in basis.vectors() {
            for &(z, c) in vector {
                for i in 0..n {
                    if let Some((r, c2)) = basis.locate(z as usize ^ (1 << i)) {
                        if scratch[r] == 0.0 {
                            touched.push(r);
                        }
                        scratch[r] += c * c2;
                    }
                }
            }
            touched.sort_unstable();
            for &r in &touched {
                if scratch[r].abs() > 1e-14 {
                    cols.push(r as u32);
                    vals.push(scratch[r]);
                }
                scratch[r] = 0.0;
            }
            touched.clear();
            row_ptr.push(cols.len());
        }
        Self { n_sites: n, diagonal, diagonal_range, row_ptr, cols, vals }
    }

    /// Dense real symmetric matrix of `H(field)` in sector coordinates.
    pub fn dense(&self, field: f64) -> DMatrix<f64> {
        let dim = self.diagonal.len();
        let mut m = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            m[(r, r)] = self.diagonal[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k] as usize)] += field * self.vals[k];
            }
        }
        m
    }

    /// Ascending eigenvalues with the matching sector-coordinate eigenvectors
    /// as columns.
    pub fn spectrum(&self, field: f64) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.dense(field));
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        (values, vectors)
    }

    /// The `count` lowest eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, field: f64, count: usize) -> Vec<f64> {
        self.lowest_eigenpairs(field, count).0
    }

    /// The `count` lowest eigenpairs, eigenvectors as columns in sector
    /// coordinates. Large sectors use Lanczos with full reorthogonalisation,
    /// stopped once every wanted Ritz pair has residual below `1e-10`.
    pub fn lowest_eigenpairs(&self, field: f64, count: usize) -> (Vec<f64>, DMatrix<f64>) {
        let dim = self.diagonal.len();
        let count = count.min(dim);
        if dim <= LANCZOS_MIN_DIM {
            let (mut values, vectors) = self.spectrum(field);
            values.truncate(count);
            return (values, vectors.columns(0, count).into_owned());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dot_real(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut basis = vec![v];
        let (mut alpha, mut beta): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut w = vec![0.0; dim];
        loop {
            let last = basis.last().expect("non-empty");
            self.apply_real(field, last, &mut w);
            alpha.push(dot_real(last, &w));
            for _ in 0..2 {
                for q in &basis {
                    let c = dot_real(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = dot_real(&w, &w).sqrt();
            let exhausted = basis.len() == dim || b < 1e-12;
            if exhausted || (alpha.len() > count && alpha.len() % 5 == 0) {
                let (values, s) = tridiagonal_eigen(&alpha, &beta);
                let k = alpha.len();
                let settled = (0..count).all(|i| b * s[(k - 1, i)].abs() <= 1e-10 * (1.0 + values[i].abs()));
                if settled || exhausted {
                    let vectors = DMatrix::from_fn(dim, count, |r, i| (0..k).map(|j| basis[j][r] * s[(j, i)]).sum());
                    return (values[..count].to_vec(), vectors);
                }
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
    }

    fn apply_real(&self, field: f64, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *o = self.diagonal[r] * x[r] + field * acc;
        }
    }

    /// Ascending eigenvalues only.
    pub fn eigenvalues(&self, field: f64) -> Vec<f64> {
        let mut values: Vec<f64> = self.dense(field).symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

const LANCZOS_MIN_DIM: usize = 256;

fn dot_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ascending eigenvalues and matching eigenvector columns of the symmetric
/// tridiagonal matrix with diagonal `alpha` and off-diagonal `beta`.
fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

impl IsingOperator for SectorOperator {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn problem_diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    fn apply_mixer(&self, x: &[C64], out: &mut [C64]) {
        for (o, bounds) in out.iter_mut().zip(self.row_ptr.windows(2)) {
            let (cols, vals) = (&self.cols[bounds[0]..bounds[1]], &self.vals[bounds[0]..bounds[1]]);
            let (mut re, mut im) = (0.0, 0.0);
            for (&c, &v) in cols.iter().zip(vals) {
                let xc = x[c as usize];
                re += xc.re * v;
                im += xc.im * v;
            }
            *o = C64::new(re, im);
        }
    }

    fn diagonal_range(&self) -> (f64, f64) {
        self.diagonal_range
    }
}

/// Eigen-decomposition of `H(B)` inside one sector, eigenvectors lifted to the
/// full space.
#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<QuantumState>,
}

pub fn sector_spectrum(model: &IsingModel, field: f64, sector: &SectorBasis) -> Result<SectorSpectrum> {
    if sector.dimension() == 0 {
        return Err(Error::invalid("sector is empty"));
    }
    if sector.n_sites() != model.n_sites() {
        return Err(Error::Shape { expected: model.n_sites(), got: sector.n_sites() });
    }
    let op = SectorOperator::new(model, sector);
    let (eigenvalues, vectors) = op.spectrum(field);
    let eigenvectors = vectors
        .column_iter()
        .map(|col| {
            let coords: Vec<C64> = col.iter().map(|&x| C64::new(x, 0.0)).collect();
            QuantumState::new(sector.lift(&coords))
        })
        .collect();
    Ok(SectorSpectrum { eigenvalues, eigenvectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinmodel::build_model;

    const EE: SectorLabel = SectorLabel { spin: Parity::Even, spatial: Parity::Even };

    #[test]
    fn lanczos_matches_dense_lowest_levels() {
        let m = build_model(10, 1.0, 0.1).unwrap();
        let basis = SectorBasis::new(10, EE);
        let op = SectorOperator::new(&m, &basis);
        assert!(op.dim() > LANCZOS_MIN_DIM);
        for field in [20.0, 0.43, 0.1] {
            let dense = op.eigenvalues(field);
            let dense_vectors = op.spectrum(field).1;
            let (lanczos, vectors) = op.lowest_eigenpairs(field, 3);
            for k in 0..3 {
                assert!((dense[k] - lanczos[k]).abs() < 1e-10, "B={field} k={k}");
                let overlap = dense_vectors.column(k).dot(&vectors.column(k)).abs();
                assert!((overlap - 1.0).abs() < 1e-9, "B={field} k={k} overlap {overlap}");
            }
        }
    }

    #[test]
    fn sector_dimensions() {
        assert_eq!(SectorBasis::new(2, EE).dimension(), 2);
        assert_eq!(SectorBasis::new(8, EE).dimension(), 72);
        for n in 2..=10 {
            let total: usize = SectorLabel::ALL.iter().map(|&l| SectorBasis::new(n, l).dimension()).sum();
            assert_eq!(total, 1 << n, "n = {n}");
        }
    }

    #[test]
    fn two_site_sector_matrix() {
        let m = build_model(2, 1.0, 0.1).unwrap();
        let op = SectorOperator::new(&m, &SectorBasis::new(2, EE));
        let b = 0.7;
        let dense = op.dense(b);
        assert!((dense[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((dense[(1, 1)] + 1.0).abs() < 1e-15);
        assert!((dense[(0, 1)] - 2.0 * b).abs() < 1e-15);
        let ev = op.eigenvalues(b);
        let r = (1.0 + 4.0 * b * b).sqrt();
        assert!((ev[0] + r).abs() < 1e-14 && (ev[1] - r).abs() < 1e-14);
        assert_eq!(op.eigenvalues(0.0), vec![-1.0, 1.0]);
    }

    #[test]
    fn basis_is_orthonormal() {
        for label in SectorLabel::ALL {
            let v = SectorBasis::new(6, label).to_dense();
            let g = v.transpose() * &v;
            let err = (g - DMatrix::identity(v.ncols(), v.ncols())).abs().max();
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn lift_then_project_is_identity() {
        let b = SectorBasis::new(5, ground_sector(5));
        let coords: Vec<C64> = (0..b.dimension()).map(|i| C64::new(i as f64, -0.5)).collect();
        let back = b.project(&b.lift(&coords));
        for (x, y) in coords.iter().zip(&back) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn sector_spectrum_vectors_are_eigenvectors() {
        let m = build_model(6, 1.0, 0.1).unwrap();
        let s = sector_spectrum(&m, 1.3, &SectorBasis::new(6, EE)).unwrap();
        for (e, v) in s.eigenvalues.iter().zip(&s.eigenvectors).take(5) {
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let hv = crate::spinmodel::apply_hamiltonian(v, 1.3, &m).unwrap();
            for (a, b) in hv.amplitudes().iter().zip(v.amplitudes()) {
                assert!((a - b * *e).norm() < 1e-10);
            }
        }
    }
}
