//! Dense reference implementations built from Kronecker products of Pauli
//! matrices. Only usable for a handful of sites.
#![allow(dead_code)]

use mte::{QuantumState, C64};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn kron_chain(n: usize, site_ops: &[(usize, &DMatrix<f64>)]) -> DMatrix<f64> {
    let id = DMatrix::<f64>::identity(2, 2);
    // Site 0 is the least significant bit, so it sits rightmost.
    let mut out = DMatrix::<f64>::identity(1, 1);
    for site in (0..n).rev() {
        let op = site_ops.iter().find(|(s, _)| *s == site).map_or(&id, |(_, m)| *m);
        out = out.kronecker(op);
    }
    out
}

pub fn pauli_z() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn pauli_x() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// `Σ_{i<j} |i-j|^-alpha Z_i Z_j`
pub fn problem(n: usize, alpha: f64) -> DMatrix<f64> {
    let z = pauli_z();
    let mut h = DMatrix::zeros(1 << n, 1 << n);
    for i in 0..n {
        for j in i + 1..n {
            h += kron_chain(n, &[(i, &z), (j, &z)]) / ((j - i) as f64).powf(alpha);
        }
    }
    h
}

/// `Σ_i X_i`
pub fn mixer(n: usize) -> DMatrix<f64> {
    let x = pauli_x();
    let mut h = DMatrix::zeros(1 << n, 1 << n);
    for i in 0..n {
        h += kron_chain(n, &[(i, &x)]);
    }
    h
}

pub fn hamiltonian(n: usize, alpha: f64, field: f64) -> DMatrix<f64> {
    problem(n, alpha) + mixer(n) * field
}

/// `exp(-i tau h)` for real symmetric `h`.
pub fn expm(h: &DMatrix<f64>, tau: f64) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        h.nrows(),
        eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -tau * e)),
    ));
    &v * d * v.adjoint()
}

pub fn apply(u: &DMatrix<C64>, psi: &QuantumState) -> QuantumState {
    let x = DVector::from_column_slice(psi.amplitudes());
    QuantumState::new((u * x).as_slice().to_vec())
}

pub fn expectation(h: &DMatrix<f64>, psi: &QuantumState) -> f64 {
    let x = DVector::from_column_slice(psi.amplitudes());
    let hc = h.map(|v| C64::new(v, 0.0));
    x.dotc(&(hc * &x)).re
}

pub fn ground(h: &DMatrix<f64>) -> (f64, QuantumState) {
    let eig = SymmetricEigen::new(h.clone());
    let k = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(k).iter().map(|&x| C64::new(x, 0.0)).collect();
    (eig.eigenvalues[k], QuantumState::new(v))
}

pub fn max_diff(a: &QuantumState, b: &QuantumState) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `|-x>^n` written out independently.
pub fn all_minus(n: usize) -> QuantumState {
    let mut psi = DVector::from_element(1, C64::new(1.0, 0.0));
    let minus = DVector::from_column_slice(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]).unscale(2f64.sqrt());
    for _ in 0..n {
        psi = minus.kronecker(&psi);
    }
    QuantumState::new(psi.as_slice().to_vec())
}
