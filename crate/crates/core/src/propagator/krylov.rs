//! Hermitian Lanczos approximation of `exp(-i tau H) x`.
//!
//! The Krylov space is grown one vector at a time until the a-posteriori
//! estimate `beta_k |e_k^T exp(-i tau T_k) e_1|` drops below the tolerance.
//! Long steps are split into equal substeps so that `|tau| * halfwidth(H)`
//! stays below [`KrylovConfig::max_phase`] per substep; this keeps the
//! subspace dimension bounded independent of the step length.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::linalg::{axpy, dot, norm, scale};
use crate::spinmodel::IsingOperator;
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovConfig {
    /// Residual-estimate tolerance per substep.
    pub tol: f64,
    /// Largest subspace dimension before giving up.
    pub max_dim: usize,
    /// Largest `|tau| * halfwidth` handled by a single Lanczos run.
    pub max_phase: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_dim: 128, max_phase: 24.0 }
    }
}

impl KrylovConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// A converged Lanczos decomposition `x ≈ norm * V Q diag(.) Q^T e_1`.
#[derive(Clone, Debug)]
pub(crate) struct LanczosExp {
    pub basis: Vec<Vec<C64>>,
    pub evals: Vec<f64>,
    /// Eigenvectors of the tridiagonal matrix, one per column.
    pub evecs: DMatrix<f64>,
    pub norm: f64,
}

impl LanczosExp {
    /// `Q^T e_1`.
    pub fn weights(&self) -> Vec<f64> {
        self.evecs.row(0).iter().copied().collect()
    }
}

fn exp_coefficients(evals: &[f64], evecs: &DMatrix<f64>, tau: f64) -> Vec<C64> {
    let k = evals.len();
    let phases: Vec<C64> = evals
        .iter()
        .enumerate()
        .map(|(a, &th)| C64::from_polar(evecs[(0, a)], -tau * th))
        .collect();
    (0..k)
        .map(|j| (0..k).map(|a| phases[a] * evecs[(j, a)]).sum())
        .collect()
}

/// Implicit QL iteration on the symmetric tridiagonal matrix with diagonal
/// `d` and off-diagonal `e` (`e[k-1]` is scratch). Eigenvalues overwrite `d`;
/// each row in `rows` is rotated along, so starting from rows of the identity
/// yields the matching rows of the eigenvector matrix. Returns `false` if an
/// eigenvalue needs more than 60 sweeps.
fn implicit_ql(d: &mut [f64], e: &mut [f64], rows: &mut [Vec<f64>]) -> bool {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > 60 {
                return false;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = (g * g + 1.0).sqrt();
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in rows.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    true
}

fn unit_row(n: usize, i: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    row[i] = 1.0;
    row
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let k = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = beta.to_vec();
    e.push(0.0);
    let mut rows: Vec<Vec<f64>> = (0..k).map(|i| unit_row(k, i)).collect();
    if implicit_ql(&mut d, &mut e, &mut rows) {
        return (d, DMatrix::from_fn(k, k, |i, j| rows[i][j]));
    }
    let t = DMatrix::from_fn(k, k, |i, j| match i.abs_diff(j) {
        0 => alpha[i],
        1 => beta[i.min(j)],
        _ => 0.0,
    });
    let eig = SymmetricEigen::new(t);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `|e_k^T exp(-i tau T) e_1|` for the `k x k` tridiagonal `T`, tracking only
/// the first and last eigenvector rows so the check costs `O(k^2)`.
fn last_coefficient(alpha: &[f64], beta: &[f64], tau: f64) -> f64 {
    let n = alpha.len();
    if n == 1 {
        return 1.0;
    }
    let mut d = alpha.to_vec();
    let mut e = beta.to_vec();
    e.push(0.0);
    let mut rows = vec![unit_row(n, 0), unit_row(n, n - 1)];
    if !implicit_ql(&mut d, &mut e, &mut rows) {
        let (evals, evecs) = tridiagonal_eigen(alpha, beta);
        return exp_coefficients(&evals, &evecs, tau)[n - 1].norm();
    }
    (0..n)
        .map(|a| C64::from_polar(rows[0][a] * rows[1][a], -tau * d[a]))
        .sum::<C64>()
        .norm()
}

/// One Lanczos run for `exp(-i tau H(field)) x`, returning the propagated
/// vector together with the decomposition that produced it.
pub(crate) fn lanczos_exp<O: IsingOperator + ?Sized>(
    op: &O,
    field: f64,
    x: &[C64],
    tau: f64,
    cfg: &KrylovConfig,
) -> Result<(Vec<C64>, LanczosExp)> {
    let dim = x.len();
    let x_norm = norm(x);
    if x_norm == 0.0 || tau == 0.0 {
        let decomposition = LanczosExp {
            basis: vec![x.to_vec()],
            evals: vec![0.0],
            evecs: DMatrix::identity(1, 1),
            norm: 1.0,
        };
        return Ok((x.to_vec(), decomposition));
    }
    let max_dim = cfg.max_dim.min(dim).max(1);
    let phase = tau.abs() * op.spectral_half_width(field);
    let first_check = ((0.5 * phase).ceil() as usize).clamp(2, max_dim);

    let mut v0 = x.to_vec();
    scale(1.0 / x_norm, &mut v0);
    let mut basis = vec![v0];
    let mut alpha: Vec<f64> = Vec::with_capacity(max_dim);
    let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
    let mut w = vec![C64::default(); dim];
    let mut residual = f64::INFINITY;

    for k in 0..max_dim {
        op.apply_hamiltonian(field, &basis[k], &mut w);
        let a = dot(&basis[k], &w).re;
        axpy(C64::new(-a, 0.0), &basis[k], &mut w);
        if k > 0 {
            axpy(C64::new(-beta[k - 1], 0.0), &basis[k - 1], &mut w);
        }
        // Second Gram-Schmidt pass against the two latest vectors.
        let c = dot(&basis[k], &w);
        axpy(-c, &basis[k], &mut w);
        let a = a + c.re;
        if k > 0 {
            let c = dot(&basis[k - 1], &w);
            axpy(-c, &basis[k - 1], &mut w);
        }
        alpha.push(a);
        let b = norm(&w);
        let size = k + 1;
        // A basis spanning the whole space is exact.
        let breakdown = size == dim || b <= 1e-13 * (a.abs() + op.spectral_half_width(field));
        let check = breakdown
            || size == max_dim
            || (size >= first_check && (size - first_check) % 2 == 0);
        if check {
            residual = if breakdown { 0.0 } else { b * last_coefficient(&alpha, &beta, tau) };
            if residual < cfg.tol {
                let (evals, evecs) = tridiagonal_eigen(&alpha, &beta);
                let coeffs = exp_coefficients(&evals, &evecs, tau);
                let decomposition = LanczosExp { basis, evals, evecs, norm: x_norm };
                let mut out = vec![C64::default(); dim];
                for (c, v) in coeffs.iter().zip(&decomposition.basis) {
                    axpy(c * x_norm, v, &mut out);
                }
                return Ok((out, decomposition));
            }
        }
        if breakdown || size == max_dim {
            break;
        }
        beta.push(b);
        scale(1.0 / b, &mut w);
        basis.push(std::mem::replace(&mut w, vec![C64::default(); dim]));
    }
    Err(Error::KrylovNonConvergence { max_dim, residual })
}

/// Number of equal substeps used for `exp(-i tau H(field))`.
pub(crate) fn substeps<O: IsingOperator + ?Sized>(op: &O, field: f64, tau: f64, cfg: &KrylovConfig) -> usize {
    let phase = tau.abs() * op.spectral_half_width(field);
    ((phase / cfg.max_phase).ceil() as usize).max(1)
}

/// `exp(-i tau H(field)) x` without any norm correction.
pub(crate) fn expmv_raw<O: IsingOperator + ?Sized>(
    op: &O,
    field: f64,
    x: &[C64],
    tau: f64,
    cfg: &KrylovConfig,
) -> Result<Vec<C64>> {
    let s = substeps(op, field, tau, cfg);
    let sub = tau / s as f64;
    let mut y = x.to_vec();
    for _ in 0..s {
        y = lanczos_exp(op, field, &y, sub, cfg)?.0;
    }
    Ok(y)
}

/// Restores `‖y‖ = target` when the drift exceeds `1e-12`, returning the drift.
pub(crate) fn correct_norm(y: &mut [C64], target: f64) -> f64 {
    let drift = norm(y) - target;
    if drift.abs() > 1e-12 {
        log::debug!("Krylov step norm drift {drift:.3e}; renormalising");
        scale(target / (target + drift), y);
    }
    drift
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_check_matches_full_eigendecomposition() {
        let alpha = [0.3, -1.2, 2.5, 0.7, -0.4, 1.9];
        let beta = [0.9, 0.4, 1.3, 0.2, 0.8];
        for k in 1..=alpha.len() {
            for tau in [0.1, 1.0, 4.0] {
                let (evals, evecs) = tridiagonal_eigen(&alpha[..k], &beta[..k - 1]);
                let full = exp_coefficients(&evals, &evecs, tau)[k - 1].norm();
                let cheap = last_coefficient(&alpha[..k], &beta[..k - 1], tau);
                assert!((full - cheap).abs() < 1e-13, "k={k} tau={tau}: {full} vs {cheap}");
                let t = DMatrix::from_fn(k, k, |i, j| match i.abs_diff(j) {
                    0 => alpha[i],
                    1 => beta[i.min(j)],
                    _ => 0.0,
                });
                let rebuilt = &evecs * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(evals.clone())) * evecs.transpose();
                assert!((rebuilt - t).norm() < 1e-13);
            }
        }
    }
}
