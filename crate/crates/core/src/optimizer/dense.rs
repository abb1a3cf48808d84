//! Exact propagation through dense sector eigendecompositions.
//!
//! For small sectors one `d x d` symmetric eigensolve per step is cheaper
//! than the Krylov path, and it gives the field derivative in closed form:
//! in the eigenbasis of `H(B)` the Fréchet derivative of `exp(-iλH)` along
//! `H_B` is `H_B[a,b]` times the divided difference of `exp(-iλx)` at
//! `(e_a, e_b)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::linalg::dot;
use crate::propagator::Schedule;
use crate::spinmodel::{IsingOperator, SectorOperator};
use crate::{Result, C64};

pub(crate) struct StepEigen {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl StepEigen {
    pub(crate) fn new(op: &SectorOperator, field: f64) -> Self {
        let eig = SymmetricEigen::new(op.dense(field));
        Self { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    /// Coordinates of `x` in the eigenbasis.
    fn to_eigen(&self, x: &[C64]) -> Vec<C64> {
        let re = self.vectors.tr_mul(&DVector::from_iterator(x.len(), x.iter().map(|c| c.re)));
        let im = self.vectors.tr_mul(&DVector::from_iterator(x.len(), x.iter().map(|c| c.im)));
        re.iter().zip(im.iter()).map(|(&r, &i)| C64::new(r, i)).collect()
    }

    fn from_eigen(&self, c: &[C64]) -> Vec<C64> {
        let re = &self.vectors * DVector::from_iterator(c.len(), c.iter().map(|c| c.re));
        let im = &self.vectors * DVector::from_iterator(c.len(), c.iter().map(|c| c.im));
        re.iter().zip(im.iter()).map(|(&r, &i)| C64::new(r, i)).collect()
    }

    /// `exp(-i tau H) x`.
    pub(crate) fn propagate(&self, x: &[C64], tau: f64) -> Vec<C64> {
        let mut c = self.to_eigen(x);
        for (ci, &e) in c.iter_mut().zip(&self.values) {
            *ci *= C64::from_polar(1.0, -tau * e);
        }
        self.from_eigen(&c)
    }
}

/// States after each step (`N + 1` entries) when `record`, else just the last.
pub(crate) fn dense_evolve(op: &SectorOperator, x0: &[C64], schedule: &Schedule, record: bool) -> Vec<Vec<C64>> {
    let mut states = vec![x0.to_vec()];
    for (lambda, field) in schedule.steps() {
        let next = StepEigen::new(op, field).propagate(states.last().expect("non-empty"), lambda);
        if record {
            states.push(next);
        } else {
            states[0] = next;
        }
    }
    states
}

/// `(exp(-iλa) - exp(-iλb)) / (a - b)`, with the derivative on the diagonal.
fn divided_difference(lambda: f64, a: f64, b: f64) -> C64 {
    let half = 0.5 * lambda * (a - b);
    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    C64::new(0.0, -lambda) * C64::from_polar(sinc, -0.5 * lambda * (a + b))
}

pub(crate) fn dense_energy_gradient(
    op: &SectorOperator,
    x0: &[C64],
    schedule: &Schedule,
    target_field: f64,
) -> Result<(f64, Vec<f64>)> {
    let n_steps = schedule.len();
    let dim = op.dim();
    let mixer = op.dense(1.0) - op.dense(0.0);
    let eigs: Vec<StepEigen> = schedule.fields().iter().map(|&b| StepEigen::new(op, b)).collect();
    let mut states = vec![x0.to_vec()];
    for (eig, &lambda) in eigs.iter().zip(schedule.lambdas()) {
        let next = eig.propagate(states.last().expect("non-empty"), lambda);
        states.push(next);
    }

    let psi_f = &states[n_steps];
    let mut chi = vec![C64::default(); dim];
    op.apply_hamiltonian(target_field, psi_f, &mut chi);
    let energy = dot(psi_f, &chi).re;

    let mut grad_lambda = vec![0.0; n_steps];
    let mut grad_field = vec![0.0; n_steps];
    for j in (0..n_steps).rev() {
        let eig = &eigs[j];
        let lambda = schedule.lambdas()[j];
        let chi_t = eig.to_eigen(&chi);
        let after = eig.to_eigen(&states[j + 1]);
        let before = eig.to_eigen(&states[j]);

        let mut h = C64::default();
        for ((c, a), &e) in chi_t.iter().zip(&after).zip(&eig.values) {
            h += c.conj() * a * e;
        }
        grad_lambda[j] = 2.0 * h.im;

        if lambda != 0.0 {
            let rotated = eig.vectors.tr_mul(&mixer) * &eig.vectors;
            let mut total = C64::default();
            for a in 0..dim {
                let mut row = C64::default();
                for b in 0..dim {
                    row += rotated[(a, b)] * divided_difference(lambda, eig.values[a], eig.values[b]) * before[b];
                }
                total += chi_t[a].conj() * row;
            }
            grad_field[j] = 2.0 * total.re;
        }

        let mut back = chi_t;
        for (ci, &e) in back.iter_mut().zip(&eig.values) {
            *ci *= C64::from_polar(1.0, lambda * e);
        }
        chi = eig.from_eigen(&back);
    }
    grad_lambda.extend(grad_field);
    Ok((energy, grad_lambda))
}
