//! State vectors over the `2^n` computational basis.
//!
//! Basis convention: bit `i` (little-endian) of the index `z` is spin `i`, and
//! a cleared bit is the `σ_z = +1` eigenstate.

use rand::Rng;

use crate::linalg;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
}

impl QuantumState {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); dim])
    }

    /// The computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.amplitudes[index] = C64::new(1.0, 0.0);
        s
    }

    /// Haar-ish random unit vector (independent Gaussian components).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(gaussian(rng), gaussian(rng)))
            .collect();
        let nrm = linalg::norm(&amps);
        linalg::scale(1.0 / nrm, &mut amps);
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Number of spins, when the dimension is a power of two.
    pub fn n_sites(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            linalg::scale(1.0 / n, &mut self.amplitudes);
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        check_dims(self.dim(), other.dim())?;
        Ok(linalg::dot(&self.amplitudes, &other.amplitudes))
    }

    /// Probability of each basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl From<Vec<C64>> for QuantumState {
    fn from(amplitudes: Vec<C64>) -> Self {
        Self::new(amplitudes)
    }
}

/// `|<reference|state>|^2`.
pub fn fidelity(state: &QuantumState, reference: &QuantumState) -> Result<f64> {
    Ok(reference.inner(state)?.norm_sqr())
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; one sample per call is plenty for test vectors.
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
