//! Per-step unitaries of modulated time evolution and QAOA.
//!
//! An MTE step is `exp(-i λ [H_A + B H_B])` and is applied with a Krylov
//! exponential; a QAOA layer is `exp(-i β H_B) exp(-i γ H_A)`, both factors of
//! which are exact and cheap in the computational basis. Steps are applied in
//! order: step 1 acts on the initial state first.

mod krylov;

pub use krylov::KrylovConfig;
pub(crate) use krylov::{correct_norm, expmv_raw, lanczos_exp, substeps, LanczosExp};

use serde::{Deserialize, Serialize};

use crate::qaoa::QaoaSchedule;
use crate::spinmodel::{IsingModel, IsingOperator};
use crate::state::check_dims;
use crate::{Error, QuantumState, Result, C64};

/// Paired scale factors `λ_j` (time step absorbed) and fields `B_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    lambdas: Vec<f64>,
    fields: Vec<f64>,
}

impl Schedule {
    pub fn new(lambdas: Vec<f64>, fields: Vec<f64>) -> Result<Self> {
        if lambdas.len() != fields.len() {
            return Err(Error::Shape { expected: lambdas.len(), got: fields.len() });
        }
        if lambdas.iter().chain(&fields).any(|x| !x.is_finite()) {
            return Err(Error::invalid("schedule entries must be finite"));
        }
        Ok(Self { lambdas, fields })
    }

    /// The identity schedule with no steps.
    pub fn empty() -> Self {
        Self { lambdas: Vec::new(), fields: Vec::new() }
    }

    /// Unpacks `[λ_1..λ_N, B_1..B_N]`.
    pub fn from_params(params: &[f64]) -> Result<Self> {
        if params.len() % 2 != 0 {
            return Err(Error::invalid("MTE parameter vector must have even length"));
        }
        let n = params.len() / 2;
        Self::new(params[..n].to_vec(), params[n..].to_vec())
    }

    /// Packs as `[λ_1..λ_N, B_1..B_N]`.
    pub fn to_params(&self) -> Vec<f64> {
        self.lambdas.iter().chain(&self.fields).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lambdas.iter().copied().zip(self.fields.iter().copied())
    }
}

/// Snapshots of the state: the initial state followed by one per step.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub states: Vec<QuantumState>,
}

/// `|-x>^n`, the ground state of `H_B = Σ σ_x` (amplitudes `(-1)^popcount(z) / 2^{n/2}`).
pub fn initial_state(n: usize) -> QuantumState {
    let dim = 1usize << n;
    let a = (dim as f64).sqrt().recip();
    QuantumState::new(
        (0..dim)
            .map(|z| C64::new(if z.count_ones() % 2 == 0 { a } else { -a }, 0.0))
            .collect(),
    )
}

/// Multiplies each amplitude by `exp(-i γ E_A(z))`.
pub fn apply_diagonal_phase(state: &QuantumState, gamma: f64, model: &IsingModel) -> Result<QuantumState> {
    check_dims(model.dim(), state.dim())?;
    let mut out = state.clone();
    diagonal_phase_in_place(out.amplitudes_mut(), gamma, model.problem_diagonal());
    Ok(out)
}

/// `exp(-i β Σ σ_x)` as a product of single-qubit rotations.
pub fn apply_transverse_rotation(state: &QuantumState, beta: f64) -> Result<QuantumState> {
    let n = state
        .n_sites()
        .ok_or_else(|| Error::invalid("state dimension is not a power of two"))?;
    let mut out = state.clone();
    transverse_rotation_in_place(out.amplitudes_mut(), beta, n);
    Ok(out)
}

pub(crate) fn diagonal_phase_in_place(x: &mut [C64], gamma: f64, diagonal: &[f64]) {
    if gamma == 0.0 {
        return;
    }
    for (a, e) in x.iter_mut().zip(diagonal) {
        *a *= C64::from_polar(1.0, -gamma * e);
    }
}

pub(crate) fn transverse_rotation_in_place(x: &mut [C64], beta: f64, n: usize) {
    if beta == 0.0 {
        return;
    }
    let (s, c) = beta.sin_cos();
    let mis = C64::new(0.0, -s);
    for i in 0..n {
        let bit = 1usize << i;
        for z in 0..x.len() {
            if z & bit == 0 {
                let a = x[z];
                let b = x[z | bit];
                x[z] = a * c + b * mis;
                x[z | bit] = b * c + a * mis;
            }
        }
    }
}

/// `exp(-i λ [H_A + B H_B]) |state>` by Krylov exponentiation with
/// residual tolerance `tol`.
pub fn expmv_step(state: &QuantumState, lambda: f64, field: f64, model: &IsingModel, tol: f64) -> Result<QuantumState> {
    check_dims(model.dim(), state.dim())?;
    if !(tol > 0.0) {
        return Err(Error::invalid("Krylov tolerance must be positive"));
    }
    let cfg = KrylovConfig::with_tol(tol);
    let mut y = expmv_raw(model, field, state.amplitudes(), lambda, &cfg)?;
    correct_norm(&mut y, state.norm());
    Ok(QuantumState::new(y))
}

/// Applies every step of `schedule` in order, optionally recording the state
/// after each step.
pub fn evolve_mte(
    state0: &QuantumState,
    schedule: &Schedule,
    model: &IsingModel,
    record: bool,
) -> Result<(QuantumState, Option<Trajectory>)> {
    check_dims(model.dim(), state0.dim())?;
    let (last, states) =
        evolve_mte_in(model, state0.amplitudes(), schedule, &KrylovConfig::default(), record)?;
    let trajectory = record.then(|| Trajectory { states: states.into_iter().map(QuantumState::new).collect() });
    Ok((QuantumState::new(last), trajectory))
}

/// MTE evolution on raw vectors for any operator (full space or a sector).
/// When `record` is set the returned list holds all `N + 1` states.
pub(crate) fn evolve_mte_in<O: IsingOperator + ?Sized>(
    op: &O,
    x0: &[C64],
    schedule: &Schedule,
    cfg: &KrylovConfig,
    record: bool,
) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let target = crate::linalg::norm(x0);
    let mut states = Vec::new();
    if record {
        states.reserve(schedule.len() + 1);
        states.push(x0.to_vec());
    }
    let mut x = x0.to_vec();
    for (lambda, field) in schedule.steps() {
        x = expmv_raw(op, field, &x, lambda, cfg)?;
        correct_norm(&mut x, target);
        if record {
            states.push(x.clone());
        }
    }
    Ok((x, states))
}

/// Applies the QAOA layers `exp(-i β_j H_B) exp(-i γ_j H_A)` for `j = 1..p`.
pub fn evolve_qaoa(
    state0: &QuantumState,
    qaoa: &QaoaSchedule,
    model: &IsingModel,
    record: bool,
) -> Result<(QuantumState, Option<Trajectory>)> {
    check_dims(model.dim(), state0.dim())?;
    let n = model.n_sites();
    let mut x = state0.clone().into_amplitudes();
    let mut states = Vec::new();
    if record {
        states.push(state0.clone());
    }
    for (gamma, beta) in qaoa.layers() {
        diagonal_phase_in_place(&mut x, gamma, model.problem_diagonal());
        transverse_rotation_in_place(&mut x, beta, n);
        if record {
            states.push(QuantumState::new(x.clone()));
        }
    }
    Ok((QuantumState::new(x), record.then_some(Trajectory { states })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinmodel::build_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &QuantumState, b: &QuantumState, tol: f64) -> bool {
        a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn initial_state_small_cases() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s1: Vec<f64> = initial_state(1).amplitudes().iter().map(|a| a.re).collect();
        assert!((s1[0] - h).abs() < 1e-15 && (s1[1] + h).abs() < 1e-15);
        let s2: Vec<f64> = initial_state(2).amplitudes().iter().map(|a| a.re).collect();
        assert_eq!(s2, vec![0.5, -0.5, -0.5, 0.5]);
    }

    #[test]
    fn initial_state_is_mixer_ground_state() {
        let m = build_model(8, 1.0, 0.1).unwrap();
        let psi = initial_state(8);
        let mut out = vec![C64::default(); 256];
        m.apply_mixer(psi.amplitudes(), &mut out);
        let e = crate::linalg::dot(psi.amplitudes(), &out).re;
        assert!((e + 8.0).abs() < 1e-12);
    }

    #[test]
    fn phase_and_rotation_examples() {
        let m = build_model(2, 1.0, 0.1).unwrap();
        let s = QuantumState::basis(4, 0);
        let p = apply_diagonal_phase(&s, std::f64::consts::PI, &m).unwrap();
        assert!((p.amplitudes()[0] + C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(apply_diagonal_phase(&s, 0.0, &m).unwrap(), s);

        let one = QuantumState::basis(2, 0);
        let r = apply_transverse_rotation(&one, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(r.amplitudes()[0].norm() < 1e-15);
        assert!((r.amplitudes()[1] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn rotation_by_pi_is_sign_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=5 {
            let s = QuantumState::random(1 << n, &mut rng);
            let r = apply_transverse_rotation(&s, std::f64::consts::PI).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let expected = QuantumState::new(s.amplitudes().iter().map(|a| a * sign).collect());
            assert!(close(&r, &expected, 1e-12));
        }
    }

    #[test]
    fn single_spin_krylov_step() {
        // With two sites and B only acting through H_B, compare to the
        // product of two exact single-spin rotations when J is negligible.
        let m = build_model(2, 1.0, 0.1).unwrap();
        let s = QuantumState::basis(4, 0);
        let y = expmv_step(&s, 0.0, 1.5, &m, 1e-10).unwrap();
        assert_eq!(y, s);
    }

    #[test]
    fn krylov_composition() {
        let m = build_model(6, 1.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = QuantumState::random(64, &mut rng);
        let once = expmv_step(&s, 1.1, 2.0, &m, 1e-12).unwrap();
        let twice = expmv_step(&expmv_step(&s, 0.4, 2.0, &m, 1e-12).unwrap(), 0.7, 2.0, &m, 1e-12).unwrap();
        assert!(close(&once, &twice, 1e-9));
    }

    #[test]
    fn krylov_rejects_bad_tolerance() {
        let m = build_model(2, 1.0, 0.1).unwrap();
        assert!(expmv_step(&QuantumState::basis(4, 0), 1.0, 1.0, &m, 0.0).is_err());
    }

    #[test]
    fn krylov_reports_non_convergence() {
        let m = build_model(8, 1.0, 0.1).unwrap();
        let cfg = KrylovConfig { tol: 1e-10, max_dim: 4, max_phase: 1e3 };
        let psi = initial_state(8);
        let err = expmv_raw(&m, 3.0, psi.amplitudes(), 2.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::KrylovNonConvergence { max_dim: 4, .. }));
    }

    #[test]
    fn empty_schedule_is_identity() {
        let m = build_model(4, 1.0, 0.1).unwrap();
        let psi = initial_state(4);
        let (out, traj) = evolve_mte(&psi, &Schedule::empty(), &m, true).unwrap();
        assert_eq!(out, psi);
        assert_eq!(traj.unwrap().states.len(), 1);
    }

    #[test]
    fn schedule_params_round_trip() {
        let s = Schedule::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(s.to_params(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(Schedule::from_params(&s.to_params()).unwrap(), s);
        assert!(Schedule::new(vec![1.0], vec![]).is_err());
        assert!(Schedule::new(vec![f64::NAN], vec![1.0]).is_err());
    }
}
