use serde::{Deserialize, Serialize};

use super::adjoint::{mte_energy_gradient, qaoa_energy_gradient};
use super::dense::{dense_energy_gradient, dense_evolve, StepEigen};
use crate::linalg::dot;
use crate::propagator::{evolve_mte_in, evolve_qaoa, initial_state, KrylovConfig, Schedule};
use crate::qaoa::QaoaSchedule;
use crate::spinmodel::{ground_sector, IsingModel, IsingOperator, SectorBasis, SectorOperator};
use crate::{Error, QuantumState, Result, C64};

/// Which propagator the parameter vector drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `[λ_1..λ_N, B_1..B_N]`
    Mte,
    /// `[γ_1..γ_p, β_1..β_p]`
    Qaoa,
}

/// Final-energy cost `<ψ_f|H(B_t)|ψ_f>` for evolutions from `|-x>^n`.
///
/// MTE evolutions run inside the parity sector of the initial state, which
/// the dynamics never leave; QAOA layers run on the full space. The target
/// state is the lowest eigenvector of `H(B_t)` in that sector.
#[derive(Clone, Debug)]
pub struct Objective {
    model: IsingModel,
    mode: Mode,
    basis: SectorBasis,
    op: SectorOperator,
    psi0: Vec<C64>,
    target: QuantumState,
    target_coords: Vec<C64>,
    ground_energy: f64,
    first_excited: f64,
    krylov: KrylovConfig,
    dense_limit: usize,
}

/// Sectors up to this dimension propagate MTE steps by dense eigensolves.
pub const DEFAULT_DENSE_LIMIT: usize = 160;

impl Objective {
    pub fn new(model: &IsingModel, mode: Mode) -> Result<Self> {
        let n = model.n_sites();
        let basis = SectorBasis::new(n, ground_sector(n));
        let op = SectorOperator::new(model, &basis);
        let (values, vectors) = op.lowest_eigenpairs(model.target_field(), 2);
        let coords: Vec<C64> = vectors.column(0).iter().map(|&x| C64::new(x, 0.0)).collect();
        let target = QuantumState::new(basis.lift(&coords));

        let psi0 = basis.project(initial_state(n).amplitudes());
        Ok(Self {
            model: model.clone(),
            mode,
            basis,
            op,
            psi0,
            target,
            target_coords: coords,
            ground_energy: values[0],
            first_excited: values.get(1).copied().unwrap_or(values[0]),
            krylov: KrylovConfig::default(),
            dense_limit: DEFAULT_DENSE_LIMIT,
        })
    }

    pub fn with_krylov(mut self, krylov: KrylovConfig) -> Self {
        self.krylov = krylov;
        self
    }

    /// Largest sector dimension handled by dense eigensolves; `0` forces the
    /// Krylov path everywhere.
    pub fn with_dense_limit(mut self, dense_limit: usize) -> Self {
        self.dense_limit = dense_limit;
        self
    }

    fn dense(&self) -> bool {
        self.basis.dimension() <= self.dense_limit
    }

    /// Sector-coordinate states; all `N + 1` of them when `record`.
    fn sector_evolve(&self, schedule: &Schedule, record: bool) -> Result<Vec<Vec<C64>>> {
        if self.dense() {
            return Ok(dense_evolve(&self.op, &self.psi0, schedule, record));
        }
        let (last, states) = evolve_mte_in(&self.op, &self.psi0, schedule, &self.krylov, record)?;
        Ok(if record { states } else { vec![last] })
    }

    /// Same model and target, different parameterisation.
    pub fn with_mode(&self, mode: Mode) -> Self {
        Self { mode, ..self.clone() }
    }

    pub fn model(&self) -> &IsingModel {
        &self.model
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn krylov(&self) -> &KrylovConfig {
        &self.krylov
    }

    pub fn sector(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn sector_operator(&self) -> &SectorOperator {
        &self.op
    }

    /// Ground state of `H(B_t)`.
    pub fn target_state(&self) -> &QuantumState {
        &self.target
    }

    /// The target ground state in sector coordinates.
    pub fn target_coordinates(&self) -> &[C64] {
        &self.target_coords
    }

    /// The initial state `|-x>^n` in sector coordinates.
    pub fn initial_coordinates(&self) -> &[C64] {
        &self.psi0
    }

    /// `|<target|x>|^2` for sector coordinates `x`.
    pub fn sector_fidelity(&self, x: &[C64]) -> f64 {
        dot(&self.target_coords, x).norm_sqr()
    }

    /// Target fidelity after `λ_j = λ0`, `B_j = fields[j]` for each `λ0` in
    /// `lambdas`. Small sectors share one eigendecomposition per field.
    pub fn constant_scale_fidelities(&self, fields: &[f64], lambdas: &[f64]) -> Result<Vec<f64>> {
        if self.dense() {
            let eigs: Vec<StepEigen> = fields.iter().map(|&b| StepEigen::new(&self.op, b)).collect();
            return Ok(lambdas
                .iter()
                .map(|&l| {
                    let x = eigs.iter().fold(self.psi0.clone(), |x, e| e.propagate(&x, l));
                    self.sector_fidelity(&x)
                })
                .collect());
        }
        lambdas
            .iter()
            .map(|&l| {
                let s = Schedule::new(vec![l; fields.len()], fields.to_vec())?;
                let x = self.sector_evolve(&s, false)?.pop().expect("final state");
                Ok(self.sector_fidelity(&x))
            })
            .collect()
    }

    /// `E_0(B_t)` in the ground-state sector.
    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    /// `E_1(B_t) - E_0(B_t)` in the ground-state sector.
    pub fn gap(&self) -> f64 {
        self.first_excited - self.ground_energy
    }

    pub fn energy(&self, params: &[f64]) -> Result<f64> {
        match self.mode {
            Mode::Mte => self.mte_energy(&Schedule::from_params(params)?),
            Mode::Qaoa => self.qaoa_energy(&QaoaSchedule::from_params(params)?),
        }
    }

    pub fn energy_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let bt = self.model.target_field();
        match self.mode {
            Mode::Mte => {
                let s = Schedule::from_params(params)?;
                if self.dense() {
                    dense_energy_gradient(&self.op, &self.psi0, &s, bt)
                } else {
                    mte_energy_gradient(&self.op, &self.psi0, &s, bt, &self.krylov)
                }
            }
            Mode::Qaoa => {
                let q = QaoaSchedule::from_params(params)?;
                let x0 = initial_state(self.model.n_sites());
                qaoa_energy_gradient(&self.model, x0.amplitudes(), &q, bt)
            }
        }
    }

    /// Final state on the full `2^n` space.
    pub fn final_state(&self, params: &[f64]) -> Result<QuantumState> {
        match self.mode {
            Mode::Mte => self.mte_final_state(&Schedule::from_params(params)?),
            Mode::Qaoa => self.qaoa_final_state(&QaoaSchedule::from_params(params)?),
        }
    }

    /// Squared overlap of the final state with the target ground state.
    pub fn fidelity(&self, params: &[f64]) -> Result<f64> {
        let psi = self.final_state(params)?;
        crate::fidelity(&psi, &self.target)
    }

    pub fn mte_energy(&self, schedule: &Schedule) -> Result<f64> {
        let x = self.sector_evolve(schedule, false)?.pop().expect("final state");
        Ok(self.op.expectation(self.model.target_field(), &x))
    }

    pub fn mte_final_state(&self, schedule: &Schedule) -> Result<QuantumState> {
        let x = self.sector_evolve(schedule, false)?.pop().expect("final state");
        Ok(QuantumState::new(self.basis.lift(&x)))
    }

    /// Full-space states after every step (`N + 1` entries).
    pub fn mte_trajectory(&self, schedule: &Schedule) -> Result<Vec<QuantumState>> {
        let states = self.sector_evolve(schedule, true)?;
        Ok(states.into_iter().map(|x| QuantumState::new(self.basis.lift(&x))).collect())
    }

    /// Sector-coordinate states after every step (`N + 1` entries).
    pub fn mte_sector_trajectory(&self, schedule: &Schedule) -> Result<Vec<Vec<C64>>> {
        self.sector_evolve(schedule, true)
    }

    pub fn qaoa_energy(&self, qaoa: &QaoaSchedule) -> Result<f64> {
        let psi = self.qaoa_final_state(qaoa)?;
        Ok(self.state_energy(&psi))
    }

    pub fn qaoa_final_state(&self, qaoa: &QaoaSchedule) -> Result<QuantumState> {
        let x0 = initial_state(self.model.n_sites());
        Ok(evolve_qaoa(&x0, qaoa, &self.model, false)?.0)
    }

    /// `<ψ|H(B_t)|ψ>` for a full-space state.
    pub fn state_energy(&self, psi: &QuantumState) -> f64 {
        self.model.expectation(self.model.target_field(), psi.amplitudes())
    }

    /// Overlap check used by reports: `|<target|ψ>|^2` for a full-space state.
    pub fn target_fidelity(&self, psi: &QuantumState) -> Result<f64> {
        if psi.dim() != self.target.dim() {
            return Err(Error::Shape { expected: self.target.dim(), got: psi.dim() });
        }
        Ok(dot(self.target.amplitudes(), psi.amplitudes()).norm_sqr())
    }
}

/// Free-function form of [`Objective::energy`].
pub fn energy(params: &[f64], objective: &Objective) -> Result<f64> {
    objective.energy(params)
}

/// Exact reverse-mode gradient of [`energy`].
pub fn gradient(params: &[f64], objective: &Objective) -> Result<Vec<f64>> {
    Ok(objective.energy_and_gradient(params)?.1)
}
