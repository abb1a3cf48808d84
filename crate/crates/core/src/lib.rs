//! Ground-state preparation for the long-range transverse-field Ising model by
//! modulated time evolution (MTE).
//!
//! The crate is organised bottom-up:
//!
//! - [`spinmodel`]: the Hamiltonian `H(B) = H_A + B H_B`, its matrix-free
//!   action, parity sectors and exact sector spectra.
//! - [`propagator`]: per-step unitaries (Krylov exponential for MTE steps,
//!   exact phase/rotation layers for QAOA).
//! - [`schedule`]: local-adiabatic ramps, initial guesses, pruning.
//! - [`optimizer`]: final-energy objective, adjoint gradients, BFGS and Adam.
//! - [`qaoa`]: second-order Trotter translation of MTE schedules into QAOA
//!   angles, plus the effective-field diagnostics.
//! - [`experiments`]: the end-to-end runs behind the CLI.
//!
//! The guide in `book/` walks through each piece with runnable listings.

pub mod error;
pub mod experiments;
pub mod io;
pub mod optimizer;
pub mod propagator;
pub mod qaoa;
pub mod schedule;
pub mod spinmodel;
pub mod state;

mod linalg;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use state::{fidelity, QuantumState};
