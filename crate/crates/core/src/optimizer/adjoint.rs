//! Reverse-mode gradients of the final energy `<ψ_f|H(B_t)|ψ_f>`.
//!
//! The forward pass stores the state after every step. The costate
//! `χ = H(B_t) ψ_f` is then pulled back through the adjoint unitaries, and
//! each parameter derivative is `2 Re <χ_j| ∂U_j |ψ_{j-1}>`.
//!
//! For the scale `λ_j` this collapses to `2 Im <χ_j|H(B_j)|ψ_j>`. For the field
//! `B_j` we need the Fréchet derivative of the exponential in the direction
//! `H_B`,
//!
//! ```text
//! L = -iτ ∫_0^1 exp(-iτsH) H_B exp(-iτ(1-s)H) ds,
//! ```
//!
//! evaluated per Krylov substep from the two Lanczos decompositions that
//! already exist there: the forward one for `ψ` (eigenpairs `θ_b`, `Q`) and
//! the backward one for `χ` (eigenpairs `μ_a`, `P`). With both exponentials
//! diagonal in their own Krylov bases the `s` integral is the divided
//! difference `exp(-iτ(μ+θ)/2) sinc(τ(μ-θ)/2)`.

use nalgebra::DMatrix;

use crate::linalg::dot;
use crate::propagator::{correct_norm, lanczos_exp, substeps, KrylovConfig, LanczosExp, Schedule};
use crate::propagator::{diagonal_phase_in_place, transverse_rotation_in_place};
use crate::qaoa::QaoaSchedule;
use crate::spinmodel::{IsingModel, IsingOperator};
use crate::{Result, C64};

/// Energy and gradient (`[∂λ..., ∂B...]`) of an MTE schedule.
pub(crate) fn mte_energy_gradient<O: IsingOperator + ?Sized>(
    op: &O,
    x0: &[C64],
    schedule: &Schedule,
    target_field: f64,
    cfg: &KrylovConfig,
) -> Result<(f64, Vec<f64>)> {
    let n_steps = schedule.len();
    let dim = op.dim();

    // Forward pass, keeping the per-substep decompositions while they fit.
    let mut budget = STORED_VECTOR_BUDGET / dim.max(1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut stored: Vec<Option<Vec<LanczosExp>>> = Vec::with_capacity(n_steps);
    let target_norm = crate::linalg::norm(x0);
    states.push(x0.to_vec());
    for (lambda, field) in schedule.steps() {
        let (mut next, decs) = step_decompositions(op, field, lambda, states.last().expect("non-empty"), cfg)?;
        correct_norm(&mut next, target_norm);
        let size: usize = decs.iter().map(|d| d.basis.len()).sum();
        if size <= budget {
            budget -= size;
            stored.push(Some(decs));
        } else {
            budget = 0;
            stored.push(None);
        }
        states.push(next);
    }
    let psi_f = &states[n_steps];

    let mut chi = vec![C64::default(); dim];
    op.apply_hamiltonian(target_field, psi_f, &mut chi);
    let energy = dot(psi_f, &chi).re;

    let mut grad_lambda = vec![0.0; n_steps];
    let mut grad_field = vec![0.0; n_steps];
    let mut scratch = vec![C64::default(); dim];

    for j in (0..n_steps).rev() {
        let lambda = schedule.lambdas()[j];
        let field = schedule.fields()[j];

        op.apply_hamiltonian(field, &states[j + 1], &mut scratch);
        grad_lambda[j] = 2.0 * dot(&chi, &scratch).im;

        let forward = match stored[j].take() {
            Some(decs) => decs,
            None => step_decompositions(op, field, lambda, &states[j], cfg)?.1,
        };
        let tau = lambda / forward.len() as f64;
        let mut g = 0.0;
        for dec in forward.iter().rev() {
            let (chi_prev, dec_chi) = lanczos_exp(op, field, &chi, -tau, cfg)?;
            g += 2.0 * field_derivative(op, dec, &dec_chi, tau).re;
            chi = chi_prev;
        }
        grad_field[j] = g;
    }

    grad_lambda.extend(grad_field);
    Ok((energy, grad_lambda))
}

/// Complex entries kept across the forward pass (about 256 MiB).
const STORED_VECTOR_BUDGET: usize = 1 << 24;

/// `exp(-iλH(B)) x` as equal Krylov substeps, with their decompositions.
fn step_decompositions<O: IsingOperator + ?Sized>(
    op: &O,
    field: f64,
    lambda: f64,
    x: &[C64],
    cfg: &KrylovConfig,
) -> Result<(Vec<C64>, Vec<LanczosExp>)> {
    let s = substeps(op, field, lambda, cfg);
    let tau = lambda / s as f64;
    let mut decs = Vec::with_capacity(s);
    let mut phi = x.to_vec();
    for _ in 0..s {
        let (next, dec) = lanczos_exp(op, field, &phi, tau, cfg)?;
        decs.push(dec);
        phi = next;
    }
    Ok((phi, decs))
}

/// `<χ| L |φ>` for one substep, where `fwd` decomposes `φ` under `+τ` and
/// `bwd` decomposes `χ` under `-τ`.
fn field_derivative<O: IsingOperator + ?Sized>(op: &O, fwd: &LanczosExp, bwd: &LanczosExp, tau: f64) -> C64 {
    if tau == 0.0 {
        return C64::default();
    }
    let m = fwd.basis.len();
    let mp = bwd.basis.len();
    let y = fwd.weights();
    let x = bwd.weights();

    // K = P diag(x) I diag(y) Q^T
    let mut inner = vec![C64::default(); mp * m];
    for a in 0..mp {
        for b in 0..m {
            let (mu, th) = (bwd.evals[a], fwd.evals[b]);
            let half = 0.5 * tau * (mu - th);
            let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
            inner[a * m + b] = C64::from_polar(x[a] * y[b] * sinc, -0.5 * tau * (mu + th));
        }
    }
    let mut left = vec![C64::default(); mp * m]; // P * inner
    for p in 0..mp {
        for b in 0..m {
            let mut acc = C64::default();
            for a in 0..mp {
                acc += inner[a * m + b] * bwd.evecs[(p, a)];
            }
            left[p * m + b] = acc;
        }
    }
    let mut kernel = vec![C64::default(); mp * m]; // (P inner) Q^T
    for p in 0..mp {
        for q in 0..m {
            let mut acc = C64::default();
            for b in 0..m {
                acc += left[p * m + b] * fwd.evecs[(q, b)];
            }
            kernel[p * m + q] = acc;
        }
    }

    // G = W^† H_B V via real products.
    let dim = fwd.basis[0].len();
    let mut mixed = vec![C64::default(); dim];
    let mut vr = DMatrix::zeros(dim, m);
    let mut vi = DMatrix::zeros(dim, m);
    for (q, v) in fwd.basis.iter().enumerate() {
        op.apply_mixer(v, &mut mixed);
        for (r, z) in mixed.iter().enumerate() {
            vr[(r, q)] = z.re;
            vi[(r, q)] = z.im;
        }
    }
    let wr = DMatrix::from_fn(dim, mp, |r, p| bwd.basis[p][r].re);
    let wi = DMatrix::from_fn(dim, mp, |r, p| bwd.basis[p][r].im);
    let real = wr.tr_mul(&vr) + wi.tr_mul(&vi);
    let imag = wr.tr_mul(&vi) - wi.tr_mul(&vr);
    let mut total = C64::default();
    for p in 0..mp {
        for q in 0..m {
            total += kernel[p * m + q] * C64::new(real[(p, q)], imag[(p, q)]);
        }
    }
    C64::new(0.0, -tau) * total * (fwd.norm * bwd.norm)
}

/// Energy and gradient (`[∂γ..., ∂β...]`) of a QAOA schedule on the full space.
pub(crate) fn qaoa_energy_gradient(
    op: &IsingModel,
    x0: &[C64],
    qaoa: &QaoaSchedule,
    target_field: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = op.n_sites();
    let diag = op.problem_diagonal();
    let mut psi = x0.to_vec();
    for (gamma, beta) in qaoa.layers() {
        diagonal_phase_in_place(&mut psi, gamma, diag);
        transverse_rotation_in_place(&mut psi, beta, n);
    }
    let mut chi = vec![C64::default(); psi.len()];
    op.apply_hamiltonian(target_field, &psi, &mut chi);
    let energy = dot(&psi, &chi).re;

    let p = qaoa.len();
    let mut grad_gamma = vec![0.0; p];
    let mut grad_beta = vec![0.0; p];
    let mut scratch = vec![C64::default(); psi.len()];
    for j in (0..p).rev() {
        let (gamma, beta) = (qaoa.gammas()[j], qaoa.betas()[j]);
        op.apply_mixer(&psi, &mut scratch);
        grad_beta[j] = 2.0 * dot(&chi, &scratch).im;
        transverse_rotation_in_place(&mut psi, -beta, n);
        transverse_rotation_in_place(&mut chi, -beta, n);

        for ((s, x), d) in scratch.iter_mut().zip(&psi).zip(diag) {
            *s = x * *d;
        }
        grad_gamma[j] = 2.0 * dot(&chi, &scratch).im;
        diagonal_phase_in_place(&mut psi, -gamma, diag);
        diagonal_phase_in_place(&mut chi, -gamma, diag);
    }
    grad_gamma.extend(grad_beta);
    Ok((energy, grad_gamma))
}
