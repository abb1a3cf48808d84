//! End-to-end acceptance checks. Every test prints one `PASS`/`FAIL` line
//! straight to stdout (past the test harness's capture) before asserting.
//!
//! The 12-site optimisation is budget-limited: restarts run one after another
//! until one reaches the target or `MTE_ACCEPTANCE_BUDGET_SECS` (default 2700)
//! is used up.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mte::experiments::{
    run_constant_lambda_scan, run_decomposition, run_local_adiabatic_baseline, run_qaoa_experiment, Artifacts,
    BaselineOutcome, ExperimentConfig, ExperimentKind, QaoaOutcome,
};
use mte::optimizer::{optimize_bfgs, BfgsConfig, Driver, Mode, Objective};
use mte::propagator::{evolve_mte, evolve_qaoa, expmv_step, initial_state, KrylovConfig, Schedule};
use mte::qaoa::{assemble, QaoaSchedule};
use mte::schedule::{initial_guess, prune_schedule, DEFAULT_PRUNE_THRESHOLD};
use mte::spinmodel::{build_model, build_sector_basis, Parity};
use mte::QuantumState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn say(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    say(format!("criterion {id:>2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn scratch() -> Artifacts {
    let dir = tempfile::tempdir().unwrap().keep();
    Artifacts::create(dir, false).unwrap()
}

fn bfgs(max_iter: usize) -> Driver {
    Driver::Bfgs(BfgsConfig { max_iter, ..BfgsConfig::default() })
}

#[test]
fn c01_sector_dimensions() {
    let t = Instant::now();
    let dims: Vec<usize> = [8, 12]
        .iter()
        .map(|&n| {
            let model = build_model(n, 1.0, 0.1).unwrap();
            build_sector_basis(&model, Parity::Even, Parity::Even).dimension()
        })
        .collect();
    let elapsed = t.elapsed();
    verdict(
        1,
        "even-even sector dimensions",
        dims == [72, 1056] && elapsed < Duration::from_secs(1),
        format!("n=8 -> {}, n=12 -> {} in {:.3}s", dims[0], dims[1], elapsed.as_secs_f64()),
    );
}

fn baseline() -> &'static BaselineOutcome {
    static CELL: OnceLock<BaselineOutcome> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut cfg = ExperimentConfig::default();
        cfg.kind = ExperimentKind::LaBaseline;
        cfg.model.n_sites = 12;
        cfg.plots = false;
        run_local_adiabatic_baseline(&cfg, &mut scratch()).unwrap()
    })
}

#[test]
fn c02_local_adiabatic_ramp_length() {
    let b = baseline();
    let pass = (b.t_final - 29.36).abs() <= 0.3 && b.steps.abs_diff(2936) <= 30;
    verdict(2, "12-site local-adiabatic ramp", pass, format!("t_f = {:.3}, N = {}", b.t_final, b.steps));
}

#[test]
fn c03_local_adiabatic_fidelity() {
    let b = baseline();
    let linear = b.linear_fidelity.unwrap();
    let pass = (b.fidelity - 0.9936).abs() <= 0.005 && linear < b.fidelity;
    verdict(
        3,
        "local-adiabatic fidelity beats linear ramp",
        pass,
        format!("ramp {:.5}, linear {:.5} at {} steps", b.fidelity, linear, b.steps),
    );
}

#[test]
fn c04_twelve_site_optimisation() {
    let budget = std::env::var("MTE_ACCEPTANCE_BUDGET_SECS").ok().and_then(|s| s.parse().ok()).unwrap_or(2700);
    let budget = Duration::from_secs(budget);
    let model = build_model(12, 1.0, 0.1).unwrap();
    let objective = Objective::new(&model, Mode::Mte).unwrap();
    let cfg = BfgsConfig { max_iter: 1000, target_fidelity: Some(0.999), ..BfgsConfig::default() };
    let start = Instant::now();
    let mut best: Option<(u64, usize, f64)> = None;
    let mut runs = 0;
    for seed in 0..10u64 {
        if start.elapsed() > budget {
            break;
        }
        let guess = initial_guess(50, 20.0, 0.1, seed).unwrap();
        let report = optimize_bfgs(&guess.to_params(), &objective, &cfg, seed).unwrap();
        runs += 1;
        let schedule = Schedule::from_params(&report.final_parameters).unwrap();
        let pruned = prune_schedule(&schedule, DEFAULT_PRUNE_THRESHOLD).unwrap();
        let f = objective.fidelity(&pruned.to_params()).unwrap();
        say(format!(
            "  12-site seed {seed}: {:?} after {} iterations, {} steps after pruning, fidelity {f:.6}",
            report.status,
            report.iterations,
            pruned.len()
        ));
        if best.is_none_or(|b| f > b.2) {
            best = Some((seed, pruned.len(), f));
        }
        if f >= 0.999 {
            break;
        }
    }
    let (seed, steps, f) = best.unwrap();
    verdict(
        4,
        "12-site 50-step optimisation",
        f >= 0.999,
        format!(
            "best fidelity {f:.6} (seed {seed}, {steps} steps after pruning) over {runs} restarts in {:.0}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn c05_constant_lambda_scan() {
    let mut cfg = ExperimentConfig::default();
    cfg.kind = ExperimentKind::ConstLambda;
    cfg.plots = false;
    let map = run_constant_lambda_scan(&cfg, &mut scratch()).unwrap();
    let cell = map.best_within((1.0, 1.3), (80, 120)).unwrap();
    let band = map.widest_band_above(100, 0.9);
    let band_ok = band.is_some_and(|(lo, hi)| lo <= 1.0 && hi >= 1.0 && hi - lo >= 0.2);
    verdict(
        5,
        "8-site constant-lambda0 scan",
        cell.fidelity >= 0.98 && band_ok,
        format!(
            "best {:.5} at lambda0 = {}, N = {}; band above 0.9 at N = 100: {band:?}",
            cell.fidelity, cell.lambda, cell.steps
        ),
    );
}

fn qaoa_run() -> &'static QaoaOutcome {
    static CELL: OnceLock<QaoaOutcome> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut cfg = ExperimentConfig::default();
        cfg.kind = ExperimentKind::QaoaOptimize;
        cfg.plots = false;
        cfg.mte.steps = 20;
        cfg.mte.restarts = 1;
        cfg.mte.driver = bfgs(1500);
        cfg.qaoa.driver = bfgs(1500);
        run_qaoa_experiment(&cfg, &mut scratch()).unwrap()
    })
}

#[test]
fn c06_qaoa_translation_size_and_energy() {
    let o = qaoa_run();
    let n = o.source.len();
    let p = o.translation.qaoa.len();
    let layers_ok = (2 * n..=8 * n).contains(&p);
    let energy_ok = o.translation.ratio <= 0.3;
    verdict(
        6,
        "QAOA translation of an 8-site schedule",
        layers_ok && energy_ok,
        format!(
            "N = {n}, p = {p} ({:.1} N, wanted 2N..8N), energy deviation ratio {:.3} (wanted <= 0.3)",
            p as f64 / n as f64,
            o.translation.ratio
        ),
    );
}

/// Least-squares slope of `ln(err)` against `ln(m)`.
fn loglog_slope(ms: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn c07_trotter_error_order() {
    let model = build_model(8, 1.0, 0.1).unwrap();
    let schedule = Schedule::new(vec![0.4, 0.6, 0.5, 0.7, 0.3, 0.5], vec![3.0, 2.0, 1.2, 0.7, 0.3, 0.1]).unwrap();
    let psi0 = initial_state(8);
    let (exact, _) = evolve_mte(&psi0, &schedule, &model, false).unwrap();
    let ms = [2usize, 4, 8, 16];
    let errs: Vec<f64> = ms
        .iter()
        .map(|&m| {
            let q = assemble(&schedule, &vec![m; schedule.len()]).unwrap();
            let (psi, _) = evolve_qaoa(&psi0, &q, &model, false).unwrap();
            common::max_diff(&psi, &exact).max(f64::MIN_POSITIVE)
        })
        .collect();
    let slope = -loglog_slope(&ms, &errs);
    verdict(
        7,
        "second-order Trotter convergence",
        (slope - 2.0).abs() <= 0.2,
        format!("fitted order {slope:.3} from errors {errs:.3?}"),
    );
}

#[test]
fn c08_gradient_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    for mode in [Mode::Mte, Mode::Qaoa] {
        for _ in 0..50 {
            let n = rng.random_range(2..=6);
            let model = build_model(n, rng.random_range(0.5..3.0), rng.random_range(0.05..1.0)).unwrap();
            let obj = Objective::new(&model, mode).unwrap().with_krylov(KrylovConfig::with_tol(1e-14));
            let steps = rng.random_range(1..=6);
            let x: Vec<f64> = match mode {
                Mode::Mte => {
                    let l: Vec<f64> = (0..steps).map(|_| rng.random_range(-0.5..2.0)).collect();
                    let b: Vec<f64> = (0..steps).map(|_| rng.random_range(0.05..6.0)).collect();
                    l.into_iter().chain(b).collect()
                }
                Mode::Qaoa => (0..2 * steps).map(|_| rng.random_range(-1.5..1.5)).collect(),
            };
            let (_, g) = obj.energy_and_gradient(&x).unwrap();
            for i in 0..x.len() {
                let h = 1e-5;
                let mut p = x.clone();
                p[i] += h;
                let up = obj.energy(&p).unwrap();
                p[i] -= 2.0 * h;
                let down = obj.energy(&p).unwrap();
                let fd = (up - down) / (2.0 * h);
                // Components that vanish are compared on an absolute scale.
                worst = worst.max((g[i] - fd).abs() / fd.abs().max(1e-3));
            }
            instances += 1;
        }
    }
    verdict(
        8,
        "adjoint gradients against finite differences",
        worst <= 1e-5,
        format!("{instances} instances, worst relative error {worst:.2e}"),
    );
}

#[test]
fn c09_dense_oracles_and_unitarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut oracle, mut unitary): (f64, f64) = (0.0, 0.0);
    for n in 2..=6 {
        let model = build_model(n, 1.0, 0.1).unwrap();
        let psi = QuantumState::random(1 << n, &mut rng);
        let other = QuantumState::random(1 << n, &mut rng);
        let lambdas: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..2.5)).collect();
        let fields: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..20.0)).collect();
        let schedule = Schedule::new(lambdas, fields).unwrap();

        let mut want = psi.clone();
        for (l, b) in schedule.steps() {
            want = common::apply(&common::expm(&common::hamiltonian(n, 1.0, b), l), &want);
        }
        let (got, _) = evolve_mte(&psi, &schedule, &model, false).unwrap();
        oracle = oracle.max(common::max_diff(&got, &want));

        let single = expmv_step(&psi, 1.3, 7.0, &model, 1e-12).unwrap();
        let dense = common::apply(&common::expm(&common::hamiltonian(n, 1.0, 7.0), 1.3), &psi);
        oracle = oracle.max(common::max_diff(&single, &dense));

        let q = QaoaSchedule::new(vec![0.4, -0.9, 1.2], vec![0.7, 0.1, -0.5]).unwrap();
        let mut want_q = psi.clone();
        for (g, b) in q.layers() {
            want_q = common::apply(&common::expm(&common::problem(n, 1.0), g), &want_q);
            want_q = common::apply(&common::expm(&common::mixer(n), b), &want_q);
        }
        let (got_q, _) = evolve_qaoa(&psi, &q, &model, false).unwrap();
        oracle = oracle.max(common::max_diff(&got_q, &want_q));

        let before = psi.inner(&other).unwrap();
        let (a, _) = evolve_mte(&psi, &schedule, &model, false).unwrap();
        let (b, _) = evolve_mte(&other, &schedule, &model, false).unwrap();
        unitary = unitary.max((a.inner(&b).unwrap() - before).norm()).max((a.norm() - 1.0).abs());
        let (a, _) = evolve_qaoa(&psi, &q, &model, false).unwrap();
        let (b, _) = evolve_qaoa(&other, &q, &model, false).unwrap();
        unitary = unitary.max((a.inner(&b).unwrap() - before).norm()).max((a.norm() - 1.0).abs());
    }
    verdict(
        9,
        "propagators against dense exponentials",
        oracle <= 1e-8 && unitary <= 1e-10,
        format!("worst oracle deviation {oracle:.2e}, worst unitarity defect {unitary:.2e}"),
    );
}

#[test]
fn c10_diabatic_return() {
    let mut cfg = ExperimentConfig::default();
    cfg.kind = ExperimentKind::Decompose;
    cfg.plots = false;
    cfg.mte.restarts = 1;
    cfg.mte.driver = bfgs(1500);
    cfg.decompose.steps = 80;
    let o = run_decomposition(&cfg, &mut scratch()).unwrap();
    let (step, minimum) = o.interior_minimum.unwrap();
    let recovery = o.final_fidelity - minimum;
    verdict(
        10,
        "non-monotone instantaneous ground weight",
        !o.monotone && recovery >= 0.05,
        format!(
            "final fidelity {:.6}, interior minimum {minimum:.5} at step {step}, recovery {recovery:.4}",
            o.final_fidelity
        ),
    );
}

#[test]
fn c11_angle_ratio_tracks_local_adiabatic_field() {
    let o = qaoa_run();
    let rho = o.spearman.unwrap_or(f64::NAN);
    verdict(
        11,
        "beta/gamma against the local-adiabatic field",
        rho > 0.8,
        format!(
            "Spearman {rho:.3} over s > 1/2 after re-optimisation (translated angles {:.3}), {} layers, fidelity {:.6}",
            o.translated_spearman.unwrap_or(f64::NAN),
            o.schedule.len(),
            o.fidelity
        ),
    );
}
