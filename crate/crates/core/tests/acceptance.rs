//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ensemble_core::axioms::{
    check_boost_with, check_locality, check_positivity, check_scale_invariance, check_separability_with_coupling,
    check_uniform_minimum, default_suite, random_smooth_state, separable_pair, AxiomReport, BoostPhase,
    DEFAULT_BOOST_VELOCITY, DEFAULT_LAMBDAS,
};
use ensemble_core::cli::{drifts, run};
use ensemble_core::config::parse_config;
use ensemble_core::derivative::DerivativeScheme;
use ensemble_core::diagnostics::{compare_with_wavefunction, free_gaussian_width, StateComparison};
use ensemble_core::evolution::{evolve_hydro, evolve_reference, RunParams, Trajectory};
use ensemble_core::grid::GridSpec;
use ensemble_core::hamiltonian::{
    functional_derivative_check, hamiltonian_density, hjb_rhs, quantum_potential, HamiltonianModel,
    InformationTerm, Potential,
};
use ensemble_core::scenarios::{preset, wrapped_gaussian, Scenario};
use ensemble_core::state::{to_wavefunction, Constants, FieldState, Metric, Wavefunction};

type Outcome = ensemble_core::Result<(bool, String)>;
type Criterion<'a> = (&'static str, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn circle(points: usize) -> Arc<GridSpec> {
    Arc::new(GridSpec::line(points, -PI, PI).unwrap())
}

struct Runs {
    free: Trajectory<FieldState>,
    free_ref: Trajectory<Wavefunction>,
    free_elapsed: Duration,
    free_run: RunParams,
    classical: Trajectory<FieldState>,
    coherent: Trajectory<FieldState>,
    others: Vec<(String, Trajectory<FieldState>)>,
}

fn hydro(sc: &Scenario, run: &RunParams) -> ensemble_core::Result<Trajectory<FieldState>> {
    evolve_hydro(&sc.initial_state()?, &sc.model(), run).map_err(|a| a.error)
}

fn solver_pair(sc: &Scenario, run: &RunParams) -> ensemble_core::Result<(Trajectory<FieldState>, Trajectory<Wavefunction>)> {
    let initial = sc.initial_state()?;
    let h = evolve_hydro(&initial, &sc.model(), run).map_err(|a| a.error)?;
    let r = evolve_reference(&to_wavefunction(&initial, &sc.constants), &sc.model(), run)?;
    Ok((h, r))
}

fn discrepancies(sc: &Scenario, h: &Trajectory<FieldState>, r: &Trajectory<Wavefunction>) -> Vec<StateComparison> {
    h.snapshots
        .iter()
        .zip(&r.snapshots)
        .map(|(a, b)| compare_with_wavefunction(a, b, &sc.constants).unwrap())
        .collect()
}

impl Runs {
    fn compute() -> ensemble_core::Result<Self> {
        let free = preset("free-quantum-gaussian")?;
        let free_run = free.run_params();
        let start = Instant::now();
        let (h, r) = solver_pair(&free, &free_run)?;
        let free_elapsed = start.elapsed();
        let classical = preset("free-classical-gaussian")?;
        let coherent = preset("harmonic-coherent")?;
        let mut others = Vec::new();
        for name in ["harmonic-ground", "boosted-gaussian", "two-particle-separable"] {
            let sc = preset(name)?;
            others.push((name.to_string(), hydro(&sc, &sc.run_params())?));
        }
        Ok(Self {
            free: h,
            free_ref: r,
            free_elapsed,
            free_run,
            classical: hydro(&classical, &classical.run_params())?,
            coherent: hydro(&coherent, &coherent.run_params())?,
            others,
        })
    }
}

fn quantum_equivalence(runs: &Runs) -> Outcome {
    let sc = preset("free-quantum-gaussian")?;
    let d = discrepancies(&sc, &runs.free, &runs.free_ref);
    let l2 = d.iter().map(|c| c.l2_density).fold(0.0, f64::max);
    let fid = d.iter().map(|c| c.fidelity).fold(1.0, f64::min);
    let secs = runs.free_elapsed.as_secs_f64();
    Ok((
        l2 < 1e-4 && fid > 1.0 - 1e-5 && secs < 60.0,
        format!(
            "{} snapshots to t = 2: max L2(p) {l2:.3e} (< 1e-4), min fidelity 1 - {:.3e} (> 1 - 1e-5), both solvers {secs:.1} s (< 60 s)",
            d.len(),
            1.0 - fid
        ),
    ))
}

fn b_identity() -> Outcome {
    let grid = circle(256);
    let model = preset("free-quantum-gaussian")?.model();
    let mut worst = 0.0_f64;
    let mut worst_other_b = f64::INFINITY;
    for seed in 0..10 {
        let st = random_smooth_state(&grid, &mut ChaCha8Rng::seed_from_u64(seed), 1.0)?;
        let q = quantum_potential(&st, &model)?;
        let ds = st.grad_s(model.scheme, 0);
        let b_part = |m: &HamiltonianModel| -> ensemble_core::Result<Vec<f64>> {
            let rhs = hjb_rhs(&st, m)?;
            Ok(rhs.iter().zip(&ds).map(|(r, d)| r + m.constants.a() * d * d).collect())
        };
        let scale = q.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let neg_q: Vec<f64> = q.iter().map(|v| -v).collect();
        worst = worst.max(sup_diff(&b_part(&model)?, &neg_q) / scale);
        let off = model.clone().with_constants(model.constants.with_b(0.125 * 1.01)?);
        worst_other_b = worst_other_b.min(sup_diff(&b_part(&off)?, &neg_q) / scale);
    }
    Ok((
        worst < 1e-9,
        format!(
            "10 random states: max |B-part + Q| / sup|Q| = {worst:.3e} at B = 1/8 (< 1e-9); {worst_other_b:.3e} at B = 1.01/8"
        ),
    ))
}

fn classical_contrast(runs: &Runs) -> Outcome {
    let v0 = runs.classical.observables[0].variance[0];
    let drift = runs
        .classical
        .observables
        .iter()
        .map(|o| (o.variance[0] - v0).abs())
        .fold(0.0, f64::max);
    let last = runs.free.observables.last().unwrap();
    let sigma = free_gaussian_width(last.time, 1.0, 1.0, 1.0);
    let rel = (last.variance[0] - 2.0).abs() / 2.0;
    Ok((
        drift < 1e-6 && rel < 0.01,
        format!(
            "B = 0: max |var(t) - var(0)| {drift:.3e} (< 1e-6); B = 1/8: var(2) = {:.6} vs 2 ± 1% (rel {rel:.2e}), analytic sigma(2)^2 = {:.6}",
            last.variance[0],
            sigma * sigma
        ),
    ))
}

fn harmonic_oscillator(runs: &Runs) -> Outcome {
    let obs = &runs.coherent.observables;
    let mean_err = obs.iter().map(|o| (o.mean[0] - o.time.cos()).abs()).fold(0.0, f64::max);
    let v0 = obs[0].variance[0];
    let var_err = obs.iter().map(|o| (o.variance[0] - v0).abs() / v0).fold(0.0, f64::max);
    let first = &runs.coherent.snapshots[0];
    let last = runs.coherent.last().unwrap();
    let l2 = first.grid().l2_distance(first.p(), last.p());
    Ok((
        mean_err < 5e-3 && var_err < 5e-3 && l2 < 1e-4 && (last.time() - 2.0 * PI).abs() < 1e-12,
        format!(
            "one period: max |<x> - cos t| {mean_err:.3e} (< 5e-3), variance drift {var_err:.3e} (< 0.5%), L2(p(T) - p(0)) {l2:.3e} (< 1e-4)"
        ),
    ))
}

fn conservation(runs: &Runs) -> Outcome {
    let mut all: Vec<(&str, &Trajectory<FieldState>)> = vec![
        ("free-quantum-gaussian", &runs.free),
        ("free-classical-gaussian", &runs.classical),
        ("harmonic-coherent", &runs.coherent),
    ];
    all.extend(runs.others.iter().map(|(n, t)| (n.as_str(), t)));
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, t) in all {
        let (n, e) = drifts(&t.observables);
        pass &= n <= 1e-8 && e <= 1e-6;
        parts.push(format!("{name} {n:.1e}/{e:.1e}"));
    }
    Ok((pass, format!("norm/energy drift (<= 1e-8 / 1e-6): {}", parts.join(", "))))
}

fn axiom_suite() -> Outcome {
    let suite = default_suite(0)?;
    let mut pass = suite.iter().all(|r| r.pass);
    let mut parts: Vec<String> = suite.iter().map(|r| format!("{} {:.2e}", r.axiom, r.deviation)).collect();

    let free = preset("free-quantum-gaussian")?;
    let model = free.model();
    let grid = circle(128);
    let g = wrapped_gaussian(&grid, 1.0)?;
    let moving = FieldState::new(grid.clone(), g.p().to_vec(), grid.sample(|x| x[0].sin()), 0.0)?;
    let raw = model.clone().with_information(InformationTerm::RawGradient);
    let mut sunk = model.clone();
    sunk.potential = Potential::Sampled(vec![-1.0; grid.len()]);
    let (a, b) = separable_pair()?;
    let boosted = preset("boosted-gaussian")?;
    let mut trap = model.clone();
    trap.potential = Potential::Harmonic { spring: vec![1.0] };
    let fd = model.clone().with_scheme(DerivativeScheme::FiniteDifference4);

    let controls: Vec<AxiomReport> = vec![
        check_scale_invariance(&moving, &raw, &DEFAULT_LAMBDAS)?,
        check_positivity(&sunk, &grid, 50, 0)?,
        check_separability_with_coupling(&a, &b, &a.run_params().with_stride(20), 0.1)?,
        check_boost_with(&boosted, DEFAULT_BOOST_VELOCITY, &boosted.run_params(), BoostPhase::ShiftOnly)?,
        check_uniform_minimum(&trap, &grid, None, 100, 0)?,
        check_locality(&moving, &fd, grid.len() / 2, 1)?,
    ];
    for c in &controls {
        pass &= !c.pass;
        parts.push(format!("control {} {:.2e} {}", c.axiom, c.deviation, if c.pass { "NOT REJECTED" } else { "rejected" }));
    }
    Ok((pass, parts.join(", ")))
}

fn convergence_order(runs: &Runs) -> Outcome {
    let sc = preset("free-quantum-gaussian")?;
    let coarse = discrepancies(&sc, &runs.free, &runs.free_ref);
    let mut half = runs.free_run.clone();
    half.dt /= 2.0;
    half.snapshot_stride *= 2;
    let (h, r) = solver_pair(&sc, &half)?;
    let fine = discrepancies(&sc, &h, &r);
    let d1 = coarse.last().unwrap().l2_density;
    let d2 = fine.last().unwrap().l2_density;
    let ratio = d1 / d2;
    Ok((
        (8.0..=32.0).contains(&ratio),
        format!(
            "final L2(p_hydro - p_ref): {d1:.4e} at dt = {:.4e}, {d2:.4e} at dt/2; ratio {ratio:.3} (needs [8, 32])",
            runs.free_run.dt
        ),
    ))
}

fn backend_agreement() -> Outcome {
    let grid = circle(256);
    let spectral = preset("free-quantum-gaussian")?.model();
    let fd = spectral.clone().with_scheme(DerivativeScheme::FiniteDifference4);
    let mut worst_h = 0.0_f64;
    let mut worst_q = 0.0_f64;
    let phases: [fn(f64) -> f64; 3] = [|_| 0.0, f64::sin, |x| 0.5 * (2.0 * x).cos()];
    for sigma in [1.0, 1.2, 1.5] {
        let g = wrapped_gaussian(&grid, sigma)?;
        for phase in phases {
            let st = FieldState::new(grid.clone(), g.p().to_vec(), grid.sample(|x| phase(x[0])), 0.0)?;
            worst_h = worst_h.max(sup_diff(&hamiltonian_density(&st, &spectral)?, &hamiltonian_density(&st, &fd)?));
            worst_q = worst_q.max(sup_diff(&quantum_potential(&st, &spectral)?, &quantum_potential(&st, &fd)?));
        }
    }
    Ok((
        worst_h < 1e-6 && worst_q < 1e-6,
        format!(
            "wrapped Gaussians (sigma 1, 1.2, 1.5; three phases) on 256 points: sup|dh| {worst_h:.3e}, sup|dQ| {worst_q:.3e} (< 1e-6)"
        ),
    ))
}

fn functional_derivatives() -> Outcome {
    let grid = circle(256);
    let metric = Metric::per_axis(vec![1.0])?;
    let mut states = Vec::new();
    for sigma in [1.0, 1.5] {
        let g = wrapped_gaussian(&grid, sigma)?;
        states.push(FieldState::new(grid.clone(), g.p().to_vec(), grid.sample(|x| x[0].sin()), 0.0)?);
    }
    for seed in 0..3 {
        states.push(random_smooth_state(&grid, &mut ChaCha8Rng::seed_from_u64(seed), 1.0)?);
    }
    let mut worst = [0.0_f64; 2];
    for (k, constants) in [Constants::classical(1.0)?, Constants::quantum(1.0)?].into_iter().enumerate() {
        for potential in [Potential::Free, Potential::Harmonic { spring: vec![0.5] }] {
            let model = HamiltonianModel::new(constants, metric.clone(), potential);
            for st in &states {
                worst[k] = worst[k].max(functional_derivative_check(st, &model, 1e-6)?.max_rel_error());
            }
        }
    }
    Ok((
        worst[0] < 1e-4 && worst[1] < 1e-4,
        format!(
            "max relative error B = 0: {:.3e}, B = 1/8: {:.3e} (< 1e-4) over 2 wrapped Gaussians and 3 random states, free and trapped",
            worst[0], worst[1]
        ),
    ))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir()?;
    let mut outputs = Vec::new();
    for run_dir in ["a", "b"] {
        let mut config = parse_config("scenario.name = harmonic-coherent\nrun.seed = 42\nrun.stride = 20\n")?;
        config.output_dir = dir.path().join(run_dir);
        let outcome = run(&config)?;
        outputs.push((outcome.pass, std::fs::read(config.output_dir.join("observables.csv"))?));
    }
    let identical = outputs[0].1 == outputs[1].1;
    Ok((
        identical && outputs[0].0,
        format!(
            "two harmonic-coherent runs with seed 42: observables.csv {} ({} bytes)",
            if identical { "bit-identical" } else { "DIFFERENT" },
            outputs[0].1.len()
        ),
    ))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = match Runs::compute() {
        Ok(r) => Some(r),
        Err(e) => {
            println!("FAIL  shared runs: {e}");
            None
        }
    };
    let runs = &runs;
    let with_runs = |f: fn(&Runs) -> Outcome| {
        move || match runs {
            Some(r) => f(r),
            None => Ok((false, "shared runs failed".into())),
        }
    };
    let criteria: Vec<Criterion> = vec![
        ("1", "quantum equivalence", Box::new(with_runs(quantum_equivalence))),
        ("2", "B-value identification", Box::new(b_identity)),
        ("3", "classical/quantum contrast", Box::new(with_runs(classical_contrast))),
        ("4", "harmonic oscillator", Box::new(with_runs(harmonic_oscillator))),
        ("5", "conservation", Box::new(with_runs(conservation))),
        ("6", "axiom suite and controls", Box::new(axiom_suite)),
        ("7a", "RK4 convergence order", Box::new(with_runs(convergence_order))),
        ("7b", "spectral vs FD4 backends", Box::new(backend_agreement)),
        ("8", "functional derivatives", Box::new(functional_derivatives)),
        ("9", "CLI determinism", Box::new(cli_determinism)),
    ];
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !pass {
            failed += 1;
        }
        println!("{}  {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.0} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
