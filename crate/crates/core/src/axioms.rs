//! Executable checks for the structural properties of the ensemble Hamiltonian.
//!
//! Every check returns an [`AxiomReport`] whose `pass` flag is exactly
//! `deviation <= tolerance`. Each one can be fed a deliberately broken model or
//! transformation, and the tests in this module and in `tests/axioms.rs` show that
//! those variants are rejected.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closure::resolved_density;
use crate::derivative::DerivativeScheme;
use crate::error::{Error, Result};
use crate::evolution::{evolve_hydro, RunParams};
use crate::fourier::periodic_shift;
use crate::grid::GridSpec;
use crate::hamiltonian::{hamiltonian_density, total_hamiltonian, HamiltonianModel, Potential};
use crate::scenarios::{preset, wrapped_gaussian, Scenario};
use crate::state::{to_wavefunction, FieldState, Metric};

pub const SCALE_TOLERANCE: f64 = 1e-12;
pub const POSITIVITY_TOLERANCE: f64 = 1e-12;
pub const SEPARABILITY_TOLERANCE: f64 = 1e-6;
pub const BOOST_TOLERANCE: f64 = 1e-4;
pub const UNIFORM_MINIMUM_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_LAMBDAS: [f64; 3] = [0.1, 3.0, 100.0];
pub const DEFAULT_POSITIVITY_TRIALS: usize = 50;
pub const DEFAULT_UNIFORM_TRIALS: usize = 100;
pub const DEFAULT_BOOST_VELOCITY: f64 = 1.0;

/// Fourier modes per axis in the random states.
const RANDOM_MODES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub details: String,
}

impl AxiomReport {
    pub fn new(axiom: &str, deviation: f64, tolerance: f64, details: impl Into<String>) -> Self {
        Self {
            axiom: axiom.into(),
            deviation,
            tolerance,
            pass: deviation <= tolerance,
            details: details.into(),
        }
    }
}

/// A smooth, strictly positive, normalized random state: `p = softplus(f)` for a
/// random trigonometric polynomial `f`, and `S` another one of amplitude
/// `phase_amplitude`.
pub fn random_smooth_state<R: Rng>(grid: &Arc<GridSpec>, rng: &mut R, phase_amplitude: f64) -> Result<FieldState> {
    let f = random_field(grid, rng, 1.5);
    let p: Vec<f64> = f.iter().map(|v| softplus(*v)).collect();
    let s = if phase_amplitude > 0.0 {
        random_field(grid, rng, phase_amplitude)
    } else {
        vec![0.0; grid.len()]
    };
    FieldState::normalized(grid.clone(), &p, s, vec![0.0; grid.dims()], 0.0)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn random_field<R: Rng>(grid: &GridSpec, rng: &mut R, amplitude: f64) -> Vec<f64> {
    let mut out = vec![rng.gen_range(-amplitude..amplitude); grid.len()];
    for axis in 0..grid.dims() {
        let x = grid.coordinate_field(axis);
        let base = 2.0 * std::f64::consts::PI / grid.extent(axis);
        for m in 1..=RANDOM_MODES {
            let a = rng.gen_range(-amplitude..amplitude) / m as f64;
            let phase = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            for (o, x) in out.iter_mut().zip(&x) {
                *o += a * (base * m as f64 * x + phase).cos();
            }
        }
    }
    out
}

/// `max_{λ, x} |h(λp) - h(p)| / (1 + |h(p)|)`.
pub fn check_scale_invariance(state: &FieldState, model: &HamiltonianModel, lambdas: &[f64]) -> Result<AxiomReport> {
    let h = hamiltonian_density(state, model)?;
    let mut worst = 0.0_f64;
    let mut worst_lambda = 1.0;
    for &lambda in lambdas {
        let scaled = hamiltonian_density(&state.scaled_density(lambda), model)?;
        let dev = h
            .iter()
            .zip(&scaled)
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
            .fold(0.0, f64::max);
        if dev > worst || dev.is_nan() {
            worst = dev;
            worst_lambda = lambda;
        }
    }
    Ok(AxiomReport::new(
        "scale-invariance",
        worst,
        SCALE_TOLERANCE,
        format!("lambdas {lambdas:?}, worst at {worst_lambda}"),
    ))
}

/// `max(0, -min H)` over `trials` random smooth states on `grid`.
///
/// Positivity is only claimed for `V ≥ 0`; the details record when the model's
/// potential is negative somewhere.
pub fn check_positivity(model: &HamiltonianModel, grid: &Arc<GridSpec>, trials: usize, seed: u64) -> Result<AxiomReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_h = f64::INFINITY;
    for _ in 0..trials {
        let st = random_smooth_state(grid, &mut rng, 1.0)?;
        min_h = min_h.min(total_hamiltonian(&st, model)?);
    }
    let mut details = format!("{trials} random states (seed {seed}), min H = {min_h:.6e}");
    if !model.potential.is_nonnegative(grid)? {
        details.push_str("; potential is negative somewhere");
    }
    Ok(AxiomReport::new("positivity", (-min_h).max(0.0), POSITIVITY_TOLERANCE, details))
}

/// Two independent 1-D subsystems evolved jointly on the product grid and separately.
///
/// The deviation is the larger of the worst `L2(p_2D - p_a ⊗ p_b)` over the
/// snapshots and the worst spread of `S_2D - (S_a ⊕ S_b)` about its mean, weighted
/// by [`resolved_density`].
pub fn check_separability(a: &Scenario, b: &Scenario, run: &RunParams) -> Result<AxiomReport> {
    check_separability_with_coupling(a, b, run, 0.0)
}

/// [`check_separability`] with an extra interaction `coupling · x_a · x_b` in the
/// joint potential.
pub fn check_separability_with_coupling(
    a: &Scenario,
    b: &Scenario,
    run: &RunParams,
    coupling: f64,
) -> Result<AxiomReport> {
    if a.grid.dims() != 1 || b.grid.dims() != 1 {
        return Err(Error::config("scenario", "separability needs two 1-D scenarios"));
    }
    if a.constants != b.constants {
        return Err(Error::config("model", "subsystems must share A, B and hbar"));
    }
    if a.regularization != b.regularization {
        return Err(Error::config("model.regularization", "subsystems must share the regularization"));
    }
    let grid = Arc::new(a.grid.product(&b.grid)?);
    let metric = Metric::per_axis(vec![a.metric.mass(0), b.metric.mass(0)])?;
    let va = a.potential.evaluate(&a.grid)?;
    let vb = b.potential.evaluate(&b.grid)?;
    let (na, nb) = (a.grid.len(), b.grid.len());
    let mut v = vec![0.0; na * nb];
    for i in 0..na {
        let xa = a.grid.coordinate(0, i);
        for j in 0..nb {
            v[i * nb + j] = va[i] + vb[j] + coupling * xa * b.grid.coordinate(0, j);
        }
    }
    let model = HamiltonianModel::new(a.constants, metric, Potential::Sampled(v))
        .with_regularization(a.regularization);

    let sa = a.initial_state()?;
    let sb = b.initial_state()?;
    let joint = FieldState::with_vacuum(
        grid.clone(),
        &tensor(sa.p(), sb.p(), |x, y| x * y),
        tensor(sa.s(), sb.s(), |x, y| x + y),
        vec![sa.phase_gradient()[0], sb.phase_gradient()[0]],
        a.regularization.density_floor,
    )?;

    let ta = evolve_hydro(&sa, &a.model(), run)?;
    let tb = evolve_hydro(&sb, &b.model(), run)?;
    let tj = evolve_hydro(&joint, &model, run)?;

    let mut worst_p = 0.0_f64;
    let mut worst_s = 0.0_f64;
    for ((pa, pb), pj) in ta.snapshots.iter().zip(&tb.snapshots).zip(&tj.snapshots) {
        let p = tensor(pa.p(), pb.p(), |x, y| x * y);
        worst_p = worst_p.max(grid.l2_distance(pj.p(), &p));
        let ds: Vec<f64> = tensor(pa.s(), pb.s(), |x, y| x + y)
            .iter()
            .zip(pj.s())
            .map(|(s, j)| j - s)
            .collect();
        worst_s = worst_s.max(weighted_spread(&grid, &resolved_density(&grid, pj.p(), &a.regularization), &ds));
    }
    Ok(AxiomReport::new(
        "separability",
        worst_p.max(worst_s),
        SEPARABILITY_TOLERANCE,
        format!(
            "{} + {} (masses {}, {}), coupling {coupling}, t in [0, {}]: L2(p) {worst_p:.3e}, S spread {worst_s:.3e}",
            a.name,
            b.name,
            a.metric.mass(0),
            b.metric.mass(0),
            run.t_final
        ),
    ))
}

fn tensor(a: &[f64], b: &[f64], op: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| (*x, *y))).map(|(x, y)| op(x, y)).collect()
}

/// `sqrt(∫ p (f - ⟨f⟩_p)² / ∫ p)`.
fn weighted_spread(grid: &GridSpec, p: &[f64], f: &[f64]) -> f64 {
    let mass = grid.integrate(p);
    let mean = grid.integrate(&p.iter().zip(f).map(|(p, f)| p * f).collect::<Vec<_>>()) / mass;
    let var = grid.integrate(&p.iter().zip(f).map(|(p, f)| p * (f - mean) * (f - mean)).collect::<Vec<_>>()) / mass;
    var.sqrt()
}

/// How a boost acts on the action. Only [`BoostPhase::Galilean`] is the
/// transformation the equations of motion are covariant under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoostPhase {
    /// `S(x - vt) + m v x - ½ m v² t`.
    #[default]
    Galilean,
    /// `S(x - vt)`: a plain translation with no momentum kick.
    ShiftOnly,
}

/// Boost a 1-D state by velocity `v` at its own time `t`.
pub fn boost(state: &FieldState, mass: f64, v: f64, phase: BoostPhase) -> Result<FieldState> {
    let grid = state.grid();
    if grid.dims() != 1 {
        return Err(Error::Unsupported("boosts are implemented for 1-D states".into()));
    }
    let t = state.time();
    let shift = v * t;
    let g = state.phase_gradient()[0];
    let p = periodic_shift(grid, state.p(), 0, shift);
    let periodic = periodic_shift(grid, &state.s_periodic(), 0, shift);
    let (kick, offset) = match phase {
        BoostPhase::Galilean => (mass * v, -0.5 * mass * v * v * t),
        BoostPhase::ShiftOnly => (0.0, 0.0),
    };
    let s: Vec<f64> = periodic
        .iter()
        .zip(grid.coordinate_field(0))
        .map(|(s, x)| s + g * (x - shift) + kick * x + offset)
        .collect();
    let p: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    FieldState::new(state.grid_arc().clone(), p, s, t)?.with_phase_gradient(vec![g + kick])
}

/// Compare "evolve, then boost" with "boost, then evolve" for a free 1-D scenario.
///
/// The deviation is the larger of `L2(p_1 - p_2)` and the phase distance
/// `sqrt(∫ ρ |e^{iS_1/ħ} - e^{iS_2/ħ}|²)` at `run.t_final`, with `ρ` the
/// [`resolved_density`] of the first state.
pub fn check_galilean_boost(scenario: &Scenario, v: f64, run: &RunParams) -> Result<AxiomReport> {
    check_boost_with(scenario, v, run, BoostPhase::Galilean)
}

pub fn check_boost_with(scenario: &Scenario, v: f64, run: &RunParams, phase: BoostPhase) -> Result<AxiomReport> {
    if scenario.grid.dims() != 1 {
        return Err(Error::Unsupported("the boost check is 1-D".into()));
    }
    if !scenario.potential.is_free() {
        return Err(Error::Unsupported("the boost check needs V = 0".into()));
    }
    let model = scenario.model();
    let mass = scenario.metric.mass(0);
    let initial = scenario.initial_state()?;

    let evolved = evolve_hydro(&initial, &model, run)?;
    let end = evolved.last().expect("trajectory holds the initial state");
    let first = boost(end, mass, v, phase)?;

    let kicked = boost(&initial, mass, v, phase)?;
    let second = evolve_hydro(&kicked, &model, run)?;
    let second = second.last().expect("trajectory holds the initial state");

    let grid = &scenario.grid;
    let dp = grid.l2_distance(first.p(), second.p());
    let w1 = to_wavefunction(&first.with_fields(vec![1.0; grid.len()], first.s().to_vec(), 0.0), &scenario.constants);
    let w2 = to_wavefunction(&second.with_fields(vec![1.0; grid.len()], second.s().to_vec(), 0.0), &scenario.constants);
    let phase_gap: Vec<f64> = w1
        .psi()
        .iter()
        .zip(w2.psi())
        .map(|(a, b)| (a - b).norm_sqr())
        .collect();
    let weight = resolved_density(grid, first.p(), &scenario.regularization);
    let ds = grid
        .integrate(&weight.iter().zip(&phase_gap).map(|(p, d)| p * d).collect::<Vec<_>>())
        .sqrt();
    Ok(AxiomReport::new(
        "galilean-boost",
        dp.max(ds),
        BOOST_TOLERANCE,
        format!(
            "{} boosted by v = {v} over t = {}: L2(p) {dp:.3e}, phase {ds:.3e}",
            scenario.name, run.t_final
        ),
    ))
}

/// `max(0, H(uniform) - min H)` over `trials` random densities at fixed `S`.
///
/// The claim concerns `V = 0` and `S = 0`; the details record any departure.
pub fn check_uniform_minimum(
    model: &HamiltonianModel,
    grid: &Arc<GridSpec>,
    s_fixed: Option<&[f64]>,
    trials: usize,
    seed: u64,
) -> Result<AxiomReport> {
    let s = s_fixed.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; grid.len()]);
    let uniform = FieldState::new(grid.clone(), vec![1.0 / grid.volume(); grid.len()], s.clone(), 0.0)?;
    let h_uniform = total_hamiltonian(&uniform, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_h = f64::INFINITY;
    for _ in 0..trials {
        let p = random_smooth_state(grid, &mut rng, 0.0)?;
        let st = FieldState::new(grid.clone(), p.p().to_vec(), s.clone(), 0.0)?;
        min_h = min_h.min(total_hamiltonian(&st, model)?);
    }
    let mut details = format!("{trials} random densities (seed {seed}): H(uniform) = {h_uniform:.6e}, min H = {min_h:.6e}");
    if !model.potential.is_free() {
        details.push_str("; potential is not zero");
    }
    if s.iter().any(|v| *v != 0.0) {
        details.push_str("; S is not zero");
    }
    Ok(AxiomReport::new(
        "uniform-minimum",
        (h_uniform - min_h).max(0.0),
        UNIFORM_MINIMUM_TOLERANCE,
        details,
    ))
}

/// Perturb `p` and `S` at one grid point and measure how far `h` responds.
///
/// The deviation is the largest change of `h` more than `radius` points away
/// from the probe along any axis (periodic distance); a local density whose
/// derivatives read at most `radius` neighbours scores exactly zero.
pub fn check_locality(state: &FieldState, model: &HamiltonianModel, probe: usize, radius: usize) -> Result<AxiomReport> {
    let grid = state.grid();
    let h0 = hamiltonian_density(state, model)?;
    let mut p = state.p().to_vec();
    let mut s = state.s().to_vec();
    p[probe] *= 1.01;
    s[probe] += 0.01;
    let h1 = hamiltonian_density(&state.with_fields(p, s, state.time()), model)?;
    let centre = grid.multi_index(probe);
    let mut worst = 0.0_f64;
    for i in 0..grid.len() {
        let idx = grid.multi_index(i);
        let far = idx.iter().zip(&centre).zip(grid.points()).any(|((&a, &b), &n)| {
            let d = a.abs_diff(b);
            d.min(n - d) > radius
        });
        if far {
            worst = worst.max((h1[i] - h0[i]).abs());
        }
    }
    Ok(AxiomReport::new(
        "locality",
        worst,
        0.0,
        format!("{:?} derivatives, claimed radius {radius}", model.scheme),
    ))
}

/// The full suite on the shipped scenarios, in a fixed order.
pub fn default_suite(seed: u64) -> Result<Vec<AxiomReport>> {
    let free = preset("free-quantum-gaussian")?;
    let model = free.model();
    let circle = Arc::new(GridSpec::line(128, -std::f64::consts::PI, std::f64::consts::PI)?);
    let gaussian = wrapped_gaussian(&circle, 1.0)?;
    let moving = gaussian.with_fields(gaussian.p().to_vec(), circle.sample(|x| x[0].sin()), 0.0);
    let mut reports = vec![check_scale_invariance(&moving, &model, &DEFAULT_LAMBDAS)?];

    reports.push(check_positivity(&model, &circle, DEFAULT_POSITIVITY_TRIALS, seed)?);

    let (a, b) = separable_pair()?;
    reports.push(check_separability(&a, &b, &a.run_params().with_stride(20))?);

    let boosted = preset("boosted-gaussian")?;
    reports.push(check_galilean_boost(&boosted, DEFAULT_BOOST_VELOCITY, &boosted.run_params())?);

    reports.push(check_uniform_minimum(&model, &circle, None, DEFAULT_UNIFORM_TRIALS, seed)?);

    let fd = model.with_scheme(DerivativeScheme::FiniteDifference4);
    let radius = DerivativeScheme::FiniteDifference4.stencil_radius(&circle, 0);
    reports.push(check_locality(&moving, &fd, circle.len() / 2, radius)?);
    Ok(reports)
}

/// The two 1-D factors of the `two-particle-separable` preset.
pub fn separable_pair() -> Result<(Scenario, Scenario)> {
    let joint = preset("two-particle-separable")?;
    let factor = |axis: usize| -> Result<Scenario> {
        let grid = GridSpec::line(joint.grid.points()[axis], joint.grid.lower()[axis], joint.grid.upper()[axis])?;
        let initial = match &joint.initial {
            crate::scenarios::InitialCondition::Gaussian { mu, sigma, k } => crate::scenarios::InitialCondition::Gaussian {
                mu: vec![mu[axis]],
                sigma: vec![sigma[axis]],
                k: vec![k[axis]],
            },
            other => other.clone(),
        };
        Ok(Scenario {
            name: format!("{}[{axis}]", joint.name),
            grid: Arc::new(grid),
            metric: Metric::per_axis(vec![joint.metric.mass(axis)])?,
            constants: joint.constants,
            potential: Potential::Free,
            initial,
            t_final: joint.t_final,
            regularization: joint.regularization,
        })
    };
    Ok((factor(0)?, factor(1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::InformationTerm;
    use crate::state::Constants;

    fn circle() -> Arc<GridSpec> {
        Arc::new(GridSpec::line(64, 0.0, 2.0 * std::f64::consts::PI).unwrap())
    }

    fn model(c: Constants) -> HamiltonianModel {
        HamiltonianModel::new(c, Metric::per_axis(vec![1.0]).unwrap(), Potential::Free)
    }

    #[test]
    fn report_pass_is_deviation_within_tolerance() {
        assert!(AxiomReport::new("x", 1e-3, 1e-3, "").pass);
        assert!(!AxiomReport::new("x", 2e-3, 1e-3, "").pass);
        assert!(!AxiomReport::new("x", f64::NAN, 1e-3, "").pass);
    }

    #[test]
    fn random_states_are_seeded_and_normalized() {
        let g = circle();
        let a = random_smooth_state(&g, &mut ChaCha8Rng::seed_from_u64(7), 1.0).unwrap();
        let b = random_smooth_state(&g, &mut ChaCha8Rng::seed_from_u64(7), 1.0).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert!(a.p().iter().all(|p| *p > 0.0));
    }

    #[test]
    fn scale_invariance_identity_and_control() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let st = random_smooth_state(&circle(), &mut rng, 1.0).unwrap();
        let m = model(Constants::default());
        assert_eq!(check_scale_invariance(&st, &m, &[1.0]).unwrap().deviation, 0.0);
        assert!(check_scale_invariance(&st, &m, &DEFAULT_LAMBDAS).unwrap().pass);
        let raw = m.with_information(InformationTerm::RawGradient);
        let r = check_scale_invariance(&st, &raw, &DEFAULT_LAMBDAS).unwrap();
        assert!(!r.pass && r.deviation > 1e3 * r.tolerance, "{r:?}");
    }

    #[test]
    fn positivity_holds_and_negative_potential_breaks_it() {
        let g = circle();
        assert!(check_positivity(&model(Constants::default()), &g, 20, 1).unwrap().pass);
        let sunk = HamiltonianModel {
            potential: Potential::Sampled(vec![-1.0; g.len()]),
            ..model(Constants::default())
        };
        assert!(!check_positivity(&sunk, &g, 20, 1).unwrap().pass);
    }

    #[test]
    fn uniform_minimum_and_control() {
        let g = circle();
        let r = check_uniform_minimum(&model(Constants::default()), &g, None, 30, 2).unwrap();
        assert!(r.pass && r.deviation == 0.0, "{r:?}");
        // a confining potential rewards concentrating the density
        let trap = HamiltonianModel {
            potential: Potential::Sampled(g.sample(|x| 20.0 * (x[0] - std::f64::consts::PI).powi(2))),
            ..model(Constants::default())
        };
        assert!(!check_uniform_minimum(&trap, &g, None, 30, 2).unwrap().pass);
    }

    #[test]
    fn uniform_state_alone_matches_uniform() {
        let g = circle();
        let r = check_uniform_minimum(&model(Constants::classical(1.0).unwrap()), &g, None, 5, 0).unwrap();
        // with B = 0 and S = 0 every density has H = 0
        assert_eq!(r.deviation, 0.0);
    }

    #[test]
    fn locality_of_stencils() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let st = random_smooth_state(&circle(), &mut rng, 1.0).unwrap();
        let fd = model(Constants::default()).with_scheme(DerivativeScheme::FiniteDifference4);
        let r = check_locality(&st, &fd, 10, 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(!check_locality(&st, &fd, 10, 1).unwrap().pass);
        assert!(!check_locality(&st, &model(Constants::default()), 10, 2).unwrap().pass);
    }

    #[test]
    fn boost_of_a_state_at_rest_adds_the_momentum() {
        let sc = preset("free-quantum-gaussian").unwrap();
        let st = sc.initial_state().unwrap();
        let b = boost(&st, 1.0, 0.5, BoostPhase::Galilean).unwrap();
        assert_eq!(b.p(), st.p());
        assert_eq!(b.phase_gradient(), &[0.5]);
        let none = boost(&st, 1.0, 0.0, BoostPhase::Galilean).unwrap();
        assert_eq!(none, st);
    }

    #[test]
    fn separability_rejects_mismatched_inputs() {
        let (a, b) = separable_pair().unwrap();
        let run = a.run_params();
        let classical = b.clone().with_constants(Constants::classical(1.0).unwrap());
        assert!(matches!(check_separability(&a, &classical, &run), Err(Error::Config { .. })));
        let joint = preset("two-particle-separable").unwrap();
        assert!(check_separability(&joint, &b, &run).is_err());
    }
}
