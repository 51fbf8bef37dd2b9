//! Time integration of the hydrodynamic pair (p, S) and of the reference
//! linear Schrödinger equation.
//!
//! The two solvers share no derivative code: the hydrodynamic path goes through
//! [`crate::hamiltonian::equations_of_motion`], the reference path is a Strang
//! split-step propagator acting on ψ directly.

use std::fmt;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{observables, wavefunction_observables, ObservableRecord};
use crate::error::{Error, Result};
use crate::fourier;
use crate::closure;
use crate::grid::GridSpec;
use crate::hamiltonian::{equations_of_motion, HamiltonianModel};
use crate::state::{Constants, FieldState, Metric, Wavefunction};

pub const DEFAULT_STABILITY_FACTOR: f64 = 0.2;
pub const DEFAULT_SNAPSHOT_STRIDE: usize = 10;
/// Relative norm drift that aborts a run.
pub const BLOW_UP_NORM_DRIFT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Integrator {
    #[default]
    Rk4,
    Heun,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::Rk4 => "rk4",
            Integrator::Heun => "heun",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub integrator: Integrator,
    pub stability_factor: f64,
}

/// Largest admissible step: `factor · min(Δx)² · m_min / ħ`.
pub fn stability_limit(grid: &GridSpec, metric: &Metric, constants: &Constants, factor: f64) -> f64 {
    let dx = grid.min_spacing();
    factor * dx * dx * metric.min_mass() / constants.hbar()
}

impl RunParams {
    pub fn new(dt: f64, t_final: f64, snapshot_stride: usize) -> Self {
        Self {
            dt,
            t_final,
            snapshot_stride,
            integrator: Integrator::Rk4,
            stability_factor: DEFAULT_STABILITY_FACTOR,
        }
    }

    /// Step size at the stability limit for the default factor.
    pub fn from_guard(grid: &GridSpec, metric: &Metric, constants: &Constants, t_final: f64) -> Self {
        let dt = stability_limit(grid, metric, constants, DEFAULT_STABILITY_FACTOR);
        Self::new(dt, t_final, DEFAULT_SNAPSHOT_STRIDE)
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_stability_factor(mut self, factor: f64) -> Self {
        self.stability_factor = factor;
        self
    }

    pub fn validate(&self, grid: &GridSpec, metric: &Metric, constants: &Constants) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidRun(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::InvalidRun(format!(
                "t_final = {} must be non-negative",
                self.t_final
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidRun("snapshot stride must be at least 1".into()));
        }
        if !(self.stability_factor.is_finite() && self.stability_factor > 0.0) {
            return Err(Error::InvalidRun(format!(
                "stability factor {} must be positive",
                self.stability_factor
            )));
        }
        let limit = stability_limit(grid, metric, constants, self.stability_factor);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidRun(format!(
                "dt = {} exceeds the stability limit {limit:.6e}",
                self.dt
            )));
        }
        Ok(())
    }

    /// Number of steps and the (possibly shortened) uniform step that lands on `t_final`.
    pub fn schedule(&self) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_final / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

/// Snapshots (initial state first, strictly increasing times) with one
/// observable record per snapshot.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub snapshots: Vec<T>,
    pub observables: Vec<ObservableRecord>,
}

impl<T> Trajectory<T> {
    fn empty() -> Self {
        Self {
            snapshots: Vec::new(),
            observables: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> Option<&T> {
        self.snapshots.last()
    }
}

/// A run that stopped early: whatever was recorded before the failure, plus the cause.
#[derive(Debug)]
pub struct Aborted<T> {
    pub partial: Trajectory<T>,
    pub error: Error,
}

impl<T> fmt::Display for Aborted<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "run aborted after {} snapshots: {}",
            self.partial.len(),
            self.error
        )
    }
}

impl<T: fmt::Debug> std::error::Error for Aborted<T> {}

impl<T> From<Aborted<T>> for Error {
    fn from(a: Aborted<T>) -> Self {
        a.error
    }
}

// ---------------------------------------------------------------------------
// hydrodynamic solver

/// Rates used by the integrator: Hamilton's equations, passed through the
/// low-density closure and the rate filter when the model's regularization
/// enables them (see [`crate::closure`]).
pub(crate) fn hydro_rhs(state: &FieldState, model: &HamiltonianModel) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut dp, mut ds) = equations_of_motion(state, model)?;
    let reg = model.regularization;
    if reg.vacuum_density > 0.0 {
        dp = closure::apply(state, model, &mut ds);
    }
    if reg.filter_strength > 0.0 {
        closure::filter_rates(state.grid(), model, &mut dp, &mut ds);
    }
    Ok((dp, ds))
}

fn axpy_state(base: &FieldState, dt: f64, k: &(Vec<f64>, Vec<f64>), time: f64, floor: f64) -> FieldState {
    let mut p: Vec<f64> = base.p().iter().zip(&k.0).map(|(p, d)| p + dt * d).collect();
    let s: Vec<f64> = base.s().iter().zip(&k.1).map(|(s, d)| s + dt * d).collect();
    clamp_density(base.grid(), &mut p, floor);
    base.with_fields(p, s, time)
}

fn clamp_density(grid: &GridSpec, p: &mut [f64], floor: f64) {
    let level = floor * grid.integrate(p);
    for v in p.iter_mut() {
        if *v < level {
            *v = level;
        }
    }
}

fn check_finite(state: &FieldState, step: usize) -> Result<()> {
    if state.p().iter().chain(state.s()).any(|v| !v.is_finite()) {
        return Err(Error::BlowUp {
            step,
            time: state.time(),
            reason: "non-finite field value".into(),
        });
    }
    Ok(())
}

fn step_with(
    state: &FieldState,
    model: &HamiltonianModel,
    dt: f64,
    integrator: Integrator,
) -> Result<FieldState> {
    let floor = model.density_floor();
    let t = state.time();
    let next = match integrator {
        Integrator::Rk4 => {
            let k1 = hydro_rhs(state, model)?;
            let s2 = axpy_state(state, 0.5 * dt, &k1, t + 0.5 * dt, floor);
            let k2 = hydro_rhs(&s2, model)?;
            let s3 = axpy_state(state, 0.5 * dt, &k2, t + 0.5 * dt, floor);
            let k3 = hydro_rhs(&s3, model)?;
            let s4 = axpy_state(state, dt, &k3, t + dt, floor);
            let k4 = hydro_rhs(&s4, model)?;
            let combine = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
                (0..a.len())
                    .map(|i| (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) / 6.0)
                    .collect()
            };
            let k = (
                combine(&k1.0, &k2.0, &k3.0, &k4.0),
                combine(&k1.1, &k2.1, &k3.1, &k4.1),
            );
            axpy_state(state, dt, &k, t + dt, floor)
        }
        Integrator::Heun => {
            let k1 = hydro_rhs(state, model)?;
            let s2 = axpy_state(state, dt, &k1, t + dt, floor);
            let k2 = hydro_rhs(&s2, model)?;
            let k = (
                k1.0.iter().zip(&k2.0).map(|(a, b)| 0.5 * (a + b)).collect(),
                k1.1.iter().zip(&k2.1).map(|(a, b)| 0.5 * (a + b)).collect(),
            );
            axpy_state(state, dt, &k, t + dt, floor)
        }
    };
    check_finite(&next, 1)?;
    if model.regularization.vacuum_density > 0.0 {
        let p = closure::project_tail(&next, model);
        return Ok(next.with_fields(p, next.s().to_vec(), next.time()));
    }
    Ok(next)
}

/// One explicit RK4 step of Hamilton's equations for (p, S).
pub fn step_hydro(state: &FieldState, model: &HamiltonianModel, dt: f64) -> Result<FieldState> {
    step_with(state, model, dt, Integrator::Rk4)
}

pub fn evolve_hydro(
    initial: &FieldState,
    model: &HamiltonianModel,
    run: &RunParams,
) -> std::result::Result<Trajectory<FieldState>, Aborted<FieldState>> {
    let mut traj = Trajectory::empty();
    let abort = |traj, error| Aborted {
        partial: traj,
        error,
    };
    if let Err(e) = run.validate(initial.grid(), &model.metric, &model.constants) {
        return Err(abort(traj, e));
    }
    match observables(initial, model) {
        Ok(o) => traj.observables.push(o),
        Err(e) => return Err(abort(traj, e)),
    }
    traj.snapshots.push(initial.clone());

    let (steps, dt) = run.schedule();
    let norm0 = initial.norm();
    let mut state = initial.clone();
    for n in 1..=steps {
        state = match step_with(&state, model, dt, run.integrator) {
            Ok(s) => s.with_time(initial.time() + n as f64 * dt),
            Err(Error::BlowUp { reason, .. }) => {
                let e = Error::BlowUp {
                    step: n,
                    time: state.time() + dt,
                    reason,
                };
                return Err(abort(traj, e));
            }
            Err(e) => return Err(abort(traj, e)),
        };
        let drift = (state.norm() - norm0).abs() / norm0;
        if drift > BLOW_UP_NORM_DRIFT {
            let e = Error::BlowUp {
                step: n,
                time: state.time(),
                reason: format!("norm drifted by {drift:.3e}"),
            };
            return Err(abort(traj, e));
        }
        if n % run.snapshot_stride == 0 || n == steps {
            match observables(&state, model) {
                Ok(o) => traj.observables.push(o),
                Err(e) => return Err(abort(traj, e)),
            }
            traj.snapshots.push(state.clone());
        }
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// reference solver

fn require_quantum_point(model: &HamiltonianModel) -> Result<()> {
    if !model.constants.is_quantum_point() {
        return Err(Error::Unsupported(format!(
            "the Schrödinger reference needs A = 1/2, B = hbar^2/8 (got A = {}, B = {})",
            model.constants.a(),
            model.constants.b()
        )));
    }
    Ok(())
}

/// Precomputed phase factors for one Strang step.
struct SplitStep {
    kinetic_half: Vec<Vec<Complex64>>,
    potential: Vec<Complex64>,
}

impl SplitStep {
    fn new(grid: &GridSpec, model: &HamiltonianModel, dt: f64) -> Result<Self> {
        model.metric.check_grid(grid)?;
        let hbar = model.constants.hbar();
        let kinetic_half = (0..grid.dims())
            .map(|axis| {
                let g = model.metric.inverse_mass(axis);
                fourier::wavenumbers(grid.points()[axis], grid.extent(axis))
                    .iter()
                    .map(|k| Complex64::from_polar(1.0, -hbar * g * k * k * dt / 4.0))
                    .collect()
            })
            .collect();
        let potential = model
            .potential
            .evaluate(grid)?
            .iter()
            .map(|v| Complex64::from_polar(1.0, -v * dt / hbar))
            .collect();
        Ok(Self {
            kinetic_half,
            potential,
        })
    }

    fn kinetic(&self, grid: &GridSpec, psi: &mut [Complex64]) {
        for (axis, phases) in self.kinetic_half.iter().enumerate() {
            fourier::filter_axis_complex(grid, psi, axis, |j, _| phases[j]);
        }
    }

    fn apply(&self, grid: &GridSpec, psi: &mut [Complex64]) {
        self.kinetic(grid, psi);
        for (z, ph) in psi.iter_mut().zip(&self.potential) {
            *z *= ph;
        }
        self.kinetic(grid, psi);
    }
}

/// One Strang split step: half kinetic (Fourier space), full potential, half kinetic.
pub fn step_reference(wf: &Wavefunction, model: &HamiltonianModel, dt: f64) -> Result<Wavefunction> {
    require_quantum_point(model)?;
    let split = SplitStep::new(wf.grid(), model, dt)?;
    let mut psi = wf.psi().to_vec();
    split.apply(wf.grid(), &mut psi);
    Ok(wf.with_psi(psi, wf.time() + dt))
}

pub fn evolve_reference(
    initial: &Wavefunction,
    model: &HamiltonianModel,
    run: &RunParams,
) -> Result<Trajectory<Wavefunction>> {
    require_quantum_point(model)?;
    run.validate(initial.grid(), &model.metric, &model.constants)?;
    let grid = initial.grid();
    let (steps, dt) = run.schedule();
    let split = SplitStep::new(grid, model, dt)?;

    let mut traj = Trajectory::empty();
    traj.observables.push(wavefunction_observables(initial, model)?);
    traj.snapshots.push(initial.clone());
    let mut psi = initial.psi().to_vec();
    for n in 1..=steps {
        split.apply(grid, &mut psi);
        if n % run.snapshot_stride == 0 || n == steps {
            let wf = initial.with_psi(psi.clone(), initial.time() + n as f64 * dt);
            traj.observables.push(wavefunction_observables(&wf, model)?);
            traj.snapshots.push(wf);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Potential;
    use crate::scenarios::coherent_state;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn circle(n: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::line(n, 0.0, 2.0 * PI).unwrap())
    }

    fn model(constants: Constants, potential: Potential) -> HamiltonianModel {
        HamiltonianModel::new(constants, Metric::per_axis(vec![1.0]).unwrap(), potential)
    }

    fn gaussian_psi(grid: &Arc<GridSpec>, sigma: f64) -> Wavefunction {
        let psi = grid
            .sample(|x| (-x[0] * x[0] / (4.0 * sigma * sigma)).exp())
            .into_iter()
            .map(|a| Complex64::new(a, 0.0))
            .collect();
        Wavefunction::normalized(grid.clone(), psi, 0.0).unwrap()
    }

    #[test]
    fn stability_guard() {
        let g = GridSpec::line(256, -10.0, 10.0).unwrap();
        let m = Metric::per_axis(vec![1.0]).unwrap();
        let c = Constants::default();
        let limit = stability_limit(&g, &m, &c, 0.2);
        assert!((limit - 0.2 * (20.0f64 / 256.0).powi(2)).abs() < 1e-15);
        assert!(RunParams::new(10.0, 1.0, 1).validate(&g, &m, &c).is_err());
        assert!(RunParams::new(limit, 1.0, 1).validate(&g, &m, &c).is_ok());
        assert!(RunParams::new(limit, 1.0, 0).validate(&g, &m, &c).is_err());
    }

    #[test]
    fn schedule_lands_on_t_final() {
        let (n, dt) = RunParams::new(0.3, 1.0, 1).schedule();
        assert_eq!(n, 4);
        assert!((dt - 0.25).abs() < 1e-15);
        assert_eq!(RunParams::new(0.25, 1.0, 1).schedule().0, 4);
        assert_eq!(RunParams::new(0.1, 0.0, 1).schedule().0, 0);
    }

    #[test]
    fn uniform_state_is_a_fixed_point() {
        let g = circle(32);
        let st = FieldState::new(g.clone(), vec![1.0 / g.volume(); 32], vec![0.0; 32], 0.0).unwrap();
        let m = model(Constants::default(), Potential::Free);
        let next = step_hydro(&st, &m, 1e-3).unwrap();
        for (a, b) in next.p().iter().zip(st.p()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(next.s().iter().all(|s| s.abs() < 1e-15));
        assert!((next.time() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn classical_plane_wave_action_decreases_linearly() {
        let g = circle(32);
        let k = 2.0;
        let st = FieldState::new(g.clone(), vec![1.0 / g.volume(); 32], g.sample(|x| k * x[0]), 0.0)
            .unwrap()
            .with_phase_gradient(vec![k])
            .unwrap();
        let m = model(Constants::classical(1.0).unwrap(), Potential::Free);
        let run = RunParams::from_guard(&g, &m.metric, &m.constants, 0.5);
        let end = evolve_hydro(&st, &m, &run).unwrap();
        let last = end.last().unwrap();
        assert!((last.time() - 0.5).abs() < 1e-12);
        for (j, s) in last.s().iter().enumerate() {
            let expect = k * g.coordinate(0, j) - 0.5 * k * k * 0.5;
            assert!((s - expect).abs() < 1e-10);
        }
        assert!(last.p().iter().all(|p| (p - 1.0 / g.volume()).abs() < 1e-12));
    }

    #[test]
    fn trajectory_layout() {
        let g = circle(16);
        let st = FieldState::new(g.clone(), vec![1.0 / g.volume(); 16], vec![0.0; 16], 0.0).unwrap();
        let m = model(Constants::default(), Potential::Free);
        let run = RunParams::new(0.01, 0.095, 3);
        let traj = evolve_hydro(&st, &m, &run).unwrap();
        // 10 steps of 0.0095: snapshots after steps 3, 6, 9 and the last one
        assert_eq!(traj.len(), 5);
        assert_eq!(traj.observables.len(), 5);
        assert!(traj.snapshots.windows(2).all(|w| w[1].time() > w[0].time()));
        assert_eq!(traj.snapshots[0], st);

        let zero = evolve_hydro(&st, &m, &RunParams::new(0.01, 0.0, 1)).unwrap();
        assert_eq!(zero.len(), 1);
    }

    #[test]
    fn invalid_run_is_reported_with_empty_trajectory() {
        let g = circle(16);
        let st = FieldState::new(g.clone(), vec![1.0 / g.volume(); 16], vec![0.0; 16], 0.0).unwrap();
        let m = model(Constants::default(), Potential::Free);
        let err = evolve_hydro(&st, &m, &RunParams::new(10.0, 1.0, 1)).unwrap_err();
        assert!(err.partial.is_empty());
        assert!(matches!(err.error, Error::InvalidRun(_)));
    }

    #[test]
    fn one_hydro_step_of_a_coherent_state_matches_the_reference() {
        let g = Arc::new(GridSpec::line(256, -10.0, 10.0).unwrap());
        let m = model(Constants::default(), Potential::Harmonic { spring: vec![1.0] });
        let st = coherent_state(&g, &m.metric, &m.constants, 1.0, 1.0).unwrap();
        let dt = stability_limit(&g, &m.metric, &m.constants, 0.2);
        let hydro = step_hydro(&st, &m, dt).unwrap();
        let reference = step_reference(&crate::state::to_wavefunction(&st, &m.constants), &m, dt).unwrap();
        let c = crate::diagnostics::compare_with_wavefunction(&hydro, &reference, &m.constants).unwrap();
        assert!(1.0 - c.fidelity < 1e-12, "{c:?}");
        assert!(c.l2_density < 1e-9, "{c:?}");
        // Ehrenfest: the packet starts at rest and accelerates towards the origin
        let before = crate::diagnostics::moments(&g, st.p()).1[0];
        let after = crate::diagnostics::moments(&g, hydro.p()).1[0];
        assert!(after < before);
        assert!((before - after - 0.5 * dt * dt).abs() < 1e-3 * dt * dt);
    }

    #[test]
    fn reference_plane_wave_gets_the_kinetic_phase() {
        let g = circle(64);
        let k = 3.0;
        let psi = g.sample(|x| k * x[0]).iter().map(|ph| Complex64::from_polar(1.0, *ph)).collect();
        let wf = Wavefunction::normalized(g.clone(), psi, 0.0).unwrap();
        let m = model(Constants::default(), Potential::Free);
        let dt = 0.01;
        let next = step_reference(&wf, &m, dt).unwrap();
        let phase = Complex64::from_polar(1.0, -k * k * dt / 2.0);
        for (a, b) in next.psi().iter().zip(wf.psi()) {
            assert!((a - b * phase).norm() < 1e-13);
        }
    }

    #[test]
    fn reference_constant_potential_is_a_global_phase() {
        let g = circle(16);
        let wf = Wavefunction::normalized(g.clone(), vec![Complex64::new(1.0, 0.0); 16], 0.0).unwrap();
        let m = model(Constants::default(), Potential::Sampled(vec![0.7; 16]));
        let next = step_reference(&wf, &m, 0.1).unwrap();
        let phase = Complex64::from_polar(1.0, -0.07);
        for (a, b) in next.psi().iter().zip(wf.psi()) {
            assert!((a - b * phase).norm() < 1e-14);
        }
    }

    #[test]
    fn reference_ground_state_is_stationary() {
        let g = Arc::new(GridSpec::line(256, -10.0, 10.0).unwrap());
        let m = model(Constants::default(), Potential::Harmonic { spring: vec![1.0] });
        let wf = gaussian_psi(&g, 0.5f64.sqrt());
        let dt = 0.01;
        let next = step_reference(&wf, &m, dt).unwrap();
        let overlap = wf.inner(&next).unwrap();
        assert!(1.0 - overlap.norm() < 1e-10);
        // Strang splitting shifts the phase by O(dt³)
        assert!((overlap.arg() + 0.5 * dt).abs() < dt.powi(3) / 24.0);
        assert!((next.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_free_gaussian_spreads_analytically() {
        let g = Arc::new(GridSpec::line(256, -20.0, 20.0).unwrap());
        let m = model(Constants::default(), Potential::Free);
        let run = RunParams::from_guard(&g, &m.metric, &m.constants, 1.0);
        let traj = evolve_reference(&gaussian_psi(&g, 1.0), &m, &run).unwrap();
        let sigma = crate::diagnostics::free_gaussian_width(1.0, 1.0, 1.0, 1.0);
        let exact = g.sample(|x| (-x[0] * x[0] / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma));
        let last = traj.last().unwrap();
        assert!(g.l2_distance(&last.density(), &exact) < 1e-6);
        assert!((last.norm() - 1.0).abs() < 1e-10);

        let zero = evolve_reference(&gaussian_psi(&g, 1.0), &m, &RunParams::new(run.dt, 0.0, 1)).unwrap();
        assert_eq!(zero.len(), 1);
    }

    #[test]
    fn reference_coherent_state_returns_after_one_period() {
        let g = Arc::new(GridSpec::line(256, -10.0, 10.0).unwrap());
        let m = model(Constants::default(), Potential::Harmonic { spring: vec![1.0] });
        let st = coherent_state(&g, &m.metric, &m.constants, 1.0, 1.0).unwrap();
        let wf = crate::state::to_wavefunction(&st, &m.constants);
        let run = RunParams::from_guard(&g, &m.metric, &m.constants, 2.0 * PI).with_stride(1000);
        let traj = evolve_reference(&wf, &m, &run).unwrap();
        assert!(g.l2_distance(&traj.last().unwrap().density(), &wf.density()) < 1e-6);
    }

    #[test]
    fn reference_needs_the_quantum_point() {
        let g = circle(16);
        let wf = Wavefunction::normalized(g, vec![Complex64::new(1.0, 0.0); 16], 0.0).unwrap();
        let m = model(Constants::classical(1.0).unwrap(), Potential::Free);
        assert!(matches!(step_reference(&wf, &m, 0.01), Err(Error::Unsupported(_))));
    }
}
