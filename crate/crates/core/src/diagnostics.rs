//! Observables and state comparison metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::GridSpec;
use crate::hamiltonian::{quantum_potential, total_hamiltonian, HamiltonianModel};
use crate::state::{to_wavefunction, Constants, FieldState, Wavefunction};
use rustfft::num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub time: f64,
    pub norm: f64,
    pub energy: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub max_q: f64,
}

/// Cartesian moments of `p`; valid while the density at the box edge is negligible.
pub fn moments(grid: &GridSpec, p: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let norm = grid.integrate(p);
    let mut mean = Vec::with_capacity(grid.dims());
    let mut variance = Vec::with_capacity(grid.dims());
    for axis in 0..grid.dims() {
        let x = grid.coordinate_field(axis);
        let m = x.iter().zip(p).map(|(x, p)| x * p).sum::<f64>() * grid.cell_volume() / norm;
        let v = x
            .iter()
            .zip(p)
            .map(|(x, p)| (x - m) * (x - m) * p)
            .sum::<f64>()
            * grid.cell_volume()
            / norm;
        mean.push(m);
        variance.push(v);
    }
    (norm, mean, variance)
}

pub fn observables(state: &FieldState, model: &HamiltonianModel) -> Result<ObservableRecord> {
    let (norm, mean, variance) = moments(state.grid(), state.p());
    let energy = total_hamiltonian(state, model)?;
    let max_q = quantum_potential(state, model)?
        .iter()
        .fold(0.0_f64, |m, q| m.max(q.abs()));
    Ok(ObservableRecord {
        time: state.time(),
        norm,
        energy,
        mean,
        variance,
        max_q,
    })
}

/// Observables of a wavefunction, computed without the hydrodynamic machinery:
/// the energy is `⟨ψ|Ĥ|ψ⟩` with the kinetic part evaluated in Fourier space.
/// `max_q` uses the density clamped at the model's floor.
pub fn wavefunction_observables(wf: &Wavefunction, model: &HamiltonianModel) -> Result<ObservableRecord> {
    let grid = wf.grid();
    let p = wf.density();
    let (norm, mean, variance) = moments(grid, &p);
    let hbar = model.constants.hbar();
    let v = model.potential.evaluate(grid)?;

    let mut kinetic = 0.0;
    for axis in 0..grid.dims() {
        let g = model.metric.inverse_mass(axis);
        let mut d = wf.psi().to_vec();
        let n = grid.points()[axis];
        fourier::filter_axis_complex(grid, &mut d, axis, |j, k| {
            if j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k)
            }
        });
        kinetic += 0.5 * hbar * hbar * g * grid.integrate(&d.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>());
    }
    let potential = grid.integrate(&p.iter().zip(&v).map(|(p, v)| p * v).collect::<Vec<_>>());

    let floor = model.density_floor() * norm;
    let clamped: Vec<f64> = p.iter().map(|v| v.max(floor)).collect();
    let probe = FieldState::new(wf.grid_arc().clone(), clamped, vec![0.0; p.len()], wf.time())?;
    let max_q = quantum_potential(&probe, model)?
        .iter()
        .fold(0.0_f64, |m, q| m.max(q.abs()));
    Ok(ObservableRecord {
        time: wf.time(),
        norm,
        energy: kinetic + potential,
        mean,
        variance,
        max_q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateComparison {
    pub l2_density: f64,
    pub sup_density: f64,
    pub fidelity: f64,
}

pub fn compare_states(a: &FieldState, b: &FieldState, constants: &Constants) -> Result<StateComparison> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = a.grid();
    let sup_density = a
        .p()
        .iter()
        .zip(b.p())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let fidelity = to_wavefunction(a, constants).fidelity(&to_wavefunction(b, constants))?;
    Ok(StateComparison {
        l2_density: grid.l2_distance(a.p(), b.p()),
        sup_density,
        fidelity,
    })
}

/// Compare a hydrodynamic state with a wavefunction on the same grid.
pub fn compare_with_wavefunction(
    state: &FieldState,
    wf: &Wavefunction,
    constants: &Constants,
) -> Result<StateComparison> {
    if state.grid() != wf.grid() {
        return Err(Error::GridMismatch);
    }
    let p_ref = wf.density();
    let sup_density = state
        .p()
        .iter()
        .zip(&p_ref)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(StateComparison {
        l2_density: state.grid().l2_distance(state.p(), &p_ref),
        sup_density,
        fidelity: to_wavefunction(state, constants).fidelity(wf)?,
    })
}

/// Width of a freely spreading Gaussian packet: `σ0 √(1 + (ħ t / 2 m σ0²)²)`.
pub fn free_gaussian_width(t: f64, sigma0: f64, m: f64, hbar: f64) -> f64 {
    let r = hbar * t / (2.0 * m * sigma0 * sigma0);
    sigma0 * (1.0 + r * r).sqrt()
}
