//! Preset initial conditions with known behaviour.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::RunParams;
use crate::grid::GridSpec;
use crate::hamiltonian::{HamiltonianModel, Potential, Regularization};
use crate::state::{Constants, FieldState, Metric, DEFAULT_DENSITY_FLOOR};

/// Largest normalized density allowed on the box faces of a localized packet.
pub const MAX_EDGE_DENSITY: f64 = 1e-12;

pub const PRESET_NAMES: [&str; 6] = [
    "free-quantum-gaussian",
    "free-classical-gaussian",
    "harmonic-ground",
    "harmonic-coherent",
    "two-particle-separable",
    "boosted-gaussian",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// Product Gaussian with mean `mu`, widths `sigma` and mean velocity `k` per axis.
    Gaussian {
        mu: Vec<f64>,
        sigma: Vec<f64>,
        k: Vec<f64>,
    },
    /// Displaced harmonic ground state (1-D).
    Coherent { omega: f64, displacement: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub grid: Arc<GridSpec>,
    pub metric: Metric,
    pub constants: Constants,
    pub potential: Potential,
    pub initial: InitialCondition,
    pub t_final: f64,
    pub regularization: Regularization,
}

impl Scenario {
    pub fn model(&self) -> HamiltonianModel {
        HamiltonianModel::new(self.constants, self.metric.clone(), self.potential.clone())
            .with_regularization(self.regularization)
    }

    pub fn initial_state(&self) -> Result<FieldState> {
        let floor = self.regularization.density_floor;
        match &self.initial {
            InitialCondition::Gaussian { mu, sigma, k } => {
                gaussian_packet_with_floor(&self.grid, &self.metric, mu, sigma, k, floor)
            }
            InitialCondition::Coherent {
                omega,
                displacement,
            } => coherent_state_with_floor(
                &self.grid,
                &self.metric,
                &self.constants,
                *omega,
                *displacement,
                floor,
            ),
        }
    }

    /// Run parameters at the stability limit, ending at the scenario's `t_final`.
    pub fn run_params(&self) -> RunParams {
        RunParams::from_guard(&self.grid, &self.metric, &self.constants, self.t_final)
    }

    pub fn with_constants(mut self, constants: Constants) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_t_final(mut self, t_final: f64) -> Self {
        self.t_final = t_final;
        self
    }
}

/// Product Gaussian packet; `S = Σ m_(i) k_i x_i` so that `v_i = g_ii ∂_i S = k_i`.
pub fn gaussian_packet(
    grid: &Arc<GridSpec>,
    metric: &Metric,
    mu: &[f64],
    sigma: &[f64],
    k: &[f64],
) -> Result<FieldState> {
    gaussian_packet_with_floor(grid, metric, mu, sigma, k, DEFAULT_DENSITY_FLOOR)
}

pub fn gaussian_packet_with_floor(
    grid: &Arc<GridSpec>,
    metric: &Metric,
    mu: &[f64],
    sigma: &[f64],
    k: &[f64],
    floor: f64,
) -> Result<FieldState> {
    let dims = grid.dims();
    metric.check_grid(grid)?;
    if mu.len() != dims || sigma.len() != dims || k.len() != dims {
        return Err(Error::DimensionMismatch(format!(
            "packet parameters must have {dims} components"
        )));
    }
    if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::config("sigma", format!("width {s} must be positive")));
    }
    let raw = grid.sample(|x| {
        let e: f64 = (0..dims)
            .map(|i| {
                let d = (x[i] - mu[i]) / sigma[i];
                0.5 * d * d
            })
            .sum();
        (-e).exp()
    });
    check_edges(grid, &raw)?;
    let gradient: Vec<f64> = (0..dims).map(|i| metric.mass(i) * k[i]).collect();
    let s = grid.sample(|x| x.iter().zip(&gradient).map(|(x, g)| x * g).sum());
    FieldState::with_vacuum(grid.clone(), &raw, s, gradient, floor)
}

/// Harmonic ground state of frequency `omega`, displaced by `displacement`, at rest.
pub fn coherent_state(
    grid: &Arc<GridSpec>,
    metric: &Metric,
    constants: &Constants,
    omega: f64,
    displacement: f64,
) -> Result<FieldState> {
    coherent_state_with_floor(grid, metric, constants, omega, displacement, DEFAULT_DENSITY_FLOOR)
}

pub fn coherent_state_with_floor(
    grid: &Arc<GridSpec>,
    metric: &Metric,
    constants: &Constants,
    omega: f64,
    displacement: f64,
    floor: f64,
) -> Result<FieldState> {
    if grid.dims() != 1 {
        return Err(Error::Unsupported("coherent states are 1-D".into()));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::config("omega", format!("{omega} must be positive")));
    }
    let sigma = coherent_width(constants.hbar(), metric.mass(0), omega);
    gaussian_packet_with_floor(grid, metric, &[displacement], &[sigma], &[0.0], floor)
}

/// Gaussian of width `sigma` centred in a 1-D box and summed over its periodic
/// images, so that it is smooth across the boundary; `S = 0`.
pub fn wrapped_gaussian(grid: &Arc<GridSpec>, sigma: f64) -> Result<FieldState> {
    if grid.dims() != 1 {
        return Err(Error::Unsupported("wrapped Gaussians are 1-D".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::config("sigma", format!("width {sigma} must be positive")));
    }
    let length = grid.extent(0);
    let centre = 0.5 * (grid.lower()[0] + grid.upper()[0]);
    let images = (8.0 * sigma / length).ceil() as i64 + 1;
    let p = grid.sample(|x| {
        (-images..=images)
            .map(|n| {
                let y = (x[0] - centre - n as f64 * length) / sigma;
                (-0.5 * y * y).exp()
            })
            .sum()
    });
    FieldState::normalized(grid.clone(), &p, vec![0.0; grid.len()], vec![0.0], 0.0)
}

/// Ground-state width `σ = √(ħ / 2 m ω)`.
pub fn coherent_width(hbar: f64, mass: f64, omega: f64) -> f64 {
    (hbar / (2.0 * mass * omega)).sqrt()
}

fn check_edges(grid: &GridSpec, raw: &[f64]) -> Result<()> {
    let mass = grid.integrate(raw);
    let mut worst = 0.0_f64;
    for (i, v) in raw.iter().enumerate() {
        let idx = grid.multi_index(i);
        let on_face = idx
            .iter()
            .zip(grid.points())
            .any(|(&j, &n)| j == 0 || j == n - 1);
        if on_face {
            worst = worst.max(v / mass);
        }
    }
    if worst >= MAX_EDGE_DENSITY {
        return Err(Error::config(
            "grid",
            format!("box too small: packet density {worst:.3e} on the boundary (limit {MAX_EDGE_DENSITY:e})"),
        ));
    }
    Ok(())
}

/// Look up a shipped scenario by name.
pub fn preset(name: &str) -> Result<Scenario> {
    let quantum = Constants::quantum(1.0)?;
    let one = Metric::per_axis(vec![1.0])?;
    let free_line = || -> Result<Arc<GridSpec>> { Ok(Arc::new(GridSpec::line(512, -20.0, 20.0)?)) };
    let trap_line = || -> Result<Arc<GridSpec>> { Ok(Arc::new(GridSpec::line(256, -10.0, 10.0)?)) };
    let unit_gaussian = |k: f64| InitialCondition::Gaussian {
        mu: vec![0.0],
        sigma: vec![1.0],
        k: vec![k],
    };
    let scenario = match name {
        "free-quantum-gaussian" => Scenario {
            name: name.into(),
            grid: free_line()?,
            metric: one,
            constants: quantum,
            potential: Potential::Free,
            initial: unit_gaussian(0.0),
            t_final: 2.0,
            regularization: Regularization::default(),
        },
        "free-classical-gaussian" => Scenario {
            name: name.into(),
            grid: free_line()?,
            metric: one,
            constants: Constants::classical(1.0)?,
            potential: Potential::Free,
            initial: unit_gaussian(0.0),
            t_final: 2.0,
            regularization: Regularization::default(),
        },
        "harmonic-ground" | "harmonic-coherent" => Scenario {
            name: name.into(),
            grid: trap_line()?,
            metric: one,
            constants: quantum,
            potential: Potential::Harmonic { spring: vec![1.0] },
            initial: InitialCondition::Coherent {
                omega: 1.0,
                displacement: if name == "harmonic-ground" { 0.0 } else { 1.0 },
            },
            t_final: 2.0 * PI,
            regularization: Regularization::default(),
        },
        "two-particle-separable" => Scenario {
            name: name.into(),
            grid: Arc::new(GridSpec::new(vec![128, 128], vec![-14.0, -14.0], vec![14.0, 14.0])?),
            metric: Metric::per_axis(vec![1.0, 2.0])?,
            constants: quantum,
            potential: Potential::Free,
            initial: InitialCondition::Gaussian {
                mu: vec![0.0, 0.0],
                sigma: vec![1.0, 1.0],
                k: vec![0.0, 0.0],
            },
            t_final: 1.0,
            regularization: Regularization::default(),
        },
        "boosted-gaussian" => Scenario {
            name: name.into(),
            grid: free_line()?,
            metric: one,
            constants: quantum,
            potential: Potential::Free,
            initial: unit_gaussian(2.0),
            t_final: 1.0,
            regularization: Regularization::default(),
        },
        other => {
            return Err(Error::config(
                "scenario.name",
                format!("unknown scenario `{other}` (known: {})", PRESET_NAMES.join(", ")),
            ))
        }
    };
    Ok(scenario)
}
