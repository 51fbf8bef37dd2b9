//! The ensemble Hamiltonian `H = ∫ p (h + V)` with
//! `h = Σ_i g_ii [ A (∂_i S)² + B (∂_i ln p)² ]`, its functional derivatives,
//! and the quantum potential.
//!
//! The functional derivatives were worked out by hand (integration by parts on
//! the periodic box, so boundary terms vanish):
//!
//! ```text
//! δH/δS = -2A Σ_i ∂_i (g_ii p ∂_i S)
//! δH/δp =  A Σ_i g_ii (∂_i S)² + V + B Σ_i g_ii [ (∂_i p)²/p² - 2 ∂_i² p / p ]
//! ```
//!
//! [`functional_derivative_check`] compares them against central differences of
//! `H` itself.

use serde::{Deserialize, Serialize};

use crate::derivative::DerivativeScheme;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::state::{Constants, FieldState, Metric, DEFAULT_DENSITY_FLOOR};

/// External potential `V(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub enum Potential {
    #[default]
    Free,
    /// `V = Σ_i ½ k_i x_i²`.
    Harmonic { spring: Vec<f64> },
    /// Gaussian bump `height · exp(-|x - center|² / 2 width²)`.
    Barrier {
        height: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// Values sampled on the grid the model is used with.
    Sampled(Vec<f64>),
}

impl Potential {
    pub fn evaluate(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let dims = grid.dims();
        let v = match self {
            Potential::Free => vec![0.0; grid.len()],
            Potential::Harmonic { spring } => {
                if spring.len() != dims {
                    return Err(Error::DimensionMismatch(format!(
                        "{} spring constants for a {dims}-D grid",
                        spring.len()
                    )));
                }
                grid.sample(|x| x.iter().zip(spring).map(|(x, k)| 0.5 * k * x * x).sum())
            }
            Potential::Barrier {
                height,
                center,
                width,
            } => {
                if center.len() != dims {
                    return Err(Error::DimensionMismatch(format!(
                        "barrier centre has {} components for a {dims}-D grid",
                        center.len()
                    )));
                }
                if !(*width > 0.0) {
                    return Err(Error::Unsupported(format!("barrier width {width}")));
                }
                grid.sample(|x| {
                    let r2: f64 = x.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                    height * (-r2 / (2.0 * width * width)).exp()
                })
            }
            Potential::Sampled(values) => {
                grid.check_len(values, "sampled potential")?;
                values.clone()
            }
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Unsupported("potential is not finite on the grid".into()));
        }
        Ok(v)
    }

    pub fn is_free(&self) -> bool {
        match self {
            Potential::Free => true,
            Potential::Sampled(v) => v.iter().all(|x| *x == 0.0),
            _ => false,
        }
    }

    /// `V ≥ 0` on the grid (the variant the positivity axiom applies to).
    pub fn is_nonnegative(&self, grid: &GridSpec) -> Result<bool> {
        Ok(self.evaluate(grid)?.iter().all(|v| *v >= 0.0))
    }
}

/// Form of the `B` term in `h`. Only [`InformationTerm::LogGradient`] is the
/// physical one; the raw form exists so axiom checks can demonstrate they fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InformationTerm {
    /// `B g (∂ ln p)²`.
    #[default]
    LogGradient,
    /// `B g (∂ p)²`, not invariant under `p -> λ p`.
    RawGradient,
}

/// Numerical safeguards for low-density regions, all relative to the total mass.
/// See [`crate::closure`] for how the integrator uses them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    /// Nodes are densities below `density_floor` times the total mass.
    pub density_floor: f64,
    /// Density scale of the low-density closure; zero disables the closure
    /// and the tail projection.
    pub vacuum_density: f64,
    /// Strength of the exponential rate filter `exp(-a (|k|/k_max)^order)`;
    /// zero disables it.
    pub filter_strength: f64,
    pub filter_order: i32,
    /// Half-width of the closure window as a fraction of the half box.
    pub window_fraction: f64,
}

pub const DEFAULT_VACUUM_DENSITY: f64 = 1e-8;
pub const DEFAULT_FILTER_STRENGTH: f64 = 36.0;
pub const DEFAULT_FILTER_ORDER: i32 = 12;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.8;

impl Regularization {
    /// Only the node floor: the integrator evolves the bare equations of motion.
    pub fn bare() -> Self {
        Self {
            vacuum_density: 0.0,
            filter_strength: 0.0,
            ..Self::default()
        }
    }
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            density_floor: DEFAULT_DENSITY_FLOOR,
            vacuum_density: DEFAULT_VACUUM_DENSITY,
            filter_strength: DEFAULT_FILTER_STRENGTH,
            filter_order: DEFAULT_FILTER_ORDER,
            window_fraction: DEFAULT_WINDOW_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianModel {
    pub constants: Constants,
    pub metric: Metric,
    pub potential: Potential,
    pub scheme: DerivativeScheme,
    pub information: InformationTerm,
    pub regularization: Regularization,
}

impl HamiltonianModel {
    pub fn new(constants: Constants, metric: Metric, potential: Potential) -> Self {
        Self {
            constants,
            metric,
            potential,
            scheme: DerivativeScheme::default(),
            information: InformationTerm::default(),
            regularization: Regularization::default(),
        }
    }

    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_information(mut self, information: InformationTerm) -> Self {
        self.information = information;
        self
    }

    pub fn with_regularization(mut self, regularization: Regularization) -> Self {
        self.regularization = regularization;
        self
    }

    pub fn with_constants(mut self, constants: Constants) -> Self {
        self.constants = constants;
        self
    }

    pub fn density_floor(&self) -> f64 {
        self.regularization.density_floor
    }

    fn check(&self, state: &FieldState) -> Result<()> {
        self.metric.check_grid(state.grid())
    }

    fn check_nodeless(&self, state: &FieldState) -> Result<()> {
        match state.find_node(self.density_floor()) {
            Some(err) => Err(err),
            None => Ok(()),
        }
    }
}

/// Per-axis derivative fields shared by the density, potential and both equations.
struct Gradients {
    grad_s: Vec<Vec<f64>>,
    grad_p: Vec<Vec<f64>>,
}

impl Gradients {
    fn of(state: &FieldState, scheme: DerivativeScheme) -> Self {
        let dims = state.grid().dims();
        Self {
            grad_s: (0..dims).map(|k| state.grad_s(scheme, k)).collect(),
            grad_p: (0..dims)
                .map(|k| scheme.first(state.grid(), state.p(), k))
                .collect(),
        }
    }
}

fn second_p(state: &FieldState, scheme: DerivativeScheme) -> Vec<Vec<f64>> {
    (0..state.grid().dims())
        .map(|k| scheme.second(state.grid(), state.p(), k))
        .collect()
}

/// `h(x)` on the grid.
pub fn hamiltonian_density(state: &FieldState, model: &HamiltonianModel) -> Result<Vec<f64>> {
    model.check(state)?;
    model.check_nodeless(state)?;
    let grads = Gradients::of(state, model.scheme);
    Ok(density_from(state, model, &grads))
}

fn density_from(state: &FieldState, model: &HamiltonianModel, grads: &Gradients) -> Vec<f64> {
    let (a, b) = (model.constants.a(), model.constants.b());
    let p = state.p();
    let mut h = vec![0.0; p.len()];
    for axis in 0..state.grid().dims() {
        let g = model.metric.inverse_mass(axis);
        let ds = &grads.grad_s[axis];
        let dp = &grads.grad_p[axis];
        for i in 0..p.len() {
            let info = match model.information {
                InformationTerm::LogGradient => {
                    let r = dp[i] / p[i];
                    r * r
                }
                InformationTerm::RawGradient => dp[i] * dp[i],
            };
            h[i] += g * (a * ds[i] * ds[i] + b * info);
        }
    }
    h
}

/// `H = ∫ p (h + V) dx`.
pub fn total_hamiltonian(state: &FieldState, model: &HamiltonianModel) -> Result<f64> {
    let h = hamiltonian_density(state, model)?;
    let v = model.potential.evaluate(state.grid())?;
    let integrand: Vec<f64> = state
        .p()
        .iter()
        .zip(h.iter().zip(&v))
        .map(|(p, (h, v))| p * (h + v))
        .collect();
    Ok(state.grid().integrate(&integrand))
}

/// `Q = -(ħ²/8) Σ_i g_ii ( 2 ∂_i² p / p - (∂_i p)² / p² )`.
pub fn quantum_potential(state: &FieldState, model: &HamiltonianModel) -> Result<Vec<f64>> {
    model.check(state)?;
    model.check_nodeless(state)?;
    let hbar = model.constants.hbar();
    let p = state.p();
    let mut q = vec![0.0; p.len()];
    for axis in 0..state.grid().dims() {
        let g = model.metric.inverse_mass(axis);
        let dp = model.scheme.first(state.grid(), p, axis);
        let ddp = model.scheme.second(state.grid(), p, axis);
        for i in 0..p.len() {
            q[i] -= hbar * hbar / 8.0 * g * (2.0 * ddp[i] / p[i] - dp[i] * dp[i] / (p[i] * p[i]));
        }
    }
    Ok(q)
}

/// `∂p/∂t = δH/δS = -2A Σ_i ∂_i (g_ii p ∂_i S)`.
pub fn continuity_rhs(state: &FieldState, model: &HamiltonianModel) -> Result<Vec<f64>> {
    model.check(state)?;
    let grad_s: Vec<Vec<f64>> = (0..state.grid().dims())
        .map(|k| state.grad_s(model.scheme, k))
        .collect();
    Ok(continuity_with_gradient(state, model, &grad_s))
}

pub(crate) fn continuity_with_gradient(
    state: &FieldState,
    model: &HamiltonianModel,
    grad_s: &[Vec<f64>],
) -> Vec<f64> {
    let a = model.constants.a();
    let p = state.p();
    let mut out = vec![0.0; p.len()];
    for (axis, ds) in grad_s.iter().enumerate() {
        let g = model.metric.inverse_mass(axis);
        let flux: Vec<f64> = p.iter().zip(ds).map(|(p, d)| g * p * d).collect();
        let div = model.scheme.first(state.grid(), &flux, axis);
        for (o, d) in out.iter_mut().zip(div) {
            *o -= 2.0 * a * d;
        }
    }
    out
}

/// `∂S/∂t = -δH/δp`.
pub fn hjb_rhs(state: &FieldState, model: &HamiltonianModel) -> Result<Vec<f64>> {
    model.check(state)?;
    model.check_nodeless(state)?;
    let grads = Gradients::of(state, model.scheme);
    let v = model.potential.evaluate(state.grid())?;
    Ok(hjb_from(state, model, &grads, &second_p(state, model.scheme), &v))
}

fn hjb_from(
    state: &FieldState,
    model: &HamiltonianModel,
    grads: &Gradients,
    ddp: &[Vec<f64>],
    v: &[f64],
) -> Vec<f64> {
    let (a, b) = (model.constants.a(), model.constants.b());
    let p = state.p();
    let mut out: Vec<f64> = v.iter().map(|v| -v).collect();
    for axis in 0..state.grid().dims() {
        let g = model.metric.inverse_mass(axis);
        let ds = &grads.grad_s[axis];
        let dp = &grads.grad_p[axis];
        let dd = &ddp[axis];
        for i in 0..p.len() {
            let info = match model.information {
                InformationTerm::LogGradient => {
                    let r = dp[i] / p[i];
                    r * r - 2.0 * dd[i] / p[i]
                }
                InformationTerm::RawGradient => -(dp[i] * dp[i] + 2.0 * p[i] * dd[i]),
            };
            out[i] -= g * (a * ds[i] * ds[i] + b * info);
        }
    }
    out
}

/// Both Hamilton equations at once, sharing derivative work:
/// returns `(∂p/∂t, ∂S/∂t)`.
pub fn equations_of_motion(
    state: &FieldState,
    model: &HamiltonianModel,
) -> Result<(Vec<f64>, Vec<f64>)> {
    model.check(state)?;
    model.check_nodeless(state)?;
    let grads = Gradients::of(state, model.scheme);
    let v = model.potential.evaluate(state.grid())?;
    let dp = continuity_with_gradient(state, model, &grads.grad_s);
    let ds = hjb_from(state, model, &grads, &second_p(state, model.scheme), &v);
    Ok((dp, ds))
}

/// Outcome of comparing the analytic functional derivatives with central
/// differences of `H`.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalDerivativeReport {
    pub bump_size: f64,
    /// Flat indices of the probed grid points.
    pub sites: Vec<usize>,
    /// Max |fd - analytic| over sites, relative to the largest |analytic| there.
    pub max_rel_error_p: f64,
    pub max_rel_error_s: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl FunctionalDerivativeReport {
    pub fn max_rel_error(&self) -> f64 {
        self.max_rel_error_p.max(self.max_rel_error_s)
    }
}

pub const FUNCTIONAL_DERIVATIVE_TOLERANCE: f64 = 1e-4;
const MAX_PROBES: usize = 9;

/// Probe `δH/δp` and `δH/δS` with localized bumps of integrated size `bump_size`.
pub fn functional_derivative_check(
    state: &FieldState,
    model: &HamiltonianModel,
    bump_size: f64,
) -> Result<FunctionalDerivativeReport> {
    if !(1e-8..=1e-3).contains(&bump_size) {
        return Err(Error::Unsupported(format!(
            "bump size {bump_size} outside [1e-8, 1e-3]"
        )));
    }
    let (dp_dt, ds_dt) = equations_of_motion(state, model)?;
    let dv = state.grid().cell_volume();
    let height = bump_size / dv;

    // Probe where the density is well above the bump, so p - δ stays positive.
    let pmax = state.p().iter().copied().fold(0.0, f64::max);
    let candidates: Vec<usize> = (0..state.p().len())
        .filter(|&i| state.p()[i] >= 1e-2 * pmax && state.p()[i] > 10.0 * height)
        .collect();
    let step = (candidates.len() / MAX_PROBES).max(1);
    let sites: Vec<usize> = candidates.iter().step_by(step).copied().take(MAX_PROBES).collect();
    if sites.is_empty() {
        return Err(Error::Unsupported(
            "no grid point has density large enough for the requested bump".into(),
        ));
    }

    let h_at = |p: Vec<f64>, s: Vec<f64>| total_hamiltonian(&state.with_fields(p, s, state.time()), model);
    let mut err_p = Vec::new();
    let mut err_s = Vec::new();
    for &i in &sites {
        let mut up = state.p().to_vec();
        let mut dn = state.p().to_vec();
        up[i] += height;
        dn[i] -= height;
        let fd = (h_at(up, state.s().to_vec())? - h_at(dn, state.s().to_vec())?) / (2.0 * bump_size);
        // δH/δp = -∂S/∂t
        err_p.push((fd, -ds_dt[i]));

        let mut up = state.s().to_vec();
        let mut dn = state.s().to_vec();
        up[i] += height;
        dn[i] -= height;
        let fd = (h_at(state.p().to_vec(), up)? - h_at(state.p().to_vec(), dn)?) / (2.0 * bump_size);
        err_s.push((fd, dp_dt[i]));
    }
    let rel = |pairs: &[(f64, f64)]| {
        let scale = pairs.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
        let worst = pairs.iter().map(|(f, a)| (f - a).abs()).fold(0.0, f64::max);
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    };
    let max_rel_error_p = rel(&err_p);
    let max_rel_error_s = rel(&err_s);
    Ok(FunctionalDerivativeReport {
        bump_size,
        sites,
        max_rel_error_p,
        max_rel_error_s,
        tolerance: FUNCTIONAL_DERIVATIVE_TOLERANCE,
        pass: max_rel_error_p.max(max_rel_error_s) < FUNCTIONAL_DERIVATIVE_TOLERANCE,
    })
}
