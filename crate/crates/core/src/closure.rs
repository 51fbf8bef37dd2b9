//! Low-density closure for the hydrodynamic integrator.
//!
//! Localized states carry a uniform background far below the bulk density.
//! There the local rates are set by round-off and by the shape of the
//! background rather than by the packet, so they are blended with smooth
//! surrogates fitted to the bulk:
//!
//! ```text
//! w     = p / (p + p_vac)
//! ∂S/∂t = w r + (1 - w) [ φ r̂ + (1 - φ) r₀ ]
//! u_i   = w g_ii ∂_i S + (1 - w) [ φ û_i + (1 - φ) ū_i ]
//! ∂p/∂t = -2A Σ_i ∂_i (p u_i)
//! ```
//!
//! `r̂` is the p-weighted least-squares quadratic fit of the action rate `r`,
//! `û_i` the linear fit of the velocity, `ū_i` its mean and `r₀ = -A Σ g_ii ⟨∂_i S⟩²`
//! the rate of a plane wave with the ensemble's mean momentum. `φ` is a smooth
//! window centred in the box that vanishes before the periodic boundary.
//!
//! After every step [`project_tail`] replaces the density below `p_vac` by the
//! Gaussian extrapolation of the bulk on top of the background, and the rates
//! are passed through an exponential low-pass filter. For Gaussian states the
//! fits are exact, so the bulk follows the unmodified equations of motion.

use crate::diagnostics::moments;
use crate::fourier::exponential_filter;
use crate::grid::GridSpec;
use crate::hamiltonian::{continuity_with_gradient, HamiltonianModel, Regularization};
use crate::state::{FieldState, VACUUM_LEVEL};

const WINDOW_POWER: i32 = 16;

/// Density-weighted centre and width used to scale the fitting basis.
struct Frame {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Frame {
    fn of(grid: &GridSpec, p: &[f64]) -> Self {
        let (_, mean, var) = moments(grid, p);
        Self {
            mean,
            std: var.iter().map(|v| v.sqrt().max(grid.min_spacing())).collect(),
        }
    }

    fn local(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

fn window(grid: &GridSpec, x: &[f64], fraction: f64) -> f64 {
    let r: f64 = x
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let centre = 0.5 * (grid.lower()[i] + grid.upper()[i]);
            let half = 0.5 * grid.extent(i) * fraction;
            ((x - centre) / half).powi(WINDOW_POWER)
        })
        .sum();
    (-r).exp()
}

fn bulk_weight(p: f64, p_vac: f64) -> f64 {
    p / (p + p_vac)
}

/// `p w²` with the bulk weight `w = p / (p + p_vac)`: the density with the
/// region governed by the closure suppressed. Equals `p` when the closure is off.
pub fn resolved_density(grid: &GridSpec, p: &[f64], reg: &Regularization) -> Vec<f64> {
    let p_vac = reg.vacuum_density * grid.integrate(p);
    p.iter()
        .map(|&p| {
            let w = bulk_weight(p, p_vac);
            p * w * w
        })
        .collect()
}

/// Monomials of total degree ≤ `degree` (at most 2) in the local coordinates.
fn basis(z: &[f64], degree: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    if degree >= 1 {
        out.extend_from_slice(z);
    }
    if degree >= 2 {
        for i in 0..z.len() {
            for j in i..z.len() {
                out.push(z[i] * z[j]);
            }
        }
    }
    out
}

/// Weighted least-squares polynomial fit of `values`, evaluated back on the grid.
fn fit(grid: &GridSpec, frame: &Frame, weight: &[f64], values: &[f64], degree: usize) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| basis(&frame.local(&grid.position(i)), degree))
        .collect();
    let n = rows[0].len();
    let mut normal = vec![vec![0.0; n + 1]; n];
    for ((row, w), v) in rows.iter().zip(weight).zip(values) {
        for a in 0..n {
            let wa = w * row[a];
            for b in 0..n {
                normal[a][b] += wa * row[b];
            }
            normal[a][n] += wa * v;
        }
    }
    let coef = solve(normal);
    rows.iter()
        .map(|row| row.iter().zip(&coef).map(|(r, c)| r * c).sum())
        .collect()
}

/// Gaussian elimination with partial pivoting on an augmented `n × (n+1)` system.
fn solve(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap_or(col);
        m.swap(col, pivot);
        let d = m[col][col];
        if d.abs() < f64::MIN_POSITIVE {
            continue;
        }
        for row in col + 1..n {
            let f = m[row][col] / d;
            if f != 0.0 {
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let d = m[row][row];
        if d.abs() < f64::MIN_POSITIVE {
            continue;
        }
        let tail: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - tail) / d;
    }
    x
}

/// Blend the rates `(∂p/∂t, ∂S/∂t)` of `state` with the bulk surrogates.
/// `ds` is updated in place; the returned vector is the new `∂p/∂t`.
pub(crate) fn apply(state: &FieldState, model: &HamiltonianModel, ds: &mut [f64]) -> Vec<f64> {
    let grid = state.grid();
    let p = state.p();
    let mass = state.norm();
    let reg = model.regularization;
    let p_vac = reg.vacuum_density * mass;
    let frame = Frame::of(grid, p);
    let weight: Vec<f64> = p.iter().map(|&p| bulk_weight(p, p_vac)).collect();
    let phi: Vec<f64> = (0..grid.len())
        .map(|i| window(grid, &grid.position(i), reg.window_fraction))
        .collect();

    let mut drift = 0.0;
    let mut velocity = Vec::with_capacity(grid.dims());
    for axis in 0..grid.dims() {
        let g = model.metric.inverse_mass(axis);
        let u: Vec<f64> = state.grad_s(model.scheme, axis).iter().map(|d| g * d).collect();
        let mean = grid.integrate(&u.iter().zip(p).map(|(u, p)| u * p).collect::<Vec<_>>()) / mass;
        drift -= model.constants.a() * mean * mean / g;
        let fitted = fit(grid, &frame, p, &u, 1);
        velocity.push(
            (0..u.len())
                .map(|i| {
                    let far = phi[i] * fitted[i] + (1.0 - phi[i]) * mean;
                    // continuity_with_gradient multiplies by g_ii again
                    (weight[i] * u[i] + (1.0 - weight[i]) * far) / g
                })
                .collect::<Vec<_>>(),
        );
    }

    let fitted = fit(grid, &frame, p, ds, 2);
    for i in 0..ds.len() {
        let far = phi[i] * fitted[i] + (1.0 - phi[i]) * drift;
        ds[i] = weight[i] * ds[i] + (1.0 - weight[i]) * far;
    }
    continuity_with_gradient(state, model, &velocity)
}

/// Low-pass both rates with the model's exponential filter.
pub(crate) fn filter_rates(grid: &GridSpec, model: &HamiltonianModel, dp: &mut Vec<f64>, ds: &mut Vec<f64>) {
    let reg = model.regularization;
    *dp = exponential_filter(grid, dp, reg.filter_strength, reg.filter_order);
    *ds = exponential_filter(grid, ds, reg.filter_strength, reg.filter_order);
}

/// Density with the tail below `p_vac` replaced by the bulk's Gaussian
/// extrapolation plus the uniform background, rescaled to the original mass.
pub(crate) fn project_tail(state: &FieldState, model: &HamiltonianModel) -> Vec<f64> {
    let grid = state.grid();
    let p = state.p();
    let mass = state.norm();
    let reg = model.regularization;
    let p_vac = reg.vacuum_density * mass;
    let background = VACUUM_LEVEL * reg.density_floor * mass;
    let frame = Frame::of(grid, p);
    let log_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let fitted = fit(grid, &frame, p, &log_p, 2);
    let out: Vec<f64> = p
        .iter()
        .zip(&fitted)
        .map(|(&p, l)| {
            let w = bulk_weight(p, p_vac);
            w * p + (1.0 - w) * (l.exp() + background)
        })
        .collect();
    let scale = mass / grid.integrate(&out);
    out.iter().map(|v| v * scale).collect()
}
