//! Spatial derivatives on the periodic grid.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fourier::filter_axis_real;
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DerivativeScheme {
    /// Fourier pseudo-spectral differentiation.
    #[default]
    Spectral,
    /// Fourth-order central differences (5-point stencil).
    FiniteDifference4,
}

impl DerivativeScheme {
    /// How many neighbours on each side a single derivative reads.
    pub fn stencil_radius(self, grid: &GridSpec, axis: usize) -> usize {
        match self {
            DerivativeScheme::Spectral => grid.points()[axis] / 2,
            DerivativeScheme::FiniteDifference4 => 2,
        }
    }

    pub fn first(self, grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
        match self {
            DerivativeScheme::Spectral => {
                let n = grid.points()[axis];
                filter_axis_real(grid, f, axis, |j, k| {
                    if j == n / 2 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, k)
                    }
                })
            }
            DerivativeScheme::FiniteDifference4 => {
                let h = grid.spacing(axis);
                stencil(grid, f, axis, &[1.0, -8.0, 0.0, 8.0, -1.0], 1.0 / (12.0 * h))
            }
        }
    }

    pub fn second(self, grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
        match self {
            DerivativeScheme::Spectral => {
                filter_axis_real(grid, f, axis, |_, k| Complex64::new(-k * k, 0.0))
            }
            DerivativeScheme::FiniteDifference4 => {
                let h = grid.spacing(axis);
                stencil(
                    grid,
                    f,
                    axis,
                    &[-1.0, 16.0, -30.0, 16.0, -1.0],
                    1.0 / (12.0 * h * h),
                )
            }
        }
    }
}

/// Periodic 5-point stencil applied along `axis`; `weights[2]` is the centre.
fn stencil(grid: &GridSpec, f: &[f64], axis: usize, weights: &[f64; 5], scale: f64) -> Vec<f64> {
    let n = grid.points()[axis];
    let stride = grid.stride(axis);
    let mut out = vec![0.0; f.len()];
    for start in grid.line_starts(axis) {
        for j in 0..n {
            let mut acc = 0.0;
            for (w, off) in weights.iter().zip(-2i64..=2) {
                if *w != 0.0 {
                    let jj = (j as i64 + off).rem_euclid(n as i64) as usize;
                    acc += w * f[start + jj * stride];
                }
            }
            out[start + j * stride] = acc * scale;
        }
    }
    out
}
