//! FFT plumbing shared by the derivative operators and the reference solver.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>);

thread_local! {
    static PLANNER: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

/// Cached FFT plan of length `n`; `forward = false` gives the unnormalized inverse.
pub(crate) fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((n, forward))
            .or_insert_with(|| {
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone()
    })
}

/// Angular wavenumbers in FFT order for `n` samples on a period of length `extent`.
pub fn wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    let base = 2.0 * PI / extent;
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            base * m
        })
        .collect()
}

/// Apply `multiplier(k)` in Fourier space to every line of a complex field along `axis`.
pub(crate) fn filter_axis_complex<F>(
    grid: &GridSpec,
    field: &mut [Complex64],
    axis: usize,
    multiplier: F,
) where
    F: Fn(usize, f64) -> Complex64,
{
    let n = grid.points()[axis];
    let stride = grid.stride(axis);
    let k = wavenumbers(n, grid.extent(axis));
    let fwd = plan(n, true);
    let inv = plan(n, false);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;
    let starts: Vec<usize> = grid.line_starts(axis).collect();
    for start in starts {
        for (j, slot) in line.iter_mut().enumerate() {
            *slot = field[start + j * stride];
        }
        fwd.process(&mut line);
        for (j, c) in line.iter_mut().enumerate() {
            *c *= multiplier(j, k[j]) * scale;
        }
        inv.process(&mut line);
        for (j, c) in line.iter().enumerate() {
            field[start + j * stride] = *c;
        }
    }
}

/// Real-field version of [`filter_axis_complex`]; the multiplier must be Hermitian
/// so that the result is real.
pub(crate) fn filter_axis_real<F>(grid: &GridSpec, field: &[f64], axis: usize, multiplier: F) -> Vec<f64>
where
    F: Fn(usize, f64) -> Complex64,
{
    let mut work: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    filter_axis_complex(grid, &mut work, axis, multiplier);
    work.into_iter().map(|c| c.re).collect()
}

/// Exponential low-pass filter `exp(-strength (|k| / k_max)^order)` applied along
/// every axis. Well-resolved fields are left untouched to round-off.
pub fn exponential_filter(grid: &GridSpec, field: &[f64], strength: f64, order: i32) -> Vec<f64> {
    let mut out = field.to_vec();
    for axis in 0..grid.dims() {
        let n = grid.points()[axis];
        let half = (n / 2) as f64;
        out = filter_axis_real(grid, &out, axis, |j, _| {
            let m = if j <= n / 2 { j as f64 } else { n as f64 - j as f64 };
            Complex64::new((-strength * (m / half).powi(order)).exp(), 0.0)
        });
    }
    out
}

/// Periodic translation `f(x) -> f(x - shift)` along `axis` by band-limited interpolation.
pub fn periodic_shift(grid: &GridSpec, field: &[f64], axis: usize, shift: f64) -> Vec<f64> {
    let n = grid.points()[axis];
    let cells = shift / grid.spacing(axis);
    if (cells - cells.round()).abs() < 1e-12 {
        let m = (cells.round() as i64).rem_euclid(n as i64) as usize;
        let stride = grid.stride(axis);
        let mut out = vec![0.0; field.len()];
        for start in grid.line_starts(axis) {
            for j in 0..n {
                out[start + ((j + m) % n) * stride] = field[start + j * stride];
            }
        }
        return out;
    }
    filter_axis_real(grid, field, axis, |j, k| {
        if n.is_multiple_of(2) && j == n / 2 {
            // the Nyquist mode has no well-defined sign under translation
            Complex64::new((k * shift).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, -k * shift)
        }
    })
}
