//! Uniform periodic grids over configuration space.
//!
//! Fields are stored as flat `Vec<f64>` in row-major order: the last axis is
//! contiguous. Sample `j` along axis `k` sits at `lower[k] + j * dx[k]`; the
//! point `upper[k]` is the periodic image of `lower[k]` and is not stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported configuration-space dimension.
pub const MAX_DIMS: usize = 3;
/// Smallest number of samples per axis.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    points: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl GridSpec {
    pub fn new(points: Vec<usize>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let dims = points.len();
        if dims == 0 || dims > MAX_DIMS {
            return Err(Error::InvalidGrid(format!(
                "dimension {dims} outside 1..={MAX_DIMS}"
            )));
        }
        if lower.len() != dims || upper.len() != dims {
            return Err(Error::InvalidGrid(format!(
                "{dims} axes but {} lower and {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for k in 0..dims {
            let n = points[k];
            if n < MIN_POINTS || !n.is_multiple_of(2) {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: {n} points (need an even count >= {MIN_POINTS})"
                )));
            }
            if !(lower[k].is_finite() && upper[k].is_finite()) || upper[k] <= lower[k] {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: extent [{}, {}] is empty",
                    lower[k], upper[k]
                )));
            }
        }
        Ok(Self {
            points,
            lower,
            upper,
        })
    }

    /// One-dimensional grid on `[lower, upper)`.
    pub fn line(points: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![points], vec![lower], vec![upper])
    }

    /// Tensor product of two grids; the axes of `self` come first.
    pub fn product(&self, other: &GridSpec) -> Result<Self> {
        let cat = |a: &[f64], b: &[f64]| a.iter().chain(b).copied().collect::<Vec<_>>();
        Self::new(
            self.points.iter().chain(&other.points).copied().collect(),
            cat(&self.lower, &other.lower),
            cat(&self.upper, &other.upper),
        )
    }

    pub fn dims(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent(axis) / self.points[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dims())
            .map(|k| self.spacing(k))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|k| self.spacing(k)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dims()).map(|k| self.extent(k)).product()
    }

    /// Flat-index distance between consecutive samples along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.points[axis + 1..].iter().product()
    }

    pub fn coordinate(&self, axis: usize, j: usize) -> f64 {
        self.lower[axis] + j as f64 * self.spacing(axis)
    }

    /// Sample positions along one axis.
    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis])
            .map(|j| self.coordinate(axis, j))
            .collect()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for k in (0..self.dims()).rev() {
            idx[k] = flat % self.points[k];
            flat /= self.points[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.points)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &j)| self.coordinate(k, j))
            .collect()
    }

    /// The coordinate along `axis` of every grid point, as a field.
    pub fn coordinate_field(&self, axis: usize) -> Vec<f64> {
        let stride = self.stride(axis);
        let n = self.points[axis];
        (0..self.len())
            .map(|flat| self.coordinate(axis, (flat / stride) % n))
            .collect()
    }

    /// Evaluate `f` at every grid point.
    pub fn sample<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Vec<f64> {
        let mut x = vec![0.0; self.dims()];
        (0..self.len())
            .map(|flat| {
                let idx = self.multi_index(flat);
                for (k, &j) in idx.iter().enumerate() {
                    x[k] = self.coordinate(k, j);
                }
                f(&x)
            })
            .collect()
    }

    /// Riemann-sum quadrature, spectrally accurate for smooth periodic integrands.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        debug_assert_eq!(field.len(), self.len());
        field.iter().sum::<f64>() * self.cell_volume()
    }

    /// Quadrature L2 norm of `a - b`.
    pub fn l2_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (sq * self.cell_volume()).sqrt()
    }

    /// Flat start offsets of every 1-D line running along `axis`.
    pub(crate) fn line_starts(&self, axis: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.points[axis];
        let stride = self.stride(axis);
        let outer = self.len() / (n * stride);
        (0..outer).flat_map(move |o| (0..stride).map(move |i| o * n * stride + i))
    }

    pub(crate) fn check_len(&self, field: &[f64], what: &str) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{what} has {} samples, grid has {}",
                field.len(),
                self.len()
            )));
        }
        Ok(())
    }
}
