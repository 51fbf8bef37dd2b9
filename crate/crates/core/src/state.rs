//! The hydrodynamic field pair (p, S), the wavefunction representation, and
//! the maps between them.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::derivative::DerivativeScheme;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Density below which `p` is treated as a node, relative to the total mass.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;

/// Relative tolerance below the floor before a clamped density counts as a node.
const NODE_SLACK: f64 = 1e-6;

/// Height of the uniform background added to localized states, in units of the floor.
pub const VACUUM_LEVEL: f64 = 2.0;

/// Wrapped phase increments larger than this are flagged as possibly aliased.
pub const UNWRAP_WARN_STEP: f64 = 0.5 * PI;

/// Diagonal configuration-space metric `g_ij = δ_ij / m_(i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    masses: Vec<f64>,
    dims_per_particle: usize,
}

impl Metric {
    pub fn new(masses: Vec<f64>, dims_per_particle: usize) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidMetric("no particles".into()));
        }
        if dims_per_particle == 0 {
            return Err(Error::InvalidMetric("zero dimensions per particle".into()));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidMetric(format!("mass {m} is not positive")));
        }
        Ok(Self {
            masses,
            dims_per_particle,
        })
    }

    /// One particle per axis, one spatial dimension each.
    pub fn per_axis(masses: Vec<f64>) -> Result<Self> {
        Self::new(masses, 1)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn dims_per_particle(&self) -> usize {
        self.dims_per_particle
    }

    /// Total configuration-space dimension `N d`.
    pub fn dims(&self) -> usize {
        self.masses.len() * self.dims_per_particle
    }

    /// Mass of the particle owning configuration axis `axis` (0-based).
    pub fn mass(&self, axis: usize) -> f64 {
        self.masses[axis / self.dims_per_particle]
    }

    /// Diagonal entry `g_ii`.
    pub fn inverse_mass(&self, axis: usize) -> f64 {
        1.0 / self.mass(axis)
    }

    pub fn min_mass(&self) -> f64 {
        self.masses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The same metric with every `g_ii` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.masses.iter().map(|m| m / factor).collect(),
            self.dims_per_particle,
        )
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.dims() != grid.dims() {
            return Err(Error::DimensionMismatch(format!(
                "metric spans {} dimensions ({} particles x {}), grid has {}",
                self.dims(),
                self.masses.len(),
                self.dims_per_particle,
                grid.dims()
            )));
        }
        Ok(())
    }
}

/// Coupling constants: kinetic coefficient `a`, information coefficient `b`, and ħ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    hbar: f64,
    a: f64,
    b: f64,
}

impl Constants {
    pub fn new(hbar: f64, a: f64, b: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidConstants(format!("hbar = {hbar} must be positive")));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidConstants(format!("A = {a} must be non-negative")));
        }
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::InvalidConstants(format!("B = {b} must be non-negative")));
        }
        Ok(Self { hbar, a, b })
    }

    /// `A = 1/2`, `B = ħ²/8`: the point equivalent to the Schrödinger equation.
    pub fn quantum(hbar: f64) -> Result<Self> {
        Self::new(hbar, 0.5, hbar * hbar / 8.0)
    }

    /// `A = 1/2`, `B = 0`: classical ensemble Hamilton-Jacobi dynamics.
    pub fn classical(hbar: f64) -> Result<Self> {
        Self::new(hbar, 0.5, 0.0)
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn with_b(self, b: f64) -> Result<Self> {
        Self::new(self.hbar, self.a, b)
    }

    pub fn with_a(self, a: f64) -> Result<Self> {
        Self::new(self.hbar, a, self.b)
    }

    pub fn is_quantum_point(&self) -> bool {
        let b_q = self.hbar * self.hbar / 8.0;
        (self.a - 0.5).abs() <= 1e-12 && (self.b - b_q).abs() <= 1e-12 * b_q
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            a: 0.5,
            b: 0.125,
        }
    }
}

/// Rescale a non-negative density so that it integrates to one.
pub fn normalize(p: &[f64], grid: &GridSpec) -> Result<Vec<f64>> {
    grid.check_len(p, "density")?;
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidDensity(format!(
            "value {v} at index {:?}",
            grid.multi_index(i)
        )));
    }
    let mass = grid.integrate(p);
    if mass <= 0.0 {
        return Err(Error::InvalidDensity("density integrates to zero".into()));
    }
    Ok(p.iter().map(|v| v / mass).collect())
}

/// Density `p`, action `S` and time on a shared grid.
///
/// `S` is stored as sampled values. A non-periodic uniform gradient (a plane-wave
/// phase, or a Galilean boost) is carried in `phase_gradient`: `S - phase_gradient·x`
/// must be periodic on the grid. Derivatives of `S` add the gradient back
/// analytically, so no differentiation ever sees the ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    grid: Arc<GridSpec>,
    p: Vec<f64>,
    s: Vec<f64>,
    phase_gradient: Vec<f64>,
    time: f64,
}

impl FieldState {
    pub fn new(grid: Arc<GridSpec>, p: Vec<f64>, s: Vec<f64>, time: f64) -> Result<Self> {
        grid.check_len(&p, "density")?;
        grid.check_len(&s, "action")?;
        if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!(
                "value {v} at index {:?}",
                grid.multi_index(i)
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDensity("action field is not finite".into()));
        }
        let dims = grid.dims();
        Ok(Self {
            grid,
            p,
            s,
            phase_gradient: vec![0.0; dims],
            time,
        })
    }

    /// Normalize `p` to unit mass and declare the uniform part of `∇S`.
    pub fn normalized(
        grid: Arc<GridSpec>,
        p: &[f64],
        s: Vec<f64>,
        phase_gradient: Vec<f64>,
        time: f64,
    ) -> Result<Self> {
        let p = normalize(p, &grid)?;
        Self::new(grid, p, s, time)?.with_phase_gradient(phase_gradient)
    }

    /// Like [`FieldState::normalized`], but first lifts `p` onto a uniform background
    /// of `VACUUM_LEVEL * floor` so the state is smooth and nodeless everywhere.
    pub fn with_vacuum(
        grid: Arc<GridSpec>,
        p: &[f64],
        s: Vec<f64>,
        phase_gradient: Vec<f64>,
        floor: f64,
    ) -> Result<Self> {
        let unit = normalize(p, &grid)?;
        let lifted: Vec<f64> = unit.iter().map(|v| v + VACUUM_LEVEL * floor).collect();
        Self::normalized(grid, &lifted, s, phase_gradient, 0.0)
    }

    pub fn with_phase_gradient(mut self, gradient: Vec<f64>) -> Result<Self> {
        if gradient.len() != self.grid.dims() || gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::DimensionMismatch(format!(
                "phase gradient has {} components for a {}-D grid",
                gradient.len(),
                self.grid.dims()
            )));
        }
        self.phase_gradient = gradient;
        Ok(self)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn phase_gradient(&self) -> &[f64] {
        &self.phase_gradient
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn norm(&self) -> f64 {
        self.grid.integrate(&self.p)
    }

    /// `S` with the uniform gradient removed; periodic on the grid.
    pub fn s_periodic(&self) -> Vec<f64> {
        let mut out = self.s.clone();
        for (axis, &g) in self.phase_gradient.iter().enumerate() {
            if g != 0.0 {
                for (v, x) in out.iter_mut().zip(self.grid.coordinate_field(axis)) {
                    *v -= g * x;
                }
            }
        }
        out
    }

    /// `∂S/∂x_axis`, with the uniform gradient added analytically.
    pub fn grad_s(&self, scheme: DerivativeScheme, axis: usize) -> Vec<f64> {
        let periodic = self.s_periodic();
        let mut d = scheme.first(&self.grid, &periodic, axis);
        let g = self.phase_gradient[axis];
        if g != 0.0 {
            d.iter_mut().for_each(|v| *v += g);
        }
        d
    }

    /// Replace the fields, keeping grid and phase gradient.
    pub(crate) fn with_fields(&self, p: Vec<f64>, s: Vec<f64>, time: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            p,
            s,
            phase_gradient: self.phase_gradient.clone(),
            time,
        }
    }

    /// Same state with `p` multiplied by `lambda` (not renormalized).
    pub fn scaled_density(&self, lambda: f64) -> Self {
        self.with_fields(
            self.p.iter().map(|v| v * lambda).collect(),
            self.s.clone(),
            self.time,
        )
    }

    /// First grid point whose density is below `floor` times the total mass.
    ///
    /// A density clamped at exactly the floor does not count as a node.
    pub fn find_node(&self, floor: f64) -> Option<Error> {
        let threshold = floor * self.norm() * (1.0 - NODE_SLACK);
        self.p
            .iter()
            .position(|&v| v < threshold)
            .map(|i| Error::Node {
                index: self.grid.multi_index(i),
                position: self.grid.position(i),
                density: self.p[i],
                floor: threshold,
            })
    }
}

/// Complex field `ψ` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: Arc<GridSpec>,
    psi: Vec<Complex64>,
    time: f64,
}

impl Wavefunction {
    pub fn new(grid: Arc<GridSpec>, psi: Vec<Complex64>, time: f64) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "wavefunction has {} samples, grid has {}",
                psi.len(),
                grid.len()
            )));
        }
        if psi.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidDensity("wavefunction is not finite".into()));
        }
        Ok(Self { grid, psi, time })
    }

    /// Rescale to unit norm.
    pub fn normalized(grid: Arc<GridSpec>, psi: Vec<Complex64>, time: f64) -> Result<Self> {
        let wf = Self::new(grid, psi, time)?;
        let n = wf.norm();
        if n <= 0.0 {
            return Err(Error::InvalidDensity("wavefunction vanishes".into()));
        }
        let scale = 1.0 / n.sqrt();
        Ok(Self {
            psi: wf.psi.iter().map(|c| c * scale).collect(),
            ..wf
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.grid.integrate(&self.density())
    }

    /// `⟨self, other⟩ = ∫ conj(ψ_self) ψ_other dx`.
    pub fn inner(&self, other: &Wavefunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let sum: Complex64 = self
            .psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.grid.cell_volume())
    }

    /// `|⟨self, other⟩|`.
    pub fn fidelity(&self, other: &Wavefunction) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    pub(crate) fn with_psi(&self, psi: Vec<Complex64>, time: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            psi,
            time,
        }
    }
}

/// `ψ = √p · exp(iS/ħ)` pointwise.
pub fn to_wavefunction(state: &FieldState, c: &Constants) -> Wavefunction {
    let psi = state
        .p
        .iter()
        .zip(&state.s)
        .map(|(&p, &s)| Complex64::from_polar(p.sqrt(), s / c.hbar()))
        .collect();
    Wavefunction {
        grid: state.grid.clone(),
        psi,
        time: state.time,
    }
}

/// Result of importing a wavefunction: the field state plus any unwrapping concerns.
#[derive(Debug, Clone)]
pub struct PhaseImport {
    pub state: FieldState,
    pub warnings: Vec<UnwrapWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnwrapWarning {
    pub index: Vec<usize>,
    pub axis: usize,
    /// The wrapped phase increment (radians) between this point and its predecessor.
    pub step: f64,
}

/// Inverse Madelung map `p = |ψ|²`, `S = ħ · unwrapped arg ψ`, unwrapping axis 0 first.
pub fn from_wavefunction(wf: &Wavefunction, c: &Constants, floor: f64) -> Result<PhaseImport> {
    let order: Vec<usize> = (0..wf.grid.dims()).collect();
    from_wavefunction_ordered(wf, c, floor, &order)
}

/// [`from_wavefunction`] with an explicit axis order for the unwrapping path.
///
/// The phase at the grid origin keeps its principal value. Axis `order[0]` is unwrapped
/// along the line through the origin, then `order[1]` along every line starting on
/// that line, and so on.
pub fn from_wavefunction_ordered(
    wf: &Wavefunction,
    c: &Constants,
    floor: f64,
    order: &[usize],
) -> Result<PhaseImport> {
    let grid = &wf.grid;
    let dims = grid.dims();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..dims).collect::<Vec<_>>() {
        return Err(Error::DimensionMismatch(format!(
            "unwrap order {order:?} is not a permutation of the {dims} axes"
        )));
    }
    let p = wf.density();
    let threshold = floor * grid.integrate(&p);
    if let Some(i) = p.iter().position(|&v| v <= threshold) {
        return Err(Error::Node {
            index: grid.multi_index(i),
            position: grid.position(i),
            density: p[i],
            floor: threshold,
        });
    }

    let principal: Vec<f64> = wf.psi.iter().map(|z| z.arg()).collect();
    let mut phase = principal.clone();
    let mut warnings = Vec::new();
    for (t, &axis) in order.iter().enumerate() {
        let n = grid.points()[axis];
        let stride = grid.stride(axis);
        let pending = &order[t + 1..];
        for start in grid.line_starts(axis) {
            // only lines sitting at index 0 on axes not yet unwrapped
            let idx = grid.multi_index(start);
            if pending.iter().any(|&a| idx[a] != 0) {
                continue;
            }
            for j in 1..n {
                let here = start + j * stride;
                let prev = here - stride;
                let step = wrap(principal[here] - principal[prev]);
                if step.abs() > UNWRAP_WARN_STEP {
                    warnings.push(UnwrapWarning {
                        index: grid.multi_index(here),
                        axis,
                        step,
                    });
                }
                phase[here] = phase[prev] + step;
            }
        }
    }

    // Winding number around each periodic direction, measured on the lines through the origin.
    let mut gradient = vec![0.0; dims];
    for axis in 0..dims {
        let n = grid.points()[axis];
        let last = (n - 1) * grid.stride(axis);
        let closing = wrap(principal[0] - principal[last]);
        let total = phase[last] - phase[0] + closing;
        let winding = (total / (2.0 * PI)).round();
        gradient[axis] = 2.0 * PI * winding * c.hbar() / grid.extent(axis);
    }

    let s: Vec<f64> = phase.iter().map(|v| v * c.hbar()).collect();
    let state = FieldState::new(wf.grid.clone(), p, s, wf.time)?.with_phase_gradient(gradient)?;
    Ok(PhaseImport { state, warnings })
}

/// Wrap an angle into `(-π, π]`.
fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, lo: f64, hi: f64) -> Arc<GridSpec> {
        Arc::new(GridSpec::line(n, lo, hi).unwrap())
    }

    #[test]
    fn normalize_uniform() {
        let g = GridSpec::line(16, 0.0, 2.0).unwrap();
        let p = normalize(&[7.0; 16], &g).unwrap();
        assert!(p.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn normalize_rejects_bad_input() {
        let g = GridSpec::line(8, 0.0, 1.0).unwrap();
        assert!(matches!(
            normalize(&[0.0; 8], &g),
            Err(Error::InvalidDensity(_))
        ));
        let mut p = vec![1.0; 8];
        p[3] = -0.1;
        assert!(matches!(normalize(&p, &g), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn normalize_is_idempotent() {
        let g = GridSpec::line(128, -10.0, 10.0).unwrap();
        let once = normalize(&g.sample(|x| (-x[0] * x[0]).exp()), &g).unwrap();
        let twice = normalize(&once, &g).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn normalized_gaussian_peak() {
        // ∫ exp(-x²) = √π; a fine trapezoid sum of the same integrand agrees to ~1e-15.
        let g = GridSpec::line(256, -10.0, 10.0).unwrap();
        let p = normalize(&g.sample(|x| (-x[0] * x[0]).exp()), &g).unwrap();
        assert!((g.integrate(&p) - 1.0).abs() < 1e-12);
        assert!((p[128] - 1.0 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn uniform_zero_phase_maps_to_real_constant() {
        let g = line(16, 0.0, 4.0);
        let s = FieldState::new(g, vec![0.25; 16], vec![0.0; 16], 0.0).unwrap();
        let wf = to_wavefunction(&s, &Constants::default());
        for z in wf.psi() {
            assert!((z.re - 0.5).abs() < 1e-15 && z.im == 0.0);
        }
    }

    #[test]
    fn plane_wave_phase() {
        let g = line(64, 0.0, 2.0 * PI);
        let v = g.volume();
        let s = g.sample(|x| x[0]);
        let st = FieldState::new(g.clone(), vec![1.0 / v; 64], s, 0.0).unwrap();
        let wf = to_wavefunction(&st, &Constants::default());
        for (j, z) in wf.psi().iter().enumerate() {
            let x = g.coordinate(0, j);
            let expect = Complex64::from_polar(1.0 / v.sqrt(), x);
            assert!((z - expect).norm() < 1e-14);
            assert!((z.norm_sqr() * v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn unwrap_recovers_steep_linear_phase() {
        let g = line(128, 0.0, 2.0 * PI);
        let amp = 1.0 / g.volume().sqrt();
        let psi = g.sample(|x| x[0]).iter().map(|x| Complex64::from_polar(amp, 3.0 * x)).collect();
        let wf = Wavefunction::new(g.clone(), psi, 0.0).unwrap();
        let imp = from_wavefunction(&wf, &Constants::default(), DEFAULT_DENSITY_FLOOR).unwrap();
        assert!(imp.warnings.is_empty());
        for (j, s) in imp.state.s().iter().enumerate() {
            assert!((s - 3.0 * g.coordinate(0, j)).abs() < 1e-12);
        }
        assert!((imp.state.phase_gradient()[0] - 3.0).abs() < 1e-12);
        assert!(imp.state.s_periodic().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn node_is_reported_with_location() {
        let g = line(16, 0.0, 1.0);
        let mut psi = vec![Complex64::new(1.0, 0.0); 16];
        psi[5] = Complex64::new(0.0, 0.0);
        let wf = Wavefunction::new(g, psi, 0.0).unwrap();
        match from_wavefunction(&wf, &Constants::default(), DEFAULT_DENSITY_FLOOR) {
            Err(Error::Node { index, position, .. }) => {
                assert_eq!(index, vec![5]);
                assert!((position[0] - 5.0 / 16.0).abs() < 1e-15);
            }
            other => panic!("expected node error, got {other:?}"),
        }
    }

    #[test]
    fn coarse_phase_is_flagged() {
        let g = line(8, 0.0, 2.0 * PI);
        let psi = g
            .sample(|x| x[0])
            .iter()
            .map(|x| Complex64::from_polar(1.0, 3.0 * x))
            .collect();
        let wf = Wavefunction::new(g, psi, 0.0).unwrap();
        let imp = from_wavefunction(&wf, &Constants::default(), DEFAULT_DENSITY_FLOOR).unwrap();
        assert!(!imp.warnings.is_empty());
    }

    #[test]
    fn constants_invariants() {
        assert!(Constants::new(1.0, 0.5, -1.0).is_err());
        assert!(Constants::new(0.0, 0.5, 0.1).is_err());
        assert!(Constants::new(1.0, -0.5, 0.1).is_err());
        assert!(Constants::quantum(2.0).unwrap().is_quantum_point());
        assert!(!Constants::classical(1.0).unwrap().is_quantum_point());
    }

    #[test]
    fn metric_axis_to_particle() {
        let m = Metric::new(vec![1.0, 2.0], 3).unwrap();
        assert_eq!(m.dims(), 6);
        assert_eq!(m.mass(2), 1.0);
        assert_eq!(m.mass(3), 2.0);
        assert!((m.inverse_mass(5) - 0.5).abs() < 1e-15);
        assert!(Metric::new(vec![1.0, 0.0], 1).is_err());
    }
}
