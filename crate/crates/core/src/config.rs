//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments run to the end of the line
//! scenario.name = harmonic-coherent
//! model.hbar = 1.0
//! run.stride = 50
//! ```
//!
//! A preset named by `scenario.name` supplies every scenario field; the
//! `grid.*`, `metric.*`, `initial.*` and `potential.*` keys override parts of
//! it. Without a preset the grid keys are required and the rest default to a
//! unit-mass centred Gaussian in free space. `model.B` defaults to the preset's
//! value rescaled by `(ħ / ħ_preset)²`, so quantum presets keep `B = ħ²/8`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::derivative::DerivativeScheme;
use crate::error::{Error, Result};
use crate::evolution::{stability_limit, Integrator, RunParams, DEFAULT_SNAPSHOT_STRIDE, DEFAULT_STABILITY_FACTOR};
use crate::grid::GridSpec;
use crate::hamiltonian::{HamiltonianModel, Potential, Regularization};
use crate::io::{format_number, FieldFile, SnapshotFormat};
use crate::scenarios::{preset, InitialCondition, Scenario};
use crate::state::{Constants, Metric};

pub const KEYS: [&str; 36] = [
    "run.mode",
    "scenario.name",
    "grid.points",
    "grid.lower",
    "grid.upper",
    "metric.masses",
    "metric.dims_per_particle",
    "initial.kind",
    "initial.mu",
    "initial.sigma",
    "initial.k",
    "initial.omega",
    "initial.displacement",
    "potential.kind",
    "potential.spring",
    "potential.height",
    "potential.center",
    "potential.width",
    "potential.file",
    "model.hbar",
    "model.A",
    "model.B",
    "model.scheme",
    "regularization.density_floor",
    "regularization.vacuum_density",
    "regularization.filter_strength",
    "regularization.filter_order",
    "regularization.window_fraction",
    "run.dt",
    "run.t_final",
    "run.stride",
    "run.integrator",
    "run.stability_factor",
    "run.seed",
    "output.dir",
    "output.format",
];

pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Simulate,
    Compare,
    VerifyAxioms,
    ListScenarios,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
            Mode::VerifyAxioms => "verify-axioms",
            Mode::ListScenarios => "list-scenarios",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        [Mode::Simulate, Mode::Compare, Mode::VerifyAxioms, Mode::ListScenarios]
            .into_iter()
            .find(|m| m.name() == text)
    }

    pub fn needs_scenario(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Compare)
    }
}

/// A configured scenario with its derivative backend and time stepping.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub scenario: Scenario,
    pub scheme: DerivativeScheme,
    pub run: RunParams,
    pub potential_file: Option<PathBuf>,
}

impl Job {
    pub fn model(&self) -> HamiltonianModel {
        self.scenario.model().with_scheme(self.scheme)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Absent only when no scenario keys were given.
    pub job: Option<Job>,
    pub output_dir: PathBuf,
    pub format: SnapshotFormat,
    pub seed: u64,
}

impl RunConfig {
    pub fn job(&self) -> Result<&Job> {
        self.job
            .as_ref()
            .ok_or_else(|| Error::config("scenario.name", format!("{} needs a scenario", self.mode.name())))
    }

    /// Every key with its resolved value, in [`KEYS`] order; parses back to `self`.
    pub fn effective_text(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| writeln!(out, "{key} = {value}").unwrap();
        put("run.mode", self.mode.name().into());
        if let Some(job) = &self.job {
            let sc = &job.scenario;
            put("scenario.name", sc.name.clone());
            put("grid.points", join(sc.grid.points()));
            put("grid.lower", nums(sc.grid.lower()));
            put("grid.upper", nums(sc.grid.upper()));
            put("metric.masses", nums(sc.metric.masses()));
            put("metric.dims_per_particle", sc.metric.dims_per_particle().to_string());
            match &sc.initial {
                InitialCondition::Gaussian { mu, sigma, k } => {
                    put("initial.kind", "gaussian".into());
                    put("initial.mu", nums(mu));
                    put("initial.sigma", nums(sigma));
                    put("initial.k", nums(k));
                }
                InitialCondition::Coherent { omega, displacement } => {
                    put("initial.kind", "coherent".into());
                    put("initial.omega", num(*omega));
                    put("initial.displacement", num(*displacement));
                }
            }
            match &sc.potential {
                Potential::Free => put("potential.kind", "free".into()),
                Potential::Harmonic { spring } => {
                    put("potential.kind", "harmonic".into());
                    put("potential.spring", nums(spring));
                }
                Potential::Barrier { height, center, width } => {
                    put("potential.kind", "barrier".into());
                    put("potential.height", num(*height));
                    put("potential.center", nums(center));
                    put("potential.width", num(*width));
                }
                Potential::Sampled(_) => {
                    put("potential.kind", "sampled".into());
                    let file = job.potential_file.as_deref().unwrap_or(Path::new(""));
                    put("potential.file", file.display().to_string());
                }
            }
            put("model.hbar", num(sc.constants.hbar()));
            put("model.A", num(sc.constants.a()));
            put("model.B", num(sc.constants.b()));
            put("model.scheme", scheme_name(job.scheme).into());
            let reg = &sc.regularization;
            put("regularization.density_floor", num(reg.density_floor));
            put("regularization.vacuum_density", num(reg.vacuum_density));
            put("regularization.filter_strength", num(reg.filter_strength));
            put("regularization.filter_order", reg.filter_order.to_string());
            put("regularization.window_fraction", num(reg.window_fraction));
            put("run.dt", num(job.run.dt));
            put("run.t_final", num(job.run.t_final));
            put("run.stride", job.run.snapshot_stride.to_string());
            put("run.integrator", job.run.integrator.name().into());
            put("run.stability_factor", num(job.run.stability_factor));
        }
        put("run.seed", self.seed.to_string());
        put("output.dir", self.output_dir.display().to_string());
        put("output.format", self.format.extension().into());
        out
    }
}

fn num(x: f64) -> String {
    format_number(x)
}

fn nums(values: &[f64]) -> String {
    values.iter().map(|x| format_number(*x)).collect::<Vec<_>>().join(",")
}

fn scheme_name(scheme: DerivativeScheme) -> &'static str {
    match scheme {
        DerivativeScheme::Spectral => "spectral",
        DerivativeScheme::FiniteDifference4 => "fd4",
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Parse and validate; relative `potential.file` paths resolve against the
/// working directory.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_in(text, Path::new(""))
}

/// Read a config file; relative `potential.file` paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
    parse_config_in(&text, path.parent().unwrap_or(Path::new("")))
}

struct Entries<'a> {
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Entries<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: format!("`{key}` has no value"),
                });
            }
            if values.insert(key, value).is_some() {
                return Err(Error::Parse {
                    line,
                    message: format!("`{key}` is set twice"),
                });
            }
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.values.get(key).copied()
    }

    fn any(&self, prefix: &str) -> bool {
        self.values.keys().any(|k| k.starts_with(prefix))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| Error::config(key, format!("cannot parse `{v}`"))))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse().map_err(|_| Error::config(key, format!("cannot parse `{x}`"))))
                    .collect()
            })
            .transpose()
    }
}

fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig> {
    let e = Entries::parse(text)?;
    let mode = match e.raw("run.mode") {
        Some(m) => Mode::parse(m).ok_or_else(|| Error::config("run.mode", format!("unknown mode `{m}`")))?,
        None => Mode::default(),
    };
    let format = match e.raw("output.format") {
        Some(f) => SnapshotFormat::parse(f).ok_or_else(|| Error::config("output.format", format!("`{f}` is not csv or bin")))?,
        None => SnapshotFormat::default(),
    };
    let scenario_keys = ["scenario.", "grid.", "metric.", "initial.", "potential.", "model.", "regularization."];
    let run_keys = ["run.dt", "run.t_final", "run.stride", "run.integrator", "run.stability_factor"];
    let has_job = scenario_keys.iter().any(|p| e.any(p)) || run_keys.iter().any(|k| e.raw(k).is_some());
    Ok(RunConfig {
        mode,
        job: if has_job { Some(build_job(&e, base)?) } else { None },
        output_dir: PathBuf::from(e.raw("output.dir").unwrap_or(DEFAULT_OUTPUT_DIR)),
        format,
        seed: e.get("run.seed")?.unwrap_or(0),
    })
}

fn build_job(e: &Entries, base: &Path) -> Result<Job> {
    let mut sc = match e.raw("scenario.name") {
        Some(name) => preset(name)?,
        None => custom_base(e)?,
    };

    if e.any("grid.") {
        let points = e.list("grid.points")?.unwrap_or_else(|| sc.grid.points().to_vec());
        let lower = e.list("grid.lower")?.unwrap_or_else(|| sc.grid.lower().to_vec());
        let upper = e.list("grid.upper")?.unwrap_or_else(|| sc.grid.upper().to_vec());
        sc.grid = Arc::new(GridSpec::new(points, lower, upper).map_err(|err| Error::config("grid", err.to_string()))?);
    }
    let dims = sc.grid.dims();

    if e.any("metric.") {
        let dpp = e.get("metric.dims_per_particle")?.unwrap_or(1);
        let masses = match e.list("metric.masses")? {
            Some(m) => m,
            None if dpp == sc.metric.dims_per_particle() && dims == sc.metric.dims() => sc.metric.masses().to_vec(),
            None => vec![1.0; dims / dpp.max(1)],
        };
        sc.metric = Metric::new(masses, dpp).map_err(|err| Error::config("metric.masses", err.to_string()))?;
    }
    if sc.metric.dims() != dims {
        return Err(Error::config(
            "metric.masses",
            format!("metric covers {} axes but the grid has {dims}", sc.metric.dims()),
        ));
    }

    if e.any("initial.") {
        sc.initial = initial_condition(e, &sc.initial, dims)?;
    }

    let mut potential_file = None;
    if e.any("potential.") {
        let (potential, file) = potential(e, &sc.potential, &sc.grid, base)?;
        sc.potential = potential;
        potential_file = file;
    }

    sc.constants = constants(e, &sc.constants)?;

    let reg = &mut sc.regularization;
    if let Some(v) = e.get("regularization.density_floor")? {
        reg.density_floor = v;
    }
    if let Some(v) = e.get("regularization.vacuum_density")? {
        reg.vacuum_density = v;
    }
    if let Some(v) = e.get("regularization.filter_strength")? {
        reg.filter_strength = v;
    }
    if let Some(v) = e.get("regularization.filter_order")? {
        reg.filter_order = v;
    }
    if let Some(v) = e.get("regularization.window_fraction")? {
        reg.window_fraction = v;
    }
    check_regularization(reg)?;

    let scheme = match e.raw("model.scheme") {
        None | Some("spectral") => DerivativeScheme::Spectral,
        Some("fd4") => DerivativeScheme::FiniteDifference4,
        Some(other) => return Err(Error::config("model.scheme", format!("`{other}` is not spectral or fd4"))),
    };

    if let Some(t) = e.get("run.t_final")? {
        sc.t_final = t;
    }
    let run = run_params(e, &sc)?;

    sc.initial_state().map_err(|err| match err {
        Error::Config { .. } => err,
        other => Error::config("initial", other.to_string()),
    })?;
    Ok(Job {
        scenario: sc,
        scheme,
        run,
        potential_file,
    })
}

fn custom_base(e: &Entries) -> Result<Scenario> {
    let required = |key: &str| Error::config(key, "required when `scenario.name` is not given");
    let points: Vec<usize> = e.list("grid.points")?.ok_or_else(|| required("grid.points"))?;
    let lower: Vec<f64> = e.list("grid.lower")?.ok_or_else(|| required("grid.lower"))?;
    let upper: Vec<f64> = e.list("grid.upper")?.ok_or_else(|| required("grid.upper"))?;
    let grid = GridSpec::new(points, lower, upper).map_err(|err| Error::config("grid", err.to_string()))?;
    let dims = grid.dims();
    Ok(Scenario {
        name: "custom".into(),
        grid: Arc::new(grid),
        metric: Metric::per_axis(vec![1.0; dims])?,
        constants: Constants::quantum(1.0)?,
        potential: Potential::Free,
        initial: InitialCondition::Gaussian {
            mu: vec![0.0; dims],
            sigma: vec![1.0; dims],
            k: vec![0.0; dims],
        },
        t_final: e.get("run.t_final")?.ok_or_else(|| required("run.t_final"))?,
        regularization: Regularization::default(),
    })
}

fn initial_condition(e: &Entries, current: &InitialCondition, dims: usize) -> Result<InitialCondition> {
    let kind = e.raw("initial.kind").unwrap_or(match current {
        InitialCondition::Gaussian { .. } => "gaussian",
        InitialCondition::Coherent { .. } => "coherent",
    });
    match kind {
        "gaussian" => {
            let (mu0, sigma0, k0) = match current {
                InitialCondition::Gaussian { mu, sigma, k } if mu.len() == dims => (mu.clone(), sigma.clone(), k.clone()),
                _ => (vec![0.0; dims], vec![1.0; dims], vec![0.0; dims]),
            };
            let mu = e.list("initial.mu")?.unwrap_or(mu0);
            let sigma = e.list("initial.sigma")?.unwrap_or(sigma0);
            let k = e.list("initial.k")?.unwrap_or(k0);
            for (key, v) in [("initial.mu", &mu), ("initial.sigma", &sigma), ("initial.k", &k)] {
                if v.len() != dims {
                    return Err(Error::config(key, format!("{} values for a {dims}-D grid", v.len())));
                }
            }
            if sigma.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::config("initial.sigma", "widths must be positive"));
            }
            Ok(InitialCondition::Gaussian { mu, sigma, k })
        }
        "coherent" => {
            let (w0, d0) = match current {
                InitialCondition::Coherent { omega, displacement } => (*omega, *displacement),
                _ => (1.0, 0.0),
            };
            let omega = e.get("initial.omega")?.unwrap_or(w0);
            if !(omega > 0.0) {
                return Err(Error::config("initial.omega", "must be positive"));
            }
            Ok(InitialCondition::Coherent {
                omega,
                displacement: e.get("initial.displacement")?.unwrap_or(d0),
            })
        }
        other => Err(Error::config("initial.kind", format!("`{other}` is not gaussian or coherent"))),
    }
}

fn potential(e: &Entries, current: &Potential, grid: &GridSpec, base: &Path) -> Result<(Potential, Option<PathBuf>)> {
    let kind = e.raw("potential.kind").unwrap_or(match current {
        Potential::Free => "free",
        Potential::Harmonic { .. } => "harmonic",
        Potential::Barrier { .. } => "barrier",
        Potential::Sampled(_) => "sampled",
    });
    let dims = grid.dims();
    let potential = match kind {
        "free" => Potential::Free,
        "harmonic" => {
            let spring = match (e.list("potential.spring")?, current) {
                (Some(s), _) => s,
                (None, Potential::Harmonic { spring }) => spring.clone(),
                (None, _) => vec![1.0; dims],
            };
            Potential::Harmonic { spring }
        }
        "barrier" => Potential::Barrier {
            height: e.get("potential.height")?.unwrap_or(1.0),
            center: e.list("potential.center")?.unwrap_or_else(|| vec![0.0; dims]),
            width: e.get("potential.width")?.unwrap_or(1.0),
        },
        "sampled" => {
            let file = e.raw("potential.file").ok_or_else(|| Error::config("potential.file", "required for a sampled potential"))?;
            let path = base.join(file);
            let data = FieldFile::read(&path).map_err(|err| Error::config("potential.file", format!("{}: {err}", path.display())))?;
            if &data.grid != grid {
                return Err(Error::config("potential.file", "grid differs from the scenario grid"));
            }
            let values = match (data.column("v"), data.columns.as_slice()) {
                (Some(v), _) => v.to_vec(),
                (None, [(_, only)]) => only.clone(),
                _ => return Err(Error::config("potential.file", "expected a `v` column")),
            };
            return Ok((Potential::Sampled(values), Some(path)));
        }
        other => {
            return Err(Error::config(
                "potential.kind",
                format!("`{other}` is not free, harmonic, barrier or sampled"),
            ))
        }
    };
    potential.evaluate(grid).map_err(|err| Error::config("potential", err.to_string()))?;
    Ok((potential, None))
}

fn constants(e: &Entries, current: &Constants) -> Result<Constants> {
    let hbar = e.get("model.hbar")?.unwrap_or(current.hbar());
    let a = e.get("model.A")?.unwrap_or(current.a());
    let ratio = hbar / current.hbar();
    let b = e.get("model.B")?.unwrap_or(current.b() * ratio * ratio);
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::config("model.hbar", format!("{hbar} must be positive")));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::config("model.A", format!("{a} must be non-negative")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::config("model.B", format!("{b} must be non-negative")));
    }
    Constants::new(hbar, a, b)
}

fn check_regularization(reg: &Regularization) -> Result<()> {
    let checks = [
        ("regularization.density_floor", reg.density_floor > 0.0 && reg.density_floor < 1.0),
        ("regularization.vacuum_density", reg.vacuum_density >= 0.0 && reg.vacuum_density.is_finite()),
        ("regularization.filter_strength", reg.filter_strength >= 0.0 && reg.filter_strength.is_finite()),
        ("regularization.filter_order", reg.filter_order > 0),
        ("regularization.window_fraction", reg.window_fraction > 0.0 && reg.window_fraction <= 1.0),
    ];
    match checks.iter().find(|(_, ok)| !ok) {
        Some((key, _)) => Err(Error::config(*key, "out of range")),
        None => Ok(()),
    }
}

fn run_params(e: &Entries, sc: &Scenario) -> Result<RunParams> {
    let factor = e.get("run.stability_factor")?.unwrap_or(DEFAULT_STABILITY_FACTOR);
    if !(factor > 0.0 && f64::is_finite(factor)) {
        return Err(Error::config("run.stability_factor", format!("{factor} must be positive")));
    }
    if !(sc.t_final >= 0.0 && sc.t_final.is_finite()) {
        return Err(Error::config("run.t_final", format!("{} must be non-negative", sc.t_final)));
    }
    let stride = e.get("run.stride")?.unwrap_or(DEFAULT_SNAPSHOT_STRIDE);
    if stride == 0 {
        return Err(Error::config("run.stride", "must be at least 1"));
    }
    let integrator = match e.raw("run.integrator") {
        None | Some("rk4") => Integrator::Rk4,
        Some("heun") => Integrator::Heun,
        Some(other) => return Err(Error::config("run.integrator", format!("`{other}` is not rk4 or heun"))),
    };
    let limit = stability_limit(&sc.grid, &sc.metric, &sc.constants, factor);
    let dt = e.get("run.dt")?.unwrap_or(limit);
    let run = RunParams::new(dt, sc.t_final, stride)
        .with_integrator(integrator)
        .with_stability_factor(factor);
    run.validate(&sc.grid, &sc.metric, &sc.constants)
        .map_err(|err| Error::config("run.dt", err.to_string()))?;
    Ok(run)
}
