//! C ABI over `ensemble-core`.
//!
//! Every fallible function returns an [`EnsStatus`]; on failure the message is
//! kept per thread and can be read with [`ens_last_error`]. Objects are opaque
//! handles returned through out-pointers and released with the matching
//! `*_free`, which accepts null. Strings are copied into caller buffers:
//! the functions return the length including the terminating NUL, and write
//! nothing when the buffer is too small.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ensemble_core::axioms::{default_suite, AxiomReport};
use ensemble_core::cli;
use ensemble_core::config::{parse_config, RunConfig};
use ensemble_core::diagnostics::{compare_with_wavefunction, observables};
use ensemble_core::evolution::{evolve_hydro, evolve_reference};
use ensemble_core::scenarios::{preset, Scenario, PRESET_NAMES};
use ensemble_core::state::{to_wavefunction, Constants, FieldState};
use ensemble_core::Error;

/// Largest number of configuration-space axes.
pub const ENS_MAX_DIMS: usize = 3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Numerical = 4,
    Invalid = 5,
    Io = 6,
    BufferTooSmall = 7,
    OutOfRange = 8,
    Panic = 9,
}

pub struct EnsScenario(Scenario);
pub struct EnsState(FieldState);
pub struct EnsConfig(RunConfig);
pub struct EnsAxioms(Vec<AxiomReport>);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsObservables {
    pub time: f64,
    pub norm: f64,
    pub energy: f64,
    pub max_q: f64,
    pub dims: u32,
    pub mean: [f64; ENS_MAX_DIMS],
    pub variance: [f64; ENS_MAX_DIMS],
}

/// Worst hydro/reference agreement over the snapshots of a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsComparison {
    pub snapshots: usize,
    pub max_l2_density: f64,
    pub min_fidelity: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsAxiomResult {
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(error: &Error) -> EnsStatus {
    match error {
        Error::Parse { .. } | Error::Config { .. } => EnsStatus::Config,
        Error::BlowUp { .. } | Error::Node { .. } => EnsStatus::Numerical,
        Error::Io(_) => EnsStatus::Io,
        _ => EnsStatus::Invalid,
    }
}

fn fail(error: Error) -> EnsStatus {
    let status = status_of(&error);
    set_error(error.to_string());
    status
}

fn guard(f: impl FnOnce() -> Result<(), EnsStatus>) -> EnsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            EnsStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            EnsStatus::Panic
        }
    }
}

fn core<T>(r: ensemble_core::Result<T>) -> Result<T, EnsStatus> {
    r.map_err(fail)
}

fn null() -> EnsStatus {
    set_error("null pointer argument".into());
    EnsStatus::NullPointer
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, EnsStatus> {
    p.as_ref().ok_or_else(null)
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, EnsStatus> {
    if p.is_null() {
        set_error("null string argument".into());
        return Err(EnsStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not UTF-8".into());
        EnsStatus::InvalidUtf8
    })
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), EnsStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(EnsStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_str(s: &str, buf: *mut c_char, cap: usize) -> usize {
    let needed = s.len() + 1;
    if !buf.is_null() && cap >= needed {
        ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
        *buf.add(s.len()) = 0;
    }
    needed
}

unsafe fn copy_values(values: &[f64], buf: *mut f64, cap: usize) -> Result<(), EnsStatus> {
    if buf.is_null() {
        set_error("null output buffer".into());
        return Err(EnsStatus::NullPointer);
    }
    if cap < values.len() {
        set_error(format!("buffer holds {cap} values, {} needed", values.len()));
        return Err(EnsStatus::BufferTooSmall);
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copy the calling thread's last error message; returns its length plus one.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ens_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| copy_str(&e.borrow(), buf, cap))
}

#[no_mangle]
pub extern "C" fn ens_scenario_count() -> usize {
    PRESET_NAMES.len()
}

/// Copy the name of preset `index`; returns its length plus one, or 0 when out of range.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ens_scenario_name(index: usize, buf: *mut c_char, cap: usize) -> usize {
    PRESET_NAMES.get(index).map_or(0, |n| copy_str(n, buf, cap))
}

/// # Safety
/// `name` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ens_scenario_preset(name: *const c_char, out: *mut *mut EnsScenario) -> EnsStatus {
    guard(|| {
        let scenario = core(preset(text(name)?))?;
        put(out, EnsScenario(scenario))
    })
}

/// Replace the coupling constants (`hbar`, `A`, `B`).
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ens_scenario_set_constants(scenario: *mut EnsScenario, hbar: f64, a: f64, b: f64) -> EnsStatus {
    guard(|| {
        let sc = scenario.as_mut().ok_or_else(null)?;
        sc.0.constants = core(Constants::new(hbar, a, b))?;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ens_scenario_free(scenario: *mut EnsScenario) {
    free(scenario)
}

/// # Safety
/// `scenario` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ens_scenario_initial_state(scenario: *const EnsScenario, out: *mut *mut EnsState) -> EnsStatus {
    guard(|| {
        let state = core(get(scenario)?.0.initial_state())?;
        put(out, EnsState(state))
    })
}

/// Evolve `state` by `duration` with the hydrodynamic solver at the stability-limit step.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ens_evolve(
    scenario: *const EnsScenario,
    state: *const EnsState,
    duration: f64,
    out: *mut *mut EnsState,
) -> EnsStatus {
    guard(|| {
        let sc = &get(scenario)?.0;
        let st = &get(state)?.0;
        let mut run = sc.run_params();
        run.t_final = duration;
        run.snapshot_stride = usize::MAX;
        let traj = evolve_hydro(st, &sc.model(), &run).map_err(|a| fail(a.error))?;
        let last = traj.last().expect("trajectory holds the initial state").clone();
        put(out, EnsState(last))
    })
}

/// Number of grid points in `state`, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ens_state_len(state: *const EnsState) -> usize {
    state.as_ref().map_or(0, |s| s.0.p().len())
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ens_state_time(state: *const EnsState) -> f64 {
    state.as_ref().map_or(f64::NAN, |s| s.0.time())
}

/// Copy the density in row-major order into `buf` (capacity `cap` values).
///
/// # Safety
/// `state` must be a live handle; `buf` must be valid for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn ens_state_copy_p(state: *const EnsState, buf: *mut f64, cap: usize) -> EnsStatus {
    guard(|| copy_values(get(state)?.0.p(), buf, cap))
}

/// Copy the action in row-major order into `buf` (capacity `cap` values).
///
/// # Safety
/// `state` must be a live handle; `buf` must be valid for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn ens_state_copy_s(state: *const EnsState, buf: *mut f64, cap: usize) -> EnsStatus {
    guard(|| copy_values(get(state)?.0.s(), buf, cap))
}

/// # Safety
/// `state` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ens_state_free(state: *mut EnsState) {
    free(state)
}

/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ens_observables(
    scenario: *const EnsScenario,
    state: *const EnsState,
    out: *mut EnsObservables,
) -> EnsStatus {
    guard(|| {
        let rec = core(observables(&get(state)?.0, &get(scenario)?.0.model()))?;
        let out = out.as_mut().ok_or_else(null)?;
        let mut obs = EnsObservables {
            time: rec.time,
            norm: rec.norm,
            energy: rec.energy,
            max_q: rec.max_q,
            dims: rec.mean.len() as u32,
            ..Default::default()
        };
        obs.mean[..rec.mean.len()].copy_from_slice(&rec.mean);
        obs.variance[..rec.variance.len()].copy_from_slice(&rec.variance);
        *out = obs;
        Ok(())
    })
}

/// Run the hydrodynamic and split-step solvers over the scenario and report
/// their worst agreement.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ens_compare(scenario: *const EnsScenario, out: *mut EnsComparison) -> EnsStatus {
    guard(|| {
        let sc = &get(scenario)?.0;
        let out = out.as_mut().ok_or_else(null)?;
        let model = sc.model();
        let run = sc.run_params();
        let initial = core(sc.initial_state())?;
        let hydro = evolve_hydro(&initial, &model, &run).map_err(|a| fail(a.error))?;
        let reference = core(evolve_reference(&to_wavefunction(&initial, &sc.constants), &model, &run))?;
        let mut cmp = EnsComparison {
            snapshots: 0,
            max_l2_density: 0.0,
            min_fidelity: 1.0,
        };
        for (h, r) in hydro.snapshots.iter().zip(&reference.snapshots) {
            let c = core(compare_with_wavefunction(h, r, &sc.constants))?;
            cmp.snapshots += 1;
            cmp.max_l2_density = cmp.max_l2_density.max(c.l2_density);
            cmp.min_fidelity = cmp.min_fidelity.min(c.fidelity);
        }
        *out = cmp;
        Ok(())
    })
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ens_config_parse(text: *const c_char, out: *mut *mut EnsConfig) -> EnsStatus {
    guard(|| {
        let config = core(parse_config(self::text(text)?))?;
        put(out, EnsConfig(config))
    })
}

/// Execute a configuration, writing its files under `out_dir` (or the
/// configured directory when null). `exit_code` receives the command-line
/// exit status the run corresponds to.
///
/// # Safety
/// `config` must be a live handle; `out_dir` null or NUL-terminated;
/// `exit_code` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ens_config_run(config: *const EnsConfig, out_dir: *const c_char, exit_code: *mut i32) -> EnsStatus {
    guard(|| {
        let mut config = get(config)?.0.clone();
        let exit_code = exit_code.as_mut().ok_or_else(null)?;
        if !out_dir.is_null() {
            config.output_dir = PathBuf::from(text(out_dir)?);
        }
        match cli::run(&config) {
            Ok(outcome) => {
                *exit_code = outcome.exit_code();
                Ok(())
            }
            Err(e) => {
                *exit_code = cli::error_exit_code(&e);
                Err(fail(e))
            }
        }
    })
}

/// # Safety
/// `config` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ens_config_free(config: *mut EnsConfig) {
    free(config)
}

/// Run the default axiom suite with `seed`; `all_pass` may be null.
///
/// # Safety
/// `out` must be valid for writes; `all_pass` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ens_axioms_run(seed: u64, out: *mut *mut EnsAxioms, all_pass: *mut bool) -> EnsStatus {
    guard(|| {
        let reports = core(default_suite(seed))?;
        if let Some(flag) = all_pass.as_mut() {
            *flag = reports.iter().all(|r| r.pass);
        }
        put(out, EnsAxioms(reports))
    })
}

/// # Safety
/// `axioms` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ens_axioms_count(axioms: *const EnsAxioms) -> usize {
    axioms.as_ref().map_or(0, |a| a.0.len())
}

/// # Safety
/// `axioms` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ens_axioms_get(axioms: *const EnsAxioms, index: usize, out: *mut EnsAxiomResult) -> EnsStatus {
    guard(|| {
        let report = get(axioms)?.0.get(index).ok_or_else(|| {
            set_error(format!("axiom index {index} out of range"));
            EnsStatus::OutOfRange
        })?;
        *out.as_mut().ok_or_else(null)? = EnsAxiomResult {
            deviation: report.deviation,
            tolerance: report.tolerance,
            pass: report.pass,
        };
        Ok(())
    })
}

/// Copy the name of check `index`; returns its length plus one, or 0 when out of range.
///
/// # Safety
/// `axioms` must be null or a live handle; `buf` null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ens_axioms_name(axioms: *const EnsAxioms, index: usize, buf: *mut c_char, cap: usize) -> usize {
    match axioms.as_ref().and_then(|a| a.0.get(index)) {
        Some(r) => copy_str(&r.axiom, buf, cap),
        None => 0,
    }
}

/// # Safety
/// `axioms` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ens_axioms_free(axioms: *mut EnsAxioms) {
    free(axioms)
}
