//! Batch execution of a [`RunConfig`] and the process exit-code contract.
//!
//! Output directory layout:
//!
//! | mode | files |
//! |------|-------|
//! | simulate | `effective-config`, `observables.csv`, `snapshots/snapshot_NNNNN.{csv,bin}` |
//! | compare | `effective-config`, `observables-hydro.csv`, `observables-reference.csv`, `discrepancy.csv` |
//! | verify-axioms | `effective-config`, `axioms.json` |

use std::fs;
use std::path::Path;
use std::thread;

use crate::axioms::default_suite;
use crate::config::{Mode, RunConfig};
use crate::diagnostics::{compare_with_wavefunction, ObservableRecord};
use crate::error::{Error, Result};
use crate::evolution::{evolve_hydro, evolve_reference};
use crate::io::{axiom_json, axiom_table, discrepancy_csv, observables_csv, FieldFile};
use crate::scenarios::PRESET_NAMES;
use crate::state::to_wavefunction;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Largest allowed `|norm(t) - norm(0)|` in a simulation.
pub const NORM_TOLERANCE: f64 = 1e-8;
/// Largest allowed `|H(t) - H(0)| / |H(0)|` in a simulation.
pub const ENERGY_TOLERANCE: f64 = 1e-6;
/// Smallest allowed hydro/reference fidelity in compare mode.
pub const FIDELITY_TOLERANCE: f64 = 1e-5;
/// Largest allowed hydro/reference density L2 distance in compare mode.
pub const L2_TOLERANCE: f64 = 1e-4;

/// What a run reports on stdout and whether its tolerances held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub report: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_OK
        } else {
            EXIT_TOLERANCE
        }
    }
}

pub fn error_exit_code(error: &Error) -> i32 {
    if error.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    match config.mode {
        Mode::ListScenarios => Ok(Outcome {
            pass: true,
            report: PRESET_NAMES.iter().map(|n| format!("{n}\n")).collect(),
        }),
        Mode::Simulate => simulate(config),
        Mode::Compare => compare(config),
        Mode::VerifyAxioms => verify_axioms(config),
    }
}

fn prepare(config: &RunConfig) -> Result<&Path> {
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::config("output.dir", format!("{}: {e}", dir.display())))?;
    fs::write(dir.join("effective-config"), config.effective_text())
        .map_err(|e| Error::config("output.dir", format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

/// Largest norm drift and relative energy drift over a run.
pub fn drifts(records: &[ObservableRecord]) -> (f64, f64) {
    let Some(first) = records.first() else {
        return (0.0, 0.0);
    };
    let scale = first.energy.abs().max(f64::MIN_POSITIVE);
    records.iter().fold((0.0, 0.0), |(n, e), r| {
        (
            f64::max(n, (r.norm - first.norm).abs()),
            f64::max(e, (r.energy - first.energy).abs() / scale),
        )
    })
}

fn simulate(config: &RunConfig) -> Result<Outcome> {
    let job = config.job()?;
    let dir = prepare(config)?;
    let model = job.model();
    let initial = job.scenario.initial_state()?;
    let (traj, failure) = match evolve_hydro(&initial, &model, &job.run) {
        Ok(t) => (t, None),
        Err(aborted) => (aborted.partial, Some(aborted.error)),
    };
    let snapshots = dir.join("snapshots");
    fs::create_dir_all(&snapshots)?;
    for (i, state) in traj.snapshots.iter().enumerate() {
        let path = snapshots.join(format!("snapshot_{i:05}.{}", config.format.extension()));
        FieldFile::from_state(state).write(&path, config.format)?;
    }
    fs::write(dir.join("observables.csv"), observables_csv(&traj.observables))?;
    if let Some(error) = failure {
        return Err(error);
    }
    let (norm, energy) = drifts(&traj.observables);
    let pass = norm <= NORM_TOLERANCE && energy <= ENERGY_TOLERANCE;
    Ok(Outcome {
        pass,
        report: format!(
            "{}: {} snapshots to t = {}; norm drift {norm:.3e} (limit {NORM_TOLERANCE:e}), \
             relative energy drift {energy:.3e} (limit {ENERGY_TOLERANCE:e})\n",
            job.scenario.name,
            traj.len(),
            job.run.t_final
        ),
    })
}

fn compare(config: &RunConfig) -> Result<Outcome> {
    let job = config.job()?;
    let dir = prepare(config)?;
    let model = job.model();
    let constants = job.scenario.constants;
    let initial = job.scenario.initial_state()?;
    let wf = to_wavefunction(&initial, &constants);
    let (hydro, reference) = thread::scope(|s| {
        let h = s.spawn(|| evolve_hydro(&initial, &model, &job.run));
        let r = s.spawn(|| evolve_reference(&wf, &model, &job.run));
        (h.join().expect("hydro solver panicked"), r.join().expect("reference solver panicked"))
    });
    let reference = reference?;
    fs::write(dir.join("observables-reference.csv"), observables_csv(&reference.observables))?;
    let (hydro, failure) = match hydro {
        Ok(t) => (t, None),
        Err(aborted) => (aborted.partial, Some(aborted.error)),
    };
    fs::write(dir.join("observables-hydro.csv"), observables_csv(&hydro.observables))?;
    let rows = hydro
        .snapshots
        .iter()
        .zip(&reference.snapshots)
        .map(|(h, r)| Ok((h.time(), compare_with_wavefunction(h, r, &constants)?)))
        .collect::<Result<Vec<_>>>()?;
    fs::write(dir.join("discrepancy.csv"), discrepancy_csv(&rows))?;
    if let Some(error) = failure {
        return Err(error);
    }
    let worst_l2 = rows.iter().map(|(_, c)| c.l2_density).fold(0.0, f64::max);
    let worst_fid = rows.iter().map(|(_, c)| c.fidelity).fold(1.0, f64::min);
    let pass = worst_l2 < L2_TOLERANCE && worst_fid > 1.0 - FIDELITY_TOLERANCE;
    Ok(Outcome {
        pass,
        report: format!(
            "{}: {} snapshot pairs; max L2(p) {worst_l2:.3e} (limit {L2_TOLERANCE:e}), \
             min fidelity 1 - {:.3e} (limit 1 - {FIDELITY_TOLERANCE:e})\n",
            job.scenario.name,
            rows.len(),
            1.0 - worst_fid
        ),
    })
}

fn verify_axioms(config: &RunConfig) -> Result<Outcome> {
    let dir = prepare(config)?;
    let reports = default_suite(config.seed)?;
    fs::write(dir.join("axioms.json"), axiom_json(&reports)?)?;
    Ok(Outcome {
        pass: reports.iter().all(|r| r.pass),
        report: axiom_table(&reports),
    })
}
