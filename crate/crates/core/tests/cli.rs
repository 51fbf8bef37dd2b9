use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ensemble_core::io::FieldFile;

fn ensemble(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ensemble")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn list_scenarios() {
    let out = ensemble(&["list-scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    let names = String::from_utf8(out.stdout).unwrap();
    assert_eq!(names.lines().count(), 6);
    assert!(names.lines().any(|n| n == "two-particle-separable"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text, needle) in [
        ("b.cfg", "scenario.name = harmonic-ground\nmodel.B = -1\n", "model.B"),
        ("dt.cfg", "scenario.name = harmonic-ground\nrun.dt = 10\n", "run.dt"),
        ("typo.cfg", "scenario.name = harmonic-ground\nrun.strid = 3\n", "line 2"),
    ] {
        let cfg = write_config(dir.path(), name, text);
        let out = ensemble(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(needle), "{name}");
    }
    assert_eq!(ensemble(&["simulate"]).status.code(), Some(2));
    assert_eq!(ensemble(&["simulate", "--config", "/nonexistent/run.cfg"]).status.code(), Some(2));
    assert_eq!(ensemble(&["simulate", "--format", "hdf5"]).status.code(), Some(2));
}

#[test]
fn blow_up_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bare.cfg",
        "scenario.name = free-quantum-gaussian\nregularization.vacuum_density = 0\nregularization.filter_strength = 0\n",
    );
    let out = ensemble(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blow-up"));
    assert!(dir.path().join("o/observables.csv").exists());
}

#[test]
fn tolerance_failure_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "caustic.cfg",
        "scenario.name = free-classical-gaussian\npotential.kind = harmonic\nrun.t_final = 1.4\nrun.stride = 100000\n",
    );
    let out = ensemble(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn simulate_is_bit_reproducible_and_honours_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        "scenario.name = harmonic-coherent\nrun.t_final = 0.5\nrun.stride = 40\noutput.dir = ignored\n",
    );
    let run = |out: &str| {
        let o = ensemble(&["simulate", "--config", &cfg, "--out", out, "--format", "bin", "--seed", "5"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(a.to_str().unwrap());
    run(b.to_str().unwrap());
    for file in ["observables.csv", "snapshots/snapshot_00001.bin"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let effective = fs::read_to_string(a.join("effective-config")).unwrap();
    let other = fs::read_to_string(b.join("effective-config")).unwrap();
    assert_eq!(effective.replace(a.to_str().unwrap(), "OUT"), other.replace(b.to_str().unwrap(), "OUT"));
    assert!(effective.contains("run.seed = 5"));
    assert!(effective.contains("output.format = bin"));
    let header = fs::read_to_string(a.join("observables.csv")).unwrap();
    assert!(header.starts_with("time,norm,energy,mean_0,var_0,maxQ\n"));
    let last = fs::read_dir(a.join("snapshots")).unwrap().count() - 1;
    let snap = FieldFile::read(&a.join(format!("snapshots/snapshot_{last:05}.bin"))).unwrap();
    assert!((snap.time - 0.5).abs() < 1e-12);
}

#[test]
fn compare_free_gaussian_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cmp.cfg", "scenario.name = free-quantum-gaussian\nrun.stride = 100\n");
    let out = ensemble(&["compare", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("discrepancy.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "time,l2_density,sup_density,fidelity");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 2);
    assert_eq!(rows.last().unwrap()[0], 2.0);
    for row in rows {
        assert!(row[1] < 1e-4 && row[3] > 1.0 - 1e-5, "{row:?}");
    }
    assert!(dir.path().join("observables-hydro.csv").exists());
    assert!(dir.path().join("observables-reference.csv").exists());
}

#[test]
fn verify_axioms_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = ensemble(&["verify-axioms", "--seed", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 7);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("axioms.json")).unwrap()).unwrap();
    let reports = json.as_array().unwrap();
    assert_eq!(reports.len(), 6);
    assert!(reports.iter().all(|r| r["pass"] == true));
}
