//! File formats: field snapshots (CSV or binary), observables and comparison
//! tables, and axiom reports.
//!
//! A CSV field file starts with one header line of space-separated `key=value`
//! pairs, then a column-name line, then one row per grid point in row-major order:
//!
//! ```text
//! # dims=1 points=512 lower=-20 upper=20 time=0.5 phase_gradient=0
//! p,s
//! 2.0000000000000004e-12,0
//! ...
//! ```
//!
//! The binary layout is little-endian: the magic `ENSF`, a `u32` format version,
//! `u32` dims, `u32` column count, `u32` points per axis, `f64` lower and upper
//! bounds per axis, `f64` time, `f64` phase gradient per axis, then for every
//! column a length-prefixed UTF-8 name followed by its `f64` values.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::axioms::AxiomReport;
use crate::diagnostics::{ObservableRecord, StateComparison};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::state::FieldState;

const MAGIC: &[u8; 4] = b"ENSF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Bin,
}

impl SnapshotFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SnapshotFormat::Csv => "csv",
            SnapshotFormat::Bin => "bin",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "csv" => Some(SnapshotFormat::Csv),
            "bin" => Some(SnapshotFormat::Bin),
            _ => None,
        }
    }
}

/// Named real fields on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub grid: GridSpec,
    pub time: f64,
    pub phase_gradient: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl FieldFile {
    pub fn from_state(state: &FieldState) -> Self {
        Self {
            grid: state.grid().clone(),
            time: state.time(),
            phase_gradient: state.phase_gradient().to_vec(),
            columns: vec![("p".into(), state.p().to_vec()), ("s".into(), state.s().to_vec())],
        }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn to_state(&self) -> Result<FieldState> {
        let p = self.column("p").ok_or_else(|| Error::Format("no `p` column".into()))?;
        let s = self.column("s").ok_or_else(|| Error::Format("no `s` column".into()))?;
        FieldState::new(Arc::new(self.grid.clone()), p.to_vec(), s.to_vec(), self.time)?
            .with_phase_gradient(self.phase_gradient.clone())
    }

    pub fn write(&self, path: &Path, format: SnapshotFormat) -> Result<()> {
        for (name, values) in &self.columns {
            self.grid.check_len(values, name)?;
        }
        let mut out = BufWriter::new(fs::File::create(path)?);
        match format {
            SnapshotFormat::Csv => self.write_csv(&mut out)?,
            SnapshotFormat::Bin => self.write_bin(&mut out)?,
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut head = [0u8; 4];
        let mut file = fs::File::open(path)?;
        let n = file.read(&mut head)?;
        let file = fs::File::open(path)?;
        if n == 4 && &head == MAGIC {
            Self::read_bin(BufReader::new(file))
        } else {
            Self::read_csv(BufReader::new(file))
        }
    }

    fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let g = &self.grid;
        writeln!(
            out,
            "# dims={} points={} lower={} upper={} time={} phase_gradient={}",
            g.dims(),
            join(g.points()),
            join(g.lower()),
            join(g.upper()),
            self.time,
            join(&self.phase_gradient)
        )?;
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        writeln!(out, "{}", names.join(","))?;
        let mut line = String::new();
        for i in 0..g.len() {
            line.clear();
            for (k, (_, values)) in self.columns.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                line.push_str(&format_number(values[i]));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty file".into()))??;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Format("first line must start with `#`".into()))?;
        let mut dims = None;
        let mut points = None;
        let mut lower = None;
        let mut upper = None;
        let mut time = None;
        let mut phase_gradient = None;
        for pair in header.split_whitespace() {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("header entry `{pair}` is not key=value")))?;
            match key {
                "dims" => dims = Some(parse_num::<usize>(value)?),
                "points" => points = Some(parse_list::<usize>(value)?),
                "lower" => lower = Some(parse_list::<f64>(value)?),
                "upper" => upper = Some(parse_list::<f64>(value)?),
                "time" => time = Some(parse_num::<f64>(value)?),
                "phase_gradient" => phase_gradient = Some(parse_list::<f64>(value)?),
                other => return Err(Error::Format(format!("unknown header key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::Format(format!("header lacks `{k}`"));
        let grid = GridSpec::new(
            points.ok_or_else(|| missing("points"))?,
            lower.ok_or_else(|| missing("lower"))?,
            upper.ok_or_else(|| missing("upper"))?,
        )?;
        if dims.ok_or_else(|| missing("dims"))? != grid.dims() {
            return Err(Error::Format("`dims` disagrees with `points`".into()));
        }
        let names_line = lines.next().ok_or_else(|| Error::Format("missing column names".into()))??;
        let names: Vec<String> = names_line.split(',').map(|s| s.trim().to_string()).collect();
        let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); names.len()];
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let values: Vec<&str> = line.split(',').collect();
            if values.len() != names.len() {
                return Err(Error::Format(format!(
                    "row {} has {} values, expected {}",
                    row + 1,
                    values.len(),
                    names.len()
                )));
            }
            for (col, v) in columns.iter_mut().zip(values) {
                col.push(parse_num::<f64>(v.trim())?);
            }
        }
        for (name, col) in names.iter().zip(&columns) {
            grid.check_len(col, name)?;
        }
        let dims = grid.dims();
        Ok(Self {
            time: time.ok_or_else(|| missing("time"))?,
            phase_gradient: phase_gradient.unwrap_or_else(|| vec![0.0; dims]),
            grid,
            columns: names.into_iter().zip(columns).collect(),
        })
    }

    fn write_bin(&self, out: &mut impl Write) -> Result<()> {
        let g = &self.grid;
        out.write_all(MAGIC)?;
        for v in [VERSION, g.dims() as u32, self.columns.len() as u32] {
            out.write_all(&v.to_le_bytes())?;
        }
        for &n in g.points() {
            out.write_all(&(n as u32).to_le_bytes())?;
        }
        for v in g.lower().iter().chain(g.upper()).chain([&self.time]).chain(&self.phase_gradient) {
            out.write_all(&v.to_le_bytes())?;
        }
        for (name, values) in &self.columns {
            out.write_all(&(name.len() as u32).to_le_bytes())?;
            out.write_all(name.as_bytes())?;
            for v in values {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    fn read_bin(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(&mut input)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dims = read_u32(&mut input)? as usize;
        let ncols = read_u32(&mut input)? as usize;
        if dims == 0 || dims > crate::grid::MAX_DIMS {
            return Err(Error::Format(format!("dimension {dims}")));
        }
        let points = (0..dims).map(|_| read_u32(&mut input).map(|n| n as usize)).collect::<Result<Vec<_>>>()?;
        let lower = read_f64s(&mut input, dims)?;
        let upper = read_f64s(&mut input, dims)?;
        let time = read_f64s(&mut input, 1)?[0];
        let phase_gradient = read_f64s(&mut input, dims)?;
        let grid = GridSpec::new(points, lower, upper)?;
        let mut columns = Vec::with_capacity(ncols);
        for _ in 0..ncols {
            let len = read_u32(&mut input)? as usize;
            let mut name = vec![0u8; len];
            input.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| Error::Format("column name is not UTF-8".into()))?;
            columns.push((name, read_f64s(&mut input, grid.len())?));
        }
        Ok(Self {
            grid,
            time,
            phase_gradient,
            columns,
        })
    }
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Shortest round-trip text for `x`, in exponent form outside `[1e-4, 1e15)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn parse_num<T: std::str::FromStr>(text: &str) -> Result<T> {
    text.parse().map_err(|_| Error::Format(format!("cannot parse `{text}`")))
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    text.split(',').map(parse_num).collect()
}

fn read_u32(input: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s(input: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut b = [0u8; 8];
    (0..n)
        .map(|_| {
            input.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        })
        .collect()
}

/// `time,norm,energy,mean_0..,var_0..,maxQ`.
pub fn observables_csv(records: &[ObservableRecord]) -> String {
    let dims = records.first().map_or(0, |r| r.mean.len());
    let mut out = String::from("time,norm,energy");
    for k in 0..dims {
        write!(out, ",mean_{k}").unwrap();
    }
    for k in 0..dims {
        write!(out, ",var_{k}").unwrap();
    }
    out.push_str(",maxQ\n");
    for r in records {
        let row: Vec<String> = [r.time, r.norm, r.energy]
            .iter()
            .chain(&r.mean)
            .chain(&r.variance)
            .chain([&r.max_q])
            .map(|v| format_number(*v))
            .collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

/// `time,l2_density,sup_density,fidelity`, one row per snapshot pair.
pub fn discrepancy_csv(rows: &[(f64, StateComparison)]) -> String {
    let mut out = String::from("time,l2_density,sup_density,fidelity\n");
    for (t, c) in rows {
        let row = [*t, c.l2_density, c.sup_density, c.fidelity].map(format_number);
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

pub fn axiom_json(reports: &[AxiomReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

/// Fixed-width table with one row per report.
pub fn axiom_table(reports: &[AxiomReport]) -> String {
    let mut out = format!("{:<18} {:>12} {:>10}  {:<4}  details\n", "axiom", "deviation", "tolerance", "pass");
    for r in reports {
        writeln!(
            out,
            "{:<18} {:>12.3e} {:>10.0e}  {:<4}  {}",
            r.axiom,
            r.deviation,
            r.tolerance,
            if r.pass { "yes" } else { "NO" },
            r.details
        )
        .unwrap();
    }
    out
}
