//! Result artifacts: `report.json`, `trace.jsonl`, CSV field dumps and the
//! `KCON1` binary grid format (magic, `n` and `N` as little-endian `u32`,
//! then `Phi` point-major, row-major, little-endian `f64`).

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{KError, Result};
use crate::flow::FlowTrace;
use crate::grid::{DerivativeMode, Grid, ScalarField, TransverseGrid};
use crate::structure::KContactStructure;

pub const KCON_MAGIC: &[u8; 5] = b"KCON1";
pub const REPORT_SCHEMA: u32 = 1;

/// One named tolerance check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= tolerance` (NaN fails).
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, tolerance: bound, passed: value >= bound }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 1.0, passed: ok }
    }
}

/// Contents of `report.json`. Everything except `timing` is a deterministic
/// function of the configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub subcommand: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
    pub timing: serde_json::Value,
}

impl Report {
    pub fn new(subcommand: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            subcommand: subcommand.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            seed,
            passed: true,
            checks: Vec::new(),
            results: serde_json::Value::Object(Default::default()),
            timing: serde_json::Value::Object(Default::default()),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        if let serde_json::Value::Object(m) = &mut self.results {
            m.insert(key.into(), v);
        }
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

pub fn write_report(dir: &Path, report: &Report) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(report).map_err(|e| KError::Format(e.to_string()))?;
    fs::write(dir.join("report.json"), text + "\n")?;
    Ok(())
}

/// One JSON object per flow iteration.
pub fn write_trace_jsonl(path: &Path, trace: &FlowTrace) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in &trace.records {
        let line = serde_json::to_string(r).map_err(|e| KError::Format(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    let status = serde_json::json!({ "status": trace.status, "sigma": trace.sigma });
    writeln!(w, "{status}")?;
    Ok(())
}

pub fn write_kcon(path: &Path, s: &KContactStructure) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(KCON_MAGIC)?;
    w.write_all(&(s.n() as u32).to_le_bytes())?;
    w.write_all(&(s.grid().size() as u32).to_le_bytes())?;
    for v in s.phi() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a `KCON1` file onto a unit-period spectral grid and validates it.
pub fn read_kcon(path: &Path) -> Result<KContactStructure> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 13 || &bytes[..5] != KCON_MAGIC {
        return Err(KError::Format("missing KCON1 header".into()));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (n, size) = (word(5), word(9));
    let grid = TransverseGrid::new(n, size, DerivativeMode::Spectral)?;
    let count = grid.points() * grid.dim() * grid.dim();
    let body = &bytes[13..];
    if body.len() != 8 * count {
        return Err(KError::Format(format!("expected {} doubles, found {} bytes", count, body.len())));
    }
    let phi = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    KContactStructure::new(&grid, phi)
}

fn coord_header(grid: &Grid) -> String {
    (1..=grid.dim()).map(|a| format!("x{a}")).collect::<Vec<_>>().join(",")
}

fn coord_cells(grid: &Grid, pt: usize) -> String {
    grid.coords(pt).iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

/// `x1,..,xd,<name>` per grid point.
pub fn write_scalar_csv(path: &Path, name: &str, f: &ScalarField) -> Result<()> {
    let grid = f.grid();
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{},{name}", coord_header(grid))?;
    for (pt, v) in f.values().iter().enumerate() {
        writeln!(w, "{},{v}", coord_cells(grid, pt))?;
    }
    Ok(())
}

/// `x1,..,xd,phi_r_c...` per grid point.
pub fn write_phi_csv(path: &Path, s: &KContactStructure) -> Result<()> {
    let grid = s.grid();
    let d = s.dim();
    let mut w = BufWriter::new(fs::File::create(path)?);
    let names: Vec<String> = (0..d * d).map(|k| format!("phi_{}_{}", k / d + 1, k % d + 1)).collect();
    writeln!(w, "{},{}", coord_header(grid), names.join(","))?;
    for pt in 0..grid.points() {
        let vals: Vec<String> = s.phi_at(pt).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{},{}", coord_cells(grid, pt), vals.join(","))?;
    }
    Ok(())
}

/// Components of a form as CSV columns named by their index lists.
pub fn write_form_csv(path: &Path, name: &str, a: &crate::forms::BasicForm) -> Result<()> {
    let grid = a.grid();
    let t = crate::forms::IndexTables::get(grid.dim());
    let cols: Vec<String> = t
        .index_lists(a.degree())
        .iter()
        .map(|idx| format!("{name}_{}", idx.iter().map(|i| (i + 1).to_string()).collect::<String>()))
        .collect();
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{},{}", coord_header(grid), cols.join(","))?;
    for pt in 0..grid.points() {
        let vals: Vec<String> = a.at(pt).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{},{}", coord_cells(grid, pt), vals.join(","))?;
    }
    Ok(())
}
