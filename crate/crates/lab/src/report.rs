//! Checks, CSV artifacts, the hashed manifest and the text report.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

/// One named acceptance check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable pass condition, e.g. `<= 1e-8`.
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, bound: format!("<= {limit:e}"), pass: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, bound: format!(">= {limit:e}"), pass: value >= limit }
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("{target} +- {tol:e}"),
            pass: (value - target).abs() <= tol,
        }
    }

    /// A yes/no condition; `value` is a supporting number for the report.
    pub fn holds(name: impl Into<String>, pass: bool, value: f64, bound: impl Into<String>) -> Self {
        Self { name: name.into(), value, bound: bound.into(), pass }
    }
}

/// A CSV file produced by a runner, held in memory until written.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub file: String,
    pub bytes: Vec<u8>,
}

/// Builds an RFC-4180 CSV with a header row.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    file: String,
}

impl Table {
    pub fn new(file: &str, headers: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(headers).expect("in-memory write");
        Self { writer, file: file.to_string() }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        self.writer.write_record(cells.iter().map(Cell::render)).expect("in-memory write");
    }

    pub fn finish(self) -> Artifact {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        Artifact { file: self.file, bytes }
    }
}

/// A CSV cell. Floats use the shortest round-trip exponent form, so equal
/// values always render to equal bytes.
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:e}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::S(if v { "true" } else { "false" }.into())
    }
}

/// Shorthand for a row of [`Cell`]s.
#[macro_export]
macro_rules! cells {
    ($($v:expr),* $(,)?) => { &[$($crate::report::Cell::from($v)),*] };
}

/// What a runner hands back: checks, artifacts and wall-clock timings.
/// Timings stay out of every artifact so reruns hash identically.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
    pub timings: Vec<(String, Duration)>,
}

impl Outcome {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn artifact(&mut self, a: Artifact) {
        self.artifacts.push(a);
    }
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

pub const MANIFEST: &str = "manifest.csv";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes `files` into `dir`, then the manifest listing each with its
/// hash. The manifest goes through a temporary file and a rename so a
/// reader never sees a partial one.
pub fn write_outputs(dir: &Path, files: &[Artifact]) -> std::io::Result<(PathBuf, Vec<ManifestEntry>)> {
    std::fs::create_dir_all(dir)?;
    let manifest = dir.join(MANIFEST);
    if manifest.exists() {
        std::fs::remove_file(&manifest)?;
    }
    let mut entries = Vec::with_capacity(files.len());
    for a in files {
        std::fs::write(dir.join(&a.file), &a.bytes)?;
        entries.push(ManifestEntry { file: a.file.clone(), bytes: a.bytes.len(), sha256: sha256_hex(&a.bytes) });
    }
    let mut table = Table::new(MANIFEST, &["file", "bytes", "sha256"]);
    for e in &entries {
        table.row(cells![e.file.as_str(), e.bytes, e.sha256.as_str()]);
    }
    let tmp = dir.join(format!("{MANIFEST}.tmp"));
    std::fs::write(&tmp, table.finish().bytes)?;
    std::fs::rename(&tmp, &manifest)?;
    Ok((manifest, entries))
}

/// Everything a finished scenario run produced.
#[derive(Debug)]
pub struct RunReport {
    pub scenario: String,
    pub family: &'static str,
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub checks: Vec<Check>,
    pub timings: Vec<(String, Duration)>,
    /// Unknown keys tolerated in non-strict mode.
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn timing(&self, label: &str) -> Option<Duration> {
        self.timings.iter().find(|(l, _)| l == label).map(|(_, d)| *d)
    }
}

/// Pass/fail table for one run.
pub fn emit_report(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {} [{}] -> {}", report.scenario, report.family, report.dir.display());
    for w in &report.warnings {
        let _ = writeln!(out, "  warning: unknown key {w} ignored");
    }
    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &report.checks {
        let _ = writeln!(
            out,
            "  {}  {:<width$}  {:>12.4e}  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.bound
        );
    }
    let passed = report.checks.iter().filter(|c| c.pass).count();
    match report.first_failure() {
        None => {
            let _ = writeln!(out, "  result: PASS ({passed}/{} checks)", report.checks.len());
        }
        Some(c) => {
            let _ = writeln!(out, "  result: FAIL ({passed}/{} checks), first failing check: {}", report.checks.len(), c.name);
        }
    }
    out
}

/// Reads a manifest back as `(file, bytes, sha256)` entries.
pub fn read_manifest(path: &Path) -> std::io::Result<Vec<ManifestEntry>> {
    let mut reader = csv::Reader::from_path(path).map_err(std::io::Error::other)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(std::io::Error::other)?;
        let bytes = rec[1].parse().map_err(std::io::Error::other)?;
        out.push(ManifestEntry { file: rec[0].to_string(), bytes, sha256: rec[2].to_string() });
    }
    Ok(out)
}
