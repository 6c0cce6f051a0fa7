//! CSV tables and JSON metadata sidecars.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::LabResult;

pub const SCHEMA_PREFIX: &str = "pauli-lab";
pub const SCHEMA_VERSION: u32 = 1;

pub fn schema_tag(command: &str) -> String {
    format!("{SCHEMA_PREFIX}.{command}.v{SCHEMA_VERSION}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    /// Floats keep 17 significant digits so that they re-parse exactly.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Writes a `#schema=` line, the header row and the data rows.
    pub fn write_csv<W: Write>(&self, schema: &str, mut out: W) -> LabResult<()> {
        writeln!(out, "#schema={schema}")?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A numerical check with its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<=",
            threshold,
            passed: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">=",
            threshold,
            passed: value >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub sigma: f64,
    pub partition_function: f64,
    pub tail_mass: f64,
    pub levels: usize,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RngInfo {
    pub algorithm: String,
    pub seed: u64,
    pub shards: u64,
    pub max_level: usize,
}

/// The `<out>.meta.json` document. Its `config` member is a complete
/// [`RunConfig`], so the file can be passed back through `--config`.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub schema: String,
    pub command: String,
    pub config: RunConfig,
    pub derived: Derived,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<RngInfo>,
    pub columns: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the table to `out` and the sidecar next to it, or the table to
/// stdout when `out` is `None`.
pub fn emit(table: &Table, sidecar: &Sidecar, out: Option<&Path>) -> LabResult<()> {
    match out {
        Some(path) => {
            let file = std::io::BufWriter::new(std::fs::File::create(path)?);
            table.write_csv(&sidecar.schema, file)?;
            let meta = std::fs::File::create(sidecar_path(path))?;
            let mut meta = std::io::BufWriter::new(meta);
            serde_json::to_writer_pretty(&mut meta, sidecar)?;
            meta.write_all(b"\n")?;
            meta.flush()?;
        }
        None => table.write_csv(&sidecar.schema, std::io::stdout().lock())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, -7.25e12, f64::MIN_POSITIVE] {
            assert_eq!(Cell::Float(x).render().parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(["k", "nu"]);
        t.push(vec![Cell::from(0usize), Cell::from(-0.5)]);
        t.push(vec![Cell::from(1usize), Cell::Empty]);
        let mut buf = Vec::new();
        t.write_csv("pauli-lab.test.v1", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "#schema=pauli-lab.test.v1\nk,nu\n0,-5.0000000000000000e-1\n1,\n");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("/tmp/a.csv")), PathBuf::from("/tmp/a.csv.meta.json"));
    }
}
