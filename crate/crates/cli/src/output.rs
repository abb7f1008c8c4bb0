//! Tables, plots and the run manifest; everything is written by one thread in
//! a fixed order so identical runs give identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(usize),
    Num(f64),
    Missing,
    Text(String),
    Bool(bool),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    // Debug formatting of f64 is shortest-round-trip and switches to
    // exponent notation for very small or large magnitudes; -0 prints as 0
    fn text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{:?}", if *v == 0.0 { 0.0 } else { *v }),
            Cell::Missing => String::new(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Missing => Value::Null,
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self { name: name.to_string(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_headers(name: &str, headers: Vec<String>) -> Self {
        Self { name: name.to_string(), headers, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.headers).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "columns": self.headers,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    /// `(x, y)` pairs of two numeric columns, skipping rows where either is missing.
    pub fn series(&self, x: &str, y: &str, keep: impl Fn(&[Cell]) -> bool) -> Vec<(f64, f64)> {
        let ix = self.headers.iter().position(|h| h == x).expect("known column");
        let iy = self.headers.iter().position(|h| h == y).expect("known column");
        self.rows
            .iter()
            .filter(|r| keep(r))
            .filter_map(|r| match (&r[ix], &r[iy]) {
                (Cell::Num(a), Cell::Num(b)) => Some((*a, *b)),
                (Cell::Int(a), Cell::Num(b)) => Some((*a as f64, *b)),
                _ => None,
            })
            .collect()
    }
}

/// Everything a command produces.
pub struct Output {
    pub command: &'static str,
    pub tables: Vec<Table>,
    /// `(file stem, svg document)`.
    pub plots: Vec<(String, String)>,
    /// Parameters, resolutions, tolerances and diagnostics for the manifest.
    pub manifest: Value,
}

pub struct Destination {
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Writes the requested formats plus `manifest.json` into the output
/// directory, or prints the tables to stdout when no directory is given.
pub fn emit(out: &Output, dest: &Destination) -> Result<(), CliError> {
    let Some(dir) = &dest.dir else {
        if dest.formats.contains(&Format::Svg) {
            return Err(CliError::Config("svg output needs --out".into()));
        }
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        for t in &out.tables {
            let bytes = if dest.formats.first() == Some(&Format::Json) {
                let mut b = serde_json::to_vec_pretty(&t.to_json()).expect("serializable");
                b.push(b'\n');
                b
            } else {
                t.to_csv()?
            };
            lock.write_all(&bytes).map_err(|e| CliError::Io(e.to_string()))?;
        }
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for t in &out.tables {
        for f in &dest.formats {
            let (name, bytes) = match f {
                Format::Csv => (format!("{}.csv", t.name), t.to_csv()?),
                Format::Json => {
                    let mut b = serde_json::to_vec_pretty(&t.to_json()).expect("serializable");
                    b.push(b'\n');
                    (format!("{}.json", t.name), b)
                }
                Format::Svg => continue,
            };
            write_file(&dir.join(&name), &bytes)?;
            files.push(json!({ "file": name, "columns": t.headers, "rows": t.rows.len() }));
        }
    }
    if dest.formats.contains(&Format::Svg) {
        for (stem, doc) in &out.plots {
            let name = format!("{stem}.svg");
            write_file(&dir.join(&name), doc.as_bytes())?;
            files.push(json!({ "file": name }));
        }
    }
    let manifest = json!({
        "command": out.command,
        "version": env!("CARGO_PKG_VERSION"),
        "files": files,
        "run": out.manifest,
    });
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
    bytes.push(b'\n');
    write_file(&dir.join("manifest.json"), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_round_trip_numbers() {
        let mut t = Table::new("t", &["k", "x", "y"]);
        t.push(vec![1usize.into(), 0.1f64.into(), None.into()]);
        t.push(vec![2usize.into(), 1e-12f64.into(), Some(-4.5).into()]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "k,x,y\n1,0.1,\n2,1e-12,-4.5\n");
    }

    #[test]
    fn series_skips_missing() {
        let mut t = Table::new("t", &["x", "y"]);
        t.push(vec![0.5f64.into(), None.into()]);
        t.push(vec![0.6f64.into(), 2.0f64.into()]);
        assert_eq!(t.series("x", "y", |_| true), vec![(0.6, 2.0)]);
    }
}
