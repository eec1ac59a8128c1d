//! Result tables and the on-disk bundle: one directory per experiment with
//! CSV tables and `summary.json`. Each CSV starts with a `#` provenance line
//! carrying the tool version and the config hash, followed by the header row.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) if v.is_nan() => "nan".into(),
            Cell::F(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::F(v) => format!("{v}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::F(v) => Some(*v),
            Cell::I(v) => Some(*v as f64),
            Cell::S(_) => None,
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

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn write_csv(&self, path: &Path, provenance: &str) -> Result<(), CliError> {
        let mut file = fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        writeln!(file, "# {provenance}")?;
        let mut w = csv::Writer::from_writer(file);
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Tables, key scalars and per-point failures of one experiment run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bundle {
    pub experiment: String,
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
    pub failures: Vec<String>,
}

impl Bundle {
    pub fn new(experiment: &str) -> Self {
        Self { experiment: experiment.into(), ..Self::default() }
    }

    pub fn scalar(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Writes `<root>/<experiment>/{<table>.csv, summary.json}`.
    pub fn write(&self, root: &Path, config: &Config) -> Result<Vec<PathBuf>, CliError> {
        let dir = root.join(&self.experiment);
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let hash = config.hash();
        let provenance = format!("rpnvsim {VERSION} experiment={} config_sha256={hash}", self.experiment);
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            t.write_csv(&path, &provenance)?;
            written.push(path);
        }
        let config_echo: Value = serde_json::from_str(&config.canonical_json()).expect("canonical config is JSON");
        let doc = json!({
            "experiment": self.experiment,
            "version": VERSION,
            "config_sha256": hash,
            "partial": self.is_partial(),
            "failures": self.failures,
            "tables": self.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
            "summary": Value::Object(self.summary.clone()),
            "config": config_echo,
        });
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&doc).expect("summary serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
        Ok(written)
    }
}
