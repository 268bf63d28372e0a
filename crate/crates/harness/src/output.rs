//! Result bundles and their on-disk form.
//!
//! Tables are CSV: comma separated, a block of `# key = value` lines, a
//! header row, numbers in scientific notation with 17 significant digits.
//! Anything that varies between reruns (timestamps) goes to
//! `metadata.json`, never into a table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qgyro_core::liouvillian::ModelParams;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Path relative to the experiment directory.
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn meta_num(&mut self, key: &str, value: f64) -> &mut Self {
        self.meta(key, fmt_num(value))
    }

    /// Echoes every model parameter.
    pub fn meta_params(&mut self, p: &ModelParams) -> &mut Self {
        self.meta("spin", p.spin.to_string());
        for (k, v) in [
            ("omega", p.omega),
            ("c_q", p.c_q),
            ("omega_d", p.omega_d),
            ("beta", p.beta),
            ("gamma1", p.gamma1),
            ("gamma2", p.gamma2),
            ("gamma_p", p.gamma_p),
        ] {
            self.meta_num(k, v);
        }
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(*v),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(t) => fmt_text(t),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Numeric column by header name; non-numeric cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[j] {
                    Cell::Num(v) => *v,
                    Cell::Int(i) => *i as f64,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JsonArtifact {
    pub name: String,
    pub value: Value,
}

impl JsonArtifact {
    pub fn new(name: impl Into<String>, value: &impl Serialize) -> Self {
        Self { name: name.into(), value: serde_json::to_value(value).expect("serializable artifact") }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub experiment: String,
    pub tables: Vec<Table>,
    pub json: Vec<JsonArtifact>,
    /// Solver statistics and derived quantities.
    pub diagnostics: serde_json::Map<String, Value>,
    /// One entry per failed point or run.
    pub failures: Vec<String>,
    pub violations: usize,
}

impl ResultBundle {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            tables: Vec::new(),
            json: Vec::new(),
            diagnostics: serde_json::Map::new(),
            failures: Vec::new(),
            violations: 0,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn artifact(&self, name: &str) -> Option<&Value> {
        self.json.iter().find(|j| j.name == name).map(|j| &j.value)
    }

    pub fn diag(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(key.to_string(), serde_json::to_value(value).expect("serializable diagnostic"));
    }

    /// Error summarizing failures or violations, if any.
    pub fn status(&self) -> Result<(), HarnessError> {
        if let Some(first) = self.failures.first() {
            return Err(HarnessError::PartialFailure { count: self.failures.len(), first: first.clone() });
        }
        if self.violations > 0 {
            return Err(HarnessError::Violations(self.violations));
        }
        Ok(())
    }
}

/// Provenance written next to the tables.
#[derive(Debug, Clone, Serialize)]
pub struct RunInfo<'a> {
    pub seed: u64,
    pub threads: usize,
    pub config_toml: &'a str,
}

/// Writes `<out>/<experiment>/...` and returns the experiment directory.
pub fn write_bundle(bundle: &ResultBundle, out: &Path, info: &RunInfo<'_>) -> Result<PathBuf, HarnessError> {
    let dir = out.join(&bundle.experiment);
    fs::create_dir_all(&dir)?;
    for t in &bundle.tables {
        fs::write(dir.join(&t.name), t.to_csv())?;
    }
    for j in &bundle.json {
        let mut s = serde_json::to_string_pretty(&j.value).expect("serializable artifact");
        s.push('\n');
        fs::write(dir.join(&j.name), s)?;
    }
    let meta = json!({
        "experiment": bundle.experiment,
        "code_version": env!("CARGO_PKG_VERSION"),
        "generated_at": chrono::Utc::now().to_rfc3339(),
        "seed": info.seed,
        "threads": info.threads,
        "config": info.config_toml,
        "tables": bundle.tables.iter().map(|t| &t.name).collect::<Vec<_>>(),
        "artifacts": bundle.json.iter().map(|j| &j.name).collect::<Vec<_>>(),
        "diagnostics": bundle.diagnostics,
        "failures": bundle.failures,
        "violations": bundle.violations,
    });
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta).expect("json") + "\n")?;
    Ok(dir)
}
