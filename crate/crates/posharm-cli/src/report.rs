//! Report emission: one JSON document per run plus CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use posharm::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

/// A CSV table; cells are already formatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(name: &'static str, header: impl IntoIterator<Item = S>) -> Self {
        Self { name, header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }
}

pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    // Debug keeps the shortest round-trip form and switches to exponents
    // at extreme magnitudes.
    fn cell(&self) -> String {
        format!("{self:?}")
    }
}

impl Cell for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for bool {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl Cell for &str {
    fn cell(&self) -> String {
        (*self).to_string()
    }
}

/// Row of heterogeneous cells.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::report::Cell::cell(&$x)),*] };
}

/// What a subcommand produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    /// Additional JSON artifacts, by file name.
    pub files: Vec<(String, Value)>,
}

impl Outcome {
    pub fn new(result: impl Serialize) -> Self {
        Self { result: serde_json::to_value(result).expect("result serializes"), ..Self::default() }
    }

    pub fn table(mut self, t: Table) -> Self {
        self.tables.push(t);
        self
    }
}

/// Tolerances built into the library rather than configured.
fn fixed_tolerances() -> Value {
    json!({
        "mesh_weight_floor": posharm::harmonic::WEIGHT_FLOOR,
        "mollifier_radius": 1.0,
        "karcher_tol": 1e-12,
    })
}

pub fn error_payload(e: &Error) -> Value {
    let detail = match e {
        Error::Domain(_) => json!({ "kind": "domain" }),
        Error::NonConvergence { what, iterations, residual } => {
            json!({ "kind": "non_convergence", "what": what, "iterations": iterations, "residual": residual })
        }
        Error::NotTransverse { margin } => json!({ "kind": "not_transverse", "margin": margin }),
        Error::PositivityViolation { rows, cols, value } => {
            json!({ "kind": "positivity_violation", "rows": rows, "cols": cols, "value": value })
        }
        Error::Unsupported(d) => json!({ "kind": "unsupported", "d": d }),
        Error::Range(t) => json!({ "kind": "range", "parameter": t }),
        Error::Stalled { sweeps, history } => json!({ "kind": "stalled", "sweeps": sweeps, "moves": history }),
    };
    let mut detail = detail;
    detail["message"] = Value::String(e.to_string());
    detail
}

fn envelope(cfg: &RunConfig, command: &str, status: &str, tables: &[String]) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("status".into(), json!(status));
    m.insert("config_hash".into(), json!(cfg.hash()));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("tolerances".into(), json!({ "configured": cfg.tolerances, "fixed": fixed_tolerances() }));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    m.insert("tables".into(), json!(tables));
    m
}

fn stem(command: &str) -> String {
    command.replace(' ', "-")
}

fn write_json(path: &Path, v: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Writes `<out>/<group>-<action>.json` and one CSV per table; returns the
/// report path.
pub fn write_success(cfg: &RunConfig, command: &str, outcome: &Outcome) -> std::io::Result<PathBuf> {
    fs::create_dir_all(&cfg.out)?;
    let stem = stem(command);
    let mut names = Vec::new();
    for t in &outcome.tables {
        let name = format!("{stem}-{}.csv", t.name);
        let mut w = csv::Writer::from_path(cfg.out.join(&name)).map_err(std::io::Error::other)?;
        w.write_record(&t.header).map_err(std::io::Error::other)?;
        for r in &t.rows {
            w.write_record(r).map_err(std::io::Error::other)?;
        }
        w.flush()?;
        names.push(name);
    }
    for (name, v) in &outcome.files {
        write_json(&cfg.out.join(name), v)?;
        names.push(name.clone());
    }
    let mut m = envelope(cfg, command, "ok", &names);
    m.insert("result".into(), outcome.result.clone());
    let path = cfg.out.join(format!("{stem}.json"));
    write_json(&path, &Value::Object(m))?;
    Ok(path)
}

pub fn write_failure(cfg: &RunConfig, command: &str, e: &Error) -> std::io::Result<PathBuf> {
    fs::create_dir_all(&cfg.out)?;
    let mut m = envelope(cfg, command, "failed", &[]);
    m.insert("error".into(), error_payload(e));
    let path = cfg.out.join(format!("{}.json", stem(command)));
    write_json(&path, &Value::Object(m))?;
    Ok(path)
}
