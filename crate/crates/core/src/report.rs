//! CSV and JSON report emission.
//!
//! CSV files start with `# schema=1` and `# generated=<timestamp>`; all
//! later lines depend only on the configuration and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::Result;

pub const SCHEMA: u32 = 1;

/// Rows of one CSV file, formatted on insertion.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// A single CSV cell.
pub enum Cell<'a> {
    F(f64),
    U(u64),
    S(&'a str),
    B(bool),
}

impl Cell<'_> {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.to_string(),
            Cell::B(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell<'_> {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell<'_> {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<u8> for Cell<'_> {
    fn from(v: u8) -> Self {
        Cell::U(v.into())
    }
}

impl<'a> From<&'a str> for Cell<'a> {
    fn from(v: &'a str) -> Self {
        Cell::S(v)
    }
}

impl From<bool> for Cell<'_> {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

/// Fixed-width scientific notation; `nan`/`inf` spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<Cell<'_>>) {
        assert_eq!(cells.len(), self.header.len(), "row width must match the header");
        self.rows.push(cells.iter().map(Cell::render).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Header line and rows, without the comment lines.
    pub fn body(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn render(&self, generated: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema={SCHEMA}");
        let _ = writeln!(s, "# generated={generated}");
        s + &self.body()
    }
}

/// Lines of a CSV file after the two comment lines.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

/// Summary written next to the CSV files of one command.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub command: String,
    pub schema: u32,
    pub config_digest: String,
    pub config: RunConfig,
    pub generated: String,
    pub wall_clock_s: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    pub summary: Value,
}

/// One named pass/fail flag with the measured value and its bound.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value <= bound }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value >= bound }
    }
}

/// Collects tables and checks for one command and writes them out.
#[derive(Debug)]
pub struct Report {
    command: String,
    tables: Vec<(String, Table)>,
    checks: Vec<Check>,
    summary: Value,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.into(), tables: Vec::new(), checks: Vec::new(), summary: json!({}) }
    }

    pub fn table(&mut self, file: &str, t: Table) {
        self.tables.push((file.into(), t));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn tables(&self) -> &[(String, Table)] {
        &self.tables
    }

    pub fn summary(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).unwrap_or(Value::Null);
        if let Value::Object(m) = &mut self.summary {
            m.insert(key.into(), v);
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Writes `<file>.csv` per table and `<command>.json`; returns the JSON path.
    pub fn write(&self, out: &Path, cfg: &RunConfig, wall_clock_s: f64) -> Result<PathBuf> {
        std::fs::create_dir_all(out)?;
        let generated = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        let mut files = Vec::new();
        for (name, t) in &self.tables {
            let file = format!("{name}.csv");
            std::fs::write(out.join(&file), t.render(&generated))?;
            files.push(file);
        }
        let report = AuditReport {
            command: self.command.clone(),
            schema: SCHEMA,
            config_digest: cfg.digest(),
            config: cfg.clone(),
            generated,
            wall_clock_s,
            pass: self.pass(),
            checks: self.checks.clone(),
            files,
            summary: self.summary.clone(),
        };
        let path = out.join(format!("{}.json", self.command));
        let text = serde_json::to_string_pretty(&report).map_err(|e| std::io::Error::other(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["s", "ratio", "ok"]);
        t.push(vec![8.0.into(), 0.5.into(), true.into()]);
        t.push(vec![16.0.into(), f64::INFINITY.into(), false.into()]);
        let text = t.render("2000-01-01T00:00:00Z");
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema=1");
        assert!(lines[1].starts_with("# generated="));
        assert_eq!(lines[2], "s,ratio,ok");
        assert_eq!(lines[3], "8.000000000000e0,5.000000000000e-1,true");
        assert_eq!(lines[4], "1.600000000000e1,inf,false");
        assert_eq!(csv_body(&text), t.body());
    }

    #[test]
    fn json_records_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("demo");
        r.check(Check::at_most("spread", 2.0, 5.0));
        r.summary("note", "x");
        let path = r.write(dir.path(), &RunConfig::default(), 0.1).unwrap();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(v["config"]["grid"]["n2"], 40);
        assert_eq!(v["config"]["weights"]["m"], 2.0);
        assert_eq!(v["pass"], true);
        assert_eq!(v["config_digest"].as_str().unwrap().len(), 64);
    }
}
