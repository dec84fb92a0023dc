//! Scenario files in, CSV/JSON verdict tables out.
//!
//! A scenario is a TOML file naming one experiment kind and its parameter
//! block (see `scenarios/README.md` for the schema). Running it produces a
//! set of [`Table`]s and [`Check`]s. Assertion-class checks decide the exit
//! code; report-class checks only show up in the output.

mod run;
mod scenario;

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

pub use run::run_scenario;
pub use scenario::{load_scenario, parse_scenario, Kind, Scenario};

use crate::exact::{format_rational, Rational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckClass {
    /// A proved inequality; failing it fails the run.
    Assert,
    /// A constant chain or regime boundary; recorded only.
    Report,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub class: CheckClass,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell by row index and column name.
    pub fn cell(&self, row: usize, column: &str) -> Option<&str> {
        Some(self.rows.get(row)?.get(self.column(column)?)?.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub kind: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn check(&mut self, name: impl Into<String>, class: CheckClass, passed: bool) {
        self.checks.push(Check { name: name.into(), class, passed });
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn assertions_pass(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.class == CheckClass::Report || c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.assertions_pass() {
            EXIT_OK
        } else {
            EXIT_ASSERTION
        }
    }
}

/// Human-readable summary: one line per check, then each table.
pub fn render_text(outcome: &Outcome) -> String {
    let mut out = format!("scenario kind {} (seed {})\n", outcome.kind, outcome.seed);
    for c in &outcome.checks {
        let verdict = match (c.class, c.passed) {
            (CheckClass::Assert, true) => "PASS",
            (CheckClass::Assert, false) => "FAIL",
            (CheckClass::Report, true) => "ok",
            (CheckClass::Report, false) => "note",
        };
        let _ = writeln!(out, "  [{verdict:>4}] {}", c.name);
    }
    for t in &outcome.tables {
        let _ = writeln!(out, "\n{} ({} rows)", t.name, t.rows.len());
        let widths: Vec<usize> = (0..t.columns.len())
            .map(|i| {
                t.rows
                    .iter()
                    .map(|r| r[i].len())
                    .chain([t.columns[i].len()])
                    .max()
                    .unwrap_or(0)
                    .min(40)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let _ = writeln!(out, "  {}", line(&t.columns).trim_end());
        for r in t.rows.iter().take(25) {
            let _ = writeln!(out, "  {}", line(r).trim_end());
        }
        if t.rows.len() > 25 {
            let _ = writeln!(out, "  ... {} more rows in {}.csv", t.rows.len() - 25, t.name);
        }
    }
    out
}

/// Writes one CSV per table and `summary.json` into `dir`.
pub fn emit_summary(outcome: &Outcome, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in &outcome.tables {
        std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
    }
    let json = serde_json::to_string_pretty(outcome).expect("plain data serializes");
    std::fs::write(dir.join("summary.json"), json + "\n")
}

pub(crate) fn fmt_rat(r: &Rational) -> String {
    format_rational(r)
}

/// Floats in scientific notation with nine significant digits.
pub(crate) fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.8e}")
    }
}

/// Logarithms and margins with six decimals.
pub(crate) fn fmt_log(x: f64) -> String {
    if x.is_infinite() || x.is_nan() {
        fmt_f(x)
    } else {
        format!("{x:.6}")
    }
}

pub(crate) fn fmt_bool(b: bool) -> String {
    b.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("empty", &["a", "b"]);
        assert_eq!(t.to_csv(), "a,b\n");
    }

    #[test]
    fn cells_with_commas_are_quoted() {
        let mut t = Table::new("t", &["name", "value"]);
        t.push(vec!["x, y".into(), "1/4".into()]);
        assert_eq!(t.to_csv(), "name,value\n\"x, y\",1/4\n");
        assert_eq!(t.cell(0, "value"), Some("1/4"));
    }

    #[test]
    fn report_checks_never_fail_the_run() {
        let mut o = Outcome::default();
        o.check("chain", CheckClass::Report, false);
        assert_eq!(o.exit_code(), EXIT_OK);
        o.check("proved", CheckClass::Assert, false);
        assert_eq!(o.exit_code(), EXIT_ASSERTION);
    }

    #[test]
    fn float_formats_are_explicit() {
        assert_eq!(fmt_f(0.25), "2.50000000e-1");
        assert_eq!(fmt_f(f64::INFINITY), "inf");
        assert_eq!(fmt_log(-1.5), "-1.500000");
    }
}
