//! Report rows and their CSV/JSON persistence.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_HEADER: &str = "config_hash,observable,value,target,tolerance,pass,runtime_ms";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Recorded diagnostic; carries no pass/fail claim.
    Info,
    /// Not executed; the note says why.
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
            Status::Skipped => "skipped",
        })
    }
}

/// How `value` is compared with `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value - target| <= tolerance`
    Near,
    /// `value <= target + tolerance`
    AtMost,
    /// `value >= target - tolerance`
    AtLeast,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub config_hash: String,
    pub observable: String,
    #[serde(with = "nan_as_null")]
    pub value: f64,
    #[serde(with = "nan_as_null")]
    pub target: f64,
    #[serde(with = "nan_as_null")]
    pub tolerance: f64,
    pub comparison: Comparison,
    pub status: Status,
    pub runtime_ms: u64,
    /// Where the target or slack comes from, or why the row was skipped.
    #[serde(default)]
    pub note: String,
}

impl ReportRow {
    fn judged(hash: &str, name: &str, value: f64, target: f64, tol: f64, cmp: Comparison) -> Self {
        let ok = match cmp {
            Comparison::Near => (value - target).abs() <= tol,
            Comparison::AtMost => value <= target + tol,
            Comparison::AtLeast => value >= target - tol,
            Comparison::None => true,
        };
        Self {
            config_hash: hash.to_string(),
            observable: name.to_string(),
            value,
            target,
            tolerance: tol,
            comparison: cmp,
            status: if cmp == Comparison::None {
                Status::Info
            } else if ok {
                Status::Pass
            } else {
                Status::Fail
            },
            runtime_ms: 0,
            note: String::new(),
        }
    }

    pub fn near(hash: &str, name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self::judged(hash, name, value, target, tol, Comparison::Near)
    }

    pub fn at_most(hash: &str, name: &str, value: f64, bound: f64) -> Self {
        Self::judged(hash, name, value, bound, 0.0, Comparison::AtMost)
    }

    pub fn at_least(hash: &str, name: &str, value: f64, bound: f64) -> Self {
        Self::judged(hash, name, value, bound, 0.0, Comparison::AtLeast)
    }

    pub fn info(hash: &str, name: &str, value: f64) -> Self {
        Self::judged(hash, name, value, f64::NAN, f64::NAN, Comparison::None)
    }

    pub fn skipped(hash: &str, name: &str, reason: impl Into<String>) -> Self {
        let mut r = Self::judged(hash, name, f64::NAN, f64::NAN, f64::NAN, Comparison::None);
        r.status = Status::Skipped;
        r.note = reason.into();
        r
    }

    /// A failed row for a check that could not be evaluated.
    pub fn failed(hash: &str, name: &str, reason: impl Into<String>) -> Self {
        let mut r = Self::skipped(hash, name, reason);
        r.status = Status::Fail;
        r
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn with_runtime(mut self, ms: u64) -> Self {
        self.runtime_ms = ms;
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.config_hash,
            self.observable,
            self.value,
            self.target,
            self.tolerance,
            self.status,
            self.runtime_ms
        )
    }
}

// JSON has no NaN; absent numbers round-trip through null.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// `true` iff no row failed; skipped and informational rows do not count.
pub fn all_passed(rows: &[ReportRow]) -> bool {
    rows.iter().all(ReportRow::passed)
}

/// Runs `f`, stamping its wall time on every row it returns.
pub fn timed(f: impl FnOnce() -> Vec<ReportRow>) -> Vec<ReportRow> {
    let t = Instant::now();
    let rows = f();
    let ms = t.elapsed().as_millis() as u64;
    rows.into_iter().map(|r| r.with_runtime(ms)).collect()
}

pub fn write_csv<W: Write>(rows: &[ReportRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Writes `report.csv` and `report.json` into `dir`.
pub fn persist_report(rows: &[ReportRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(rows, std::fs::File::create(dir.join("report.csv"))?)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(rows)?)?;
    Ok(())
}

pub fn load_report(dir: &Path) -> Result<Vec<ReportRow>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(
        dir.join("report.json"),
    )?)?)
}

/// A plot-ready numeric table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::fs::File::create(dir.join(format!("{}.csv", self.name)))?;
        writeln!(f, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert_eq!(
            ReportRow::near("h", "x", 1.0, 1.05, 0.1).status,
            Status::Pass
        );
        assert_eq!(
            ReportRow::near("h", "x", 1.0, 1.2, 0.1).status,
            Status::Fail
        );
        assert_eq!(
            ReportRow::at_most("h", "x", 1e-13, 1e-12).status,
            Status::Pass
        );
        assert_eq!(
            ReportRow::at_least("h", "x", -1.0, 0.0).status,
            Status::Fail
        );
        let rows = vec![
            ReportRow::info("h", "x", 3.0),
            ReportRow::skipped("h", "y", "no bound state"),
        ];
        assert!(all_passed(&rows));
    }

    #[test]
    fn persisted_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            ReportRow::near("abc", "energy", 1.0, 1.0, 1e-9).with_runtime(4),
            ReportRow::at_most("abc", "residual", 2e-13, 1e-12),
            ReportRow::skipped("abc", "decay", "unbound"),
        ];
        persist_report(&rows, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), rows.len() + 1);
        assert!(lines[1].ends_with(",pass,4"));
        let back = load_report(dir.path()).unwrap();
        assert_eq!(back.len(), rows.len());
        assert_eq!(back[1], rows[1]);
    }
}
