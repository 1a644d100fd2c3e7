//! Numerical instances of inequalities: left side, right side, slack, verdict.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// One evaluated inequality `lhs <= allowed`, where `allowed` is the
/// right-hand side plus whatever grid tolerance the check grants.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub time: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `allowed - lhs`; nonnegative exactly when the row passes.
    pub slack: f64,
    pub pass: bool,
}

impl ReportRow {
    /// Row for `lhs <= allowed`, reporting `rhs` as the bound before tolerance.
    pub fn upper(time: f64, lhs: f64, rhs: f64, allowed: f64) -> Self {
        let slack = allowed - lhs;
        ReportRow { time, lhs, rhs, slack, pass: slack >= 0.0 && lhs.is_finite() }
    }

    /// Row for `lhs >= allowed` (lower bounds), slack `lhs - allowed`.
    pub fn lower(time: f64, lhs: f64, rhs: f64, allowed: f64) -> Self {
        let slack = lhs - allowed;
        ReportRow { time, lhs, rhs, slack, pass: slack >= 0.0 && lhs.is_finite() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub check: String,
    pub rows: Vec<ReportRow>,
    /// Measured auxiliary quantities (fitted constants, ratios) kept for audit.
    pub metrics: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub fn new(check: impl Into<String>) -> Self {
        EstimateReport { check: check.into(), rows: Vec::new(), metrics: BTreeMap::new() }
    }

    pub fn push(&mut self, row: ReportRow) -> &mut Self {
        self.rows.push(row);
        self
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn with_row(mut self, row: ReportRow) -> Self {
        self.rows.push(row);
        self
    }

    /// A report passes when it has rows and all of them pass.
    pub fn pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn worst_slack(&self) -> f64 {
        self.rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min)
    }

    /// Row with the smallest slack, if any.
    pub fn worst(&self) -> Option<&ReportRow> {
        self.rows.iter().min_by(|a, b| a.slack.total_cmp(&b.slack))
    }

    pub const CSV_HEADER: &'static str = "check_name,time,lhs,rhs,slack,pass";

    /// CSV rows `check_name,time,lhs,rhs,slack,pass`, without header.
    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.check,
                fmt(r.time),
                fmt(r.lhs),
                fmt(r.rhs),
                fmt(r.slack),
                r.pass
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.to_csv_rows())
    }
}

pub(crate) fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else if v > 0.0 {
        "inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_does_not_pass() {
        assert!(!EstimateReport::new("x").pass());
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let r = EstimateReport::new("finite_speed")
            .with_row(ReportRow::upper(0.0, 1.0, 2.0, 2.0))
            .with_row(ReportRow::upper(0.5, 3.0, 2.0, 2.5));
        assert!(!r.pass());
        let csv = r.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], EstimateReport::CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("finite_speed,0.0"));
        assert!(lines[2].ends_with(",false"));
        assert_eq!(r.worst().unwrap().time, 0.5);
    }

    #[test]
    fn nonfinite_lhs_fails() {
        assert!(!ReportRow::upper(0.0, f64::NAN, 1.0, 1.0).pass);
        assert!(!ReportRow::lower(0.0, f64::NAN, 1.0, 1.0).pass);
    }
}
