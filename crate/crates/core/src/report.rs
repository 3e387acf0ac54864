//! Machine-readable run reports (JSON, CSV).

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{Field, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub subject: String,
    pub n: Option<i64>,
    pub status: Verdict,
    /// Exact rational `p/q` or `mid±rad`.
    pub residual: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    pub notes: String,
}

impl CheckResult {
    pub fn new(check: &str, subject: &str, n: Option<i64>, status: Verdict, residual: String) -> Self {
        CheckResult { check: check.into(), subject: subject.into(), n, status, residual, tau: None, notes: String::new() }
    }

    pub fn with_tau(mut self, tau: String) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

/// One row of the classification table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassifyRow {
    pub case: String,
    pub l0: String,
    pub l1_claimed: String,
    pub l1_oracle: String,
    pub oracle_mapping: String,
    pub claimed_mapping: String,
    pub claimed_mapping_verdict: String,
    pub shift: String,
    pub parameters: String,
    pub status: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: serde_json::Value,
    pub results: Vec<CheckResult>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<ClassifyRow>>,
}

impl Report {
    /// Results are put in canonical order (subject, n, check) so that output
    /// does not depend on scheduling.
    pub fn new(command: &str, config: serde_json::Value, mut results: Vec<CheckResult>) -> Self {
        results.sort_by(|a, b| (&a.subject, a.n, &a.check).cmp(&(&b.subject, b.n, &b.check)));
        let mut summary = Summary::default();
        for r in &results {
            match r.status {
                Verdict::Pass => summary.passed += 1,
                Verdict::Fail => summary.failed += 1,
                Verdict::Inconclusive => summary.inconclusive += 1,
            }
        }
        Report { command: command.into(), config, results, summary, table: None }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0 && self.summary.inconclusive == 0
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map(|s| s + "\n").map_err(|e| Error::Io(e.to_string()))
    }

    /// The classification table when present, else one row per check.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Io(e.to_string());
        match &self.table {
            Some(rows) => {
                for r in rows {
                    w.serialize(r).map_err(err)?;
                }
            }
            None => {
                w.write_record(["check", "subject", "n", "status", "residual", "tau", "notes"]).map_err(err)?;
                for r in &self.results {
                    w.write_record([
                        r.check.clone(),
                        r.subject.clone(),
                        r.n.map(|n| n.to_string()).unwrap_or_default(),
                        r.status.to_string(),
                        r.residual.clone(),
                        r.tau.clone().unwrap_or_default(),
                        r.notes.clone(),
                    ])
                    .map_err(err)?;
                }
            }
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn scalar_string<F: Field>(v: &F) -> String {
    v.to_scalar().to_string()
}

/// Largest coefficient of a residual polynomial, or `0`.
pub fn poly_residual_string<F: Field>(p: &Polynomial<F>) -> String {
    p.coeffs()
        .iter()
        .filter(|c| !c.is_exact_zero())
        .max_by(|a, b| a.to_f64().abs().total_cmp(&b.to_f64().abs()))
        .map(scalar_string)
        .unwrap_or_else(|| "0".into())
}

/// Largest of several scalar residuals, or `0`.
pub fn max_residual_string<'a, F: Field + 'a>(vals: impl IntoIterator<Item = &'a F>) -> String {
    vals.into_iter()
        .filter(|c| !c.is_exact_zero())
        .max_by(|a, b| a.to_f64().abs().total_cmp(&b.to_f64().abs()))
        .map(scalar_string)
        .unwrap_or_else(|| "0".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_and_summary() {
        let r = Report::new(
            "verify",
            serde_json::json!({}),
            vec![
                CheckResult::new("b", "s2", Some(2), Verdict::Pass, "0".into()),
                CheckResult::new("a", "s1", Some(3), Verdict::Fail, "1/2".into()),
                CheckResult::new("a", "s1", Some(1), Verdict::Inconclusive, "0".into()),
            ],
        );
        let keys: Vec<_> = r.results.iter().map(|c| (c.subject.as_str(), c.n)).collect();
        assert_eq!(keys, vec![("s1", Some(1)), ("s1", Some(3)), ("s2", Some(2))]);
        assert_eq!(r.summary, Summary { passed: 1, failed: 1, inconclusive: 1 });
        assert!(!r.all_passed());
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("check,subject,n,status"));
        assert_eq!(csv.lines().count(), 4);
    }
}
