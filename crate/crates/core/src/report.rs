//! Machine-readable verification reports.
//!
//! A [`Report`] collects the outcome of one suite run: one [`CaseReport`]
//! per certificate, each with a verdict, named scalar metrics, and — for
//! every failure — a serialized witness of where the check broke. Reports
//! serialize to JSON (schema `report_v1`, stable field order) and to a
//! long-form CSV with one row per metric, so runs can be diffed and
//! archived byte-for-byte.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Schema tag written into every JSON report.
pub const REPORT_SCHEMA: &str = "report_v1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("case `{0}` failed without a witness")]
    FailWithoutWitness(String),
    #[error("duplicate case name `{0}`")]
    DuplicateCase(String),
}

/// Outcome of a single certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Recorded but never asserted (boundary configurations, probes).
    Diagnostic,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail => write!(f, "fail"),
            Verdict::Diagnostic => write!(f, "diagnostic"),
        }
    }
}

/// A scalar metric: finite values stay numbers, everything else is kept
/// as an explicit tag so the JSON stays valid and the information stays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metric {
    Finite(f64),
    Tagged(String),
}

impl Metric {
    pub fn new(x: f64) -> Metric {
        if x.is_finite() {
            Metric::Finite(x)
        } else if x.is_nan() {
            Metric::Tagged("nan".into())
        } else if x > 0.0 {
            Metric::Tagged("inf".into())
        } else {
            Metric::Tagged("-inf".into())
        }
    }

    /// The numeric value, reconstructing tagged infinities and NaN.
    pub fn value(&self) -> f64 {
        match self {
            Metric::Finite(x) => *x,
            Metric::Tagged(t) => match t.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                _ => f64::NAN,
            },
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Finite(x) => write!(f, "{}", fmt_sig17(*x)),
            Metric::Tagged(t) => write!(f, "{t}"),
        }
    }
}

/// One certificate's outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    pub verdict: Verdict,
    pub metrics: BTreeMap<String, Metric>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<String>,
}

impl CaseReport {
    pub fn new(name: impl Into<String>, verdict: Verdict) -> CaseReport {
        CaseReport {
            name: name.into(),
            verdict,
            metrics: BTreeMap::new(),
            witness: None,
        }
    }

    pub fn pass(name: impl Into<String>) -> CaseReport {
        CaseReport::new(name, Verdict::Pass)
    }

    pub fn fail(name: impl Into<String>, witness: impl Into<String>) -> CaseReport {
        CaseReport::new(name, Verdict::Fail).with_witness(witness)
    }

    pub fn diagnostic(name: impl Into<String>) -> CaseReport {
        CaseReport::new(name, Verdict::Diagnostic)
    }

    pub fn with_metric(mut self, key: impl Into<String>, value: f64) -> CaseReport {
        self.metrics.insert(key.into(), Metric::new(value));
        self
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> CaseReport {
        self.witness = Some(witness.into());
        self
    }
}

/// A full suite run.
///
/// Field order is the serialization order; it never changes within a
/// schema version. `timestamp` (unix seconds) is the only field allowed
/// to differ between two runs with identical configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub suite: String,
    /// Tool version that produced the report.
    pub version: String,
    pub seed: u64,
    pub timestamp: u64,
    /// Configuration echo, key → rendered value.
    pub params: BTreeMap<String, String>,
    pub cases: Vec<CaseReport>,
}

impl Report {
    pub fn new(suite: impl Into<String>, seed: u64) -> Report {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Report {
            schema: REPORT_SCHEMA.into(),
            suite: suite.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            timestamp,
            params: BTreeMap::new(),
            cases: Vec::new(),
        }
    }

    pub fn set_param(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.params.insert(key.into(), value.into());
    }

    pub fn push(&mut self, case: CaseReport) {
        self.cases.push(case);
    }

    /// Sorts cases by name and checks the report invariants: unique case
    /// names, and a witness on every failure.
    pub fn finalize(&mut self) -> Result<(), ReportError> {
        self.cases.sort_by(|a, b| a.name.cmp(&b.name));
        for pair in self.cases.windows(2) {
            if pair[0].name == pair[1].name {
                return Err(ReportError::DuplicateCase(pair[0].name.clone()));
            }
        }
        for case in &self.cases {
            if case.verdict == Verdict::Fail && case.witness.is_none() {
                return Err(ReportError::FailWithoutWitness(case.name.clone()));
            }
        }
        Ok(())
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let mut pass = 0;
        let mut fail = 0;
        let mut diagnostic = 0;
        for c in &self.cases {
            match c.verdict {
                Verdict::Pass => pass += 1,
                Verdict::Fail => fail += 1,
                Verdict::Diagnostic => diagnostic += 1,
            }
        }
        (pass, fail, diagnostic)
    }

    pub fn has_failures(&self) -> bool {
        self.cases.iter().any(|c| c.verdict == Verdict::Fail)
    }

    /// Process exit code contract: 0 exactly when no case failed.
    pub fn exit_code(&self) -> i32 {
        if self.has_failures() {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(src: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(src)
    }

    /// Long-form CSV: one row per (case, metric); cases without metrics
    /// still get one row so no verdict can vanish from the table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,case,verdict,metric,value,witness\n");
        for case in &self.cases {
            let witness = case.witness.as_deref().unwrap_or("");
            let mut row = |metric: &str, value: &str| {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    csv_escape(&self.suite),
                    csv_escape(&case.name),
                    case.verdict,
                    csv_escape(metric),
                    value,
                    csv_escape(witness),
                ));
            };
            if case.metrics.is_empty() {
                row("", "");
            } else {
                for (key, metric) in &case.metrics {
                    row(key, &metric.to_string());
                }
            }
        }
        out
    }
}

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        let mut r = Report::new("demo", 42);
        r.set_param("d", "1");
        r.push(
            CaseReport::pass("zz-last-alphabetically")
                .with_metric("max_rel_err", 3.5e-9)
                .with_metric("spread", f64::INFINITY),
        );
        r.push(
            CaseReport::fail("aa-first", "x=[1.0, 2.0] ratio=nan")
                .with_metric("ratio", f64::NAN),
        );
        r.push(CaseReport::diagnostic("mm-middle").with_metric("drift", 0.125));
        r
    }

    #[test]
    fn json_roundtrip_preserves_everything() {
        let mut r = sample_report();
        r.finalize().unwrap();
        let json = r.to_json();
        let back = Report::from_json(&json).unwrap();
        assert_eq!(back, r);
        assert!(json.contains("\"report_v1\""));
        // Tagged non-finite metrics survive as strings, not as nulls.
        assert!(json.contains("\"inf\""));
        assert!(json.contains("\"nan\""));
    }

    #[test]
    fn finalize_sorts_cases_and_requires_witnesses() {
        let mut r = sample_report();
        r.finalize().unwrap();
        let names: Vec<&str> = r.cases.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["aa-first", "mm-middle", "zz-last-alphabetically"]);

        let mut bad = Report::new("demo", 0);
        bad.push(CaseReport::new("broken", Verdict::Fail));
        assert!(matches!(
            bad.finalize(),
            Err(ReportError::FailWithoutWitness(name)) if name == "broken"
        ));

        let mut dup = Report::new("demo", 0);
        dup.push(CaseReport::pass("same"));
        dup.push(CaseReport::pass("same"));
        assert!(matches!(dup.finalize(), Err(ReportError::DuplicateCase(_))));
    }

    #[test]
    fn exit_code_is_zero_exactly_when_no_case_fails() {
        let mut ok = Report::new("demo", 0);
        ok.push(CaseReport::pass("a"));
        ok.push(CaseReport::diagnostic("b"));
        assert_eq!(ok.exit_code(), 0);
        assert!(!ok.has_failures());

        let mut bad = Report::new("demo", 0);
        bad.push(CaseReport::fail("a", "witness"));
        assert_eq!(bad.exit_code(), 1);
        assert!(bad.has_failures());
    }

    #[test]
    fn csv_is_long_form_with_escaping() {
        let mut r = Report::new("demo", 1);
        r.push(
            CaseReport::fail("needs,escape", "point \"x\" = [0,1]")
                .with_metric("a", 1.0)
                .with_metric("b", 2.0),
        );
        r.push(CaseReport::pass("bare"));
        r.finalize().unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "suite,case,verdict,metric,value,witness");
        // One row per metric plus one for the metric-less case.
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("demo,bare,pass,,,"));
        assert!(lines[2].contains("\"needs,escape\""));
        assert!(lines[2].contains("\"point \"\"x\"\" = [0,1]\""));
        assert!(lines[2].contains(&fmt_sig17(1.0)));
    }

    #[test]
    fn metric_tagging_reconstructs_values() {
        assert_eq!(Metric::new(2.5), Metric::Finite(2.5));
        assert_eq!(Metric::new(f64::INFINITY).value(), f64::INFINITY);
        assert_eq!(Metric::new(f64::NEG_INFINITY).value(), f64::NEG_INFINITY);
        assert!(Metric::new(f64::NAN).value().is_nan());
        // 17-digit rendering round-trips through parse.
        let x = 0.1f64 + 0.2f64;
        let parsed: f64 = fmt_sig17(x).parse().unwrap();
        assert_eq!(parsed, x);
    }
}
