//! Machine- and human-readable verification reports.
//!
//! The JSON body is deterministic for a fixed `(instance, suite, seed)`
//! triple; wall-clock timings live in a separate section so reports can be
//! compared byte-for-byte with timings stripped.

use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckResult {
    pub id: String,
    /// What identity the check verifies, in plain words.
    pub anchor: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckResult {
    /// Runs a residual computation, turning errors into failed checks.
    pub fn run(
        id: &str,
        anchor: &str,
        threshold: f64,
        f: impl FnOnce() -> Result<f64, opalg::Error>,
    ) -> Self {
        match f() {
            Ok(residual) => CheckResult {
                id: id.into(),
                anchor: anchor.into(),
                residual,
                threshold,
                pass: residual <= threshold,
                error: None,
            },
            Err(e) => CheckResult {
                id: id.into(),
                anchor: anchor.into(),
                residual: f64::INFINITY,
                threshold,
                pass: false,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteResult {
    pub fn new(name: &str, checks: Vec<CheckResult>) -> Self {
        SuiteResult {
            name: name.into(),
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportBody {
    pub seed: u64,
    pub tolerance_override: Option<f64>,
    pub warnings: Vec<String>,
    pub suites: Vec<SuiteResult>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
    pub suites_ms: Vec<(String, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub v: u32,
    pub body: ReportBody,
    pub timings: Timings,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.body.pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("verification report (seed {})\n", self.body.seed));
        for w in &self.body.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        for suite in &self.body.suites {
            out.push_str(&format!("\nsuite {}\n", suite.name));
            for c in &suite.checks {
                let mark = if c.pass { "PASS" } else { "FAIL" };
                out.push_str(&format!(
                    "  [{mark}] {:<38} residual {:>12.3e}  (<= {:.1e})",
                    c.id, c.residual, c.threshold
                ));
                if let Some(e) = &c.error {
                    out.push_str(&format!("  error: {e}"));
                }
                out.push('\n');
            }
        }
        let total: usize = self.body.suites.iter().map(|s| s.checks.len()).sum();
        let passed: usize = self
            .body
            .suites
            .iter()
            .map(|s| s.checks.iter().filter(|c| c.pass).count())
            .sum();
        out.push_str(&format!(
            "\n{}/{} checks passed in {:.1} ms -> {}\n",
            passed,
            total,
            self.timings.total_ms,
            if self.passed() {
                "OK"
            } else {
                "VIOLATIONS FOUND"
            }
        ));
        out
    }
}
