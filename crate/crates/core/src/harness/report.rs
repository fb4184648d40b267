//! Conformance report model.
//!
//! Reports are JSON documents meant to be shared between sites. Because a
//! report can leak site details (paths, environment, free-form command
//! output), [`ConformanceReport::strip`] produces a minimal variant that
//! keeps only pass/fail facts and timings.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TestRecord {
    pub name: String,
    pub passed: bool,
    /// False when the scenario does not apply to this executor; such
    /// records never count against the verdict.
    pub applicable: bool,
    pub duration_s: f64,
    /// Free-form diagnostic output; stripped from minimal reports.
    pub output: String,
    /// Environment facts captured at run time; stripped from minimal
    /// reports.
    pub environment: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConformanceReport {
    /// Operator-chosen site label; stripped from minimal reports.
    pub site: String,
    pub executor: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    /// True once the report has been stripped for upload.
    pub minimal: bool,
    pub tests: Vec<TestRecord>,
}

impl ConformanceReport {
    pub fn new(site: &str, executor: &str, version: &str) -> ConformanceReport {
        ConformanceReport {
            site: site.to_string(),
            executor: executor.to_string(),
            version: version.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .unwrap_or_default()
                .as_secs() as i64,
            minimal: false,
            tests: Vec::new(),
        }
    }

    /// True when every applicable test passed.
    pub fn passed(&self) -> bool {
        self.tests.iter().filter(|t| t.applicable).all(|t| t.passed)
    }

    /// Copy with all site-identifying content removed: the site label,
    /// test output, and captured environments. Names, verdicts, and
    /// timings stay. Idempotent.
    pub fn strip(&self) -> ConformanceReport {
        ConformanceReport {
            site: String::new(),
            minimal: true,
            tests: self
                .tests
                .iter()
                .map(|t| TestRecord {
                    name: t.name.clone(),
                    passed: t.passed,
                    applicable: t.applicable,
                    duration_s: t.duration_s,
                    output: String::new(),
                    environment: BTreeMap::new(),
                })
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Other(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<ConformanceReport> {
        serde_json::from_str(text).map_err(|e| Error::Other(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ConformanceReport> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConformanceReport {
        let mut report = ConformanceReport::new("cluster-a", "mock", "1.0.0");
        report.tests.push(TestRecord {
            name: "submit-complete".to_string(),
            passed: true,
            applicable: true,
            duration_s: 0.25,
            output: "/home/alice/work/j1".to_string(),
            environment: BTreeMap::from([(
                "user".to_string(),
                "alice".to_string(),
            )]),
        });
        report.tests.push(TestRecord {
            name: "bulk-invariant".to_string(),
            passed: false,
            applicable: false,
            duration_s: 0.0,
            output: String::new(),
            environment: BTreeMap::new(),
        });
        report
    }

    #[test]
    fn verdict_ignores_inapplicable_tests() {
        assert!(sample().passed());
    }

    #[test]
    fn strip_removes_site_output_and_environment() {
        let stripped = sample().strip();
        assert!(stripped.minimal);
        assert!(stripped.site.is_empty());
        for t in &stripped.tests {
            assert!(t.output.is_empty());
            assert!(t.environment.is_empty());
        }
        // Facts survive.
        assert_eq!(stripped.executor, "mock");
        assert_eq!(stripped.tests[0].name, "submit-complete");
        assert!(stripped.tests[0].passed);
        assert_eq!(stripped.tests[0].duration_s, 0.25);
    }

    #[test]
    fn strip_is_idempotent() {
        let once = sample().strip();
        assert_eq!(once.strip(), once);
    }

    #[test]
    fn json_round_trip() {
        let report = sample();
        let again = ConformanceReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(again, report);
    }
}
