//! Job specs as JSON documents.
//!
//! Every field of the in-memory spec maps one-to-one; unknown keys are
//! rejected so typos fail loudly instead of being ignored.

use std::path::Path;

use crate::error::{Error, Result, Violation};
use crate::spec::{validate_spec, JobSpec};

/// Parses a JSON job spec and validates it.
pub fn parse_spec(text: &str) -> Result<JobSpec> {
    let spec: JobSpec = serde_json::from_str(text)
        .map_err(|e| Error::Other(format!("invalid job spec: {e}")))?;
    let violations = validate_spec(&spec);
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    Ok(spec)
}

/// Loads and validates a JSON job spec file.
pub fn load_spec(path: &Path) -> Result<JobSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Other(format!("{}: {e}", path.display())))?;
    parse_spec(&text)
}

/// Renders a spec back to pretty JSON.
pub fn spec_to_json(spec: &JobSpec) -> Result<String> {
    serde_json::to_string_pretty(spec).map_err(|e| Error::Other(e.to_string()))
}

/// Formats validation violations one per line for terminal display.
pub fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("{}: {}", v.field, v.message))
        .collect::<Vec<_>>()
        .join("\n")
}
