//! Scheduler-independent job descriptions.
//!
//! A [`JobSpec`] says what to run, a [`ResourceSpec`] says on how much
//! hardware, and [`JobAttributes`] carries scheduler-facing metadata such as
//! queue, project, and wall time. None of these types know anything about a
//! particular scheduler; executors translate them.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::{Error, Result, Violation};

/// Description of a single job: executable, arguments, I/O wiring, resources.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JobSpec {
    /// Path or command name of the payload. Must be non-empty.
    pub executable: String,
    pub arguments: Vec<String>,
    /// Working directory for the payload; inherited if unset.
    pub directory: Option<PathBuf>,
    /// Environment entries merged over the inherited environment.
    /// Insertion order is preserved.
    pub environment: IndexMap<String, String>,
    pub stdin_path: Option<PathBuf>,
    pub stdout_path: Option<PathBuf>,
    /// May equal `stdout_path`, in which case the streams are merged.
    pub stderr_path: Option<PathBuf>,
    pub resources: ResourceSpec,
    pub attributes: JobAttributes,
    /// Launcher name ("single", "mpirun", "srun", ...); "single" if unset.
    pub launcher: Option<String>,
    /// Script sourced before the payload; a failure aborts the launch.
    pub pre_launch: Option<PathBuf>,
    /// Script sourced after the payload; its failure cannot mask a payload
    /// failure but flips a zero exit code to failure.
    pub post_launch: Option<PathBuf>,
}

impl JobSpec {
    pub fn new(executable: impl Into<String>) -> Self {
        JobSpec {
            executable: executable.into(),
            ..Default::default()
        }
    }

    /// Convenience for `/bin/sh -c <script>` payloads.
    pub fn shell(script: impl Into<String>) -> Self {
        JobSpec {
            executable: "/bin/sh".to_string(),
            arguments: vec!["-c".to_string(), script.into()],
            ..Default::default()
        }
    }
}

/// Resource requirements. All fields are optional so a spec can be partial;
/// `complete_resources` derives whatever can be derived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResourceSpec {
    /// Schema version; fixed to 1.
    pub version: u32,
    pub node_count: Option<u64>,
    pub process_count: Option<u64>,
    pub processes_per_node: Option<u64>,
    pub cpu_cores_per_process: Option<u64>,
    pub gpu_cores_per_process: Option<u64>,
    pub exclusive_node_use: bool,
}

impl Default for ResourceSpec {
    fn default() -> Self {
        ResourceSpec {
            version: 1,
            node_count: None,
            process_count: None,
            processes_per_node: None,
            cpu_cores_per_process: None,
            gpu_cores_per_process: None,
            exclusive_node_use: false,
        }
    }
}

impl ResourceSpec {
    pub fn with_process_count(process_count: u64) -> Self {
        ResourceSpec {
            process_count: Some(process_count),
            ..Default::default()
        }
    }
}

/// Scheduler-facing job metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JobAttributes {
    /// Requested wall time in seconds. Dialects render their own unit,
    /// rounding up.
    pub duration: Option<u64>,
    pub queue_name: Option<String>,
    /// Accounting/allocation name.
    pub project_name: Option<String>,
    pub reservation_id: Option<String>,
    /// Pass-through attributes keyed `<dialect>.<key>`. Keys for other
    /// dialects are ignored by a given executor, never an error.
    pub custom_attributes: IndexMap<String, String>,
}

/// Checks every invariant of a spec and returns all violations found.
/// An empty list means the spec is valid. Pure: never mutates its input.
pub fn validate_spec(spec: &JobSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if spec.executable.is_empty() {
        out.push(Violation::new("executable", "must be non-empty"));
    }
    for name in spec.environment.keys() {
        if name.is_empty() {
            out.push(Violation::new("environment", "empty variable name"));
        } else if name.contains('=') || name.contains('\0') {
            out.push(Violation::new(
                "environment",
                format!("variable name {name:?} contains '=' or NUL"),
            ));
        }
    }
    validate_resources(&spec.resources, &mut out);
    validate_attributes(&spec.attributes, &mut out);
    out
}

fn validate_resources(r: &ResourceSpec, out: &mut Vec<Violation>) {
    if r.version != 1 {
        out.push(Violation::new(
            "resources.version",
            format!("unsupported version {}; expected 1", r.version),
        ));
    }
    for (field, value) in [
        ("resources.node_count", r.node_count),
        ("resources.process_count", r.process_count),
        ("resources.processes_per_node", r.processes_per_node),
        ("resources.cpu_cores_per_process", r.cpu_cores_per_process),
    ] {
        if value == Some(0) {
            out.push(Violation::new(field, "must be >= 1"));
        }
    }
    if let (Some(n), Some(p), Some(ppn)) =
        (r.node_count, r.process_count, r.processes_per_node)
    {
        if n.checked_mul(ppn) != Some(p) {
            out.push(Violation::new(
                "resources",
                format!("{n} nodes x {ppn} processes/node != {p} processes"),
            ));
        }
    }
}

fn validate_attributes(a: &JobAttributes, out: &mut Vec<Violation>) {
    if a.duration == Some(0) {
        out.push(Violation::new("attributes.duration", "must be > 0"));
    }
    for key in a.custom_attributes.keys() {
        let mut parts = key.splitn(2, '.');
        let dialect = parts.next().unwrap_or("");
        let rest = parts.next().unwrap_or("");
        if dialect.is_empty() || rest.is_empty() {
            out.push(Violation::new(
                "attributes.custom_attributes",
                format!("key {key:?} does not match <dialect>.<key>"),
            ));
        }
    }
}

/// Fills in whichever of node_count/process_count/processes_per_node can be
/// derived from the other two. With fewer than two set, fields are left
/// unset and the dialect applies its own defaults.
pub fn complete_resources(r: &ResourceSpec) -> Result<ResourceSpec> {
    let mut out = r.clone();
    match (r.node_count, r.process_count, r.processes_per_node) {
        (Some(n), Some(p), Some(ppn)) => {
            if n.checked_mul(ppn) != Some(p) {
                return Err(Error::InconsistentResources {
                    node_count: n,
                    processes_per_node: ppn,
                    process_count: p,
                });
            }
        }
        (Some(n), Some(p), None) => {
            if n == 0 || p % n != 0 {
                return Err(Error::IndivisibleResources {
                    process_count: p,
                    divisor: n,
                    unit: "nodes",
                });
            }
            out.processes_per_node = Some(p / n);
        }
        (Some(n), None, Some(ppn)) => {
            out.process_count = Some(n.saturating_mul(ppn));
        }
        (None, Some(p), Some(ppn)) => {
            if ppn == 0 || p % ppn != 0 {
                return Err(Error::IndivisibleResources {
                    process_count: p,
                    divisor: ppn,
                    unit: "processes per node",
                });
            }
            out.node_count = Some(p / ppn);
        }
        _ => {}
    }
    Ok(out)
}
