use std::fmt;

use crate::state::JobState;

/// A single constraint violation found while validating a job spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Name of the offending field, e.g. `executable` or `resources.process_count`.
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid job spec: {}", join_violations(.0))]
    InvalidSpec(Vec<Violation>),

    #[error("inconsistent resources: {node_count} nodes x {processes_per_node} processes/node != {process_count} processes")]
    InconsistentResources {
        node_count: u64,
        processes_per_node: u64,
        process_count: u64,
    },

    #[error("inconsistent resources: {process_count} processes not divisible across {divisor} {unit}")]
    IndivisibleResources {
        process_count: u64,
        divisor: u64,
        unit: &'static str,
    },

    #[error("illegal job state transition: {from} -> {to}")]
    IllegalTransition { from: JobState, to: JobState },

    #[error("timed out waiting for job")]
    Timeout,

    #[error("job is not bound to an executor")]
    Unbound,

    #[error("job is already bound to an executor")]
    AlreadyBound,

    #[error("native id already set")]
    NativeIdAlreadySet,

    #[error("job is already in terminal state {0}")]
    TerminalState(JobState),

    #[error("unknown executor '{name}'; known executors: {}", known.join(", "))]
    UnknownExecutor { name: String, known: Vec<String> },

    #[error("no registered version of executor '{name}' satisfies '{constraint}'")]
    NoMatchingVersion { name: String, constraint: String },

    #[error("unknown launcher '{0}'")]
    UnknownLauncher(String),

    #[error("submit failed: {0}")]
    SubmitFailed(String),

    #[error("cancel failed: {0}")]
    CancelFailed(String),

    #[error("template field '{0}' is missing")]
    TemplateField(String),

    #[error("could not extract native id from submit output: {0:?}")]
    NativeIdParse(String),

    #[error("command timed out: {0}")]
    CommandTimeout(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
