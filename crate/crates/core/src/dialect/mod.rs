//! Scheduler dialects.
//!
//! A dialect bundles everything one batch scheduler's public command-line
//! interface needs: the submit-script template, command builders for
//! submit/status/cancel, the native-id extraction pattern, and the state
//! code table. The generic batch executor is parameterized by a dialect;
//! adding a scheduler means adding a dialect.

mod tables;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use regex::Regex;

use crate::error::{Error, Result};
use crate::executor::ExecutorConfig;

pub use tables::{lsf_dialect, mock_dialect, pbs_dialect, slurm_dialect};

/// Scheduler-reported job condition, before mapping onto the client state
/// machine. PENDING maps to QUEUED, RUNNING to ACTIVE, DONE resolves to
/// COMPLETED or FAILED by exit code, FAILED_LRM to FAILED, CANCELED_LRM to
/// CANCELED.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterimState {
    Pending,
    Running,
    Done,
    FailedLrm,
    CanceledLrm,
    Unknown,
}

/// How the dialect renders a wall-time request stored in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DurationFormat {
    /// `HH:MM:SS`
    HoursMinutesSeconds,
    /// Whole minutes, rounded up.
    Minutes,
    /// Plain seconds.
    Seconds,
}

impl DurationFormat {
    pub fn render(self, seconds: u64) -> String {
        match self {
            DurationFormat::HoursMinutesSeconds => format!(
                "{:02}:{:02}:{:02}",
                seconds / 3600,
                (seconds % 3600) / 60,
                seconds % 60
            ),
            // Round up: never request less time than asked.
            DurationFormat::Minutes => format!("{}", seconds.div_ceil(60)),
            DurationFormat::Seconds => seconds.to_string(),
        }
    }
}

/// One parsed row of status output, already mapped through the state table.
#[derive(Debug, Clone)]
pub struct StatusRow {
    pub native_id: String,
    pub code: String,
    pub interim: InterimState,
    pub message: Option<String>,
}

type ArgvBuilder1 = Box<dyn Fn(&Path) -> Vec<String> + Send + Sync>;
type ArgvBuilderIds = Box<dyn Fn(&[String]) -> Vec<String> + Send + Sync>;
type ArgvBuilderId = Box<dyn Fn(&str) -> Vec<String> + Send + Sync>;
/// Maps one raw output line to (native_id, state_code, message), or None
/// for non-row lines such as headers.
type RowParser = Box<dyn Fn(&str) -> Option<(String, String, Option<String>)> + Send + Sync>;

pub struct SchedulerDialect {
    pub name: String,
    /// Submit-script template (minimal mustache syntax; see `template`).
    pub submit_template: String,
    pub submit_command: ArgvBuilder1,
    pub native_id_pattern: Regex,
    /// Builds exactly one status command covering all given ids.
    pub status_command: ArgvBuilderIds,
    pub row_parser: RowParser,
    /// Scheduler state code -> interim state. Codes not in the table map to
    /// UNKNOWN.
    pub state_map: BTreeMap<String, InterimState>,
    pub cancel_command: ArgvBuilderId,
    pub duration_format: DurationFormat,
}

impl SchedulerDialect {
    /// Extracts the native id from successful submit output.
    pub fn parse_native_id(&self, submit_stdout: &str) -> Result<String> {
        self.native_id_pattern
            .captures(submit_stdout)
            .and_then(|c| c.get(1))
            .map(|m| m.as_str().trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::NativeIdParse(submit_stdout.to_string()))
    }

    pub fn map_code(&self, code: &str) -> InterimState {
        self.state_map
            .get(code)
            .copied()
            .unwrap_or(InterimState::Unknown)
    }

    /// Parses full status-command output into rows.
    pub fn parse_status_output(&self, output: &str) -> Vec<StatusRow> {
        output
            .lines()
            .filter_map(|line| (self.row_parser)(line))
            .map(|(native_id, code, message)| StatusRow {
                interim: self.map_code(&code),
                native_id,
                code,
                message,
            })
            .collect()
    }
}

/// Whitespace row parser for the `<id> <code> [message]` contract shared by
/// the mock scheduler and plugin command helpers.
pub(crate) fn contract_row_parser() -> RowParser {
    Box::new(|line: &str| {
        let mut parts = line.split_whitespace();
        let id = parts.next()?.to_string();
        let code = parts.next()?.to_string();
        let rest: Vec<&str> = parts.collect();
        let message = if rest.is_empty() {
            None
        } else {
            Some(rest.join(" "))
        };
        Some((id, code, message))
    })
}

/// Built-in dialect by name. The mock dialect resolves its helper binary
/// and spool directory from the environment and the executor config.
pub fn builtin_dialect(name: &str, config: &ExecutorConfig) -> Option<SchedulerDialect> {
    match name {
        "slurm" => Some(slurm_dialect()),
        "pbs" => Some(pbs_dialect()),
        "lsf" => Some(lsf_dialect()),
        "mock" => {
            let program = mocklrm_program();
            let spool = mock_spool_directory(config);
            Some(mock_dialect(&program, &spool))
        }
        _ => None,
    }
}

/// Path of the mock scheduler helper: `PORTAJOB_MOCKLRM` or `mocklrm` on
/// the PATH.
pub fn mocklrm_program() -> Vec<String> {
    match std::env::var("PORTAJOB_MOCKLRM") {
        Ok(p) if !p.is_empty() => vec![p],
        _ => vec!["mocklrm".to_string()],
    }
}

/// Spool directory used by the built-in mock executor:
/// `PORTAJOB_MOCK_SPOOL` or `<work_directory>/mock-spool`.
pub fn mock_spool_directory(config: &ExecutorConfig) -> PathBuf {
    match std::env::var("PORTAJOB_MOCK_SPOOL") {
        Ok(p) if !p.is_empty() => PathBuf::from(p),
        _ => config.work_directory.join("mock-spool"),
    }
}

/// Dialect for an external plugin helper honoring the command contract:
/// `<cmd> submit <script>` prints the native id, `<cmd> status <id>...`
/// prints one `<id> <code> [message]` line per id, `<cmd> cancel <id>`
/// exits 0 on success.
pub fn command_dialect(name: &str, command: &[String]) -> SchedulerDialect {
    let base = command.to_vec();
    let submit_base = base.clone();
    let status_base = base.clone();
    let cancel_base = base;
    SchedulerDialect {
        name: name.to_string(),
        submit_template: tables::mock_template(),
        submit_command: Box::new(move |script| {
            let mut argv = submit_base.clone();
            argv.push("submit".to_string());
            argv.push(script.to_string_lossy().to_string());
            argv
        }),
        native_id_pattern: Regex::new(r"(\S+)").unwrap(),
        status_command: Box::new(move |ids| {
            let mut argv = status_base.clone();
            argv.push("status".to_string());
            argv.extend(ids.iter().cloned());
            argv
        }),
        row_parser: contract_row_parser(),
        state_map: tables::contract_state_map(),
        cancel_command: Box::new(move |id| {
            let mut argv = cancel_base.clone();
            argv.push("cancel".to_string());
            argv.push(id.to_string());
            argv
        }),
        duration_format: DurationFormat::Seconds,
    }
}
