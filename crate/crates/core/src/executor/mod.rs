//! The executor contract.
//!
//! An executor binds the abstract job model to one execution mechanism: a
//! batch scheduler dialect or plain local process spawning. Multiple
//! executor instances coexist in one process and manage disjoint job sets.

pub mod batch;
pub mod local;
pub mod registry;

use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::job::{Job, StatusCallback};
use crate::launcher::WrapperMode;
use crate::spec::validate_spec;
use crate::state::JobStatus;

/// Per-instance executor configuration.
#[derive(Debug, Clone)]
pub struct ExecutorConfig {
    /// Interval between status poll cycles. Batch dialects default to 5 s,
    /// local and mock to 10 ms.
    pub poll_interval: Duration,
    /// Directory for generated scripts and sidecar files.
    pub work_directory: PathBuf,
    /// Overrides the spec's launcher for every job of this instance.
    pub launcher_override: Option<String>,
    /// Launcher-script wrapping; `None` bypasses the sidecar entirely.
    pub wrapper_mode: WrapperMode,
    /// Timeout applied to each scheduler command invocation.
    pub command_timeout: Duration,
    /// Poll cycles a job may be absent from status output before it is
    /// treated as finished.
    pub missing_tolerance: u32,
    /// Consecutive failed poll cycles before all jobs are failed as
    /// unreachable.
    pub max_consecutive_failures: u32,
}

impl ExecutorConfig {
    /// Defaults appropriate for the named executor.
    pub fn for_executor(name: &str) -> Self {
        let poll_interval = match name {
            "local" | "mock" => Duration::from_millis(10),
            _ => Duration::from_secs(5),
        };
        ExecutorConfig {
            poll_interval,
            work_directory: default_work_directory(),
            launcher_override: None,
            wrapper_mode: WrapperMode::Default,
            command_timeout: Duration::from_secs(60),
            missing_tolerance: 2,
            max_consecutive_failures: 10,
        }
    }
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self::for_executor("local")
    }
}

/// User-scoped temp directory for scripts and sidecar files.
pub fn default_work_directory() -> PathBuf {
    let user = std::env::var("USER").unwrap_or_else(|_| "nouser".to_string());
    std::env::temp_dir().join(format!("portajob-{user}"))
}

/// Binding to one job-execution mechanism. Safe for concurrent
/// submit/cancel/attach from multiple threads.
pub trait JobExecutor: Send + Sync {
    fn name(&self) -> &str;

    fn version(&self) -> &str;

    /// Submits asynchronously: returns as soon as the scheduler accepted
    /// the job, with the native id set and the job in QUEUED. Progress
    /// arrives via callbacks and the poller; this never blocks until job
    /// completion.
    fn submit(&self, job: &Job) -> Result<()>;

    /// Requests cancellation; the terminal CANCELED status arrives via the
    /// normal status path.
    fn cancel(&self, job: &Job) -> Result<()>;

    /// Binds `job` to an already-submitted native job and starts reporting
    /// its state. An unknown native id surfaces as FAILED once polling
    /// gives up on it, not as an immediate error.
    fn attach(&self, job: &Job, native_id: &str) -> Result<()>;

    /// Replaces the status callback; affects only future deliveries.
    fn set_job_status_callback(&self, callback: Option<StatusCallback>);

    /// Runs one poll/reap cycle synchronously. Useful for callers that want
    /// fresh state without waiting for the internal poller.
    fn poll_now(&self) {}
}

/// Shared submit precondition: a spec-carrying, unbound, valid job.
pub(crate) fn check_submittable(job: &Job) -> Result<()> {
    if job.is_bound() {
        return Err(Error::AlreadyBound);
    }
    let spec = job
        .spec()
        .ok_or_else(|| Error::Other("job has no spec to submit".into()))?;
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    Ok(())
}

/// Applies a status change and delivers it through the executor's current
/// callback. Absorbed duplicates produce no delivery.
pub(crate) fn deliver(
    job: &Job,
    status: JobStatus,
    callback_slot: &Mutex<Option<StatusCallback>>,
) {
    match job.apply_status(status) {
        Ok(true) => {
            let cb = callback_slot.lock().unwrap().clone();
            job.flush_deliveries(cb.as_ref());
        }
        Ok(false) => {}
        Err(e) => log::debug!("dropped status update for job {}: {e}", job.id()),
    }
}
