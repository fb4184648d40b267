//! Generic batch executor, parameterized by a scheduler dialect.
//!
//! Submission renders two scripts into the work directory — the launcher
//! script (`<id>.launch`, with sidecar exit-code capture) and the submit
//! script (`<id>.job`, scheduler directives plus an exec of the launcher
//! script) — then runs the dialect's submit command and parses the native
//! id from its output.
//!
//! Status is polled in bulk: each cycle issues exactly one status command
//! covering every tracked native id, regardless of job count. Jobs absent
//! from the output (or reported with an unrecognized code) are tolerated
//! for `missing_tolerance` consecutive cycles, then resolved from the
//! sidecar file or failed as lost. `max_consecutive_failures` failed
//! cycles in a row fail every tracked job as unreachable.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, Weak};

use crate::dialect::{InterimState, SchedulerDialect, StatusRow};
use crate::error::{Error, Result};
use crate::executor::{check_submittable, deliver, ExecutorConfig, JobExecutor};
use crate::job::{Job, StatusCallback};
use crate::launcher::render_launcher_script;
use crate::spec::{complete_resources, JobSpec};
use crate::state::{JobState, JobStatus};
use crate::template::{render, Context, TValue};
use crate::util::{run_command, sh_quote};

/// Renders the dialect's submit script for a job. `spec` should have
/// completed resources; `launcher_script` is the path the script will
/// exec.
pub fn render_submit_script(
    spec: &JobSpec,
    dialect: &SchedulerDialect,
    launcher_script: &PathBuf,
) -> Result<String> {
    let mut ctx = Context::new();
    let mut put = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            ctx.insert(key.to_string(), TValue::Str(v));
        }
    };

    let attrs = &spec.attributes;
    put("queue", attrs.queue_name.clone());
    put("project", attrs.project_name.clone());
    put("reservation", attrs.reservation_id.clone());
    put(
        "duration",
        attrs.duration.map(|s| dialect.duration_format.render(s)),
    );

    let res = &spec.resources;
    put("node_count", res.node_count.map(|n| n.to_string()));
    put("process_count", res.process_count.map(|n| n.to_string()));
    put(
        "processes_per_node",
        res.processes_per_node.map(|n| n.to_string()),
    );
    put(
        "cpu_cores_per_process",
        res.cpu_cores_per_process.map(|n| n.to_string()),
    );
    put(
        "gpu_cores_per_process",
        res.gpu_cores_per_process.map(|n| n.to_string()),
    );

    put(
        "stdout_path",
        spec.stdout_path.as_ref().map(|p| p.to_string_lossy().to_string()),
    );
    put(
        "stderr_path",
        spec.stderr_path.as_ref().map(|p| p.to_string_lossy().to_string()),
    );
    put(
        "directory",
        spec.directory
            .as_ref()
            .map(|p| sh_quote(&p.to_string_lossy())),
    );
    put(
        "launcher_script",
        Some(sh_quote(&launcher_script.to_string_lossy())),
    );

    if res.exclusive_node_use {
        ctx.insert("exclusive".to_string(), TValue::Bool(true));
    }

    // Custom attributes are namespaced: only `<dialect>.`-prefixed keys
    // reach this scheduler, with the prefix stripped.
    let prefix = format!("{}.", dialect.name);
    let custom: Vec<Context> = attrs
        .custom_attributes
        .iter()
        .filter_map(|(k, v)| {
            k.strip_prefix(&prefix).map(|key| {
                Context::from([
                    ("key".to_string(), TValue::Str(key.to_string())),
                    ("value".to_string(), TValue::Str(v.clone())),
                ])
            })
        })
        .collect();
    if !custom.is_empty() {
        ctx.insert("custom".to_string(), TValue::List(custom));
    }

    let env: Vec<Context> = spec
        .environment
        .iter()
        .map(|(name, value)| {
            Context::from([
                ("name".to_string(), TValue::Str(name.clone())),
                ("value".to_string(), TValue::Str(sh_quote(value))),
            ])
        })
        .collect();
    if !env.is_empty() {
        ctx.insert("env".to_string(), TValue::List(env));
    }

    render(&dialect.submit_template, &ctx)
}

struct Tracked {
    job: Job,
    /// Consecutive poll cycles without a usable status row.
    missing: u32,
    last_message: Option<String>,
}

struct BatchInner {
    name: String,
    dialect: SchedulerDialect,
    config: ExecutorConfig,
    callback: Mutex<Option<StatusCallback>>,
    jobs: Mutex<BTreeMap<String, Tracked>>,
    fail_streak: Mutex<u32>,
}

pub struct BatchExecutor {
    inner: Arc<BatchInner>,
}

impl BatchExecutor {
    /// Executor with a background poll thread at `config.poll_interval`.
    pub fn new(name: &str, dialect: SchedulerDialect, config: ExecutorConfig) -> BatchExecutor {
        let ex = Self::new_manual(name, dialect, config);
        let weak: Weak<BatchInner> = Arc::downgrade(&ex.inner);
        let interval = ex.inner.config.poll_interval;
        std::thread::spawn(move || loop {
            std::thread::sleep(interval);
            match weak.upgrade() {
                Some(inner) => poll_once(&inner),
                None => break,
            }
        });
        ex
    }

    /// Executor without a poll thread; the caller drives it with
    /// [`JobExecutor::poll_now`]. Used where poll cycles must be counted
    /// exactly.
    pub fn new_manual(
        name: &str,
        dialect: SchedulerDialect,
        config: ExecutorConfig,
    ) -> BatchExecutor {
        BatchExecutor {
            inner: Arc::new(BatchInner {
                name: name.to_string(),
                dialect,
                config,
                callback: Mutex::new(None),
                jobs: Mutex::new(BTreeMap::new()),
                fail_streak: Mutex::new(0),
            }),
        }
    }

    fn track(&self, native_id: &str, job: &Job) {
        self.inner.jobs.lock().unwrap().insert(
            native_id.to_string(),
            Tracked {
                job: job.clone(),
                missing: 0,
                last_message: None,
            },
        );
    }
}

impl JobExecutor for BatchExecutor {
    fn name(&self) -> &str {
        &self.inner.name
    }

    fn version(&self) -> &str {
        "1.0.0"
    }

    fn submit(&self, job: &Job) -> Result<()> {
        check_submittable(job)?;
        job.bind(self.name())?;
        match self.do_submit(job) {
            Ok(native_id) => {
                job.set_native_id(&native_id)?;
                deliver(job, JobStatus::new(JobState::Queued), &self.inner.callback);
                self.track(&native_id, job);
                Ok(())
            }
            Err(e) => {
                let status =
                    JobStatus::new(JobState::Failed).with_message(e.to_string());
                deliver(job, status, &self.inner.callback);
                Err(e)
            }
        }
    }

    fn cancel(&self, job: &Job) -> Result<()> {
        if job.state().is_final() {
            return Err(Error::CancelFailed(format!(
                "job {} already completed",
                job.id()
            )));
        }
        let native_id = job.native_id().ok_or(Error::Unbound)?;
        job.request_cancel();
        let argv = (self.inner.dialect.cancel_command)(&native_id);
        let out = run_command(&argv, self.inner.config.command_timeout)
            .map_err(|e| Error::CancelFailed(e.to_string()))?;
        if out.success() {
            return Ok(());
        }
        // Losing the race against completion is not an error worth
        // surfacing: the terminal state arrives through polling either way.
        let text = format!("{}{}", out.stdout, out.stderr);
        if text.contains("already completed") {
            return Ok(());
        }
        Err(Error::CancelFailed(text.trim().to_string()))
    }

    fn attach(&self, job: &Job, native_id: &str) -> Result<()> {
        if job.is_bound() {
            return Err(Error::AlreadyBound);
        }
        job.bind(self.name())?;
        job.set_native_id(native_id)?;
        deliver(job, JobStatus::new(JobState::Queued), &self.inner.callback);
        self.track(native_id, job);
        Ok(())
    }

    fn set_job_status_callback(&self, callback: Option<StatusCallback>) {
        *self.inner.callback.lock().unwrap() = callback;
    }

    fn poll_now(&self) {
        poll_once(&self.inner);
    }
}

impl BatchExecutor {
    /// Writes both scripts and runs the submit command; returns the native
    /// id on success.
    fn do_submit(&self, job: &Job) -> Result<String> {
        let config = &self.inner.config;
        fs::create_dir_all(&config.work_directory)?;
        let mut spec = job.spec().expect("checked by caller").clone();
        spec.resources = complete_resources(&spec.resources)?;

        let sidecar = config.work_directory.join(format!("{}.ec", job.id()));
        let launcher_path = config
            .work_directory
            .join(format!("{}.launch", job.id()));
        let launcher_script = render_launcher_script(
            &spec,
            &sidecar,
            config.wrapper_mode,
            config.launcher_override.as_deref(),
        )?;
        fs::write(&launcher_path, launcher_script)?;

        let submit_path = config.work_directory.join(format!("{}.job", job.id()));
        let submit_script =
            render_submit_script(&spec, &self.inner.dialect, &launcher_path)?;
        fs::write(&submit_path, submit_script)?;

        let argv = (self.inner.dialect.submit_command)(&submit_path);
        let out = run_command(&argv, config.command_timeout)
            .map_err(|e| Error::SubmitFailed(e.to_string()))?;
        if !out.success() {
            let text = format!("{}{}", out.stdout, out.stderr);
            return Err(Error::SubmitFailed(text.trim().to_string()));
        }
        self.inner.dialect.parse_native_id(&out.stdout)
    }
}

/// Delivers `status`, synthesizing any skipped intermediate states so the
/// job walks only legal edges (e.g. a job first seen finishing passes
/// through QUEUED and ACTIVE).
fn deliver_via(job: &Job, status: JobStatus, callback: &Mutex<Option<StatusCallback>>) {
    loop {
        let current = job.state();
        if current == status.state
            || current.is_final()
            || current.can_transition_to(status.state)
        {
            break;
        }
        let next = match current {
            JobState::New => JobState::Queued,
            JobState::Queued => JobState::Active,
            _ => break,
        };
        deliver(job, JobStatus::new(next), callback);
    }
    deliver(job, status, callback);
}

fn read_sidecar(inner: &BatchInner, job: &Job) -> Option<i32> {
    let path = inner
        .config
        .work_directory
        .join(format!("{}.ec", job.id()));
    let text = fs::read_to_string(&path).ok()?;
    match text.trim().parse() {
        Ok(code) => Some(code),
        Err(_) => {
            log::warn!(
                "unparseable exit-code file {}: {:?}",
                path.display(),
                text.trim()
            );
            None
        }
    }
}

/// Exit code for a finishing job: sidecar first, then the scheduler's
/// status message if it is a bare integer.
fn resolve_exit_code(inner: &BatchInner, job: &Job, message: Option<&str>) -> Option<i32> {
    read_sidecar(inner, job).or_else(|| message?.trim().parse().ok())
}

fn finishing_status(
    inner: &BatchInner,
    job: &Job,
    interim: InterimState,
    message: Option<&str>,
) -> JobStatus {
    let code = resolve_exit_code(inner, job, message);
    let state = match interim {
        // DONE means the scheduler saw a normal finish; the payload's own
        // code still decides success.
        InterimState::Done => {
            if code.unwrap_or(0) == 0 {
                JobState::Completed
            } else {
                JobState::Failed
            }
        }
        InterimState::CanceledLrm => JobState::Canceled,
        _ => JobState::Failed,
    };
    let mut status = JobStatus::new(state);
    if let Some(code) = code {
        status = status.with_exit_code(code);
    }
    if let Some(message) = message {
        if Some(message.trim()) != code.map(|c| c.to_string()).as_deref() {
            status = status.with_message(message.trim().to_string());
        }
    }
    status
}

fn fail_all(inner: &BatchInner, reason: &str) {
    let jobs: Vec<Job> = {
        let mut map = inner.jobs.lock().unwrap();
        let jobs = map.values().map(|t| t.job.clone()).collect();
        map.clear();
        jobs
    };
    for job in jobs {
        let status = JobStatus::new(JobState::Failed).with_message(reason.to_string());
        deliver_via(&job, status, &inner.callback);
    }
}

fn poll_once(inner: &BatchInner) {
    let snapshot: Vec<(String, Job)> = inner
        .jobs
        .lock()
        .unwrap()
        .iter()
        .map(|(id, t)| (id.clone(), t.job.clone()))
        .collect();
    if snapshot.is_empty() {
        return;
    }

    let ids: Vec<String> = snapshot.iter().map(|(id, _)| id.clone()).collect();
    let argv = (inner.dialect.status_command)(&ids);
    let rows: Vec<StatusRow> = match run_command(&argv, inner.config.command_timeout)
    {
        Ok(out) => {
            *inner.fail_streak.lock().unwrap() = 0;
            inner.dialect.parse_status_output(&out.stdout)
        }
        Err(e) => {
            let streak = {
                let mut s = inner.fail_streak.lock().unwrap();
                *s += 1;
                *s
            };
            log::warn!("status poll failed ({streak} consecutive): {e}");
            if streak >= inner.config.max_consecutive_failures {
                fail_all(inner, &format!("scheduler unreachable: {e}"));
                *inner.fail_streak.lock().unwrap() = 0;
            }
            return;
        }
    };

    let mut deliveries: Vec<(Job, JobStatus)> = Vec::new();
    {
        let mut map = inner.jobs.lock().unwrap();
        for (native_id, job) in &snapshot {
            let Some(tracked) = map.get_mut(native_id) else {
                continue;
            };
            let row = rows
                .iter()
                .find(|r| &r.native_id == native_id)
                .filter(|r| r.interim != InterimState::Unknown);
            match row {
                Some(row) => {
                    tracked.missing = 0;
                    tracked.last_message = row.message.clone();
                    let status = match row.interim {
                        InterimState::Pending => JobStatus::new(JobState::Queued),
                        InterimState::Running => JobStatus::new(JobState::Active),
                        _ => finishing_status(
                            inner,
                            job,
                            row.interim,
                            row.message.as_deref(),
                        ),
                    };
                    deliveries.push((job.clone(), status));
                }
                None => {
                    tracked.missing += 1;
                    if tracked.missing >= inner.config.missing_tolerance {
                        // Gone from the scheduler: the sidecar is the last
                        // word, and a cancel request explains the absence.
                        let status = match read_sidecar(inner, job) {
                            Some(0) => JobStatus::new(JobState::Completed)
                                .with_exit_code(0),
                            Some(code) => JobStatus::new(JobState::Failed)
                                .with_exit_code(code),
                            None if job.cancel_requested() => {
                                JobStatus::new(JobState::Canceled)
                            }
                            None => JobStatus::new(JobState::Failed)
                                .with_message("lost by scheduler".to_string()),
                        };
                        deliveries.push((job.clone(), status));
                    }
                }
            }
        }
    }

    // Deliveries run outside the tracking lock so callbacks can re-enter
    // the executor.
    for (job, status) in &deliveries {
        deliver_via(job, status.clone(), &inner.callback);
    }

    let mut map = inner.jobs.lock().unwrap();
    map.retain(|_, t| !t.job.state().is_final());
}
