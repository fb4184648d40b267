//! Local executor: runs jobs as direct child processes.
//!
//! Each submitted job becomes a launcher-script invocation in its own
//! process group. A reaper thread polls children at the configured
//! interval, resolves exit codes (sidecar file first, OS status second),
//! and delivers terminal statuses. Attach works by pid: liveness is probed
//! with signal 0 and the exit code is recovered from the sidecar.

use std::fs::{self, File};
use std::os::unix::process::CommandExt;
use std::os::unix::process::ExitStatusExt;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::{Arc, Mutex, Weak};

use crate::error::{Error, Result};
use crate::executor::{check_submittable, deliver, ExecutorConfig, JobExecutor};
use crate::job::{Job, StatusCallback};
use crate::launcher::{get_launch_command, render_launcher_script, WrapperMode};
use crate::spec::complete_resources;
use crate::state::{JobState, JobStatus};

enum ProcessHandle {
    /// Our own child; reaped with `try_wait` so no zombies accumulate.
    Child(Child),
    /// A foreign process we attached to; probed with signal 0.
    Pid(i32),
}

struct Tracked {
    job: Job,
    handle: ProcessHandle,
    sidecar: PathBuf,
}

struct LocalInner {
    config: ExecutorConfig,
    callback: Mutex<Option<StatusCallback>>,
    tracked: Mutex<Vec<Tracked>>,
}

pub struct LocalExecutor {
    inner: Arc<LocalInner>,
}

impl LocalExecutor {
    pub fn new(config: ExecutorConfig) -> LocalExecutor {
        let inner = Arc::new(LocalInner {
            config,
            callback: Mutex::new(None),
            tracked: Mutex::new(Vec::new()),
        });
        let weak: Weak<LocalInner> = Arc::downgrade(&inner);
        let interval = inner.config.poll_interval;
        std::thread::spawn(move || loop {
            std::thread::sleep(interval);
            match weak.upgrade() {
                Some(inner) => reap_once(&inner),
                None => break,
            }
        });
        LocalExecutor { inner }
    }

    fn sidecar_path(&self, job_id: &str) -> PathBuf {
        self.inner.config.work_directory.join(format!("{job_id}.ec"))
    }

    fn spawn_job(&self, job: &Job) -> Result<Child> {
        let config = &self.inner.config;
        fs::create_dir_all(&config.work_directory)?;
        let spec = job.spec().expect("checked by caller").clone();
        let mut spec = spec;
        spec.resources = complete_resources(&spec.resources)?;
        let launcher_override = config.launcher_override.as_deref();

        let mut cmd = if config.wrapper_mode == WrapperMode::None {
            // Direct spawn: no script, no sidecar; redirections are wired
            // onto the child's descriptors.
            let argv = get_launch_command(&spec, launcher_override)?;
            let mut cmd = Command::new(&argv[0]);
            cmd.args(&argv[1..]);
            cmd.stdin(match &spec.stdin_path {
                Some(p) => Stdio::from(File::open(p)?),
                None => Stdio::null(),
            });
            cmd.stdout(match &spec.stdout_path {
                Some(p) => Stdio::from(File::create(p)?),
                None => Stdio::null(),
            });
            cmd.stderr(match (&spec.stdout_path, &spec.stderr_path) {
                (Some(o), Some(e)) if o == e => {
                    Stdio::from(File::options().append(true).open(e)?)
                }
                (_, Some(e)) => Stdio::from(File::create(e)?),
                _ => Stdio::null(),
            });
            cmd
        } else {
            let sidecar = self.sidecar_path(job.id());
            let script = render_launcher_script(
                &spec,
                &sidecar,
                config.wrapper_mode,
                launcher_override,
            )?;
            let script_path = config
                .work_directory
                .join(format!("{}.launch", job.id()));
            fs::write(&script_path, script)?;
            let mut cmd = Command::new("/bin/sh");
            cmd.arg(&script_path);
            cmd.stdin(Stdio::null());
            cmd.stdout(Stdio::null());
            cmd.stderr(Stdio::null());
            cmd
        };

        cmd.envs(spec.environment.iter().map(|(k, v)| (k.clone(), v.clone())));
        if let Some(dir) = &spec.directory {
            cmd.current_dir(dir);
        }
        // Own process group, so cancel can signal the whole job tree.
        cmd.process_group(0);
        cmd.spawn().map_err(|e| Error::SubmitFailed(e.to_string()))
    }
}

impl JobExecutor for LocalExecutor {
    fn name(&self) -> &str {
        "local"
    }

    fn version(&self) -> &str {
        "1.0.0"
    }

    fn submit(&self, job: &Job) -> Result<()> {
        check_submittable(job)?;
        job.bind(self.name())?;
        match self.spawn_job(job) {
            Ok(child) => {
                let pid = child.id() as i32;
                job.set_native_id(&pid.to_string())?;
                deliver(job, JobStatus::new(JobState::Queued), &self.inner.callback);
                // A spawned process is already running; QUEUED exists only
                // transiently for uniformity with batch executors.
                deliver(job, JobStatus::new(JobState::Active), &self.inner.callback);
                self.inner.tracked.lock().unwrap().push(Tracked {
                    job: job.clone(),
                    handle: ProcessHandle::Child(child),
                    sidecar: self.sidecar_path(job.id()),
                });
                Ok(())
            }
            Err(e) => {
                let status = JobStatus::new(JobState::Failed)
                    .with_message(e.to_string());
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
        let pid: i32 = job
            .native_id()
            .ok_or(Error::Unbound)?
            .parse()
            .map_err(|_| Error::CancelFailed("non-numeric pid".into()))?;
        job.request_cancel();
        // Persist the cancel so a later process attaching via the handle
        // file reports CANCELED rather than a generic failure.
        let _ = fs::write(cancel_marker(&self.sidecar_path(job.id())), "");
        unsafe {
            libc::killpg(pid, libc::SIGTERM);
        }
        Ok(())
    }

    fn attach(&self, job: &Job, native_id: &str) -> Result<()> {
        if job.is_bound() {
            return Err(Error::AlreadyBound);
        }
        let pid: i32 = native_id
            .parse()
            .map_err(|_| Error::Other(format!("invalid pid '{native_id}'")))?;
        job.bind(self.name())?;
        job.set_native_id(native_id)?;
        deliver(job, JobStatus::new(JobState::Queued), &self.inner.callback);
        let sidecar = self.sidecar_path(job.id());
        let alive = unsafe { libc::kill(pid, 0) } == 0;
        if alive {
            deliver(job, JobStatus::new(JobState::Active), &self.inner.callback);
            self.inner.tracked.lock().unwrap().push(Tracked {
                job: job.clone(),
                handle: ProcessHandle::Pid(pid),
                sidecar,
            });
        } else {
            // Already finished: walk the remaining legal edges before the
            // terminal status resolved from the sidecar.
            deliver(job, JobStatus::new(JobState::Active), &self.inner.callback);
            let status = finishing_status(job, &sidecar, None);
            deliver(job, status, &self.inner.callback);
        }
        Ok(())
    }

    fn set_job_status_callback(&self, callback: Option<StatusCallback>) {
        *self.inner.callback.lock().unwrap() = callback;
    }

    fn poll_now(&self) {
        reap_once(&self.inner);
    }
}

fn read_sidecar(path: &PathBuf) -> Option<i32> {
    fs::read_to_string(path).ok()?.trim().parse().ok()
}

/// On-disk record that `cancel` was requested, surviving client restarts.
fn cancel_marker(sidecar: &std::path::Path) -> PathBuf {
    sidecar.with_extension("canceled")
}

/// Terminal status for a finished job: canceled if requested, otherwise
/// exit-code driven. The sidecar code wins over the OS status because the
/// OS sees only the wrapper shell.
fn finishing_status(
    job: &Job,
    sidecar: &std::path::Path,
    os: Option<(Option<i32>, Option<i32>)>,
) -> JobStatus {
    let sidecar_code = read_sidecar(&sidecar.to_path_buf());
    if job.cancel_requested() || cancel_marker(sidecar).exists() {
        let mut status = JobStatus::new(JobState::Canceled);
        if let Some(code) = sidecar_code {
            status = status.with_exit_code(code);
        }
        return status;
    }
    let (code, message) = match sidecar_code {
        Some(code) => (Some(code), None),
        None => match os {
            Some((Some(code), _)) => (Some(code), None),
            Some((None, Some(signal))) => (
                Some(128 + signal),
                Some(format!("terminated by signal {signal}")),
            ),
            _ => (None, Some("exit code unavailable".to_string())),
        },
    };
    let state = if code == Some(0) {
        JobState::Completed
    } else {
        JobState::Failed
    };
    let mut status = JobStatus::new(state);
    if let Some(code) = code {
        status = status.with_exit_code(code);
    }
    if let Some(message) = message {
        status = status.with_message(message);
    }
    status
}

fn reap_once(inner: &LocalInner) {
    let mut finished: Vec<(Job, JobStatus)> = Vec::new();
    {
        let mut tracked = inner.tracked.lock().unwrap();
        tracked.retain_mut(|t| {
            let outcome = match &mut t.handle {
                ProcessHandle::Child(child) => match child.try_wait() {
                    Ok(Some(status)) => Some(Some((
                        status.code(),
                        status.signal(),
                    ))),
                    Ok(None) => None,
                    Err(_) => Some(None),
                },
                ProcessHandle::Pid(pid) => {
                    let alive = unsafe { libc::kill(*pid, 0) } == 0;
                    if alive {
                        None
                    } else {
                        Some(None)
                    }
                }
            };
            match outcome {
                None => true,
                Some(os) => {
                    let status =
                        finishing_status(&t.job, &t.sidecar, os);
                    finished.push((t.job.clone(), status));
                    false
                }
            }
        });
    }
    // Deliveries happen outside the tracking lock so callbacks may call
    // back into the executor.
    for (job, status) in finished {
        deliver(&job, status, &inner.callback);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::JobSpec;
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::time::Duration;

    fn executor(dir: &std::path::Path) -> LocalExecutor {
        let mut config = ExecutorConfig::for_executor("local");
        config.work_directory = dir.to_path_buf();
        LocalExecutor::new(config)
    }

    #[test]
    fn submit_and_complete() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let job = Job::new(JobSpec::shell("exit 0"));
        ex.submit(&job).unwrap();
        assert!(job.native_id().is_some());
        let status = job.wait(Some(Duration::from_secs(10))).unwrap();
        assert_eq!(status.state, JobState::Completed);
        assert_eq!(status.exit_code, Some(0));
    }

    #[test]
    fn exit_code_fidelity() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        for code in [1, 3, 127, 255] {
            let job = Job::new(JobSpec::shell(format!("exit {code}")));
            ex.submit(&job).unwrap();
            let status = job.wait(Some(Duration::from_secs(10))).unwrap();
            assert_eq!(status.state, JobState::Failed, "code {code}");
            assert_eq!(status.exit_code, Some(code), "code {code}");
        }
    }

    #[test]
    fn environment_propagates_to_payload() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let out = dir.path().join("env.out");
        let mut spec = JobSpec::shell("echo \"$PJ_PROBE\"");
        spec.environment
            .insert("PJ_PROBE".to_string(), "42 weasels".to_string());
        spec.stdout_path = Some(out.clone());
        let job = Job::new(spec);
        ex.submit(&job).unwrap();
        job.wait(Some(Duration::from_secs(10))).unwrap();
        assert_eq!(fs::read_to_string(&out).unwrap(), "42 weasels\n");
    }

    #[test]
    fn working_directory_is_honored() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let workdir = dir.path().join("sub");
        fs::create_dir(&workdir).unwrap();
        let mut spec = JobSpec::shell("pwd > here.txt");
        spec.directory = Some(workdir.clone());
        let job = Job::new(spec);
        ex.submit(&job).unwrap();
        job.wait(Some(Duration::from_secs(10))).unwrap();
        let seen = fs::read_to_string(workdir.join("here.txt")).unwrap();
        assert_eq!(
            fs::canonicalize(seen.trim()).unwrap(),
            fs::canonicalize(&workdir).unwrap()
        );
    }

    #[test]
    fn missing_directory_fails_submit() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let mut spec = JobSpec::shell("exit 0");
        spec.directory = Some(dir.path().join("no/such/dir"));
        let job = Job::new(spec);
        let err = ex.submit(&job).unwrap_err();
        assert!(matches!(err, Error::SubmitFailed(_)));
        assert_eq!(job.state(), JobState::Failed);
    }

    #[test]
    fn cancel_active_job() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let job = Job::new(JobSpec::shell("sleep 60"));
        ex.submit(&job).unwrap();
        assert_eq!(job.state(), JobState::Active);
        ex.cancel(&job).unwrap();
        let status = job.wait(Some(Duration::from_secs(10))).unwrap();
        assert_eq!(status.state, JobState::Canceled);
    }

    #[test]
    fn cancel_finished_job_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let job = Job::new(JobSpec::shell("exit 0"));
        ex.submit(&job).unwrap();
        job.wait(Some(Duration::from_secs(10))).unwrap();
        let err = ex.cancel(&job).unwrap_err();
        assert!(err.to_string().contains("already completed"), "{err}");
    }

    #[test]
    fn cancel_kills_whole_process_group() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let marker = dir.path().join("grandchild-ran");
        // The payload forks a grandchild that would write the marker after
        // the sleep; group-wide SIGTERM must take it down too.
        let job = Job::new(JobSpec::shell(format!(
            "(sleep 2; touch {}) & sleep 60",
            marker.to_string_lossy()
        )));
        ex.submit(&job).unwrap();
        std::thread::sleep(Duration::from_millis(100));
        ex.cancel(&job).unwrap();
        job.wait(Some(Duration::from_secs(10))).unwrap();
        std::thread::sleep(Duration::from_millis(2500));
        assert!(!marker.exists(), "grandchild survived cancel");
    }

    #[test]
    fn callbacks_arrive_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let s = seen.clone();
        ex.set_job_status_callback(Some(Arc::new(move |_job, status| {
            s.lock().unwrap().push(status.state);
        })));
        let job = Job::new(JobSpec::shell("exit 0"));
        ex.submit(&job).unwrap();
        job.wait(Some(Duration::from_secs(10))).unwrap();
        // Delivery may trail the state change by a poll tick.
        std::thread::sleep(Duration::from_millis(100));
        assert_eq!(
            *seen.lock().unwrap(),
            vec![JobState::Queued, JobState::Active, JobState::Completed]
        );
    }

    #[test]
    fn attach_to_running_process() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let job = Job::new(JobSpec::shell("sleep 0.4; exit 0"));
        ex.submit(&job).unwrap();
        let pid = job.native_id().unwrap();

        // A second client, same sidecar path via the shared job id.
        let other = Job::with_id(job.id(), None);
        ex.attach(&other, &pid).unwrap();
        assert_eq!(other.state(), JobState::Active);
        let status = other.wait(Some(Duration::from_secs(10))).unwrap();
        assert_eq!(status.state, JobState::Completed);
        assert_eq!(status.exit_code, Some(0));
    }

    #[test]
    fn attach_to_finished_process_resolves_from_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let job = Job::new(JobSpec::shell("exit 5"));
        ex.submit(&job).unwrap();
        let pid = job.native_id().unwrap();
        job.wait(Some(Duration::from_secs(10))).unwrap();

        let other = Job::with_id(job.id(), None);
        ex.attach(&other, &pid).unwrap();
        let status = other.wait(Some(Duration::from_secs(10))).unwrap();
        assert_eq!(status.state, JobState::Failed);
        assert_eq!(status.exit_code, Some(5));
    }

    #[test]
    fn wrapper_mode_none_spawns_directly() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExecutorConfig::for_executor("local");
        config.work_directory = dir.path().to_path_buf();
        config.wrapper_mode = WrapperMode::None;
        let ex = LocalExecutor::new(config);
        let out = dir.path().join("out");
        let mut spec = JobSpec::shell("echo direct");
        spec.stdout_path = Some(out.clone());
        let job = Job::new(spec);
        ex.submit(&job).unwrap();
        let status = job.wait(Some(Duration::from_secs(10))).unwrap();
        assert_eq!(status.state, JobState::Completed);
        assert_eq!(fs::read_to_string(&out).unwrap(), "direct\n");
        // No launcher script and no sidecar were produced.
        assert!(!dir.path().join(format!("{}.launch", job.id())).exists());
        assert!(!dir.path().join(format!("{}.ec", job.id())).exists());
    }

    #[test]
    fn resubmitting_a_bound_job_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ex = executor(dir.path());
        let job = Job::new(JobSpec::shell("exit 0"));
        ex.submit(&job).unwrap();
        assert!(matches!(ex.submit(&job), Err(Error::AlreadyBound)));
        job.wait(Some(Duration::from_secs(10))).unwrap();
    }

    #[test]
    fn dropping_executor_stops_reaper() {
        let dir = tempfile::tempdir().unwrap();
        let flag = Arc::new(AtomicBool::new(false));
        {
            let ex = executor(dir.path());
            let f = flag.clone();
            ex.set_job_status_callback(Some(Arc::new(move |_, _| {
                f.store(true, Ordering::SeqCst);
            })));
            drop(ex);
        }
        // If the reaper thread kept an Arc alive this would still run; the
        // weak upgrade failing is what lets the thread exit.
        std::thread::sleep(Duration::from_millis(50));
        assert!(!flag.load(Ordering::SeqCst));
    }
}
