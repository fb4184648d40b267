//! `portajob` — submit, track, and manage jobs from the shell.
//!
//! Submission writes a handle file (`<work-dir>/<job-id>.handle`) so later
//! invocations — status, wait, cancel, attach — can find the job again
//! without any daemon. The executor defaults to `PORTAJOB_EXECUTOR`, then
//! "local".
//!
//! Exit codes: 0 success / job completed; 1 job failed or was canceled;
//! 2 usage or spec error; 3 executor or scheduler error; 4 wait timeout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};

use portajob::{
    Error, ExecutorConfig, Job, JobExecutor, JobHandle, JobState, Registry,
};

#[derive(Parser)]
#[command(name = "portajob", about = "Portable job management", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Submit a JSON job spec; prints the job id.
    Submit {
        spec: PathBuf,
        /// Executor name, optionally with a version constraint (name@1.0).
        #[arg(long, env = "PORTAJOB_EXECUTOR", default_value = "local")]
        executor: String,
        /// Directory for scripts, handle files, and exit-code files.
        #[arg(long)]
        work_dir: Option<PathBuf>,
    },
    /// Report a job's current state.
    Status { handle: PathBuf },
    /// Block until a job finishes; exits 0/1 by outcome.
    Wait {
        handle: PathBuf,
        /// Give up after this many seconds.
        #[arg(long)]
        timeout: Option<f64>,
    },
    /// Cancel a queued or running job.
    Cancel { handle: PathBuf },
    /// Re-bind to a submitted job and report its state.
    Attach { handle: PathBuf },
    /// Submit, wait, and relay the job's stdout; exits 0/1 by outcome.
    Run {
        spec: PathBuf,
        #[arg(long, env = "PORTAJOB_EXECUTOR", default_value = "local")]
        executor: String,
        #[arg(long)]
        work_dir: Option<PathBuf>,
        #[arg(long)]
        timeout: Option<f64>,
    },
}

const EXIT_JOB_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EXECUTOR: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("portajob: {message}");
    ExitCode::from(code)
}

fn config_for(executor: &str, work_dir: &Option<PathBuf>) -> ExecutorConfig {
    let base = executor.split('@').next().unwrap_or(executor);
    let mut config = ExecutorConfig::for_executor(base);
    if let Some(dir) = work_dir {
        config.work_directory = dir.clone();
    }
    config
}

fn load_spec_or_exit(path: &Path) -> Result<portajob::JobSpec, ExitCode> {
    match portajob::specfile::load_spec(path) {
        Ok(spec) => Ok(spec),
        Err(Error::InvalidSpec(violations)) => Err(fail(
            EXIT_USAGE,
            format!(
                "invalid job spec:\n{}",
                portajob::specfile::format_violations(&violations)
            ),
        )),
        Err(e) => Err(fail(EXIT_USAGE, e)),
    }
}

fn submit_job(
    spec_path: &Path,
    executor: &str,
    work_dir: &Option<PathBuf>,
    mut edit: impl FnMut(&mut portajob::JobSpec, &str, &Path),
) -> Result<(Arc<dyn JobExecutor>, Job, JobHandle), ExitCode> {
    let config = config_for(executor, work_dir);
    let work = config.work_directory.clone();
    let mut spec = load_spec_or_exit(spec_path)?;
    // The id is generated before the job exists so the spec can point at
    // id-derived paths (stdout capture, sidecar, handle).
    let job_id = uuid::Uuid::new_v4().to_string();
    edit(&mut spec, &job_id, &work);
    let job = Job::with_id(&job_id, Some(spec));
    let ex = get_instance_with(executor, config)?;
    if let Err(e) = ex.submit(&job) {
        return Err(fail(EXIT_EXECUTOR, format!("submit failed: {e}")));
    }
    let handle = match JobHandle::capture(&job, &work).and_then(|h| {
        h.save()?;
        Ok(h)
    }) {
        Ok(handle) => handle,
        Err(e) => return Err(fail(EXIT_EXECUTOR, format!("cannot save handle: {e}"))),
    };
    Ok((ex, job, handle))
}

fn get_instance_with(
    executor: &str,
    config: ExecutorConfig,
) -> Result<Arc<dyn JobExecutor>, ExitCode> {
    let registry = Registry::from_environment();
    registry
        .get_instance(executor, config)
        .map_err(|e| fail(EXIT_EXECUTOR, e))
}

/// Re-binds to the job named by a handle file. Returns the executor and
/// the re-created job, already attached.
fn reattach(handle_path: &Path) -> Result<(Arc<dyn JobExecutor>, Job), ExitCode> {
    let handle = JobHandle::load(handle_path).map_err(|e| fail(EXIT_USAGE, e))?;
    let mut config = ExecutorConfig::for_executor(&handle.executor);
    config.work_directory = handle.work_directory.clone();
    let ex = get_instance_with(&handle.executor, config)?;
    let job = handle.to_job();
    ex.attach(&job, &handle.native_id)
        .map_err(|e| fail(EXIT_EXECUTOR, e))?;
    Ok((ex, job))
}

fn print_status(job: &Job) {
    let status = job.status();
    match status.exit_code {
        Some(code) => println!("{} {} exit={}", job.id(), status.state, code),
        None => println!("{} {}", job.id(), status.state),
    }
    if let Some(message) = &status.message {
        println!("# {message}");
    }
}

fn outcome_exit(state: JobState) -> ExitCode {
    if state == JobState::Completed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_JOB_FAILED)
    }
}

fn wait_with(job: &Job, ex: &Arc<dyn JobExecutor>, timeout: Option<f64>) -> Result<JobState, ExitCode> {
    // Nudge the poller so short jobs resolve promptly even with long
    // poll intervals.
    let deadline = timeout.map(|t| std::time::Instant::now() + Duration::from_secs_f64(t));
    loop {
        ex.poll_now();
        let slice = Duration::from_millis(100);
        let this_wait = match deadline {
            Some(d) => {
                let now = std::time::Instant::now();
                if now >= d {
                    return Err(fail(EXIT_TIMEOUT, "timed out waiting for job"));
                }
                slice.min(d - now)
            }
            None => slice,
        };
        match job.wait(Some(this_wait)) {
            Ok(status) => return Ok(status.state),
            Err(Error::Timeout) => continue,
            Err(e) => return Err(fail(EXIT_EXECUTOR, e)),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Submit {
            spec,
            executor,
            work_dir,
        } => {
            let result = submit_job(&spec, &executor, &work_dir, |_, _, _| {});
            match result {
                Ok((_ex, job, handle)) => {
                    println!("{}", job.id());
                    eprintln!(
                        "portajob: handle {}",
                        JobHandle::path_for(&handle.work_directory, &handle.job_id)
                            .display()
                    );
                    ExitCode::SUCCESS
                }
                Err(code) => code,
            }
        }
        Cmd::Status { handle } | Cmd::Attach { handle } => match reattach(&handle) {
            Ok((ex, job)) => {
                ex.poll_now();
                // One more short cycle lets a freshly-resolved state land.
                std::thread::sleep(Duration::from_millis(30));
                ex.poll_now();
                print_status(&job);
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Cmd::Wait { handle, timeout } => match reattach(&handle) {
            Ok((ex, job)) => match wait_with(&job, &ex, timeout) {
                Ok(state) => {
                    print_status(&job);
                    outcome_exit(state)
                }
                Err(code) => code,
            },
            Err(code) => code,
        },
        Cmd::Cancel { handle } => match reattach(&handle) {
            Ok((ex, job)) => {
                ex.poll_now();
                match ex.cancel(&job) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(EXIT_EXECUTOR, format!("cancel failed: {e}")),
                }
            }
            Err(code) => code,
        },
        Cmd::Run {
            spec,
            executor,
            work_dir,
            timeout,
        } => {
            let mut captured_out: Option<PathBuf> = None;
            let result = submit_job(&spec, &executor, &work_dir, |spec, id, work| {
                if spec.stdout_path.is_none() {
                    spec.stdout_path = Some(work.join(format!("{id}.out")));
                }
                captured_out = spec.stdout_path.clone();
            });
            match result {
                Ok((ex, job, _handle)) => match wait_with(&job, &ex, timeout) {
                    Ok(state) => {
                        if let Some(path) = &captured_out {
                            if let Ok(content) = std::fs::read_to_string(path) {
                                print!("{content}");
                            }
                        }
                        if state != JobState::Completed {
                            eprintln!("portajob: job finished {state}");
                        }
                        outcome_exit(state)
                    }
                    Err(code) => code,
                },
                Err(code) => code,
            }
        }
    }
}
