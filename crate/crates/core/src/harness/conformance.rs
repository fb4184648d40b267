//! Executor conformance suite.
//!
//! A fixed battery of behavioral scenarios run against any registered
//! executor. Every scenario produces a record — pass, fail, or marked
//! inapplicable — and a failing scenario never aborts the run, so a report
//! always covers the full battery.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::error::Result;
use crate::executor::registry::Registry;
use crate::executor::{ExecutorConfig, JobExecutor};
use crate::harness::report::{ConformanceReport, TestRecord};
use crate::job::Job;
use crate::spec::JobSpec;
use crate::state::JobState;

const WAIT: Duration = Duration::from_secs(30);

struct Ctx<'a> {
    registry: &'a Registry,
    executor_name: &'a str,
    base_config: &'a ExecutorConfig,
    scratch: PathBuf,
}

type Outcome = std::result::Result<String, String>;

impl Ctx<'_> {
    /// Fresh executor instance with its own work subdirectory.
    fn executor(&self, label: &str) -> std::result::Result<(Arc<dyn JobExecutor>, PathBuf), String> {
        let dir = self.scratch.join(label);
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let mut config = self.base_config.clone();
        config.work_directory = dir.clone();
        let ex = self
            .registry
            .get_instance(self.executor_name, config)
            .map_err(|e| e.to_string())?;
        Ok((ex, dir))
    }
}

fn wait_final(job: &Job) -> std::result::Result<crate::state::JobStatus, String> {
    job.wait(Some(WAIT)).map_err(|e| format!("wait: {e}"))
}

fn wait_for_active(job: &Job) -> std::result::Result<(), String> {
    let deadline = Instant::now() + WAIT;
    loop {
        let state = job.state();
        if state == JobState::Active {
            return Ok(());
        }
        if state.is_final() {
            return Err(format!("job finished ({state}) before becoming active"));
        }
        if Instant::now() >= deadline {
            return Err("timed out waiting for ACTIVE".to_string());
        }
        std::thread::sleep(Duration::from_millis(5));
    }
}

fn submit_complete(ctx: &Ctx) -> Outcome {
    let (ex, _) = ctx.executor("submit-complete")?;
    let job = Job::new(JobSpec::shell("exit 0"));
    ex.submit(&job).map_err(|e| e.to_string())?;
    let status = wait_final(&job)?;
    if status.state != JobState::Completed {
        return Err(format!("expected COMPLETED, got {}", status.state));
    }
    if status.exit_code != Some(0) {
        return Err(format!("expected exit code 0, got {:?}", status.exit_code));
    }
    Ok(format!("completed as native job {:?}", job.native_id()))
}

fn failing_job(ctx: &Ctx) -> Outcome {
    let (ex, _) = ctx.executor("failing-job")?;
    let job = Job::new(JobSpec::shell("exit 3"));
    ex.submit(&job).map_err(|e| e.to_string())?;
    let status = wait_final(&job)?;
    if status.state != JobState::Failed {
        return Err(format!("expected FAILED, got {}", status.state));
    }
    if status.exit_code != Some(3) {
        return Err(format!("expected exit code 3, got {:?}", status.exit_code));
    }
    Ok("failure and exit code observed".to_string())
}

fn cancel_active(ctx: &Ctx) -> Outcome {
    let (ex, _) = ctx.executor("cancel-active")?;
    let job = Job::new(JobSpec::shell("sleep 30"));
    ex.submit(&job).map_err(|e| e.to_string())?;
    wait_for_active(&job)?;
    ex.cancel(&job).map_err(|e| e.to_string())?;
    let status = wait_final(&job)?;
    if status.state != JobState::Canceled {
        return Err(format!("expected CANCELED, got {}", status.state));
    }
    Ok("active job canceled".to_string())
}

fn attach_running(ctx: &Ctx) -> Outcome {
    let (ex, _) = ctx.executor("attach-running")?;
    let job = Job::new(JobSpec::shell("sleep 0.5; exit 0"));
    ex.submit(&job).map_err(|e| e.to_string())?;
    let native_id = job.native_id().ok_or("no native id after submit")?;
    let observer = Job::with_id(job.id(), None);
    ex.attach(&observer, &native_id).map_err(|e| e.to_string())?;
    let status = wait_final(&observer)?;
    if status.state != JobState::Completed {
        return Err(format!(
            "attached observer saw {}, expected COMPLETED",
            status.state
        ));
    }
    Ok("observer followed the job to completion".to_string())
}

fn env_propagation(ctx: &Ctx) -> Outcome {
    let (ex, dir) = ctx.executor("env-propagation")?;
    let out = dir.join("env.out");
    let mut spec = JobSpec::shell("echo \"$PJ_CONFORMANCE\"");
    spec.environment
        .insert("PJ_CONFORMANCE".to_string(), "token-9".to_string());
    spec.stdout_path = Some(out.clone());
    let job = Job::new(spec);
    ex.submit(&job).map_err(|e| e.to_string())?;
    wait_final(&job)?;
    let content = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    if content.trim() != "token-9" {
        return Err(format!("payload saw {:?}", content.trim()));
    }
    Ok("environment variable reached the payload".to_string())
}

fn redirection(ctx: &Ctx) -> Outcome {
    let (ex, dir) = ctx.executor("redirection")?;
    let out = dir.join("out");
    let err_path = dir.join("err");
    let mut spec = JobSpec::shell("echo to-out; echo to-err >&2");
    spec.stdout_path = Some(out.clone());
    spec.stderr_path = Some(err_path.clone());
    let job = Job::new(spec);
    ex.submit(&job).map_err(|e| e.to_string())?;
    wait_final(&job)?;
    let stdout = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let stderr = std::fs::read_to_string(&err_path).map_err(|e| e.to_string())?;
    if stdout.trim() != "to-out" || stderr.trim() != "to-err" {
        return Err(format!("stdout={stdout:?} stderr={stderr:?}"));
    }
    Ok("streams landed in their files".to_string())
}

fn wait_timeout(ctx: &Ctx) -> Outcome {
    let (ex, _) = ctx.executor("wait-timeout")?;
    let job = Job::new(JobSpec::shell("sleep 30"));
    ex.submit(&job).map_err(|e| e.to_string())?;
    match job.wait(Some(Duration::from_millis(50))) {
        Err(crate::error::Error::Timeout) => {}
        other => return Err(format!("expected timeout, got {other:?}")),
    }
    ex.cancel(&job).map_err(|e| e.to_string())?;
    wait_final(&job)?;
    Ok("bounded wait timed out, job cleaned up".to_string())
}

fn callback_order(ctx: &Ctx) -> Outcome {
    let (ex, _) = ctx.executor("callback-order")?;
    let seen: Arc<Mutex<Vec<JobState>>> = Arc::new(Mutex::new(Vec::new()));
    let s = seen.clone();
    ex.set_job_status_callback(Some(Arc::new(move |_, status| {
        s.lock().unwrap().push(status.state);
    })));
    let job = Job::new(JobSpec::shell("exit 0"));
    ex.submit(&job).map_err(|e| e.to_string())?;
    wait_final(&job)?;
    // Delivery may trail the final transition by a poll tick.
    let deadline = Instant::now() + WAIT;
    loop {
        let states = seen.lock().unwrap().clone();
        if states.last().is_some_and(|s| s.is_final()) {
            for pair in states.windows(2) {
                if pair[0].rank() >= pair[1].rank() {
                    return Err(format!("non-monotonic callback order {states:?}"));
                }
            }
            return Ok(format!("callback order {states:?}"));
        }
        if Instant::now() >= deadline {
            return Err(format!("callbacks incomplete: {states:?}"));
        }
        std::thread::sleep(Duration::from_millis(5));
    }
}

/// Mock-only: with N active jobs, one manually-driven poll cycle issues
/// exactly one scheduler status command, verified against the spool's
/// command counters.
fn bulk_invariant(ctx: &Ctx) -> Outcome {
    use crate::dialect::{mock_dialect, mocklrm_program};
    use crate::executor::batch::BatchExecutor;
    use crate::mock::Spool;

    let dir = ctx.scratch.join("bulk-invariant");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let spool_dir = dir.join("spool");
    let mut config = ctx.base_config.clone();
    config.work_directory = dir.clone();
    let dialect = mock_dialect(&mocklrm_program(), &spool_dir);
    let ex = BatchExecutor::new_manual("mock", dialect, config);
    let jobs: Vec<Job> = (0..5)
        .map(|_| Job::new(JobSpec::shell("sleep 30")))
        .collect();
    for job in &jobs {
        ex.submit(job).map_err(|e| e.to_string())?;
    }
    let spool = Spool::at(&spool_dir);
    let (_, status_before) = spool.counters().map_err(|e| e.to_string())?;
    for _ in 0..4 {
        ex.poll_now();
    }
    let (_, status_after) = spool.counters().map_err(|e| e.to_string())?;
    for job in &jobs {
        let _ = ex.cancel(job);
    }
    let delta = status_after - status_before;
    if delta != 4 {
        return Err(format!(
            "4 poll cycles over 5 jobs issued {delta} status commands"
        ));
    }
    Ok("one status command per poll cycle".to_string())
}

/// Runs the full battery against `executor_name` and returns the report.
pub fn run_conformance(
    registry: &Registry,
    executor_name: &str,
    config: &ExecutorConfig,
    site: &str,
) -> Result<ConformanceReport> {
    let instance = registry.get_instance(executor_name, config.clone())?;
    let mut report =
        ConformanceReport::new(site, executor_name, instance.version());
    drop(instance);

    let scratch = config
        .work_directory
        .join(format!("conformance-{}", uuid::Uuid::new_v4()));
    std::fs::create_dir_all(&scratch)?;
    let ctx = Ctx {
        registry,
        executor_name,
        base_config: config,
        scratch,
    };

    let environment = BTreeMap::from([
        ("os".to_string(), std::env::consts::OS.to_string()),
        (
            "work_directory".to_string(),
            config.work_directory.to_string_lossy().to_string(),
        ),
        (
            "user".to_string(),
            std::env::var("USER").unwrap_or_default(),
        ),
    ]);

    let scenarios: Vec<(&str, bool, fn(&Ctx) -> Outcome)> = vec![
        ("submit-complete", true, submit_complete),
        ("failing-job", true, failing_job),
        ("cancel-active", true, cancel_active),
        ("attach-running", true, attach_running),
        ("env-propagation", true, env_propagation),
        ("redirection", true, redirection),
        ("wait-timeout", true, wait_timeout),
        ("callback-order", true, callback_order),
        ("bulk-invariant", executor_name == "mock", bulk_invariant),
    ];

    for (name, applicable, scenario) in scenarios {
        if !applicable {
            report.tests.push(TestRecord {
                name: name.to_string(),
                passed: false,
                applicable: false,
                duration_s: 0.0,
                output: "not applicable to this executor".to_string(),
                environment: BTreeMap::new(),
            });
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            scenario(&ctx)
        }))
        .unwrap_or_else(|_| Err("scenario panicked".to_string()));
        let duration_s = start.elapsed().as_secs_f64();
        let (passed, output) = match outcome {
            Ok(output) => (true, output),
            Err(output) => (false, output),
        };
        report.tests.push(TestRecord {
            name: name.to_string(),
            passed,
            applicable: true,
            duration_s,
            output,
            environment: environment.clone(),
        });
    }

    Ok(report)
}
