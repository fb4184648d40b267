//! End-to-end batch execution against the real `mocklrm` helper binary.

mod common;

use std::path::Path;
use std::time::Duration;

use portajob::dialect::mock_dialect;
use portajob::executor::batch::BatchExecutor;
use portajob::mock::{MockConfig, Spool};
use portajob::{ExecutorConfig, Job, JobExecutor, JobSpec, JobState};

const WAIT: Option<Duration> = Some(Duration::from_secs(30));

fn executor(work: &Path, spool: &Path, mock_config: Option<MockConfig>) -> BatchExecutor {
    if let Some(mc) = mock_config {
        mc.save(spool).unwrap();
    }
    let mut config = ExecutorConfig::for_executor("mock");
    config.work_directory = work.to_path_buf();
    BatchExecutor::new(
        "mock",
        mock_dialect(&common::mocklrm_cmd(), spool),
        config,
    )
}

#[test]
fn lifecycle_completes_with_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let ex = executor(dir.path(), &dir.path().join("spool"), None);
    let job = Job::new(JobSpec::shell("exit 0"));
    ex.submit(&job).unwrap();
    assert_eq!(job.native_id().as_deref(), Some("1"));
    let status = job.wait(WAIT).unwrap();
    assert_eq!(status.state, JobState::Completed);
    assert_eq!(status.exit_code, Some(0));
}

#[test]
fn failure_carries_payload_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let ex = executor(dir.path(), &dir.path().join("spool"), None);
    let job = Job::new(JobSpec::shell("exit 7"));
    ex.submit(&job).unwrap();
    let status = job.wait(WAIT).unwrap();
    assert_eq!(status.state, JobState::Failed);
    assert_eq!(status.exit_code, Some(7));
}

#[test]
fn rejected_queue_fails_submission() {
    let dir = tempfile::tempdir().unwrap();
    let ex = executor(
        dir.path(),
        &dir.path().join("spool"),
        Some(MockConfig {
            reject_queues: vec!["badq".to_string()],
            ..Default::default()
        }),
    );
    let mut spec = JobSpec::shell("exit 0");
    spec.attributes.queue_name = Some("badq".to_string());
    let job = Job::new(spec);
    let err = ex.submit(&job).unwrap_err();
    assert!(err.to_string().contains("badq"), "{err}");
    assert_eq!(job.state(), JobState::Failed);
}

#[test]
fn cancel_while_queued() {
    let dir = tempfile::tempdir().unwrap();
    let ex = executor(
        dir.path(),
        &dir.path().join("spool"),
        Some(MockConfig {
            schedule_delay_ms: 60_000,
            ..Default::default()
        }),
    );
    let job = Job::new(JobSpec::shell("exit 0"));
    ex.submit(&job).unwrap();
    assert_eq!(job.state(), JobState::Queued);
    ex.cancel(&job).unwrap();
    let status = job.wait(WAIT).unwrap();
    assert_eq!(status.state, JobState::Canceled);
}

#[test]
fn cancel_while_active() {
    let dir = tempfile::tempdir().unwrap();
    let ex = executor(dir.path(), &dir.path().join("spool"), None);
    let job = Job::new(JobSpec::shell("sleep 60"));
    ex.submit(&job).unwrap();
    let deadline = std::time::Instant::now() + Duration::from_secs(10);
    while job.state() != JobState::Active {
        assert!(std::time::Instant::now() < deadline, "never became active");
        std::thread::sleep(Duration::from_millis(5));
    }
    ex.cancel(&job).unwrap();
    let status = job.wait(WAIT).unwrap();
    assert_eq!(status.state, JobState::Canceled);
}

#[test]
fn attach_with_shared_id_reads_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let spool = dir.path().join("spool");
    let ex = executor(dir.path(), &spool, None);
    let job = Job::new(JobSpec::shell("exit 5"));
    ex.submit(&job).unwrap();
    job.wait(WAIT).unwrap();

    // A second executor instance, as after a client restart.
    let ex2 = executor(dir.path(), &spool, None);
    let reborn = Job::with_id(job.id(), None);
    ex2.attach(&reborn, &job.native_id().unwrap()).unwrap();
    let status = reborn.wait(WAIT).unwrap();
    assert_eq!(status.state, JobState::Failed);
    assert_eq!(status.exit_code, Some(5));
}

#[test]
fn attach_without_sidecar_recovers_code_from_status_message() {
    let dir = tempfile::tempdir().unwrap();
    let spool = dir.path().join("spool");
    let ex = executor(dir.path(), &spool, None);
    let job = Job::new(JobSpec::shell("exit 9"));
    ex.submit(&job).unwrap();
    job.wait(WAIT).unwrap();

    // Different work directory and a fresh job id: the sidecar is out of
    // reach, so the exit code must come from the scheduler's report.
    let other_work = dir.path().join("elsewhere");
    let ex2 = executor(&other_work, &spool, None);
    let foreign = Job::detached();
    ex2.attach(&foreign, &job.native_id().unwrap()).unwrap();
    let status = foreign.wait(WAIT).unwrap();
    assert_eq!(status.state, JobState::Failed);
    assert_eq!(status.exit_code, Some(9));
}

#[test]
fn job_dropped_after_done_is_resolved_from_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let ex = executor(
        dir.path(),
        &dir.path().join("spool"),
        Some(MockConfig {
            drop_after_done: true,
            ..Default::default()
        }),
    );
    let job = Job::new(JobSpec::shell("exit 0"));
    ex.submit(&job).unwrap();
    let status = job.wait(WAIT).unwrap();
    assert_eq!(status.state, JobState::Completed);
    assert_eq!(status.exit_code, Some(0));
}

#[test]
fn purged_job_is_reported_lost() {
    let dir = tempfile::tempdir().unwrap();
    let spool_dir = dir.path().join("spool");
    let ex = executor(
        dir.path(),
        &spool_dir,
        Some(MockConfig {
            schedule_delay_ms: 60_000,
            ..Default::default()
        }),
    );
    let job = Job::new(JobSpec::shell("exit 0"));
    ex.submit(&job).unwrap();
    Spool::at(&spool_dir)
        .purge_record(&job.native_id().unwrap())
        .unwrap();
    let status = job.wait(WAIT).unwrap();
    assert_eq!(status.state, JobState::Failed);
    assert_eq!(status.message.as_deref(), Some("lost by scheduler"));
}

#[test]
fn scheduled_delay_shows_queued_phase() {
    let dir = tempfile::tempdir().unwrap();
    let ex = executor(
        dir.path(),
        &dir.path().join("spool"),
        Some(MockConfig {
            schedule_delay_ms: 300,
            ..Default::default()
        }),
    );
    let job = Job::new(JobSpec::shell("exit 0"));
    ex.submit(&job).unwrap();
    assert_eq!(job.state(), JobState::Queued);
    let status = job.wait(WAIT).unwrap();
    assert_eq!(status.state, JobState::Completed);
}
