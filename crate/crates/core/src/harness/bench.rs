//! Overhead measurements.
//!
//! Three scenarios:
//! - `local_overhead`: sequential no-op jobs through the local executor
//!   versus a bare spawn/wait loop, so the difference is the library's
//!   per-job cost;
//! - `launcher_overhead`: the same jobs with the launcher-script layer at
//!   each wrapping level (default, minimal-wrapper, none);
//! - `qstat_latency`: latency of a standalone scheduler status command
//!   while the executor manages a growing number of jobs.
//!
//! Records render to CSV with a fixed
//! `scenario,n_jobs,mode,total_s,per_job_s` layout.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dialect::mock_dialect;
use crate::error::{Error, Result};
use crate::executor::batch::BatchExecutor;
use crate::executor::local::LocalExecutor;
use crate::executor::{ExecutorConfig, JobExecutor};
use crate::job::Job;
use crate::launcher::WrapperMode;
use crate::mock::MockConfig;
use crate::spec::JobSpec;
use crate::util::run_command;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub scenario: String,
    pub n_jobs: usize,
    pub mode: String,
    pub total_s: f64,
    pub per_job_s: f64,
}

pub const CSV_HEADER: &str = "scenario,n_jobs,mode,total_s,per_job_s";

pub fn to_csv(records: &[BenchmarkRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6}\n",
            r.scenario, r.n_jobs, r.mode, r.total_s, r.per_job_s
        ));
    }
    out
}

fn record(scenario: &str, n_jobs: usize, mode: &str, total_s: f64) -> BenchmarkRecord {
    BenchmarkRecord {
        scenario: scenario.to_string(),
        n_jobs,
        mode: mode.to_string(),
        total_s,
        per_job_s: if n_jobs == 0 { 0.0 } else { total_s / n_jobs as f64 },
    }
}

fn local_executor(work: &Path, wrapper_mode: WrapperMode) -> LocalExecutor {
    let mut config = ExecutorConfig::for_executor("local");
    config.work_directory = work.to_path_buf();
    config.wrapper_mode = wrapper_mode;
    LocalExecutor::new(config)
}

/// Runs `n_jobs` no-op jobs synchronously and sequentially through the
/// local executor, timing the whole loop.
fn timed_local_loop(work: &Path, n_jobs: usize, wrapper: WrapperMode) -> Result<f64> {
    let ex = local_executor(work, wrapper);
    let start = Instant::now();
    for _ in 0..n_jobs {
        let job = Job::new(JobSpec::new("/bin/true"));
        ex.submit(&job)?;
        job.wait(Some(Duration::from_secs(60)))?;
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Local-executor overhead. `mode` is `library` (full path: launcher
/// script, sidecar, poller) or `baseline` (a bare spawn/wait loop with no
/// library involvement); overhead is the per-job difference between the
/// two.
pub fn bench_local(work: &Path, n_jobs: usize, mode: &str) -> Result<BenchmarkRecord> {
    let total_s = match mode {
        "library" => timed_local_loop(work, n_jobs, WrapperMode::Default)?,
        "baseline" => {
            let start = Instant::now();
            for _ in 0..n_jobs {
                Command::new("/bin/true")
                    .stdin(Stdio::null())
                    .stdout(Stdio::null())
                    .stderr(Stdio::null())
                    .spawn()?
                    .wait()?;
            }
            start.elapsed().as_secs_f64()
        }
        other => {
            return Err(Error::Other(format!("unknown bench mode '{other}'")))
        }
    };
    Ok(record("local_overhead", n_jobs, mode, total_s))
}

/// Launcher-script-layer overhead. `mode` selects the wrapping level:
/// `default` (hooks, redirection, sidecar), `minimal-wrapper` (sidecar
/// only), or `none` (direct spawn, exit codes from OS status only).
pub fn bench_launcher(work: &Path, n_jobs: usize, mode: &str) -> Result<BenchmarkRecord> {
    let wrapper = match mode {
        "default" => WrapperMode::Default,
        "minimal-wrapper" => WrapperMode::Minimal,
        "none" => WrapperMode::None,
        other => {
            return Err(Error::Other(format!("unknown wrapper mode '{other}'")))
        }
    };
    let total_s = timed_local_loop(work, n_jobs, wrapper)?;
    Ok(record("launcher_overhead", n_jobs, mode, total_s))
}

/// Latency of a standalone status command while `n_jobs` long-running
/// jobs are managed by a polling mock executor whose status command
/// carries `latency_ms` of configured latency. Returns the record (with
/// `total_s` = median sample) plus the raw latency samples in seconds, so
/// callers can report variance.
pub fn bench_qstat_latency(
    work: &Path,
    mocklrm_command: &[String],
    n_jobs: usize,
    latency_ms: u64,
    samples: usize,
) -> Result<(BenchmarkRecord, Vec<f64>)> {
    let spool = work.join(format!("qstat-spool-{n_jobs}-{latency_ms}"));
    MockConfig {
        status_latency_ms: latency_ms,
        ..Default::default()
    }
    .save(&spool)?;

    let mut config = ExecutorConfig::for_executor("mock");
    config.work_directory = work.to_path_buf();
    config.poll_interval = Duration::from_millis(100);
    let dialect = mock_dialect(mocklrm_command, &spool);
    let ex = BatchExecutor::new("mock", dialect, config);

    let jobs: Vec<Job> = (0..n_jobs)
        .map(|_| Job::new(JobSpec::shell("sleep 600")))
        .collect();
    for job in &jobs {
        ex.submit(job)?;
    }
    let probe_id = jobs
        .first()
        .and_then(|j| j.native_id())
        .ok_or_else(|| Error::Other("no job to probe".into()))?;

    // The probe is its own status invocation, timed end to end, racing
    // against the executor's background poller for the spool lock.
    let probe_dialect = mock_dialect(mocklrm_command, &spool);
    let argv = (probe_dialect.status_command)(std::slice::from_ref(&probe_id));
    let mut measured: Vec<f64> = Vec::with_capacity(samples);
    for _ in 0..samples {
        let start = Instant::now();
        run_command(&argv, Duration::from_secs(60))?;
        measured.push(start.elapsed().as_secs_f64());
    }

    for job in &jobs {
        let _ = ex.cancel(job);
    }

    let mut sorted = measured.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    Ok((
        record(
            "qstat_latency",
            n_jobs,
            &format!("latency{latency_ms}ms"),
            median,
        ),
        measured,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_is_fixed() {
        let records = vec![
            record("local_overhead", 10, "library", 0.5),
            record("qstat_latency", 100, "latency50ms", 0.06),
        ];
        let csv = to_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("scenario,n_jobs,mode,total_s,per_job_s"));
        assert_eq!(
            lines.next(),
            Some("local_overhead,10,library,0.500000,0.050000")
        );
        assert_eq!(
            lines.next(),
            Some("qstat_latency,100,latency50ms,0.060000,0.000600")
        );
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn zero_jobs_yields_empty_record() {
        let dir = tempfile::tempdir().unwrap();
        let r = bench_local(dir.path(), 0, "baseline").unwrap();
        assert_eq!(r.n_jobs, 0);
        assert_eq!(r.per_job_s, 0.0);
    }

    #[test]
    fn library_mode_produces_sane_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let r = bench_local(dir.path(), 3, "library").unwrap();
        assert_eq!(r.n_jobs, 3);
        assert!(r.total_s > 0.0);
        assert!((r.per_job_s - r.total_s / 3.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_modes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(bench_local(dir.path(), 1, "warp").is_err());
        assert!(bench_launcher(dir.path(), 1, "warp").is_err());
    }
}
