//! A simulated batch scheduler.
//!
//! State lives in a spool directory: one JSON record per job, a sequence
//! file, a counters file, and a key/value config file. A lock file guards
//! all spool mutations, so any number of concurrent command invocations
//! (and test processes) serialize safely. There is no daemon: the scheduler
//! "ticks" lazily on every command invocation, starting due jobs and
//! reaping finished ones.
//!
//! Commands honor the generic dialect contract through the `mocklrm`
//! binary: `msub <script>` prints a sequential native id, `mstat <id>...`
//! prints one `<id> <code> [message]` line per id, `mdel <id>` cancels.
//! State codes are Q, R, CD, F, CA; unknown ids report `U unknown`.

use std::fs::{self, File, OpenOptions};
use std::os::unix::io::AsRawFd;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::sh_quote;

/// Spool-wide behavior knobs, persisted as `mock.toml` in the spool
/// directory.
#[derive(Debug, Clone, PartialEq)]
pub struct MockConfig {
    /// Delay between submission and start.
    pub schedule_delay_ms: u64,
    /// Extra uniformly-random delay added on top of `schedule_delay_ms`.
    pub schedule_delay_jitter_ms: u64,
    /// Artificial latency added to every status call.
    pub status_latency_ms: u64,
    /// Submissions requesting these queues are rejected.
    pub reject_queues: Vec<String>,
    /// Omit finished jobs from status output entirely.
    pub drop_after_done: bool,
    /// Reject every submission.
    pub fail_submit: bool,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            schedule_delay_ms: 0,
            schedule_delay_jitter_ms: 0,
            status_latency_ms: 0,
            reject_queues: Vec::new(),
            drop_after_done: false,
            fail_submit: false,
        }
    }
}

impl MockConfig {
    pub fn load(spool: &Path) -> MockConfig {
        let mut config = MockConfig::default();
        let Ok(text) = fs::read_to_string(spool.join("mock.toml")) else {
            return config;
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                continue;
            };
            let key = key.trim();
            let value = value.trim().trim_matches('"');
            match key {
                "schedule_delay_ms" => {
                    config.schedule_delay_ms = value.parse().unwrap_or(0)
                }
                "schedule_delay_jitter_ms" => {
                    config.schedule_delay_jitter_ms = value.parse().unwrap_or(0)
                }
                "status_latency_ms" => {
                    config.status_latency_ms = value.parse().unwrap_or(0)
                }
                "reject_queues" => {
                    config.reject_queues = value
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect()
                }
                "drop_after_done" => config.drop_after_done = value == "true",
                "fail_submit" => config.fail_submit = value == "true",
                _ => {}
            }
        }
        config
    }

    pub fn save(&self, spool: &Path) -> Result<()> {
        fs::create_dir_all(spool)?;
        let mut out = String::new();
        out.push_str(&format!("schedule_delay_ms = {}\n", self.schedule_delay_ms));
        out.push_str(&format!(
            "schedule_delay_jitter_ms = {}\n",
            self.schedule_delay_jitter_ms
        ));
        out.push_str(&format!("status_latency_ms = {}\n", self.status_latency_ms));
        out.push_str(&format!(
            "reject_queues = {}\n",
            self.reject_queues.join(",")
        ));
        out.push_str(&format!("drop_after_done = {}\n", self.drop_after_done));
        out.push_str(&format!("fail_submit = {}\n", self.fail_submit));
        fs::write(spool.join("mock.toml"), out)?;
        Ok(())
    }
}

/// Per-job spool record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub script: PathBuf,
    /// Q, R, CD, F, or CA.
    pub code: String,
    pub queue: Option<String>,
    pub submit_ms: u64,
    pub start_due_ms: u64,
    pub start_ms: Option<u64>,
    pub end_ms: Option<u64>,
    pub pid: Option<i32>,
    pub exit_code: Option<i32>,
    pub message: Option<String>,
}

impl JobRecord {
    pub fn finished(&self) -> bool {
        matches!(self.code.as_str(), "CD" | "F" | "CA")
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_millis() as u64
}

/// Holds the spool's flock for its lifetime.
struct SpoolLock {
    _file: File,
}

impl SpoolLock {
    fn acquire(dir: &Path) -> Result<SpoolLock> {
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(dir.join("lock"))?;
        let rc = unsafe { libc::flock(file.as_raw_fd(), libc::LOCK_EX) };
        if rc != 0 {
            return Err(Error::Io(std::io::Error::last_os_error()));
        }
        Ok(SpoolLock { _file: file })
    }
}

pub struct Spool {
    dir: PathBuf,
}

impl Spool {
    pub fn at(dir: impl Into<PathBuf>) -> Spool {
        Spool { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn jobs_dir(&self) -> PathBuf {
        self.dir.join("jobs")
    }

    fn record_path(&self, id: &str) -> PathBuf {
        self.jobs_dir().join(format!("{id}.json"))
    }

    fn ensure_layout(&self) -> Result<()> {
        fs::create_dir_all(self.jobs_dir())?;
        Ok(())
    }

    fn lock(&self) -> Result<SpoolLock> {
        self.ensure_layout()?;
        SpoolLock::acquire(&self.dir)
    }

    fn write_record(&self, record: &JobRecord) -> Result<()> {
        let text = serde_json::to_string_pretty(record)
            .map_err(|e| Error::Other(e.to_string()))?;
        fs::write(self.record_path(&record.id), text)?;
        Ok(())
    }

    fn read_record(&self, id: &str) -> Option<JobRecord> {
        let text = fs::read_to_string(self.record_path(id)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Current record for a job, if any. Takes the spool lock.
    pub fn job_record(&self, id: &str) -> Option<JobRecord> {
        let _lock = self.lock().ok()?;
        self.read_record(id)
    }

    /// Deletes a job's record outright, simulating a scheduler that lost
    /// or purged the job.
    pub fn purge_record(&self, id: &str) -> Result<()> {
        let _lock = self.lock()?;
        fs::remove_file(self.record_path(id))?;
        Ok(())
    }

    fn bump_counter(&self, which: &str) -> Result<()> {
        let (mut submit, mut status) = self.read_counters();
        match which {
            "submit" => submit += 1,
            "status" => status += 1,
            _ => {}
        }
        fs::write(
            self.dir.join("counters"),
            format!("submit={submit}\nstatus={status}\n"),
        )?;
        Ok(())
    }

    fn read_counters(&self) -> (u64, u64) {
        let mut submit = 0;
        let mut status = 0;
        if let Ok(text) = fs::read_to_string(self.dir.join("counters")) {
            for line in text.lines() {
                if let Some(v) = line.strip_prefix("submit=") {
                    submit = v.trim().parse().unwrap_or(0);
                }
                if let Some(v) = line.strip_prefix("status=") {
                    status = v.trim().parse().unwrap_or(0);
                }
            }
        }
        (submit, status)
    }

    /// (submit, status) invocation counts. Takes the spool lock.
    pub fn counters(&self) -> Result<(u64, u64)> {
        let _lock = self.lock()?;
        Ok(self.read_counters())
    }

    fn next_id(&self) -> Result<u64> {
        let seq_path = self.dir.join("seq");
        let next = fs::read_to_string(&seq_path)
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .unwrap_or(1);
        fs::write(&seq_path, format!("{}", next + 1))?;
        Ok(next)
    }

    fn all_ids(&self) -> Vec<String> {
        let mut ids: Vec<(u64, String)> = Vec::new();
        if let Ok(entries) = fs::read_dir(self.jobs_dir()) {
            for entry in entries.flatten() {
                let name = entry.file_name().to_string_lossy().to_string();
                if let Some(id) = name.strip_suffix(".json") {
                    ids.push((id.parse().unwrap_or(u64::MAX), id.to_string()));
                }
            }
        }
        ids.sort();
        ids.into_iter().map(|(_, id)| id).collect()
    }

    /// Advances the scheduler: starts due Q jobs and resolves finished R
    /// jobs. Runs under the lock held by the caller.
    fn tick_locked(&self) -> Result<()> {
        let now = now_ms();
        for id in self.all_ids() {
            let Some(mut record) = self.read_record(&id) else {
                continue;
            };
            match record.code.as_str() {
                "Q" if record.start_due_ms <= now => {
                    // The wrapper runs the submit script and leaves the exit
                    // code in a file a later tick picks up. The mock command
                    // process exits long before the job does, so waiting on
                    // the child is not an option.
                    let exit_path = self.jobs_dir().join(format!("{id}.exit"));
                    let out_path = self.jobs_dir().join(format!("{id}.out"));
                    // Double fork: the intermediate shell backgrounds the
                    // wrapper and exits, so the wrapper reparents to init
                    // and never lingers as a zombie of a long-lived caller.
                    // The intermediate's pid doubles as the job's pgid.
                    let wrapper = format!(
                        "(/bin/sh {} > {} 2>&1; echo $? > {}) &",
                        sh_quote(&record.script.to_string_lossy()),
                        sh_quote(&out_path.to_string_lossy()),
                        sh_quote(&exit_path.to_string_lossy()),
                    );
                    let mut cmd = Command::new("/bin/sh");
                    cmd.arg("-c")
                        .arg(&wrapper)
                        .stdin(Stdio::null())
                        .stdout(Stdio::null())
                        .stderr(Stdio::null())
                        .process_group(0);
                    match cmd.spawn() {
                        Ok(mut child) => {
                            record.pid = Some(child.id() as i32);
                            record.code = "R".to_string();
                            record.start_ms = Some(now);
                            let _ = child.wait();
                        }
                        Err(e) => {
                            record.code = "F".to_string();
                            record.end_ms = Some(now);
                            record.message = Some(format!("spawn failed: {e}"));
                        }
                    }
                    self.write_record(&record)?;
                }
                "R" => {
                    let exit_path = self.jobs_dir().join(format!("{id}.exit"));
                    if let Ok(text) = fs::read_to_string(&exit_path) {
                        let code: i32 = text.trim().parse().unwrap_or(-1);
                        record.exit_code = Some(code);
                        record.code = if code == 0 { "CD" } else { "F" }.to_string();
                        record.end_ms = Some(now);
                        record.message = Some(code.to_string());
                        self.write_record(&record)?;
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Submits a script; prints nothing, returns the new native id.
    pub fn msub(&self, script: &Path) -> Result<String> {
        let config = MockConfig::load(&self.dir);
        let _lock = self.lock()?;
        self.tick_locked()?;
        self.bump_counter("submit")?;
        if config.fail_submit {
            return Err(Error::SubmitFailed(
                "mock scheduler is refusing submissions".to_string(),
            ));
        }
        let text = fs::read_to_string(script)
            .map_err(|e| Error::SubmitFailed(format!("cannot read script: {e}")))?;
        let queue = text.lines().find_map(|line| {
            line.strip_prefix("#MLRM queue=").map(|q| q.trim().to_string())
        });
        if let Some(q) = &queue {
            if config.reject_queues.iter().any(|r| r == q) {
                return Err(Error::SubmitFailed(format!(
                    "queue '{q}' is not accepting jobs"
                )));
            }
        }
        let id = self.next_id()?.to_string();
        let now = now_ms();
        let jitter = if config.schedule_delay_jitter_ms > 0 {
            rand::thread_rng().gen_range(0..=config.schedule_delay_jitter_ms)
        } else {
            0
        };
        let record = JobRecord {
            id: id.clone(),
            script: script.to_path_buf(),
            code: "Q".to_string(),
            queue,
            submit_ms: now,
            start_due_ms: now + config.schedule_delay_ms + jitter,
            start_ms: None,
            end_ms: None,
            pid: None,
            exit_code: None,
            message: None,
        };
        self.write_record(&record)?;
        // Zero-delay jobs start on the submit call itself.
        self.tick_locked()?;
        Ok(id)
    }

    /// Bulk status: one output line per id, `<id> <code> [message]`.
    pub fn mstat(&self, ids: &[String]) -> Result<String> {
        let config = MockConfig::load(&self.dir);
        if config.status_latency_ms > 0 {
            // Latency is simulated outside the lock so concurrent status
            // calls queue on real work only.
            std::thread::sleep(Duration::from_millis(config.status_latency_ms));
        }
        let _lock = self.lock()?;
        self.tick_locked()?;
        self.bump_counter("status")?;
        let mut out = String::new();
        for id in ids {
            match self.read_record(id) {
                Some(record) => {
                    if config.drop_after_done && record.finished() {
                        continue;
                    }
                    out.push_str(&record.id);
                    out.push(' ');
                    out.push_str(&record.code);
                    if let Some(message) = &record.message {
                        out.push(' ');
                        out.push_str(message);
                    }
                    out.push('\n');
                }
                None => out.push_str(&format!("{id} U unknown\n")),
            }
        }
        Ok(out)
    }

    /// Cancels a queued or running job; running jobs have their process
    /// group terminated.
    pub fn mdel(&self, id: &str) -> Result<()> {
        let _lock = self.lock()?;
        self.tick_locked()?;
        let Some(mut record) = self.read_record(id) else {
            return Err(Error::CancelFailed(format!("unknown job {id}")));
        };
        if record.finished() {
            return Err(Error::CancelFailed(format!(
                "job {id} already completed"
            )));
        }
        if let Some(pid) = record.pid {
            unsafe {
                libc::killpg(pid, libc::SIGTERM);
            }
        }
        record.code = "CA".to_string();
        record.end_ms = Some(now_ms());
        self.write_record(&record)?;
        Ok(())
    }

    /// One explicit scheduler advance, for callers that want latency
    /// realism without waiting for the next command invocation.
    pub fn tick(&self) -> Result<()> {
        let _lock = self.lock()?;
        self.tick_locked()
    }
}
