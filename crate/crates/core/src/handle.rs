//! Persistent job handles.
//!
//! A handle captures everything needed to find a job again from another
//! process: the client job id, the executor name, the native id, and the
//! work directory (which locates the sidecar exit-code file). Handles are
//! JSON files named `<job_id>.handle` in the work directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::job::Job;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobHandle {
    pub job_id: String,
    pub executor: String,
    pub native_id: String,
    pub work_directory: PathBuf,
}

impl JobHandle {
    /// Captures a submitted job's coordinates. Fails if the job has no
    /// native id or executor yet.
    pub fn capture(job: &Job, work_directory: &Path) -> Result<JobHandle> {
        Ok(JobHandle {
            job_id: job.id().to_string(),
            executor: job.bound_executor().ok_or(Error::Unbound)?,
            native_id: job.native_id().ok_or(Error::Unbound)?,
            work_directory: work_directory.to_path_buf(),
        })
    }

    pub fn path_for(work_directory: &Path, job_id: &str) -> PathBuf {
        work_directory.join(format!("{job_id}.handle"))
    }

    pub fn save(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.work_directory)?;
        let path = Self::path_for(&self.work_directory, &self.job_id);
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Other(e.to_string()))?;
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<JobHandle> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Other(format!("{}: {e}", path.display())))
    }

    /// Recreates the client-side job, reusing the original id so the
    /// sidecar file resolves to the same path.
    pub fn to_job(&self) -> Job {
        Job::with_id(&self.job_id, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::JobSpec;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let job = Job::new(JobSpec::shell("exit 0"));
        job.bind("mock").unwrap();
        job.set_native_id("42").unwrap();
        let handle = JobHandle::capture(&job, dir.path()).unwrap();
        let path = handle.save().unwrap();
        assert_eq!(path, dir.path().join(format!("{}.handle", job.id())));
        let loaded = JobHandle::load(&path).unwrap();
        assert_eq!(loaded, handle);
        assert_eq!(loaded.to_job().id(), job.id());
    }

    #[test]
    fn capture_requires_submission() {
        let dir = tempfile::tempdir().unwrap();
        let job = Job::new(JobSpec::shell("exit 0"));
        assert!(JobHandle::capture(&job, dir.path()).is_err());
    }
}
