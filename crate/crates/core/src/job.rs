//! Client-side job handles.
//!
//! A [`Job`] is a cheaply clonable handle to shared state: the client id,
//! the optional spec, the scheduler-assigned native id, and the current
//! status. Status updates go through [`Job::apply_status`], which enforces
//! the transition table, and are delivered to executor callbacks exactly
//! once per distinct state change, in order.

use std::collections::VecDeque;
use std::panic::AssertUnwindSafe;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::spec::JobSpec;
use crate::state::{JobState, JobStatus};

/// Status callback registered on an executor. Invoked once per state change
/// of every job bound to that executor; may fire on an executor-internal
/// thread.
pub type StatusCallback = Arc<dyn Fn(&Job, &JobStatus) + Send + Sync>;

#[derive(Clone)]
pub struct Job {
    inner: Arc<JobInner>,
}

struct JobInner {
    id: String,
    spec: Option<JobSpec>,
    state: Mutex<JobShared>,
    cond: Condvar,
    // Serializes callback delivery so per-job order is preserved even when
    // transitions race across threads.
    delivery: Mutex<()>,
}

struct JobShared {
    native_id: Option<String>,
    executor: Option<String>,
    status: JobStatus,
    pending: VecDeque<JobStatus>,
    cancel_requested: bool,
}

impl Job {
    /// New job with a random client id and the given spec.
    pub fn new(spec: JobSpec) -> Self {
        Self::build(uuid::Uuid::new_v4().to_string(), Some(spec))
    }

    /// New job with an explicit client id. Useful for deterministic script
    /// generation and for re-creating a job from a persisted handle.
    pub fn with_id(id: impl Into<String>, spec: Option<JobSpec>) -> Self {
        Self::build(id.into(), spec)
    }

    /// Spec-less job, suitable only for attaching to a native job.
    pub fn detached() -> Self {
        Self::build(uuid::Uuid::new_v4().to_string(), None)
    }

    fn build(id: String, spec: Option<JobSpec>) -> Self {
        Job {
            inner: Arc::new(JobInner {
                id,
                spec,
                state: Mutex::new(JobShared {
                    native_id: None,
                    executor: None,
                    status: JobStatus::new(JobState::New),
                    pending: VecDeque::new(),
                    cancel_requested: false,
                }),
                cond: Condvar::new(),
                delivery: Mutex::new(()),
            }),
        }
    }

    pub fn id(&self) -> &str {
        &self.inner.id
    }

    pub fn spec(&self) -> Option<&JobSpec> {
        self.inner.spec.as_ref()
    }

    pub fn native_id(&self) -> Option<String> {
        self.inner.state.lock().unwrap().native_id.clone()
    }

    pub fn status(&self) -> JobStatus {
        self.inner.state.lock().unwrap().status.clone()
    }

    pub fn state(&self) -> JobState {
        self.inner.state.lock().unwrap().status.state
    }

    pub fn bound_executor(&self) -> Option<String> {
        self.inner.state.lock().unwrap().executor.clone()
    }

    pub fn is_bound(&self) -> bool {
        self.inner.state.lock().unwrap().executor.is_some()
    }

    /// Binds this job to an executor. A job is bound at most once for its
    /// lifetime.
    pub fn bind(&self, executor_name: &str) -> Result<()> {
        let mut s = self.inner.state.lock().unwrap();
        if s.executor.is_some() {
            return Err(Error::AlreadyBound);
        }
        s.executor = Some(executor_name.to_string());
        Ok(())
    }

    /// Records the scheduler-assigned id; settable at most once.
    pub fn set_native_id(&self, native_id: &str) -> Result<()> {
        let mut s = self.inner.state.lock().unwrap();
        if s.native_id.is_some() {
            return Err(Error::NativeIdAlreadySet);
        }
        s.native_id = Some(native_id.to_string());
        Ok(())
    }

    pub(crate) fn request_cancel(&self) {
        self.inner.state.lock().unwrap().cancel_requested = true;
    }

    pub(crate) fn cancel_requested(&self) -> bool {
        self.inner.state.lock().unwrap().cancel_requested
    }

    /// Applies a status update, enforcing the transition table.
    ///
    /// Returns `Ok(true)` if the job changed state (the update is queued for
    /// callback delivery), `Ok(false)` if the update repeated the current
    /// state and was absorbed, and an illegal-transition error otherwise.
    /// Atomic per job: concurrent updates serialize.
    pub fn apply_status(&self, new: JobStatus) -> Result<bool> {
        let mut s = self.inner.state.lock().unwrap();
        let current = s.status.state;
        if new.state == current {
            return Ok(false);
        }
        if !current.can_transition_to(new.state) {
            return Err(Error::IllegalTransition {
                from: current,
                to: new.state,
            });
        }
        s.status = new.clone();
        s.pending.push_back(new);
        self.inner.cond.notify_all();
        Ok(true)
    }

    /// Delivers queued status changes to `callback`, in order, exactly once
    /// each. A panicking callback is logged and does not poison delivery.
    pub fn flush_deliveries(&self, callback: Option<&StatusCallback>) {
        let _guard = self.inner.delivery.lock().unwrap();
        loop {
            let next = self.inner.state.lock().unwrap().pending.pop_front();
            let Some(status) = next else { break };
            if let Some(cb) = callback {
                let result = std::panic::catch_unwind(AssertUnwindSafe(|| {
                    cb(self, &status)
                }));
                if result.is_err() {
                    log::error!(
                        "status callback panicked for job {} in state {}",
                        self.inner.id,
                        status.state
                    );
                }
            }
        }
    }

    /// Blocks until the job reaches a final state or `timeout` elapses and
    /// returns the final status. Multiple concurrent waiters are all
    /// released. Requires the job to be bound to an executor.
    pub fn wait(&self, timeout: Option<Duration>) -> Result<JobStatus> {
        let deadline = timeout.map(|t| Instant::now() + t);
        let mut s = self.inner.state.lock().unwrap();
        if s.executor.is_none() {
            return Err(Error::Unbound);
        }
        loop {
            if s.status.state.is_final() {
                return Ok(s.status.clone());
            }
            match deadline {
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return Err(Error::Timeout);
                    }
                    let (guard, _) = self
                        .inner
                        .cond
                        .wait_timeout(s, d - now)
                        .unwrap();
                    s = guard;
                }
                None => {
                    s = self.inner.cond.wait(s).unwrap();
                }
            }
        }
    }
}

impl std::fmt::Debug for Job {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = self.inner.state.lock().unwrap();
        f.debug_struct("Job")
            .field("id", &self.inner.id)
            .field("native_id", &s.native_id)
            .field("state", &s.status.state)
            .field("executor", &s.executor)
            .finish()
    }
}
