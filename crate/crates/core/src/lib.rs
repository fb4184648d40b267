//! Portable job management: one client API over local process execution
//! and batch schedulers.
//!
//! A [`spec::JobSpec`] describes what to run; a [`job::Job`] tracks one
//! run through the NEW → QUEUED → ACTIVE → terminal state machine; an
//! executor ([`executor::JobExecutor`]) binds jobs to an execution
//! mechanism. Executors are obtained by name from the
//! [`executor::registry`], which also discovers external scheduler
//! plugins.

pub mod dialect;
pub mod error;
pub mod handle;
pub mod harness;
pub mod job;
pub mod launcher;
pub mod mock;
pub mod spec;
pub mod specfile;
pub mod state;
pub mod template;
pub mod util;

pub mod executor;

pub use error::{Error, Result, Violation};
pub use executor::registry::{get_instance, ExecutorDescriptor, Registry, Version};
pub use executor::{ExecutorConfig, JobExecutor};
pub use handle::JobHandle;
pub use job::{Job, StatusCallback};
pub use launcher::{get_launch_command, render_launcher_script, WrapperMode, LAUNCHER_NAMES};
pub use spec::{complete_resources, validate_spec, JobAttributes, JobSpec, ResourceSpec};
pub use state::{JobState, JobStatus};
