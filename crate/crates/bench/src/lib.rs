//! Shared setup for the overhead benchmarks.

use std::path::PathBuf;

use tempfile::TempDir;

/// Scratch directory that lives for the benchmark run.
pub struct Scratch {
    dir: TempDir,
}

impl Scratch {
    pub fn new() -> Scratch {
        Scratch {
            dir: tempfile::tempdir().expect("create scratch directory"),
        }
    }

    pub fn path(&self) -> PathBuf {
        self.dir.path().to_path_buf()
    }
}

impl Default for Scratch {
    fn default() -> Self {
        Self::new()
    }
}
