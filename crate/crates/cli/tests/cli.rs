//! End-to-end tests of the `portajob` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn portajob() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_portajob"))
}

/// The mock scheduler helper is built into the same target directory as
/// the CLI (run the tests with `cargo test --workspace`).
fn mocklrm() -> PathBuf {
    portajob().parent().unwrap().join("mocklrm")
}

struct Cli {
    work: PathBuf,
    executor: String,
}

impl Cli {
    fn local(work: &Path) -> Cli {
        Cli {
            work: work.to_path_buf(),
            executor: "local".to_string(),
        }
    }

    fn mock(work: &Path) -> Cli {
        Cli {
            work: work.to_path_buf(),
            executor: "mock".to_string(),
        }
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(portajob())
            .args(args)
            .args(["--work-dir", &self.work.to_string_lossy()])
            .env("PORTAJOB_EXECUTOR", &self.executor)
            .env("PORTAJOB_MOCKLRM", mocklrm())
            .output()
            .expect("run portajob")
    }

    /// Subcommands that take a handle file accept no --work-dir flag.
    fn run_on_handle(&self, verb: &str, handle: &Path) -> Output {
        Command::new(portajob())
            .args([verb, &handle.to_string_lossy()])
            .env("PORTAJOB_MOCKLRM", mocklrm())
            .output()
            .expect("run portajob")
    }

    fn write_spec(&self, name: &str, json: &str) -> PathBuf {
        let path = self.work.join(name);
        std::fs::create_dir_all(&self.work).unwrap();
        std::fs::write(&path, json).unwrap();
        path
    }

    fn submit(&self, json: &str) -> (String, PathBuf) {
        let spec = self.write_spec("spec.json", json);
        let out = self.run(&["submit", &spec.to_string_lossy()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let job_id = String::from_utf8_lossy(&out.stdout).trim().to_string();
        let handle = self.work.join(format!("{job_id}.handle"));
        assert!(handle.exists(), "missing handle file {}", handle.display());
        (job_id, handle)
    }
}

fn shell_spec(script: &str) -> String {
    format!(r#"{{"executable": "/bin/sh", "arguments": ["-c", "{script}"]}}"#)
}

#[test]
fn run_relays_output_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::local(dir.path());
    let spec = cli.write_spec("s.json", &shell_spec("echo from-the-job"));
    let out = cli.run(&["run", &spec.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "from-the-job\n");
}

#[test]
fn run_maps_job_failure_to_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::local(dir.path());
    let spec = cli.write_spec("s.json", &shell_spec("exit 7"));
    let out = cli.run(&["run", &spec.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_spec_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::local(dir.path());
    let spec = cli.write_spec("s.json", r#"{"executable": ""}"#);
    let out = cli.run(&["submit", &spec.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));

    let spec = cli.write_spec("s2.json", r#"{"exectuable": "/bin/true"}"#);
    let out = cli.run(&["submit", &spec.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_executor_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut cli = Cli::local(dir.path());
    cli.executor = "cobalt".to_string();
    let spec = cli.write_spec("s.json", &shell_spec("exit 0"));
    let out = cli.run(&["submit", &spec.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cobalt"), "{stderr}");
}

#[test]
fn wait_timeout_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::local(dir.path());
    let (_, handle) = cli.submit(&shell_spec("sleep 30"));
    let out = Command::new(portajob())
        .args(["wait", &handle.to_string_lossy(), "--timeout", "0.2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    // Clean up the sleeper.
    cli.run_on_handle("cancel", &handle);
}

#[test]
fn submit_wait_status_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::local(dir.path());
    let (job_id, handle) = cli.submit(&shell_spec("exit 0"));

    let out = cli.run_on_handle("wait", &handle);
    assert_eq!(out.status.code(), Some(0));
    let line = String::from_utf8_lossy(&out.stdout);
    assert!(line.contains(&job_id) && line.contains("COMPLETED") && line.contains("exit=0"), "{line}");

    let out = cli.run_on_handle("status", &handle);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("COMPLETED"));
}

#[test]
fn wait_reports_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::local(dir.path());
    let (_, handle) = cli.submit(&shell_spec("exit 5"));
    let out = cli.run_on_handle("wait", &handle);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("exit=5"));
}

#[test]
fn cancel_running_job() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::local(dir.path());
    let (_, handle) = cli.submit(&shell_spec("sleep 30"));
    let out = cli.run_on_handle("cancel", &handle);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cli.run_on_handle("wait", &handle);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("CANCELED"));
}

#[test]
fn mock_executor_via_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::mock(dir.path());
    let spec = cli.write_spec("s.json", &shell_spec("echo queued-and-done"));
    let out = cli.run(&["run", &spec.to_string_lossy()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout), "queued-and-done\n");
}

#[test]
fn status_survives_client_restart() {
    // Each CLI invocation is a fresh process; the handle file alone must
    // be enough to find the job and its exit code afterward.
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::mock(dir.path());
    let (_, handle) = cli.submit(&shell_spec("exit 3"));
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(30);
    loop {
        let out = cli.run_on_handle("status", &handle);
        let line = String::from_utf8_lossy(&out.stdout).to_string();
        if line.contains("FAILED") {
            assert!(line.contains("exit=3"), "{line}");
            break;
        }
        assert!(std::time::Instant::now() < deadline, "stuck: {line}");
        std::thread::sleep(std::time::Duration::from_millis(50));
    }
}
