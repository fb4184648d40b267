//! Small helpers shared across executors: shell quoting and subprocess
//! invocation with a timeout.

use std::io::Read;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Quotes `s` for POSIX sh using single quotes.
pub fn sh_quote(s: &str) -> String {
    if !s.is_empty()
        && s.bytes().all(|b| {
            b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b'/' | b':' | b'+' | b'=' | b',' | b'@' | b'%')
        })
    {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for ch in s.chars() {
        if ch == '\'' {
            out.push_str("'\\''");
        } else {
            out.push(ch);
        }
    }
    out.push('\'');
    out
}

/// Quotes a whole argument vector into one sh command line.
pub fn sh_quote_argv(argv: &[String]) -> String {
    argv.iter()
        .map(|a| sh_quote(a))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Captured result of a finished scheduler command.
#[derive(Debug)]
pub struct CmdOutput {
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
}

impl CmdOutput {
    pub fn success(&self) -> bool {
        self.exit_code == Some(0)
    }
}

/// Runs `argv` to completion, killing it after `timeout`. A hung scheduler
/// command must not wedge the poller.
pub fn run_command(argv: &[String], timeout: Duration) -> Result<CmdOutput> {
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| Error::Other("empty command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| {
            Error::Other(format!("failed to run command '{program}': {e}"))
        })?;

    // Drain pipes on threads so a chatty command can't fill them and block.
    let mut stdout_pipe = child.stdout.take().unwrap();
    let mut stderr_pipe = child.stderr.take().unwrap();
    let out_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout_pipe.read_to_string(&mut buf);
        buf
    });
    let err_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr_pipe.read_to_string(&mut buf);
        buf
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait()? {
            Some(status) => break status,
            None => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::CommandTimeout(program.clone()));
                }
                std::thread::sleep(Duration::from_millis(2));
            }
        }
    };
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    Ok(CmdOutput {
        exit_code: status.code(),
        stdout,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_round_trips_through_sh() {
        for s in ["plain", "has space", "don't", "a;b&c", "", "$HOME", "new\nline"] {
            let out = run_command(
                &[
                    "/bin/sh".to_string(),
                    "-c".to_string(),
                    format!("printf '%s' {}", sh_quote(s)),
                ],
                Duration::from_secs(5),
            )
            .unwrap();
            assert_eq!(out.stdout, s);
        }
    }

    #[test]
    fn command_timeout_kills_the_child() {
        let start = Instant::now();
        let err = run_command(
            &["/bin/sleep".to_string(), "30".to_string()],
            Duration::from_millis(100),
        )
        .unwrap_err();
        assert!(matches!(err, Error::CommandTimeout(_)));
        assert!(start.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn captures_exit_code_and_streams() {
        let out = run_command(
            &[
                "/bin/sh".to_string(),
                "-c".to_string(),
                "echo out; echo err >&2; exit 3".to_string(),
            ],
            Duration::from_secs(5),
        )
        .unwrap();
        assert_eq!(out.exit_code, Some(3));
        assert_eq!(out.stdout, "out\n");
        assert_eq!(out.stderr, "err\n");
    }
}
