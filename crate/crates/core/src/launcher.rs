//! Launchers and launcher scripts.
//!
//! A launcher is the mechanism that starts the payload inside an allocation
//! (srun, mpirun, plain fork). It contributes an argument-vector prefix to
//! the launch command. The launcher script wraps the payload with pre/post
//! hooks, stream redirection, and exit-code capture into a sidecar file; it
//! exits with the payload's code so both local and batch executors see the
//! same semantics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spec::{JobSpec, ResourceSpec};
use crate::util::{sh_quote, sh_quote_argv};

pub const LAUNCHER_NAMES: &[&str] =
    &["single", "multiple", "mpirun", "srun", "jsrun", "aprun"];

/// How much wrapping the generated launcher script does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WrapperMode {
    /// Hooks, redirection, launcher prefix, sidecar capture.
    Default,
    /// Runs the payload as a subprocess and captures its code; nothing else.
    Minimal,
    /// No script at all: the executor spawns the payload directly and exit
    /// codes come from the OS status only.
    None,
}

// Runs N copies of "$@" concurrently and exits with the first nonzero code.
// Used as a launch prefix via `sh -c '<runner>' multiple <exe> <args>...`.
const MULTIPLE_RUNNER: &str = r#"n=__COUNT__
i=0
pids=
while [ "$i" -lt "$n" ]; do
  "$@" &
  pids="$pids $!"
  i=$((i+1))
done
ec=0
for p in $pids; do
  wait "$p"
  c=$?
  if [ "$c" -ne 0 ] && [ "$ec" -eq 0 ]; then
    ec=$c
  fi
done
exit $ec"#;

/// Argument-vector prefix for the named launcher. "single" is empty;
/// count-parameterized launchers embed the process count.
pub fn launch_prefix(name: &str, resources: &ResourceSpec) -> Result<Vec<String>> {
    let count = resources.process_count.unwrap_or(1);
    match name {
        "single" => Ok(vec![]),
        "multiple" => Ok(vec![
            "/bin/sh".to_string(),
            "-c".to_string(),
            MULTIPLE_RUNNER.replace("__COUNT__", &count.to_string()),
            "multiple".to_string(),
        ]),
        "mpirun" | "srun" | "jsrun" | "aprun" => Ok(vec![
            name.to_string(),
            "-n".to_string(),
            count.to_string(),
        ]),
        other => Err(Error::UnknownLauncher(other.to_string())),
    }
}

/// Full launch command: launcher prefix ++ [executable] ++ arguments.
/// Resources should be completed first so count-parameterized launchers see
/// a process count.
pub fn get_launch_command(spec: &JobSpec, launcher_override: Option<&str>) -> Result<Vec<String>> {
    let name = launcher_override
        .or(spec.launcher.as_deref())
        .unwrap_or("single");
    let mut argv = launch_prefix(name, &spec.resources)?;
    argv.push(spec.executable.clone());
    argv.extend(spec.arguments.iter().cloned());
    Ok(argv)
}

fn redirections(spec: &JobSpec) -> String {
    let mut out = String::new();
    if let Some(p) = &spec.stdin_path {
        out.push_str(&format!(" < {}", sh_quote(&p.to_string_lossy())));
    }
    if let Some(p) = &spec.stdout_path {
        out.push_str(&format!(" > {}", sh_quote(&p.to_string_lossy())));
    }
    match (&spec.stdout_path, &spec.stderr_path) {
        // Equal paths mean the streams are merged into one file.
        (Some(o), Some(e)) if o == e => out.push_str(" 2>&1"),
        (_, Some(e)) => {
            out.push_str(&format!(" 2> {}", sh_quote(&e.to_string_lossy())))
        }
        _ => {}
    }
    out
}

/// Renders the launcher script for `spec`, writing the payload exit code to
/// `sidecar`. The sidecar path is embedded as a rendered literal so hook
/// scripts cannot disturb it through the environment.
pub fn render_launcher_script(
    spec: &JobSpec,
    sidecar: &Path,
    mode: WrapperMode,
    launcher_override: Option<&str>,
) -> Result<String> {
    let sidecar_q = sh_quote(&sidecar.to_string_lossy());
    let mut script = String::from("#!/bin/sh\n");
    script.push_str(&format!("_pj_sidecar={sidecar_q}\n"));

    match mode {
        WrapperMode::None => {
            return Err(Error::Other(
                "wrapper mode 'none' does not use a launcher script".into(),
            ))
        }
        WrapperMode::Minimal => {
            let mut argv = vec![spec.executable.clone()];
            argv.extend(spec.arguments.iter().cloned());
            script.push_str(&sh_quote_argv(&argv));
            script.push_str(&redirections(spec));
            script.push('\n');
        }
        WrapperMode::Default => {
            if let Some(pre) = &spec.pre_launch {
                script.push_str(&format!(
                    ". {}\n_pj_ec=$?\nif [ \"$_pj_ec\" -ne 0 ]; then\n  printf '%s\\n' \"$_pj_ec\" > \"$_pj_sidecar\"\n  exit \"$_pj_ec\"\nfi\n",
                    sh_quote(&pre.to_string_lossy())
                ));
            }
            let argv = get_launch_command(spec, launcher_override)?;
            script.push_str(&sh_quote_argv(&argv));
            script.push_str(&redirections(spec));
            script.push('\n');
        }
    }

    script.push_str("_pj_ec=$?\n");
    if mode == WrapperMode::Default {
        if let Some(post) = &spec.post_launch {
            script.push_str(&format!(
                ". {}\n_pj_pec=$?\nif [ \"$_pj_ec\" -eq 0 ] && [ \"$_pj_pec\" -ne 0 ]; then\n  _pj_ec=$_pj_pec\nfi\n",
                sh_quote(&post.to_string_lossy())
            ));
        }
    }
    script.push_str("printf '%s\\n' \"$_pj_ec\" > \"$_pj_sidecar\"\n");
    script.push_str("exit \"$_pj_ec\"\n");
    Ok(script)
}
