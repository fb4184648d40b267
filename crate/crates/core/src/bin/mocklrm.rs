//! Command-line front end for the file-spool mock scheduler.
//!
//! Exit codes: 0 on success, 1 on a scheduler-level refusal (rejected
//! submission, cancel of a finished job), 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use portajob::mock::Spool;

#[derive(Parser)]
#[command(name = "mocklrm", about = "File-spool mock batch scheduler")]
struct Cli {
    /// Spool directory holding all scheduler state.
    #[arg(long)]
    spool: PathBuf,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Submit a job script; prints the assigned job id.
    Msub { script: PathBuf },
    /// Report status: one `<id> <code> [message]` line per requested id.
    Mstat { ids: Vec<String> },
    /// Cancel a queued or running job.
    Mdel { id: String },
    /// Advance the scheduler without any other action.
    Tick,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spool = Spool::at(&cli.spool);
    let result = match cli.command {
        Cmd::Msub { script } => spool.msub(&script).map(|id| println!("{id}")),
        Cmd::Mstat { ids } => spool.mstat(&ids).map(|out| print!("{out}")),
        Cmd::Mdel { id } => spool.mdel(&id),
        Cmd::Tick => spool.tick(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mocklrm: {e}");
            ExitCode::FAILURE
        }
    }
}
